//! Distribution-dependent active learners: the epoch-based version-space
//! learner for large target errors and the two-stage surrogate learner for
//! small ones.

use crate::active_df::DfEpoch;
use crate::domain::{best_nu, max_disagreement, MdlInstance, RandomizedHypothesis, VersionSpace};
use crate::error::{invalid, Error, Result};
use crate::oracle::{Example, OracleSet, QueryLedger, SampleSource};
use crate::passive::{mdl_hedge_vc, HedgeKnobs, HedgeRound, SolverConfig};

/// Target passed to the last Passive-MDL call of the distribution-free learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalTarget {
    /// The overall target error.
    #[default]
    Eps,
    /// The last epoch's `2^-n0`.
    EpsN,
}

/// Settings shared by the active learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub knobs: HedgeKnobs,
    /// VC dimension used by the solver's sizing formulas.
    pub vc_dim: usize,
    /// Scale on the agreement-region sample size of the small-ε learner.
    pub c_agr: f64,
    /// Scale on the batch size of the robust RPU learner.
    pub c_n: f64,
    pub final_target: FinalTarget,
    /// Keep the final solver call's per-round trace.
    pub diagnostics: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            knobs: HedgeKnobs::default(),
            vc_dim: 1,
            c_agr: 1.0,
            c_n: 1.0,
            final_target: FinalTarget::Eps,
            diagnostics: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureMode {
    VersionSpaceCollapse { epoch: u32 },
    PruningStalled { epoch: u32 },
    DegenerateAgreement { dist: usize },
}

impl FailureMode {
    pub fn tag(&self) -> &'static str {
        match self {
            FailureMode::VersionSpaceCollapse { .. } => "version_space_collapse",
            FailureMode::PruningStalled { .. } => "pruning_stalled",
            FailureMode::DegenerateAgreement { .. } => "degenerate_agreement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    LargeEps,
    SmallEps,
}

/// `n0 = max(0, ⌈log2(1/ε)⌉)`, `ε_n = 2^-n`, `δ_n = δ/(2n²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSchedule {
    pub n0: u32,
    pub delta: f64,
}

impl EpochSchedule {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("schedule needs eps > 0 and delta in (0,1), got {eps}, {delta}")));
        }
        let n0 = (1.0 / eps).log2().ceil().max(0.0) as u32;
        Ok(EpochSchedule { n0, delta })
    }

    pub fn eps_n(n: u32) -> f64 {
        0.5f64.powi(n as i32)
    }

    pub fn delta_n(&self, n: u32) -> f64 {
        self.delta / (2.0 * (n as f64) * (n as f64))
    }
}

/// One epoch of the large-ε learner.
#[derive(Debug, Clone, PartialEq)]
pub struct DdEpoch {
    pub epoch: u32,
    pub eps_n: f64,
    /// `V_n` after the update.
    pub version_space: VersionSpace,
    /// The solver output `h_n` the update was centered on.
    pub center: RandomizedHypothesis,
    /// `max_i Pr_{D_i}[DIS(V_n)]` (0 when `V_n` is empty).
    pub max_dis_mass: f64,
    pub passive_samples: usize,
    pub labels: u64,
}

pub const DD_TRACE_HEADER: &str = "epoch,eps_n,|V_n|,max_i DIS_mass,passive_samples,labels_this_epoch";

impl DdEpoch {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.epoch,
            self.eps_n,
            self.version_space.len(),
            self.max_dis_mass,
            self.passive_samples,
            self.labels
        )
    }
}

/// The second stage of the small-ε learner.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTwo {
    pub v0: VersionSpace,
    pub eps_prime: f64,
    pub pool_size: usize,
    /// Labels spent on agreement-region pools.
    pub agreement_labels: u64,
    /// Labels spent inside the solver (disagreement-region queries).
    pub solver_labels: u64,
    /// Distributions whose agreement region has zero mass; their pools are empty.
    pub degenerate: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveRunResult {
    pub output: Option<RandomizedHypothesis>,
    pub failure: Option<FailureMode>,
    pub regime: Option<Regime>,
    pub ledger: QueryLedger,
    pub epochs: Vec<DdEpoch>,
    pub stage_two: Option<StageTwo>,
    pub df_epochs: Vec<DfEpoch>,
    pub hedge_rounds: Vec<HedgeRound>,
    pub warnings: Vec<String>,
}

impl ActiveRunResult {
    pub(crate) fn empty(oracles: &OracleSet<'_>) -> Self {
        ActiveRunResult {
            output: None,
            failure: None,
            regime: None,
            ledger: oracles.ledger().clone(),
            epochs: Vec::new(),
            stage_two: None,
            df_epochs: Vec::new(),
            hedge_rounds: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0,1), got {v}")))
    }
}

/// Version-space learner for the regime `ε ≥ 100ν`. Returns the lowest-index
/// member of the final version space.
pub fn active_large_eps(
    inst: &MdlInstance,
    oracles: &mut OracleSet<'_>,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<ActiveRunResult> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    check_unit("delta", delta)?;
    let mut result = ActiveRunResult::empty(oracles);
    result.regime = Some(Regime::LargeEps);
    let nu = inst.declared_nu().unwrap_or_else(|| best_nu(inst).1);
    if eps < 100.0 * nu {
        result.warnings.push(format!("eps = {eps} is below 100*nu = {}", 100.0 * nu));
    }
    let class = inst.class();
    let schedule = EpochSchedule::new(eps, delta)?;
    let mut v = class.full_version_space();

    for n in 1..=schedule.n0 {
        let eps_n = EpochSchedule::eps_n(n);
        let region = v.region_map(class)?;
        let before = oracles.ledger().total_labels();
        let solver = SolverConfig {
            eps: eps_n,
            delta: schedule.delta_n(n),
            nu: eps_n / 100.0,
            knobs: cfg.knobs,
            diagnostics: false,
        };
        let out = mdl_hedge_vc(class, &v, oracles, SampleSource::Induced(&region), &solver, cfg.vc_dim)?;
        let center = out.output.resolve(class)?;
        let mut kept = Vec::with_capacity(v.len());
        for &h in v.members() {
            if max_disagreement(class.hypothesis(h), &center, inst)? <= 2.0 * eps_n {
                kept.push(h);
            }
        }
        let next = VersionSpace::from_indices(kept);
        let max_dis_mass = if next.is_empty() {
            0.0
        } else {
            let r = next.region_map(class)?;
            inst.distributions().iter().map(|d| r.disagreement_mass(d)).fold(0.0, f64::max)
        };
        result.epochs.push(DdEpoch {
            epoch: n,
            eps_n,
            version_space: next.clone(),
            center: out.output.clone(),
            max_dis_mass,
            passive_samples: out.total_draws(),
            labels: oracles.ledger().total_labels() - before,
        });
        if next.is_empty() {
            result.failure = Some(FailureMode::VersionSpaceCollapse { epoch: n });
            result.ledger = oracles.ledger().clone();
            return Ok(result);
        }
        v = next;
    }
    result.output = Some(RandomizedHypothesis::pure(v.first().expect("non-empty")));
    result.ledger = oracles.ledger().clone();
    Ok(result)
}

/// Agreement-pool size `⌈c · 100(ε+ν)/ε² · ln(k/δ')⌉`.
pub fn agreement_pool_size(k: usize, eps: f64, nu: f64, delta_prime: f64, c_agr: f64) -> usize {
    let n = c_agr * 100.0 * (eps + nu) / (eps * eps) * (k as f64 / delta_prime).ln();
    (n.ceil() as usize).max(1)
}

/// Two-stage learner for the regime `ε < 100ν`; `nu` is the optimal
/// worst-case error of the instance.
pub fn active_small_eps(
    inst: &MdlInstance,
    oracles: &mut OracleSet<'_>,
    eps: f64,
    delta: f64,
    nu: f64,
    cfg: &LearnerConfig,
) -> Result<ActiveRunResult> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid(format!("small-eps learner needs nu in (0,1), got {nu}")));
    }
    let class = inst.class();
    let delta_prime = delta / 6.0;
    let eps_prime = (100.0 * nu).min(1.0);

    let stage_one = active_large_eps(inst, oracles, eps_prime, delta_prime, cfg)?;
    let mut result = ActiveRunResult {
        regime: Some(Regime::SmallEps),
        epochs: stage_one.epochs,
        warnings: Vec::new(),
        ..ActiveRunResult::empty(oracles)
    };
    if eps >= 100.0 * nu {
        result.warnings.push(format!("eps = {eps} is not below 100*nu = {}", 100.0 * nu));
    }
    let h_prime = match (stage_one.failure, stage_one.output) {
        (Some(f), _) => {
            result.failure = Some(f);
            return Ok(result);
        }
        (None, Some(out)) => out.members()[0],
        (None, None) => unreachable!("stage one returns an output or a failure"),
    };

    let anchor = class.hypothesis(h_prime);
    let mut kept = Vec::new();
    for (j, h) in class.hypotheses().iter().enumerate() {
        if max_disagreement(h, anchor, inst)? <= 2.0 * eps_prime {
            kept.push(j);
        }
    }
    let v0 = VersionSpace::from_indices(kept);
    let region = v0.region_map(class)?;

    let pool_size = agreement_pool_size(inst.k(), eps, nu, delta_prime, cfg.c_agr);
    let before = oracles.ledger().total_labels();
    let mut pools: Vec<Vec<Example>> = Vec::with_capacity(inst.k());
    let mut degenerate = Vec::new();
    for i in 0..inst.k() {
        match oracles.sample_conditional_agreement(i, &region, pool_size) {
            Ok(pool) => pools.push(pool),
            Err(Error::DegenerateAgreement { dist }) => {
                degenerate.push(dist);
                pools.push(Vec::new());
            }
            Err(e) => return Err(e),
        }
    }
    if !degenerate.is_empty() {
        result.warnings.push(format!("zero agreement mass under distributions {degenerate:?}"));
    }
    let agreement_labels = oracles.ledger().total_labels() - before;

    let solver =
        SolverConfig { eps: eps / 2.0, delta: delta / 6.0, nu, knobs: cfg.knobs, diagnostics: cfg.diagnostics };
    let source = SampleSource::Surrogate { region: &region, pools: &pools };
    let mid = oracles.ledger().total_labels();
    let out = match mdl_hedge_vc(class, &v0, oracles, source, &solver, cfg.vc_dim) {
        Ok(out) => out,
        Err(Error::EmptyPool { dist }) => {
            result.failure = Some(FailureMode::DegenerateAgreement { dist });
            result.ledger = oracles.ledger().clone();
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    result.stage_two = Some(StageTwo {
        v0,
        eps_prime,
        pool_size,
        agreement_labels,
        solver_labels: oracles.ledger().total_labels() - mid,
        degenerate,
    });
    result.hedge_rounds = out.rounds;
    result.output = Some(out.output);
    result.ledger = oracles.ledger().clone();
    Ok(result)
}

/// Routes to the large-ε learner when `ε ≥ 100ν` and to the small-ε learner
/// otherwise, with ν computed exactly.
pub fn regime_dispatch(
    inst: &MdlInstance,
    oracles: &mut OracleSet<'_>,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<ActiveRunResult> {
    let (_, nu) = best_nu(inst);
    match choose_regime(eps, nu) {
        Regime::LargeEps => active_large_eps(inst, oracles, eps, delta, cfg),
        Regime::SmallEps => active_small_eps(inst, oracles, eps, delta, nu, cfg),
    }
}

pub fn choose_regime(eps: f64, nu: f64) -> Regime {
    if eps >= 100.0 * nu {
        Regime::LargeEps
    } else {
        Regime::SmallEps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_brackets_eps() {
        for eps in [0.3, 0.25, 0.05, 0.01, 1e-4] {
            let s = EpochSchedule::new(eps, 0.1).unwrap();
            let last = EpochSchedule::eps_n(s.n0);
            assert!(last <= eps && eps < 2.0 * last, "eps={eps}");
        }
        assert_eq!(EpochSchedule::new(1.0, 0.1).unwrap().n0, 0);
        assert_eq!(EpochSchedule::new(3.0, 0.1).unwrap().n0, 0);
        let s = EpochSchedule::new(1e-6, 0.2).unwrap();
        let total: f64 = (1..=s.n0).map(|n| s.delta_n(n)).sum();
        assert!(total <= 0.2);
    }

    #[test]
    fn regime_threshold() {
        assert_eq!(choose_regime(0.5, 0.0), Regime::LargeEps);
        assert_eq!(choose_regime(0.5, 0.004), Regime::LargeEps);
        assert_eq!(choose_regime(0.5, 0.01), Regime::SmallEps);
    }

    #[test]
    fn failure_tags() {
        assert_eq!(FailureMode::VersionSpaceCollapse { epoch: 2 }.tag(), "version_space_collapse");
        assert_eq!(FailureMode::PruningStalled { epoch: 1 }.tag(), "pruning_stalled");
        assert_eq!(FailureMode::DegenerateAgreement { dist: 0 }.tag(), "degenerate_agreement");
    }
}
