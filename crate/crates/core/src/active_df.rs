//! Distribution-free active learning through reliable, probably useful
//! (abstaining) classifiers.

use rand::Rng;

use crate::active_dd::{ActiveRunResult, EpochSchedule, FailureMode, FinalTarget, LearnerConfig, Regime};
use crate::domain::{
    exact_sum, Hypothesis, HypothesisClass, Label, LabeledDistribution, MdlInstance, RegionMap, VersionSpace, NEG, POS,
};
use crate::error::{invalid, Error, Result};
use crate::oracle::{Example, OracleSet, SampleSource};
use crate::passive::{mdl_hedge_vc, SolverConfig};

/// A map `X → {-1, +1, 0}` where 0 means abstain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstainingClassifier {
    outputs: Vec<i8>,
}

impl AbstainingClassifier {
    pub fn new(outputs: Vec<i8>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(invalid("abstaining classifier over an empty feature space"));
        }
        if let Some(&bad) = outputs.iter().find(|&&v| !(-1..=1).contains(&v)) {
            return Err(Error::InvalidLabel(bad as i64));
        }
        Ok(AbstainingClassifier { outputs })
    }

    /// Abstains everywhere.
    pub fn abstain_all(m: usize) -> Self {
        AbstainingClassifier { outputs: vec![0; m] }
    }

    /// Abstains on `DIS(V)` and predicts `V(x)` elsewhere.
    pub fn from_region(region: &RegionMap) -> Self {
        AbstainingClassifier {
            outputs: (0..region.num_points()).map(|x| region.agreed_label(x).unwrap_or(0)).collect(),
        }
    }

    #[inline]
    pub fn predict(&self, x: usize) -> i8 {
        self.outputs[x]
    }

    pub fn outputs(&self) -> &[i8] {
        &self.outputs
    }

    pub fn num_points(&self) -> usize {
        self.outputs.len()
    }

    pub fn abstention_mass(&self, d: &LabeledDistribution) -> f64 {
        exact_sum((0..self.outputs.len()).filter(|&x| self.outputs[x] == 0).map(|x| d.marginal()[x]))
    }

    /// Mass of committed predictions that disagree with `h`.
    pub fn violation_mass(&self, d: &LabeledDistribution, h: &Hypothesis) -> f64 {
        exact_sum(
            (0..self.outputs.len())
                .filter(|&x| self.outputs[x] != 0 && self.outputs[x] != h.predict(x))
                .map(|x| d.marginal()[x]),
        )
    }

    /// Points where `f` commits to a label other than `h`'s.
    pub fn violations(&self, h: &Hypothesis) -> Vec<usize> {
        (0..self.outputs.len()).filter(|&x| self.outputs[x] != 0 && self.outputs[x] != h.predict(x)).collect()
    }
}

/// Reliability and usefulness of an abstaining classifier against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RpuReport {
    /// Committed-and-wrong mass per distribution.
    pub violations: Vec<f64>,
    pub abstention: Vec<f64>,
    pub labels: u64,
}

impl RpuReport {
    pub fn new(f: &AbstainingClassifier, inst: &MdlInstance, reference: &Hypothesis, labels: u64) -> Self {
        RpuReport {
            violations: inst.distributions().iter().map(|d| f.violation_mass(d, reference)).collect(),
            abstention: inst.distributions().iter().map(|d| f.abstention_mass(d)).collect(),
            labels,
        }
    }

    pub fn max_abstention(&self) -> f64 {
        self.abstention.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_reliable(&self) -> bool {
        self.violations.iter().all(|&v| v == 0.0)
    }
}

/// Thresholded majority over batch votes: abstain when at most a fifth of the
/// batches commit, otherwise the sign of the vote sum (abstaining on a tie).
pub fn vote(votes: &[i8]) -> i8 {
    let committed = votes.iter().filter(|&&v| v != 0).count();
    if 5 * committed <= votes.len() {
        return 0;
    }
    let sum: i64 = votes.iter().map(|&v| v as i64).sum();
    sum.signum() as i8
}

/// Number of batches `60⌈ln(1/δ)⌉`.
pub fn batch_count(delta: f64) -> usize {
    (60.0 * (1.0 / delta).ln().ceil()).max(60.0) as usize
}

fn batch_bound(star: usize, n: f64) -> f64 {
    let s = star as f64;
    let vc_part = if star == 0 { 0.0 } else { 10.0 * s * (std::f64::consts::E * n / s).ln() };
    (vc_part + 4.0 * 80f64.ln()) / n
}

/// Smallest `n` with `(10𝔰 ln(en/𝔰) + 4 ln 80)/n ≤ ξ/2`, scaled by `c_n`.
pub fn batch_size(star: usize, xi: f64, c_n: f64) -> Result<usize> {
    if !(xi > 0.0 && xi <= 1.0) || !(c_n > 0.0 && c_n.is_finite()) {
        return Err(invalid(format!("batch size needs xi in (0,1] and c_n > 0, got {xi}, {c_n}")));
    }
    let target = xi / 2.0;
    let mut lo = star.max(1) as u64;
    if batch_bound(star, lo as f64) <= target {
        return Ok(((c_n * lo as f64).ceil() as usize).max(1));
    }
    let mut hi = lo * 2;
    while batch_bound(star, hi as f64) > target {
        lo = hi;
        hi *= 2;
    }
    // bound(lo) > target >= bound(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if batch_bound(star, mid as f64) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(((c_n * hi as f64).ceil() as usize).max(1))
}

/// Draws one example from the uniform mixture of `dists`, each seen through
/// `source`.
fn sample_mixture(oracles: &mut OracleSet<'_>, dists: &[usize], source: SampleSource<'_>) -> Result<Example> {
    let i = if dists.len() == 1 { dists[0] } else { dists[oracles.learner_rng().gen_range(0..dists.len())] };
    oracles.sample(source, i)
}

/// Robust RPU learner over the uniform mixture of `dists`. Each batch builds
/// its consistent version space; the batches vote.
#[allow(clippy::too_many_arguments)]
pub fn robust_rpu_learn(
    class: &HypothesisClass,
    oracles: &mut OracleSet<'_>,
    dists: &[usize],
    source: SampleSource<'_>,
    xi: f64,
    delta: f64,
    star: usize,
    c_n: f64,
) -> Result<AbstainingClassifier> {
    if dists.is_empty() {
        return Err(invalid("robust RPU learner needs at least one distribution"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    let batches = batch_count(delta);
    let n = batch_size(star, xi, c_n)?;
    let m = class.num_points();
    let mut votes = vec![Vec::with_capacity(batches); m];
    for _ in 0..batches {
        let mut sample = Vec::with_capacity(n);
        for _ in 0..n {
            sample.push(sample_mixture(oracles, dists, source)?);
        }
        let v = consistent_version_space(class, &sample);
        let f = if v.is_empty() {
            AbstainingClassifier::abstain_all(m)
        } else {
            AbstainingClassifier::from_region(&v.region_map(class)?)
        };
        for (x, slot) in votes.iter_mut().enumerate() {
            slot.push(f.predict(x));
        }
    }
    Ok(AbstainingClassifier { outputs: votes.iter().map(|v| vote(v)).collect() })
}

/// Class members that label every example correctly.
pub fn consistent_version_space(class: &HypothesisClass, sample: &[Example]) -> VersionSpace {
    // deduplicate the sample first; repeated points are common at desk scale
    let mut seen: Vec<Option<(bool, bool)>> = vec![None; class.num_points()];
    for &(x, y) in sample {
        let e = seen[x].get_or_insert((false, false));
        if y == POS {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }
    let constraints: Vec<(usize, Option<Label>)> = seen
        .iter()
        .enumerate()
        .filter_map(|(x, s)| {
            s.map(|(pos, neg)| match (pos, neg) {
                (true, false) => (x, Some(POS)),
                (false, true) => (x, Some(NEG)),
                _ => (x, None),
            })
        })
        .collect();
    if constraints.iter().any(|(_, l)| l.is_none()) {
        return VersionSpace::from_indices(Vec::new());
    }
    VersionSpace::from_indices(
        (0..class.len())
            .filter(|&j| {
                let h = class.hypothesis(j);
                constraints.iter().all(|&(x, l)| Some(h.predict(x)) == l)
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpuOutcome {
    pub classifier: AbstainingClassifier,
    pub rounds: usize,
    /// `|N_r|` at the start of each round.
    pub survivors: Vec<usize>,
    pub stalled: bool,
}

/// Round cap `4⌈log2 k⌉ + 4`.
pub fn rpu_round_cap(k: usize) -> usize {
    4 * ceil_log2(k) + 4
}

fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

/// Collaborative RPU learning: learn on the mixture of surviving
/// distributions, retire the ones already covered, repeat.
#[allow(clippy::too_many_arguments)]
pub fn passive_rpu_mdl(
    inst: &MdlInstance,
    oracles: &mut OracleSet<'_>,
    source: SampleSource<'_>,
    xi: f64,
    delta: f64,
    star: usize,
    c_n: f64,
) -> Result<RpuOutcome> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(invalid(format!("xi must lie in (0,1], got {xi}")));
    }
    let k = inst.k();
    let cap = rpu_round_cap(k);
    let delta_call = delta / (2.0 * ceil_log2(k) as f64 + 2.0);
    let mut alive: Vec<usize> = (0..k).collect();
    let mut learned: Vec<AbstainingClassifier> = Vec::new();
    let mut survivors = Vec::new();
    while !alive.is_empty() && learned.len() < cap {
        survivors.push(alive.len());
        let f = robust_rpu_learn(inst.class(), oracles, &alive, source, xi / 2.0, delta_call, star, c_n)?;
        alive.retain(|&i| f.abstention_mass(&inst.distributions()[i]) > xi);
        learned.push(f);
    }
    let m = inst.num_points();
    let outputs = (0..m).map(|x| learned.iter().map(|f| f.predict(x)).find(|&v| v != 0).unwrap_or(0)).collect();
    Ok(RpuOutcome {
        classifier: AbstainingClassifier { outputs },
        rounds: learned.len(),
        survivors,
        stalled: !alive.is_empty(),
    })
}

/// One epoch of the distribution-free learner.
#[derive(Debug, Clone, PartialEq)]
pub struct DfEpoch {
    pub epoch: u32,
    pub eps_n: f64,
    /// `f_n` for refinement epochs; `None` for the final solver epoch.
    pub classifier: Option<AbstainingClassifier>,
    /// `max_i Pr_{D_i}[f(x) = 0]` of the classifier in force after the epoch.
    pub abstain_mass_max: f64,
    pub rounds_used: usize,
    pub labels: u64,
}

pub const DF_TRACE_HEADER: &str = "epoch,eps_n,abstain_mass_max,rounds_used,labels_this_epoch";

impl DfEpoch {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.epoch, self.eps_n, self.abstain_mass_max, self.rounds_used, self.labels)
    }
}

/// Epoch count `max(1, ⌈log2((d+k)/(𝔰ε))⌉)`; a zero star number means the
/// class has nothing to refine and gives one epoch.
pub fn df_epoch_count(d: usize, k: usize, star: usize, eps: f64) -> u32 {
    if star == 0 {
        return 1;
    }
    let v = ((d + k) as f64 / (star as f64 * eps)).log2().ceil();
    if v < 1.0 {
        1
    } else {
        v as u32
    }
}

/// Distribution-free learner: refine abstaining classifiers for `n0 - 1`
/// epochs, then solve the game on the imputed distributions.
pub fn active_dist_free(
    inst: &MdlInstance,
    oracles: &mut OracleSet<'_>,
    eps: f64,
    delta: f64,
    star: usize,
    nu: f64,
    cfg: &LearnerConfig,
) -> Result<ActiveRunResult> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("eps and delta must lie in (0,1), got {eps}, {delta}")));
    }
    let mut result = ActiveRunResult::empty(oracles);
    result.regime = Some(Regime::LargeEps);
    let k = inst.k();
    let d = cfg.vc_dim;
    if eps < 100.0 * (k + d) as f64 * nu {
        result.warnings.push(format!("eps = {eps} is below 100(k+d)nu = {}", 100.0 * (k + d) as f64 * nu));
    }
    let n0 = df_epoch_count(d, k, star, eps);
    let schedule = EpochSchedule { n0, delta };
    let mut f = AbstainingClassifier::abstain_all(inst.num_points());

    for n in 1..n0 {
        let eps_n = EpochSchedule::eps_n(n);
        if nu > 0.0 && eps_n < 100.0 * star as f64 * nu {
            result.warnings.push(format!("epoch {n}: xi = {eps_n} is below 100*s*nu"));
        }
        let before = oracles.ledger().total_labels();
        let out = passive_rpu_mdl(inst, oracles, SampleSource::Imputed(&f), eps_n, schedule.delta_n(n), star, cfg.c_n)?;
        let abstain = inst.distributions().iter().map(|dist| out.classifier.abstention_mass(dist)).fold(0.0, f64::max);
        result.df_epochs.push(DfEpoch {
            epoch: n,
            eps_n,
            classifier: Some(out.classifier.clone()),
            abstain_mass_max: abstain,
            rounds_used: out.rounds,
            labels: oracles.ledger().total_labels() - before,
        });
        if out.stalled {
            result.failure = Some(FailureMode::PruningStalled { epoch: n });
            result.ledger = oracles.ledger().clone();
            return Ok(result);
        }
        f = out.classifier;
    }

    let eps_last = EpochSchedule::eps_n(n0);
    let target = match cfg.final_target {
        FinalTarget::Eps => eps,
        FinalTarget::EpsN => eps_last,
    };
    let solver =
        SolverConfig { eps: target, delta: schedule.delta_n(n0), nu, knobs: cfg.knobs, diagnostics: cfg.diagnostics };
    let before = oracles.ledger().total_labels();
    let out =
        mdl_hedge_vc(inst.class(), &inst.class().full_version_space(), oracles, SampleSource::Imputed(&f), &solver, d)?;
    result.df_epochs.push(DfEpoch {
        epoch: n0,
        eps_n: eps_last,
        classifier: None,
        abstain_mass_max: inst.distributions().iter().map(|dist| f.abstention_mass(dist)).fold(0.0, f64::max),
        rounds_used: out.rounds.len(),
        labels: oracles.ledger().total_labels() - before,
    });
    result.hedge_rounds = out.rounds;
    result.output = Some(out.output);
    result.ledger = oracles.ledger().clone();
    Ok(result)
}
