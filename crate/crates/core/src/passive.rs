//! Passive multi-distribution learning: the Hedge-based game solver, the
//! weighted ERM it plays against, and a naive per-distribution ERM baseline.

use crate::domain::{HypothesisClass, RandomizedHypothesis, VersionSpace};
use crate::error::{check_index, invalid, Result};
use crate::oracle::{Example, OracleSet, SampleSource};

/// Scale factors applied to the solver's hyperparameter formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeKnobs {
    pub c_t: f64,
    pub c_t1: f64,
    pub c_eta: f64,
    pub c_eps1: f64,
}

impl Default for HedgeKnobs {
    fn default() -> Self {
        HedgeKnobs { c_t: 1.0, c_t1: 1.0, c_eta: 1.0, c_eps1: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub eps: f64,
    pub delta: f64,
    /// Upper bound on the optimal worst-case error of the game being solved.
    pub nu: f64,
    pub knobs: HedgeKnobs,
    /// Keep a per-round diagnostic trace.
    pub diagnostics: bool,
}

impl SolverConfig {
    pub fn new(eps: f64, delta: f64, nu: f64) -> Self {
        SolverConfig { eps, delta, nu, knobs: HedgeKnobs::default(), diagnostics: false }
    }

    pub fn with_knobs(mut self, knobs: HedgeKnobs) -> Self {
        self.knobs = knobs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.eps) || !open(self.delta) {
            return Err(invalid(format!("eps and delta must lie in (0,1), got {} and {}", self.eps, self.delta)));
        }
        if !(0.0..1.0).contains(&self.nu) {
            return Err(invalid(format!("nu must lie in [0,1), got {}", self.nu)));
        }
        let k = self.knobs;
        for (name, v) in [("c_t", k.c_t), ("c_t1", k.c_t1), ("c_eta", k.c_eta), ("c_eps1", k.c_eps1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("knob {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub eps1: f64,
    pub eta: f64,
    pub rounds: u64,
    pub t1: u64,
}

/// Step size, round count and store-size scale for `k` distributions and a
/// class of VC dimension `d`.
pub fn hyperparams(cfg: &SolverConfig, k: usize, d: usize) -> Result<Hyperparams> {
    cfg.validate()?;
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let (eps, nu, kn) = (cfg.eps, cfg.nu, cfg.knobs);
    let kf = k as f64;
    let eps1 = kn.c_eps1 * eps / 100.0;
    let eta = kn.c_eta * eps1 / (100.0 * (eps1 + nu));
    let scale = 1.0 / eps1 + nu / (eps1 * eps1);
    let rounds = (kn.c_t * 20000.0 * scale * (kf / (cfg.delta * eps)).ln()).ceil();
    let vc_term = if d == 0 { 0.0 } else { d as f64 * (kf * d as f64 / eps).ln() };
    let t1 = (kn.c_t1 * 4000.0 * scale * (kf * (kf / eps).ln() + vc_term + (1.0 / cfg.delta).ln())).ceil();
    if !(eta > 0.0 && eta.is_finite()) || !(rounds >= 1.0) || !(t1 >= 1.0) || !rounds.is_finite() || !t1.is_finite() {
        return Err(invalid(format!("degenerate hyperparameters: eta={eta}, T={rounds}, T1={t1}")));
    }
    Ok(Hyperparams { eps1, eta, rounds: rounds as u64, t1: t1 as u64 })
}

/// Argmin over `v` of `Σ_i (w_i / n_i) · #errors on the first n_i stored
/// examples of distribution i`; ties go to the lowest class index.
pub fn weighted_erm(
    class: &HypothesisClass,
    v: &VersionSpace,
    store: &[Vec<Example>],
    w: &[f64],
    n: &[usize],
) -> Result<usize> {
    if store.len() != w.len() || n.len() != w.len() {
        return Err(invalid("store, weights and counts must have one entry per distribution"));
    }
    for i in 0..w.len() {
        if w[i] > 0.0 && n[i] == 0 {
            return Err(invalid(format!("distribution {i} has positive weight but no stored examples")));
        }
        if n[i] > store[i].len() {
            return Err(invalid(format!("distribution {i} has only {} stored examples", store[i].len())));
        }
    }
    let errors: Vec<Vec<u64>> = v
        .members()
        .iter()
        .map(|&h| {
            check_index("hypothesis", h, class.len())?;
            let hyp = class.hypothesis(h);
            Ok((0..w.len())
                .map(|i| store[i][..n[i]].iter().filter(|&&(x, y)| hyp.predict(x) != y).count() as u64)
                .collect())
        })
        .collect::<Result<_>>()?;
    argmin_weighted(v, &errors, w, n)
}

fn weighted_empirical(errors: &[u64], w: &[f64], n: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..w.len() {
        if n[i] > 0 {
            total += w[i] / n[i] as f64 * errors[i] as f64;
        }
    }
    total
}

fn argmin_weighted(v: &VersionSpace, errors: &[Vec<u64>], w: &[f64], n: &[usize]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (pos, &h) in v.members().iter().enumerate() {
        let l = weighted_empirical(&errors[pos], w, n);
        if best.is_none_or(|(_, b)| l < b) {
            best = Some((h, l));
        }
    }
    best.map(|(h, _)| h).ok_or(crate::error::Error::EmptyVersionSpace)
}

/// Bookkeeping of the column player.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeState {
    round: u64,
    log_weights: Vec<f64>,
    w: Vec<f64>,
    w_hat: Vec<f64>,
    w_bar: Vec<f64>,
    counts: Vec<usize>,
}

impl HedgeState {
    pub fn new(k: usize) -> Self {
        let w = vec![1.0 / k as f64; k];
        HedgeState { round: 0, log_weights: vec![0.0; k], w_bar: w.clone(), w, w_hat: vec![0.0; k], counts: vec![0; k] }
    }

    /// Starts from given unnormalized weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(invalid("initial weights must be positive and finite"));
        }
        let mut s = HedgeState::new(weights.len());
        s.log_weights = weights.iter().map(|v| v.ln()).collect();
        s.renormalize();
        s.w_bar = s.w.clone();
        Ok(s)
    }

    fn renormalize(&mut self) {
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.log_weights.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        self.w = raw.into_iter().map(|r| r / total).collect();
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    pub fn w_bar(&self) -> &[f64] {
        &self.w_bar
    }

    /// Stored-example counts `n_i`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Applies the doubling rule. Returns the new store sizes when it fires.
    pub fn doubling(&mut self, t1: u64) -> Option<Vec<usize>> {
        let fire = self.w.iter().zip(&self.w_hat).any(|(&w, &wh)| w >= 2.0 * wh);
        if !fire {
            return None;
        }
        for i in 0..self.w.len() {
            self.w_hat[i] = self.w_hat[i].max(self.w[i]);
            let target = (t1 as f64 * self.w_hat[i]).ceil() as usize;
            self.counts[i] = self.counts[i].max(target);
        }
        Some(self.counts.clone())
    }

    /// Number of fresh examples drawn from each distribution to score the
    /// current play.
    pub fn reward_draws(&self) -> Vec<usize> {
        let k = self.w.len() as f64;
        self.w_bar.iter().map(|&wb| ((k * wb).ceil() as usize).max(1)).collect()
    }
}

/// Multiplicative update `W_i ← W_i · exp(η r_i)` followed by renormalization
/// and the running-maximum update.
pub fn hedge_step(state: &mut HedgeState, rewards: &[f64], eta: f64) -> Result<()> {
    if rewards.len() != state.w.len() {
        return Err(invalid("one reward per distribution"));
    }
    if rewards.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(invalid("rewards must lie in [0,1]"));
    }
    for (lw, r) in state.log_weights.iter_mut().zip(rewards) {
        *lw += eta * r;
    }
    state.renormalize();
    for (wb, &w) in state.w_bar.iter_mut().zip(&state.w) {
        *wb = wb.max(w);
    }
    state.round += 1;
    Ok(())
}

/// Empirical loss of class member `h` on `count` fresh draws from
/// distribution `i` through `source`.
pub fn reward_estimate(
    class: &HypothesisClass,
    h: usize,
    i: usize,
    count: usize,
    oracles: &mut OracleSet<'_>,
    source: SampleSource<'_>,
) -> Result<f64> {
    let hyp = class.get(h)?;
    if count == 0 {
        return Err(invalid("reward estimate needs at least one draw"));
    }
    let mut wrong = 0usize;
    for _ in 0..count {
        let (x, y) = oracles.sample(source, i)?;
        if hyp.predict(x) != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / count as f64)
}

/// One row of the per-round diagnostic dump.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeRound {
    pub round: u64,
    pub played: usize,
    pub weights: Vec<f64>,
    pub w_bar_l1: f64,
    pub store_total: usize,
    pub reward_draws: usize,
}

pub const HEDGE_DIAGNOSTICS_HEADER: &str = "round,played,w_bar_l1,store_total,reward_draws,weights";

impl HedgeRound {
    pub fn csv_row(&self) -> String {
        let w: Vec<String> = self.weights.iter().map(|v| v.to_string()).collect();
        format!(
            "{},{},{},{},{},{}",
            self.round,
            self.played,
            self.w_bar_l1,
            self.store_total,
            self.reward_draws,
            w.join(";")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeOutcome {
    pub output: RandomizedHypothesis,
    pub hyperparams: Hyperparams,
    /// Examples pulled into the ERM store, per distribution.
    pub store_draws: Vec<usize>,
    /// Examples pulled for reward estimates, per distribution.
    pub reward_draws: Vec<usize>,
    pub rounds: Vec<HedgeRound>,
}

impl HedgeOutcome {
    pub fn total_draws(&self) -> usize {
        self.store_draws.iter().sum::<usize>() + self.reward_draws.iter().sum::<usize>()
    }
}

/// Runs the Hedge game over the version space `v`, with distribution `i`
/// observed through `source`. `d` is the VC dimension used for sizing.
pub fn mdl_hedge_vc(
    class: &HypothesisClass,
    v: &VersionSpace,
    oracles: &mut OracleSet<'_>,
    source: SampleSource<'_>,
    cfg: &SolverConfig,
    d: usize,
) -> Result<HedgeOutcome> {
    if v.is_empty() {
        return Err(crate::error::Error::EmptyVersionSpace);
    }
    let k = oracles.k();
    let hp = hyperparams(cfg, k, d)?;
    let mut state = HedgeState::new(k);
    let mut store: Vec<Vec<Example>> = vec![Vec::new(); k];
    // errors[pos][i]: mistakes of the pos-th member of v on store[i]
    let mut errors = vec![vec![0u64; k]; v.len()];
    let mut reward_draws = vec![0usize; k];
    let mut played: Vec<usize> = Vec::with_capacity(hp.rounds.min(1 << 20) as usize);
    let mut rounds = Vec::new();

    for t in 1..=hp.rounds {
        if let Some(targets) = state.doubling(hp.t1) {
            for i in 0..k {
                let old = store[i].len();
                for _ in old..targets[i] {
                    store[i].push(oracles.sample(source, i)?);
                }
                for (pos, &h) in v.members().iter().enumerate() {
                    let hyp = class.hypothesis(h);
                    errors[pos][i] += store[i][old..].iter().filter(|&&(x, y)| hyp.predict(x) != y).count() as u64;
                }
            }
        }
        let h = argmin_weighted(v, &errors, state.weights(), state.counts())?;
        played.push(h);

        let draws = state.reward_draws();
        let mut rewards = Vec::with_capacity(k);
        for (i, &c) in draws.iter().enumerate() {
            rewards.push(reward_estimate(class, h, i, c, oracles, source)?);
            reward_draws[i] += c;
        }
        if cfg.diagnostics {
            rounds.push(HedgeRound {
                round: t,
                played: h,
                weights: state.weights().to_vec(),
                w_bar_l1: state.w_bar().iter().sum(),
                store_total: store.iter().map(Vec::len).sum(),
                reward_draws: draws.iter().sum(),
            });
        }
        hedge_step(&mut state, &rewards, hp.eta)?;
    }

    Ok(HedgeOutcome {
        output: RandomizedHypothesis::uniform(&played)?,
        hyperparams: hp,
        store_draws: store.iter().map(Vec::len).collect(),
        reward_draws,
        rounds,
    })
}

/// Per-distribution sample size of the naive baseline:
/// `⌈c · (max(d,1) + ln(k/δ)) · (ν+ε)/ε²⌉`.
pub fn naive_sample_size(k: usize, d: usize, eps: f64, delta: f64, nu: f64, c_naive: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0 && c_naive > 0.0 && nu >= 0.0) || k == 0 {
        return Err(invalid("naive baseline needs eps, delta in (0,1), nu >= 0, c_naive > 0 and k >= 1"));
    }
    let n = (c_naive * ((d.max(1)) as f64 + (k as f64 / delta).ln()) * (nu + eps) / (eps * eps)).ceil();
    Ok((n as usize).max(1))
}

/// Draws `n` labeled examples from every distribution and returns the class
/// member with the smallest maximum empirical error (lowest index on ties).
pub fn naive_erm_baseline(class: &HypothesisClass, oracles: &mut OracleSet<'_>, n: usize) -> Result<usize> {
    let k = oracles.k();
    let samples: Vec<Vec<Example>> =
        (0..k).map(|i| (0..n).map(|_| oracles.sample_labeled(i)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let mut best: Option<(usize, usize)> = None;
    for (j, h) in class.hypotheses().iter().enumerate() {
        let worst = samples.iter().map(|s| s.iter().filter(|&&(x, y)| h.predict(x) != y).count()).max().unwrap_or(0);
        if best.is_none_or(|(_, b)| worst < b) {
            best = Some((j, worst));
        }
    }
    Ok(best.expect("class is non-empty").0)
}
