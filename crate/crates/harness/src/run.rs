//! Algorithm dispatch and the multi-trial runner.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use amdl_core::active_dd::{active_large_eps, active_small_eps, regime_dispatch, ActiveRunResult, DD_TRACE_HEADER};
use amdl_core::active_df::{active_dist_free, DF_TRACE_HEADER};
use amdl_core::complexity::{star_number_max, vc_dimension, DEFAULT_STAR_CAP};
use amdl_core::domain::{best_nu, worst_loss, MdlInstance, RandomizedHypothesis};
use amdl_core::oracle::{OracleSet, SampleSource};
use amdl_core::passive::{mdl_hedge_vc, naive_erm_baseline, naive_sample_size, SolverConfig, HEDGE_DIAGNOSTICS_HEADER};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::instance_file::{instance_id, read_instance};
use crate::profile::Knobs;

/// Largest subset size searched when computing the VC dimension for sizing.
pub const VC_CAP: usize = 12;

/// Slack on the success test `achieved <= nu + eps`.
pub const SUCCESS_SLACK: f64 = 1e-12;

pub const TRIAL_HEADER: [&str; 14] = [
    "instance_id",
    "family",
    "alg",
    "eps",
    "delta",
    "seed",
    "labels_total",
    "labels_per_dist",
    "unlabeled",
    "achieved_err",
    "nu",
    "success",
    "failure_mode",
    "wall_ms",
];

pub const TRANSCRIPT_HEADER: &str = "trial,i,x,y,cumulative_label_count";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    ActiveDdLarge,
    ActiveDdSmall,
    ActiveDdAuto,
    ActiveDf,
    PassiveHedge,
    PassiveNaive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::ActiveDdLarge,
        Algorithm::ActiveDdSmall,
        Algorithm::ActiveDdAuto,
        Algorithm::ActiveDf,
        Algorithm::PassiveHedge,
        Algorithm::PassiveNaive,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::ActiveDdLarge => "active-dd-large",
            Algorithm::ActiveDdSmall => "active-dd-small",
            Algorithm::ActiveDdAuto => "active-dd-auto",
            Algorithm::ActiveDf => "active-df",
            Algorithm::PassiveHedge => "passive-hedge",
            Algorithm::PassiveNaive => "passive-naive",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.tag() == s).ok_or_else(|| HarnessError::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub instance: PathBuf,
    pub alg: Algorithm,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub knobs: Knobs,
    /// Directory for per-trial traces and the label transcript.
    pub trace: Option<PathBuf>,
    /// Record wall time; off by default so output bytes depend only on the seed.
    pub timing: bool,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(HarnessError::Config(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::Config(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        Ok(())
    }
}

/// One row of the trial CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub instance_id: String,
    pub family: String,
    pub alg: Algorithm,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub labels_total: u64,
    pub labels_per_dist: Vec<u64>,
    pub unlabeled: u64,
    /// `None` when the run ended in a failure mode without an output.
    pub achieved_err: Option<f64>,
    pub nu: f64,
    pub success: bool,
    pub failure_mode: Option<&'static str>,
    pub wall_ms: u64,
}

impl TrialRecord {
    pub fn fields(&self) -> [String; 14] {
        [
            self.instance_id.clone(),
            self.family.clone(),
            self.alg.tag().to_string(),
            self.eps.to_string(),
            self.delta.to_string(),
            self.seed.to_string(),
            self.labels_total.to_string(),
            self.labels_per_dist.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
            self.unlabeled.to_string(),
            self.achieved_err.map(|e| e.to_string()).unwrap_or_default(),
            self.nu.to_string(),
            self.success.to_string(),
            self.failure_mode.unwrap_or("").to_string(),
            self.wall_ms.to_string(),
        ]
    }
}

pub fn write_records<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|e| HarnessError::io("<output>", e))?;
    Ok(())
}

pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Quantities computed once per instance and shared by every trial.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub instance: MdlInstance,
    pub instance_id: String,
    pub family: String,
    pub nu: f64,
    pub vc_dim: usize,
    /// Star number maximised over reference hypotheses; only the
    /// distribution-free learner needs it.
    pub star: Option<usize>,
}

impl TrialContext {
    pub fn new(instance: MdlInstance, instance_id: String, family: String) -> Result<Self> {
        let (_, nu) = best_nu(&instance);
        let cap = VC_CAP.min(instance.num_points());
        let vc_dim = vc_dimension(instance.class(), cap)?.value();
        Ok(TrialContext { instance, instance_id, family, nu, vc_dim, star: None })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (inst, meta) = read_instance(path)?;
        let (id, family) = match meta {
            Some(m) => (instance_id(&m), m.family),
            None => {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, "custom".to_string())
            }
        };
        Self::new(inst, id, family)
    }

    pub fn ensure_star(&mut self) -> Result<usize> {
        if let Some(s) = self.star {
            return Ok(s);
        }
        let s = star_number_max(self.instance.class(), DEFAULT_STAR_CAP)?.value;
        self.star = Some(s);
        Ok(s)
    }
}

/// Per-trial settings shared by every seed of a run.
#[derive(Debug, Clone, Copy)]
pub struct TrialSpec {
    pub alg: Algorithm,
    pub eps: f64,
    pub delta: f64,
    pub knobs: Knobs,
    /// Solver diagnostics and the label transcript.
    pub trace: bool,
    pub timing: bool,
}

/// A finished trial: its record plus everything the learner reported.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub record: TrialRecord,
    pub result: ActiveRunResult,
}

fn passive_result(oracles: &OracleSet<'_>, output: RandomizedHypothesis) -> ActiveRunResult {
    ActiveRunResult {
        output: Some(output),
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

pub fn run_single(ctx: &TrialContext, spec: &TrialSpec, seed: u64) -> Result<TrialRun> {
    let TrialSpec { alg, eps, delta, ref knobs, trace, timing } = *spec;
    let inst = &ctx.instance;
    let start = timing.then(Instant::now);
    let mut oracles = OracleSet::with_transcript(inst, seed, trace);
    let cfg = knobs.learner(ctx.vc_dim, trace);
    let result = match alg {
        Algorithm::ActiveDdLarge => active_large_eps(inst, &mut oracles, eps, delta, &cfg)?,
        Algorithm::ActiveDdSmall => {
            if ctx.nu <= 0.0 {
                return Err(HarnessError::Config(format!(
                    "{alg} needs an instance with nu > 0; use active-dd-large or active-dd-auto"
                )));
            }
            active_small_eps(inst, &mut oracles, eps, delta, ctx.nu, &cfg)?
        }
        Algorithm::ActiveDdAuto => regime_dispatch(inst, &mut oracles, eps, delta, &cfg)?,
        Algorithm::ActiveDf => {
            let star = ctx.star.ok_or_else(|| HarnessError::Config("star number not prepared for active-df".into()))?;
            active_dist_free(inst, &mut oracles, eps, delta, star, ctx.nu, &cfg)?
        }
        Algorithm::PassiveHedge => {
            let solver = SolverConfig { eps, delta, nu: ctx.nu, knobs: knobs.hedge(), diagnostics: trace };
            let full = inst.class().full_version_space();
            let out = mdl_hedge_vc(inst.class(), &full, &mut oracles, SampleSource::Direct, &solver, ctx.vc_dim)?;
            let mut r = passive_result(&oracles, out.output);
            r.hedge_rounds = out.rounds;
            r
        }
        Algorithm::PassiveNaive => {
            let n = naive_sample_size(inst.k(), ctx.vc_dim, eps, delta, ctx.nu, knobs.c_naive)?;
            let idx = naive_erm_baseline(inst.class(), &mut oracles, n)?;
            passive_result(&oracles, RandomizedHypothesis::pure(idx))
        }
    };

    let ledger = oracles.ledger();
    assert_eq!(&result.ledger, ledger, "learner ledger snapshot is stale");
    let labels_per_dist = ledger.labels().to_vec();
    let labels_total = ledger.total_labels();
    assert_eq!(labels_total, labels_per_dist.iter().sum::<u64>());

    let achieved_err = match &result.output {
        Some(out) => Some(worst_loss(&out.resolve(inst.class())?, inst)?),
        None => None,
    };
    let success = achieved_err.is_some_and(|e| e <= ctx.nu + eps + SUCCESS_SLACK);
    let record = TrialRecord {
        instance_id: ctx.instance_id.clone(),
        family: ctx.family.clone(),
        alg,
        eps,
        delta,
        seed,
        labels_total,
        labels_per_dist,
        unlabeled: ledger.total_unlabeled(),
        achieved_err,
        nu: ctx.nu,
        success,
        failure_mode: result.failure.map(|f| f.tag()),
        wall_ms: start.map_or(0, |s| s.elapsed().as_millis() as u64),
    };
    Ok(TrialRun { record, result })
}

/// Runs `trials` trials with seeds `base, base+1, ...`, in parallel, and
/// returns them in seed order.
pub fn run_many(ctx: &TrialContext, spec: &TrialSpec, trials: usize, base_seed: u64) -> Result<Vec<TrialRun>> {
    (0..trials).into_par_iter().map(|t| run_single(ctx, spec, base_seed.wrapping_add(t as u64))).collect()
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Loads the instance, runs every trial and writes traces if requested.
pub fn run_trials(cfg: &RunConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut ctx = TrialContext::load(&cfg.instance)?;
    if cfg.alg == Algorithm::ActiveDf {
        ctx.ensure_star()?;
    }
    let spec = TrialSpec {
        alg: cfg.alg,
        eps: cfg.eps,
        delta: cfg.delta,
        knobs: cfg.knobs,
        trace: cfg.trace.is_some(),
        timing: cfg.timing,
    };
    let runs = in_pool(cfg.workers, || run_many(&ctx, &spec, cfg.trials, cfg.seed))??;
    if let Some(dir) = &cfg.trace {
        write_traces(dir, &runs)?;
    }
    Ok(runs.into_iter().map(|r| r.record).collect())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Per-trial epoch and solver traces plus one transcript of every label query.
pub fn write_traces(dir: &Path, runs: &[TrialRun]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut transcript = String::from(TRANSCRIPT_HEADER);
    transcript.push('\n');
    for (t, run) in runs.iter().enumerate() {
        let r = &run.result;
        if !r.epochs.is_empty() {
            let mut s = format!("{DD_TRACE_HEADER}\n");
            for e in &r.epochs {
                s.push_str(&e.csv_row());
                s.push('\n');
            }
            write_file(&dir.join(format!("trial{t}_dd.csv")), &s)?;
        }
        if !r.df_epochs.is_empty() {
            let mut s = format!("{DF_TRACE_HEADER}\n");
            for e in &r.df_epochs {
                s.push_str(&e.csv_row());
                s.push('\n');
            }
            write_file(&dir.join(format!("trial{t}_df.csv")), &s)?;
        }
        if !r.hedge_rounds.is_empty() {
            let mut s = format!("{HEDGE_DIAGNOSTICS_HEADER}\n");
            for h in &r.hedge_rounds {
                s.push_str(&h.csv_row());
                s.push('\n');
            }
            write_file(&dir.join(format!("trial{t}_hedge.csv")), &s)?;
        }
        if let Some(log) = r.ledger.transcript() {
            for (n, q) in log.iter().enumerate() {
                transcript.push_str(&format!("{t},{},{},{},{}\n", q.dist, q.point, q.label, n + 1));
            }
        }
    }
    write_file(&dir.join("transcript.csv"), &transcript)
}
