//! Grid sweeps over families, target errors and algorithms.
//!
//! Config schema (TOML):
//!
//! ```toml
//! trials = 50          # per cell, >= 1
//! seed = 1             # trial t of every cell uses seed + t
//! delta = 0.1
//! profile = "desk"     # or "fidelity"
//! knobs = ["c_t=1e-5"] # optional overrides for every cell
//!
//! [[cells]]
//! family = "star-lb"
//! eps = [0.1, 0.05, 0.025]
//! algs = ["active-dd-large"]
//! knobs = []           # optional, applied after the global ones
//! [cells.params]       # each value is a scalar or a list
//! k = 2
//! theta = [2, 4]
//! i = 1
//! j = 1
//! ```
//!
//! Families that take an `eps` parameter (`prop1`, `agnostic-lb`,
//! `example1`) receive the run's ε unless `eps` is listed in `params`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{HarnessError, Result};
use crate::instance_file::{family_metadata, family_spec};
use crate::profile::Knobs;
use crate::run::{run_many, Algorithm, TrialContext, TrialRecord, TrialSpec};
use crate::stats::{bootstrap_mean_ci, mean, median, BOOTSTRAP_RESAMPLES};

pub const SWEEP_HEADER: [&str; 16] = [
    "instance_id",
    "family",
    "params",
    "k",
    "alg",
    "eps",
    "delta",
    "trials",
    "mean_labels",
    "median_labels",
    "ci_low",
    "ci_high",
    "success_rate",
    "failures",
    "status",
    "reason",
];

const EPS_FAMILIES: [&str; 3] = ["prop1", "agnostic-lb", "example1"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    Many(Vec<toml::Value>),
    One(toml::Value),
}

impl OneOrMany {
    fn values(&self) -> Vec<toml::Value> {
        match self {
            OneOrMany::Many(v) => v.clone(),
            OneOrMany::One(v) => vec![v.clone()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, OneOrMany>,
    pub eps: Vec<f64>,
    pub algs: Vec<String>,
    #[serde(default)]
    pub knobs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub delta: f64,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default)]
    pub knobs: Vec<String>,
    #[serde(default)]
    pub cells: Vec<CellConfig>,
}

fn default_profile() -> String {
    "desk".to_string()
}

/// Parses and checks a sweep config; unknown algorithms and knobs are errors.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let cfg: SweepConfig = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    if cfg.trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(HarnessError::Config(format!("delta must lie in (0,1), got {}", cfg.delta)));
    }
    let mut knobs = Knobs::profile(&cfg.profile)?;
    knobs.apply(&cfg.knobs)?;
    for cell in &cfg.cells {
        for a in &cell.algs {
            a.parse::<Algorithm>()?;
        }
        knobs.clone().apply(&cell.knobs)?;
    }
    Ok(cfg)
}

fn to_json(v: &toml::Value) -> Result<Value> {
    Ok(match v {
        toml::Value::Integer(i) => Value::from(*i),
        toml::Value::Float(f) => serde_json::Number::from_f64(*f)
            .map(Value::Number)
            .ok_or_else(|| HarnessError::Config(format!("parameter value {f} is not finite")))?,
        toml::Value::Boolean(b) => Value::from(*b),
        toml::Value::String(s) => Value::from(s.clone()),
        other => return Err(HarnessError::Config(format!("unsupported parameter value {other}"))),
    })
}

/// Cartesian product of the parameter lists, in key order.
fn expand(params: &BTreeMap<String, OneOrMany>) -> Result<Vec<BTreeMap<String, Value>>> {
    let mut combos = vec![BTreeMap::new()];
    for (key, values) in params {
        let values = values.values();
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for v in &values {
                let mut c: BTreeMap<String, Value> = combo.clone();
                c.insert(key.clone(), to_json(v)?);
                next.push(c);
            }
        }
        combos = next;
    }
    Ok(combos)
}

fn params_string(params: &BTreeMap<String, Value>) -> String {
    params
        .iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// One aggregated row of the sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub instance_id: String,
    pub family: String,
    pub params: String,
    pub k: Option<usize>,
    pub alg: String,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub mean_labels: f64,
    pub median_labels: f64,
    pub ci: (f64, f64),
    pub success_rate: f64,
    pub failures: usize,
    /// `Some(reason)` for cells that could not run.
    pub skipped: Option<String>,
}

impl CellSummary {
    pub fn fields(&self) -> [String; 16] {
        let num = |v: f64| if self.skipped.is_some() { String::new() } else { v.to_string() };
        [
            self.instance_id.clone(),
            self.family.clone(),
            self.params.clone(),
            self.k.map(|k| k.to_string()).unwrap_or_default(),
            self.alg.clone(),
            self.eps.to_string(),
            self.delta.to_string(),
            self.trials.to_string(),
            num(self.mean_labels),
            num(self.median_labels),
            num(self.ci.0),
            num(self.ci.1),
            num(self.success_rate),
            if self.skipped.is_some() { String::new() } else { self.failures.to_string() },
            if self.skipped.is_some() { "skipped" } else { "ok" }.to_string(),
            self.skipped.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub cells: Vec<CellSummary>,
    /// Trial records of every run cell, ordered by cell then seed.
    pub records: Vec<TrialRecord>,
}

fn summarize(base: CellSummary, records: &[TrialRecord], ci_seed: u64) -> CellSummary {
    let labels: Vec<f64> = records.iter().map(|r| r.labels_total as f64).collect();
    let successes = records.iter().filter(|r| r.success).count();
    CellSummary {
        trials: records.len(),
        mean_labels: mean(&labels),
        median_labels: median(&labels),
        ci: bootstrap_mean_ci(&labels, BOOTSTRAP_RESAMPLES, 0.05, ci_seed),
        success_rate: successes as f64 / records.len() as f64,
        failures: records.iter().filter(|r| r.failure_mode.is_some()).count(),
        ..base
    }
}

/// Runs every cell of the grid. Infeasible cells become skipped rows.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    let mut global = Knobs::profile(&cfg.profile)?;
    global.apply(&cfg.knobs)?;
    let mut out = SweepOutput::default();
    let mut cell_index = 0u64;
    for cell in &cfg.cells {
        let mut knobs = global;
        knobs.apply(&cell.knobs)?;
        let algs: Vec<Algorithm> = cell.algs.iter().map(|a| a.parse()).collect::<Result<_>>()?;
        for params in expand(&cell.params)? {
            for &eps in &cell.eps {
                let mut p = params.clone();
                if EPS_FAMILIES.contains(&cell.family.as_str()) && !p.contains_key("eps") {
                    if let Some(n) = serde_json::Number::from_f64(eps) {
                        p.insert("eps".into(), Value::Number(n));
                    }
                }
                let built = family_spec(&cell.family, &p).and_then(|spec| {
                    let inst = spec.generate()?;
                    let meta = family_metadata(&spec);
                    TrialContext::new(inst, crate::instance_file::instance_id(&meta), meta.family)
                });
                for &alg in &algs {
                    cell_index += 1;
                    let base = CellSummary {
                        instance_id: String::new(),
                        family: cell.family.clone(),
                        params: params_string(&p),
                        k: None,
                        alg: alg.tag().to_string(),
                        eps,
                        delta: cfg.delta,
                        trials: 0,
                        mean_labels: f64::NAN,
                        median_labels: f64::NAN,
                        ci: (f64::NAN, f64::NAN),
                        success_rate: f64::NAN,
                        failures: 0,
                        skipped: None,
                    };
                    let mut ctx = match &built {
                        Ok(ctx) => ctx.clone(),
                        Err(e) => {
                            out.cells.push(CellSummary { skipped: Some(e.to_string()), ..base });
                            continue;
                        }
                    };
                    let base = CellSummary { instance_id: ctx.instance_id.clone(), k: Some(ctx.instance.k()), ..base };
                    if alg == Algorithm::ActiveDf {
                        ctx.ensure_star()?;
                    }
                    let spec = TrialSpec { alg, eps, delta: cfg.delta, knobs, trace: false, timing: false };
                    match run_many(&ctx, &spec, cfg.trials, cfg.seed) {
                        Ok(runs) => {
                            let records: Vec<TrialRecord> = runs.into_iter().map(|r| r.record).collect();
                            out.cells.push(summarize(base, &records, cfg.seed ^ cell_index));
                            out.records.extend(records);
                        }
                        Err(e) => out.cells.push(CellSummary { skipped: Some(e.to_string()), ..base }),
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn write_summary<W: Write>(out: W, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for c in cells {
        w.write_record(c.fields())?;
    }
    w.flush().map_err(|e| HarnessError::io("<output>", e))?;
    Ok(())
}

pub fn summary_to_csv(cells: &[CellSummary]) -> String {
    let mut buf = Vec::new();
    write_summary(&mut buf, cells).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}
