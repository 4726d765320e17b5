use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amdl_harness::error::{HarnessError, Result};
use amdl_harness::instance_file::{
    family_metadata, family_spec, parse_params, read_instance, write_instance, InstanceFile,
};
use amdl_harness::measure::{format_report, measure};
use amdl_harness::profile::Knobs;
use amdl_harness::report::report;
use amdl_harness::run::{records_to_csv, run_trials, RunConfig};
use amdl_harness::sweep::{parse_config, run_sweep, summary_to_csv};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amdl", version, about = "Active multi-distribution learning experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file from a named family.
    Gen {
        /// prop1, star-lb, agnostic-lb, example1 or random
        #[arg(long)]
        family: String,
        /// Family parameter, repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print exact complexity measures as key=value lines.
    Measure {
        #[arg(long)]
        instance: PathBuf,
        /// Radius for the disagreement coefficients.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded trials of one algorithm and emit one CSV row per trial.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        alg: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "desk")]
        profile: String,
        #[arg(long = "knob", value_name = "KEY=VALUE")]
        knobs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for epoch traces and the label transcript.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Fill wall_ms (makes output time-dependent).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a grid of cells from a TOML config and emit one summary row per cell.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every trial record here.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Pivot a sweep summary into plot-ready CSVs.
    Report {
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| HarnessError::io("<stdout>", e)),
    }
}

fn pool(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen { family, params, out } => {
            let spec = family_spec(&family, &parse_params(&params)?)?;
            let inst = spec.generate()?;
            let meta = family_metadata(&spec);
            match out {
                Some(p) => write_instance(&p, &inst, Some(meta)),
                None => emit(None, &(InstanceFile::from_instance(&inst, Some(meta)).to_json() + "\n")),
            }
        }
        Command::Measure { instance, eps, out } => {
            let (inst, _) = read_instance(&instance)?;
            emit(out.as_deref(), &format_report(&measure(&inst, eps)?))
        }
        Command::Run { instance, alg, eps, delta, trials, seed, profile, knobs, out, trace, timing, workers } => {
            let mut k = Knobs::profile(&profile)?;
            k.apply(&knobs)?;
            let cfg =
                RunConfig { instance, alg: alg.parse()?, eps, delta, trials, seed, knobs: k, trace, timing, workers };
            let records = run_trials(&cfg)?;
            emit(out.as_deref(), &records_to_csv(&records))
        }
        Command::Sweep { config, out, records, workers } => {
            pool(workers)?;
            let text = std::fs::read_to_string(&config).map_err(|e| HarnessError::io(&config, e))?;
            let cfg = parse_config(&text)?;
            let result = run_sweep(&cfg)?;
            if let Some(p) = records {
                emit(Some(&p), &records_to_csv(&result.records))?;
            }
            emit(out.as_deref(), &summary_to_csv(&result.cells))
        }
        Command::Report { input, out } => report(&input, &out).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("amdl: {e}");
            ExitCode::FAILURE
        }
    }
}
