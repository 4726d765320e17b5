//! Named knob presets and `key=value` overrides.

use amdl_core::active_dd::{FinalTarget, LearnerConfig};
use amdl_core::passive::HedgeKnobs;

use crate::error::{HarnessError, Result};

/// Every scaling constant the learners expose, plus the naive baseline's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knobs {
    pub c_t: f64,
    pub c_t1: f64,
    pub c_eta: f64,
    pub c_eps1: f64,
    pub c_n: f64,
    pub c_agr: f64,
    pub c_naive: f64,
    pub final_target: FinalTarget,
}

pub const KNOB_NAMES: [&str; 8] = ["c_t", "c_t1", "c_eta", "c_eps1", "c_n", "c_agr", "c_naive", "final_target"];

impl Knobs {
    /// Literal constants.
    pub fn fidelity() -> Self {
        Knobs {
            c_t: 1.0,
            c_t1: 1.0,
            c_eta: 1.0,
            c_eps1: 1.0,
            c_n: 1.0,
            c_agr: 1.0,
            c_naive: 1.0,
            final_target: FinalTarget::Eps,
        }
    }

    /// Scaled-down constants that keep desk-size runs in seconds.
    pub fn desk() -> Self {
        Knobs {
            c_t: 2e-6,
            c_t1: 1e-5,
            c_eta: 50.0,
            c_eps1: 20.0,
            c_n: 0.02,
            c_agr: 0.01,
            c_naive: 1.0,
            final_target: FinalTarget::Eps,
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "fidelity" => Ok(Self::fidelity()),
            "desk" => Ok(Self::desk()),
            other => Err(HarnessError::Config(format!("unknown profile `{other}` (expected fidelity or desk)"))),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "final_target" {
            self.final_target = match value {
                "eps" => FinalTarget::Eps,
                "eps_n" => FinalTarget::EpsN,
                _ => return Err(HarnessError::Config(format!("final_target must be eps or eps_n, got `{value}`"))),
            };
            return Ok(());
        }
        let v: f64 =
            value.trim().parse().map_err(|_| HarnessError::Config(format!("knob {key}: `{value}` is not a number")))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(HarnessError::Config(format!("knob {key} must be positive and finite, got {v}")));
        }
        let slot = match key {
            "c_t" => &mut self.c_t,
            "c_t1" => &mut self.c_t1,
            "c_eta" => &mut self.c_eta,
            "c_eps1" => &mut self.c_eps1,
            "c_n" => &mut self.c_n,
            "c_agr" => &mut self.c_agr,
            "c_naive" => &mut self.c_naive,
            _ => {
                return Err(HarnessError::Config(format!(
                    "unknown knob `{key}` (expected one of {})",
                    KNOB_NAMES.join(", ")
                )))
            }
        };
        *slot = v;
        Ok(())
    }

    /// Applies `key=value` strings in order.
    pub fn apply<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) =
                o.split_once('=').ok_or_else(|| HarnessError::Config(format!("expected key=value, got `{o}`")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn hedge(&self) -> HedgeKnobs {
        HedgeKnobs { c_t: self.c_t, c_t1: self.c_t1, c_eta: self.c_eta, c_eps1: self.c_eps1 }
    }

    pub fn learner(&self, vc_dim: usize, diagnostics: bool) -> LearnerConfig {
        LearnerConfig {
            knobs: self.hedge(),
            vc_dim,
            c_agr: self.c_agr,
            c_n: self.c_n,
            final_target: self.final_target,
            diagnostics,
        }
    }
}
