//! Experiment harness: instance files, knob profiles, multi-trial runs,
//! grid sweeps and plot-data export.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod instance_file;
pub mod measure;
pub mod profile;
pub mod report;
pub mod run;
pub mod stats;
pub mod sweep;

pub use error::{HarnessError, Result};
