//! Active multi-distribution learning over finite domains.
//!
//! A hypothesis is scored by its worst 0-1 loss across `k` distributions.
//! The crate provides exact losses and complexity measures over known pmfs,
//! metered sampling oracles, a Hedge-based passive solver, and active
//! learners that spend label queries only where the version space (or an
//! abstaining classifier) is uncertain.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_dd;
pub mod active_df;
pub mod complexity;
pub mod domain;
pub mod error;
pub mod instances;
pub mod oracle;
pub mod passive;

pub use error::{Error, Result};
