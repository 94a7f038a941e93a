//! Scenario runner for the `rdd-core` solvers.
//!
//! `rdd run` reads TOML scenarios and writes CSV tables, `manifest.json`
//! and `summary.json` per scenario. `rdd compare` diffs two run directories.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod error;
pub mod output;
pub mod run;
pub mod scenario;
pub mod tasks;

pub use error::{CliError, Result};
