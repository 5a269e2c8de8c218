//! Batch driver for the pseudo-boson checks: configuration, execution, reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod demo;
pub mod report;
pub mod run;

pub use config::{Check, RunConfig};
pub use report::{emit, CheckRecord, Report, Status};
pub use run::run_checks;
