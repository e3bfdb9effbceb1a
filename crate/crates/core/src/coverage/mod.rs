//! Statement and branch coverage targets and reports.

pub mod adapter;
pub mod report;
pub mod targets;

use thiserror::Error;

pub use report::{compute_coverage, read_report, write_report, CoverageReport, Status, TargetRecord};
pub use targets::{enumerate_targets, CoverageTarget, TargetKind, Timing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("schema error at `{pointer}`: {reason}")]
    Schema { pointer: String, reason: String },
    #[error("unknown target `{id}`")]
    UnknownTarget { id: String },
    #[error("cannot access {path}: {reason}")]
    Io { path: String, reason: String },
}
