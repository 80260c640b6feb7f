//! Group fairness: hard statistical-parity and equal-opportunity gaps for
//! reporting, and a differentiable surrogate for use inside losses.

mod metrics;
mod report;
mod soft;

use thiserror::Error;

pub use metrics::{delta_eo, delta_sp, BiasValue, GroupIndex, Notion};
pub use report::{evaluate_predictions, AggregateRow, FairnessReport, ReportRow, REPORT_HEADER};
pub use soft::{soft_bias, soft_bias_value, soft_gaps};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("sensitive group {0} is empty")]
    EmptyGroup(u8),
    #[error("groups overlap at node {0}")]
    Overlap(usize),
    #[error("{0}")]
    LengthMismatch(String),
    #[error("no class has nodes of both groups with that true label")]
    NoComputableClass,
    #[error("group {group} has no node with true label {class}")]
    EmptyConditional { group: u8, class: usize },
    #[error("equal opportunity needs true labels")]
    MissingLabels,
}
