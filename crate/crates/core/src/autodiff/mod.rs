//! Minimal reverse-mode automatic differentiation over dense matrices and
//! sparse-dense products.

mod dense;
mod expr;
mod gradcheck;
mod sparse;

use thiserror::Error;

pub use dense::DenseMat;
pub use expr::{Bindings, Evaluation, ExprGraph, Gradients, NodeId, SparseSource};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use sparse::SparseMat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch at node {node} ({op}): {detail}")]
    ShapeMismatch { node: usize, op: &'static str, detail: String },
    #[error("input `{0}` is not bound")]
    Unbound(String),
    #[error("non-finite values in {0}")]
    NonFiniteInput(String),
    #[error("node {node} ({op}) produced non-finite values")]
    NonFiniteValue { node: usize, op: &'static str },
    #[error("backward needs a 1x1 root, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },
    #[error("expression has no root")]
    NoRoot,
    #[error("{0}")]
    BadData(String),
}
