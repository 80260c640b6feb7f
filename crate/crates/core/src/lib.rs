//! Fair knowledge distillation for graph neural networks.
//!
//! A teacher GNN is distilled into a light student while a per-node proxy of
//! bias is learned alongside it. At inference the proxy is replaced by its
//! column mean, which strips the group information it absorbed and leaves a
//! less biased student.

pub mod autodiff;
pub mod distill;
pub mod fairness;
pub mod graph;
pub mod models;
pub mod rng;

pub use autodiff::{DenseMat, SparseMat};
