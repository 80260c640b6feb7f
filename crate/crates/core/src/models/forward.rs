use std::sync::Arc;

use rand::Rng as _;

use super::params::{bias_name, weight_name};
use super::{Architecture, ModelError, ModelParams, ModelSpec};
use crate::autodiff::{Bindings, DenseMat, ExprGraph, NodeId, SparseMat, SparseSource};
use crate::graph::{normalize_adjacency, row_normalize_neighbors, AttributedGraph};
use crate::rng::Rng;

/// Propagation operators shared by every model on one graph.
#[derive(Clone, Debug)]
pub struct Propagation {
    /// `D^-1/2 (A + I) D^-1/2`.
    pub sym: Arc<SparseMat>,
    /// Neighbor mean without self-loops, for the SAGE aggregator.
    pub neighbor_mean: Arc<SparseMat>,
}

impl Propagation {
    pub fn new(graph: &AttributedGraph) -> Self {
        Self::from_normalized(normalize_adjacency(graph))
    }

    /// Derives the neighbor-mean operator from the off-diagonal pattern of an
    /// already normalized adjacency.
    pub fn from_normalized(a_hat: SparseMat) -> Self {
        let neighbor_mean = Arc::new(row_normalize_neighbors(&a_hat));
        Self { sym: Arc::new(a_hat), neighbor_mean }
    }

    pub fn node_count(&self) -> usize {
        self.sym.rows()
    }
}

/// Named inputs of a model graph besides the parameters.
pub struct ModelInputs;

impl ModelInputs {
    pub fn mask(layer: usize) -> String {
        format!("mask{layer}")
    }
}

/// Shape of the dropout mask applied in front of each layer.
fn mask_shapes(spec: &ModelSpec, n: usize) -> Vec<(usize, usize)> {
    match spec.architecture {
        Architecture::Sgc => vec![(n, spec.input_dim)],
        _ => spec.weight_shapes().iter().enumerate().map(|(l, _)| {
            let width = if l == 0 { spec.input_dim } else { spec.hidden_dim };
            (n, width)
        }).collect(),
    }
}

/// Inverted-dropout masks for one training step: entries are `0` with
/// probability `dropout_rate`, otherwise `1 / (1 - dropout_rate)`. Empty when
/// the model has no dropout.
pub fn dropout_masks(spec: &ModelSpec, n: usize, rng: &mut Rng) -> Vec<DenseMat> {
    if spec.dropout_rate == 0.0 {
        return Vec::new();
    }
    let keep = 1.0 - spec.dropout_rate;
    let scale = 1.0 / keep;
    mask_shapes(spec, n)
        .into_iter()
        .map(|(r, c)| {
            let data: Vec<f64> = (0..r * c).map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 }).collect();
            DenseMat::from_vec(r, c, data).expect("mask shape")
        })
        .collect()
}

/// Adds the model's forward pass on `features` to `expr` and returns the
/// logits node. Parameters enter as inputs `w{l}` / `b{l}`; with `dropout`
/// set, masks enter as inputs `mask{l}` (see [`dropout_masks`]).
pub fn build_logits(
    expr: &mut ExprGraph,
    spec: &ModelSpec,
    prop: &Propagation,
    features: NodeId,
    dropout: bool,
) -> NodeId {
    build_logits_with(expr, spec, prop, features, dropout, true)
}

pub(crate) fn build_logits_with(
    expr: &mut ExprGraph,
    spec: &ModelSpec,
    prop: &Propagation,
    features: NodeId,
    dropout: bool,
    activation: bool,
) -> NodeId {
    let dropout = dropout && spec.dropout_rate > 0.0;
    let sym = || SparseSource::Fixed(prop.sym.clone());
    let masked = |expr: &mut ExprGraph, h: NodeId, layer: usize| {
        if dropout {
            let m = expr.input(&ModelInputs::mask(layer));
            expr.mul(h, m)
        } else {
            h
        }
    };

    if spec.architecture == Architecture::Sgc {
        let mut h = features;
        for _ in 0..spec.sgc_power {
            h = expr.spmm(sym(), h);
        }
        let h = masked(expr, h, 0);
        let w = expr.input(&weight_name(0));
        let b = expr.input(&bias_name(0));
        let z = expr.matmul(h, w);
        return expr.add_row(z, b);
    }

    let depth = spec.depth();
    let mut h = features;
    for l in 0..depth {
        let hin = masked(expr, h, l);
        let w = expr.input(&weight_name(l));
        let b = expr.input(&bias_name(l));
        let z = match spec.architecture {
            Architecture::Gcn => {
                let hw = expr.matmul(hin, w);
                expr.spmm(sym(), hw)
            }
            Architecture::SageMean => {
                let neigh = expr.spmm(SparseSource::Fixed(prop.neighbor_mean.clone()), hin);
                let cat = expr.concat(hin, neigh);
                expr.matmul(cat, w)
            }
            Architecture::Mlp => expr.matmul(hin, w),
            Architecture::Sgc => unreachable!(),
        };
        let z = expr.add_row(z, b);
        h = if l + 1 < depth && activation { expr.relu(z) } else { z };
    }
    h
}

/// Logits of `params` on features `x`. In training mode fresh dropout masks
/// are drawn from `rng`; otherwise `rng` is untouched.
pub fn model_forward(
    params: &ModelParams,
    prop: &Propagation,
    x: &DenseMat,
    training: bool,
    rng: &mut Rng,
) -> Result<DenseMat, ModelError> {
    let spec = &params.spec;
    if x.cols() != spec.input_dim {
        return Err(ModelError::Precondition(format!(
            "features have {} columns, model expects {}",
            x.cols(),
            spec.input_dim
        )));
    }
    let mut expr = ExprGraph::new();
    let input = expr.input("x");
    let logits = build_logits(&mut expr, spec, prop, input, training);
    expr.set_root(logits);
    let masks = if training { dropout_masks(spec, x.rows(), rng) } else { Vec::new() };
    let mut bindings = params.bind(Bindings::new().dense("x", x));
    for (l, m) in masks.iter().enumerate() {
        bindings.set_dense(ModelInputs::mask(l), m);
    }
    Ok(expr.forward(&bindings)?)
}

/// Evaluation-mode predictions: argmax labels (ties to the lowest class) and
/// row-softmax probabilities.
pub fn predict(params: &ModelParams, prop: &Propagation, x: &DenseMat) -> Result<(Vec<usize>, DenseMat), ModelError> {
    let mut unused = crate::rng::stream(0, crate::rng::Stream::Dropout);
    let logits = model_forward(params, prop, x, false, &mut unused)?;
    Ok((logits.row_argmax(), logits.row_softmax()))
}
