use std::sync::Arc;

use super::{concat_proxy, Distance, DistillError, ProxyMatrix, PseudoProxy};
use crate::autodiff::{Bindings, DenseMat, ExprGraph, NodeId};
use crate::fairness::{soft_bias, soft_bias_value, GroupIndex, Notion};
use crate::models::{build_logits, predict, ModelParams, ModelSpec, Propagation};

/// Input names used by the distillation graphs, besides the student
/// parameters and dropout masks.
pub struct DistillInputs;

impl DistillInputs {
    pub const X: &'static str = "x";
    pub const PROXY: &'static str = "proxy";
    pub const PSEUDO: &'static str = "pseudo";
}

/// Student logits on `X`, or on `[X | proxy]` when `proxy_input` names a
/// bound proxy matrix.
pub fn student_logits(
    expr: &mut ExprGraph,
    spec: &ModelSpec,
    prop: &Propagation,
    proxy_input: Option<&str>,
    dropout: bool,
) -> NodeId {
    let x = expr.input(DistillInputs::X);
    let features = match proxy_input {
        Some(name) => {
            let p = expr.input(name);
            expr.concat(x, p)
        }
        None => x,
    };
    build_logits(expr, spec, prop, features, dropout)
}

/// Sum over `rows` (all rows when `None`) of the per-node distance between
/// student and teacher logits.
pub fn utility_loss(
    expr: &mut ExprGraph,
    student: NodeId,
    teacher: NodeId,
    rows: Option<Arc<Vec<usize>>>,
    distance: Distance,
) -> NodeId {
    let (s, t) = match rows {
        Some(rows) => (expr.select_rows(student, rows.clone()), expr.select_rows(teacher, rows)),
        None => (student, teacher),
    };
    let per_node = match distance {
        Distance::SquaredEuclidean => expr.sq_dist(s, t),
        Distance::Cosine => expr.cos_dist(s, t),
        Distance::Kl => expr.kl(t, s),
    };
    expr.sum(per_node)
}

/// Bias surrogate of the student's class probabilities. Fed pseudo-proxy
/// logits, this is the attribution loss.
pub fn attribution_loss(
    expr: &mut ExprGraph,
    logits: NodeId,
    groups: &GroupIndex,
    notion: Notion,
    labels: &[usize],
    class_count: usize,
) -> Result<NodeId, DistillError> {
    let probs = expr.softmax(logits);
    Ok(soft_bias(expr, probs, groups, notion, Some(labels), class_count)?)
}

/// Negated bias surrogate. Fed learned-proxy logits, minimizing it pushes
/// the proxy to carry as much bias as possible.
pub fn proxy_loss(
    expr: &mut ExprGraph,
    logits: NodeId,
    groups: &GroupIndex,
    notion: Notion,
    labels: &[usize],
    class_count: usize,
) -> Result<NodeId, DistillError> {
    let bias = attribution_loss(expr, logits, groups, notion, labels, class_count)?;
    Ok(expr.scale(bias, -1.0))
}

pub fn utility_loss_value(student: &DenseMat, teacher: &DenseMat, distance: Distance) -> Result<f64, DistillError> {
    if student.shape() != teacher.shape() {
        return Err(DistillError::Precondition(format!(
            "student logits are {:?}, teacher logits {:?}",
            student.shape(),
            teacher.shape()
        )));
    }
    let mut expr = ExprGraph::new();
    let s = expr.input("s");
    let t = expr.input("t");
    let root = utility_loss(&mut expr, s, t, None, distance);
    expr.set_root(root);
    let v = expr.forward(&Bindings::new().dense("s", student).dense("t", teacher))?;
    Ok(v.as_scalar().expect("scalar loss"))
}

/// Proxy loss of an evaluation-mode student fed `[X | proxy]`.
pub fn proxy_loss_value(
    student: &ModelParams,
    prop: &Propagation,
    x: &DenseMat,
    proxy: &ProxyMatrix,
    groups: &GroupIndex,
    notion: Notion,
    labels: &[usize],
) -> Result<f64, DistillError> {
    let (_, probs) = predict(student, prop, &concat_proxy(x, &proxy.values)?)?;
    Ok(-soft_bias_value(&probs, groups, notion, Some(labels))?)
}

/// Attribution loss of an evaluation-mode student fed `[X | pseudo]`.
pub fn attribution_loss_value(
    student: &ModelParams,
    prop: &Propagation,
    x: &DenseMat,
    pseudo: &PseudoProxy,
    groups: &GroupIndex,
    notion: Notion,
    labels: &[usize],
) -> Result<f64, DistillError> {
    let (_, probs) = predict(student, prop, &concat_proxy(x, &pseudo.broadcast(x.rows()))?)?;
    Ok(soft_bias_value(&probs, groups, notion, Some(labels))?)
}

/// Everything the per-epoch objectives share. Bind the student parameters,
/// `x`, and (with `proxy_dim > 0`) `proxy` and `pseudo` to evaluate them.
pub struct LossSetup<'a> {
    pub spec: &'a ModelSpec,
    pub prop: &'a Propagation,
    pub teacher: Arc<DenseMat>,
    pub rows: Arc<Vec<usize>>,
    pub groups: &'a GroupIndex,
    pub labels: &'a [usize],
    pub notion: Notion,
    pub distance: Distance,
    pub proxy_dim: usize,
    pub dropout: bool,
}

impl LossSetup<'_> {
    fn proxy_name(&self, name: &'static str) -> Option<&'static str> {
        (self.proxy_dim > 0).then_some(name)
    }

    /// `utility_weight * U(real proxy) [+ utility_weight * U(pseudo)] + lambda * attribution`.
    /// The attribution term is left out entirely when `lambda` is zero.
    pub fn phi_objective(
        &self,
        utility_weight: f64,
        lambda: f64,
        utility_on_pseudo: bool,
    ) -> Result<ExprGraph, DistillError> {
        let mut expr = ExprGraph::new();
        let teacher = expr.constant_shared(self.teacher.clone());
        let real = student_logits(&mut expr, self.spec, self.prop, self.proxy_name(DistillInputs::PROXY), self.dropout);
        let u = utility_loss(&mut expr, real, teacher, Some(self.rows.clone()), self.distance);
        let mut total = expr.scale(u, utility_weight);

        let needs_pseudo = lambda > 0.0 || (utility_on_pseudo && self.proxy_dim > 0);
        if needs_pseudo {
            let pseudo = match self.proxy_name(DistillInputs::PSEUDO) {
                Some(name) => student_logits(&mut expr, self.spec, self.prop, Some(name), self.dropout),
                None => real,
            };
            if utility_on_pseudo && self.proxy_dim > 0 {
                let u2 = utility_loss(&mut expr, pseudo, teacher, Some(self.rows.clone()), self.distance);
                let u2 = expr.scale(u2, utility_weight);
                total = expr.add(total, u2);
            }
            if lambda > 0.0 {
                let attr = attribution_loss(&mut expr, pseudo, self.groups, self.notion, self.labels, self.spec.class_count)?;
                let attr = expr.scale(attr, lambda);
                total = expr.add(total, attr);
            }
        }
        expr.set_root(total);
        Ok(expr)
    }

    pub fn proxy_objective(&self) -> Result<ExprGraph, DistillError> {
        let mut expr = ExprGraph::new();
        let real = student_logits(&mut expr, self.spec, self.prop, Some(DistillInputs::PROXY), self.dropout);
        let loss = proxy_loss(&mut expr, real, self.groups, self.notion, self.labels, self.spec.class_count)?;
        expr.set_root(loss);
        Ok(expr)
    }
}
