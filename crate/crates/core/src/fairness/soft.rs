use std::sync::Arc;

use super::{GroupIndex, MetricError, Notion};
use crate::autodiff::{Bindings, DenseMat, ExprGraph, NodeId};

fn conditional_rows(
    groups: &GroupIndex,
    labels: &[usize],
    class: usize,
) -> Result<[Vec<usize>; 2], MetricError> {
    let pick = |nodes: &[usize], group: u8| {
        let rows: Vec<usize> = nodes.iter().copied().filter(|&i| labels[i] == class).collect();
        if rows.is_empty() {
            Err(MetricError::EmptyConditional { group, class })
        } else {
            Ok(rows)
        }
    };
    Ok([pick(&groups.group0, 0)?, pick(&groups.group1, 1)?])
}

/// Adds the differentiable bias surrogate on top of a probability node.
///
/// SP: `sum_k |mean_{group0} p[:, k] - mean_{group1} p[:, k]|`.
/// EO: the same, with each class-k mean restricted to nodes whose true label
/// is k.
pub fn soft_bias(
    expr: &mut ExprGraph,
    probs: NodeId,
    groups: &GroupIndex,
    notion: Notion,
    labels: Option<&[usize]>,
    class_count: usize,
) -> Result<NodeId, MetricError> {
    match notion {
        Notion::Sp => {
            let m0 = expr.mean_rows(probs, Arc::new(groups.group0.clone()));
            let m1 = expr.mean_rows(probs, Arc::new(groups.group1.clone()));
            let diff = expr.sub(m0, m1);
            let gap = expr.abs(diff);
            Ok(expr.sum(gap))
        }
        Notion::Eo => {
            let labels = labels.ok_or(MetricError::MissingLabels)?;
            let mut total: Option<NodeId> = None;
            for k in 0..class_count {
                let [r0, r1] = conditional_rows(groups, labels, k)?;
                let m0 = expr.mean_rows(probs, Arc::new(r0));
                let m1 = expr.mean_rows(probs, Arc::new(r1));
                let diff = expr.sub(m0, m1);
                let mut onehot = DenseMat::zeros(1, class_count);
                onehot.set(0, k, 1.0);
                let select = expr.constant(onehot);
                let picked = expr.mul(diff, select);
                let gap = expr.abs(picked);
                let term = expr.sum(gap);
                total = Some(match total {
                    Some(t) => expr.add(t, term),
                    None => term,
                });
            }
            Ok(total.expect("at least one class"))
        }
    }
}

/// Surrogate value for a fixed probability matrix.
pub fn soft_bias_value(
    probs: &DenseMat,
    groups: &GroupIndex,
    notion: Notion,
    labels: Option<&[usize]>,
) -> Result<f64, MetricError> {
    let mut expr = ExprGraph::new();
    let p = expr.input("p");
    let root = soft_bias(&mut expr, p, groups, notion, labels, probs.cols())?;
    expr.set_root(root);
    let v = expr
        .forward(&Bindings::new().dense("p", probs))
        .map_err(|e| MetricError::LengthMismatch(e.to_string()))?;
    Ok(v.as_scalar().expect("scalar surrogate"))
}

/// Per-class surrogate gaps computed directly, skipping EO classes missing
/// from either group. Summing the `Some` entries gives the surrogate.
pub fn soft_gaps(
    probs: &DenseMat,
    groups: &GroupIndex,
    notion: Notion,
    labels: Option<&[usize]>,
) -> Result<Vec<Option<f64>>, MetricError> {
    let mean = |rows: &[usize], k: usize| rows.iter().map(|&i| probs.get(i, k)).sum::<f64>() / rows.len() as f64;
    (0..probs.cols())
        .map(|k| match notion {
            Notion::Sp => Ok(Some((mean(&groups.group0, k) - mean(&groups.group1, k)).abs())),
            Notion::Eo => {
                let labels = labels.ok_or(MetricError::MissingLabels)?;
                Ok(conditional_rows(groups, labels, k).ok().map(|[r0, r1]| (mean(&r0, k) - mean(&r1, k)).abs()))
            }
        })
        .collect()
}
