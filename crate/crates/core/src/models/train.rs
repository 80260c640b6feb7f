use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::forward::{build_logits, dropout_masks, ModelInputs};
use super::{init_params, Adam, ModelError, ModelParams, ModelSpec, Propagation, TrainConfig};
use crate::autodiff::{AutodiffError, Bindings, DenseMat, ExprGraph, NodeId};
use crate::graph::{AttributedGraph, Split};
use crate::rng::{stream, Stream};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Training-mode cross-entropy before each epoch's update.
    pub train_loss: Vec<f64>,
    /// Validation accuracy after each epoch's update.
    pub val_accuracy: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: TrainHistory,
}

/// Mean negative log-likelihood of `labels[rows]` under row-softmax of
/// `logits[rows]`.
pub fn cross_entropy(
    expr: &mut ExprGraph,
    logits: NodeId,
    rows: Arc<Vec<usize>>,
    labels: &[usize],
    class_count: usize,
) -> NodeId {
    let mut onehot = DenseMat::zeros(rows.len(), class_count);
    for (k, &r) in rows.iter().enumerate() {
        onehot.set(k, labels[r], 1.0);
    }
    let m = rows.len().max(1) as f64;
    let picked = expr.select_rows(logits, rows);
    let logp = expr.log_softmax(picked);
    let target = expr.constant(onehot);
    let ll = expr.mul(logp, target);
    let total = expr.sum(ll);
    expr.scale(total, -1.0 / m)
}

pub(crate) fn accuracy(pred: &[usize], labels: &[usize], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|&&r| pred[r] == labels[r]).count() as f64 / rows.len() as f64
}

/// Full-batch supervised training with Adam and best-validation checkpointing.
///
/// Stops once `early_stopping_patience` epochs pass without a strictly better
/// validation accuracy, or after `max_epochs`.
pub fn train_supervised(
    spec: &ModelSpec,
    graph: &AttributedGraph,
    split: &Split,
    config: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    spec.validate()?;
    config.validate()?;
    let x = graph.attributes();
    if spec.input_dim != x.cols() {
        return Err(ModelError::Precondition(format!(
            "model expects {} attributes, graph has {}",
            spec.input_dim,
            x.cols()
        )));
    }
    if spec.class_count != graph.class_count() {
        return Err(ModelError::Precondition("model and graph disagree on the class count".into()));
    }
    if split.train.is_empty() {
        return Err(ModelError::Precondition("empty training split".into()));
    }
    let labels = graph.labels();
    for k in 0..graph.class_count() {
        if !split.train.iter().any(|&i| labels[i] == k) {
            return Err(ModelError::Precondition(format!("class {k} has no training node")));
        }
    }

    let prop = Propagation::new(graph);
    let n = graph.node_count();

    let mut train_expr = ExprGraph::new();
    let input = train_expr.input("x");
    let logits = build_logits(&mut train_expr, spec, &prop, input, true);
    let loss = cross_entropy(&mut train_expr, logits, Arc::new(split.train.clone()), labels, spec.class_count);
    train_expr.set_root(loss);

    let mut eval_expr = ExprGraph::new();
    let input = eval_expr.input("x");
    let eval_logits = build_logits(&mut eval_expr, spec, &prop, input, false);
    eval_expr.set_root(eval_logits);

    let mut params = init_params(spec, config.seed)?;
    let mut dropout_rng = stream(config.seed, Stream::Dropout);
    let mut adam = Adam::new(config.learning_rate, config.weight_decay, config.beta1, config.beta2, config.epsilon);
    let mut history = TrainHistory::default();
    let mut best = (f64::NEG_INFINITY, params.clone());

    for epoch in 1..=config.max_epochs {
        let masks = dropout_masks(spec, n, &mut dropout_rng);
        let grads = {
            let mut b = params.bind(Bindings::new().dense("x", x));
            for (l, m) in masks.iter().enumerate() {
                b.set_dense(ModelInputs::mask(l), m);
            }
            train_expr.backward(&b).map_err(|source| diverged(epoch, source))?
        };
        history.train_loss.push(grads.value);

        adam.step(params.named_mut().into_iter().map(|(name, p)| {
            let g = &grads.grads[&name];
            (name, p, g)
        }));

        let logits = eval_expr
            .forward(&params.bind(Bindings::new().dense("x", x)))
            .map_err(|source| diverged(epoch, source))?;
        let acc = accuracy(&logits.row_argmax(), labels, &split.val);
        history.val_accuracy.push(acc);
        if acc > best.0 {
            best = (acc, params.clone());
            history.best_epoch = epoch;
        }
        if epoch - history.best_epoch >= config.early_stopping_patience {
            break;
        }
    }
    Ok(TrainOutcome { params: best.1, history })
}

fn diverged(epoch: usize, source: AutodiffError) -> ModelError {
    ModelError::Diverged { epoch, source }
}
