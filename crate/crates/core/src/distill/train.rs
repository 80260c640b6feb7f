use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::losses::LossSetup;
use super::{concat_proxy, pseudo_proxy, DistillConfig, DistillError, DistillInputs, Method, ProxyMatrix};
use crate::autodiff::{Bindings, DenseMat};
use crate::fairness::{evaluate_predictions, GroupIndex, ReportRow};
use crate::graph::{AttributedGraph, Split};
use crate::models::{
    dropout_masks, init_params, model_forward, predict, Adam, ModelInputs, ModelParams, ModelSpec, Propagation,
};
use crate::rng::{stream, Stream};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistillHistory {
    /// Student objective before each epoch's student update.
    pub phi_loss: Vec<f64>,
    /// Proxy objective before each epoch's proxy update; empty when the
    /// proxy is not learned.
    pub proxy_loss: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DistillOutcome {
    pub method: Method,
    pub student: ModelParams,
    /// Proxy columns the student was trained with, if any.
    pub proxy: Option<ProxyMatrix>,
    /// Test-node evaluation at inference time (pseudo proxy).
    pub report: ReportRow,
    /// Test-node evaluation with the training-time proxy, for the one-hot
    /// baseline.
    pub train_proxy_report: Option<ReportRow>,
    pub history: DistillHistory,
}

impl DistillOutcome {
    pub fn epochs_run(&self) -> usize {
        self.history.phi_loss.len()
    }
}

/// Predictions with the proxy replaced by its column mean, without dropout.
pub fn infer_fair(
    student: &ModelParams,
    graph: &AttributedGraph,
    proxy: &ProxyMatrix,
) -> Result<(Vec<usize>, DenseMat), DistillError> {
    infer_with(student, &Propagation::new(graph), graph.attributes(), proxy)
}

fn infer_with(
    student: &ModelParams,
    prop: &Propagation,
    x: &DenseMat,
    proxy: &ProxyMatrix,
) -> Result<(Vec<usize>, DenseMat), DistillError> {
    let pseudo = pseudo_proxy(proxy).broadcast(x.rows());
    Ok(predict(student, prop, &concat_proxy(x, &pseudo)?)?)
}

pub fn reliant_train(
    teacher: &ModelParams,
    student_spec: &ModelSpec,
    graph: &AttributedGraph,
    split: &Split,
    cfg: &DistillConfig,
) -> Result<DistillOutcome, DistillError> {
    distill(Method::Reliant, teacher, student_spec, graph, split, cfg)
}

pub fn vanilla_distill(
    teacher: &ModelParams,
    student_spec: &ModelSpec,
    graph: &AttributedGraph,
    split: &Split,
    cfg: &DistillConfig,
) -> Result<DistillOutcome, DistillError> {
    distill(Method::Vanilla, teacher, student_spec, graph, split, cfg)
}

pub fn one_hot_distill(
    teacher: &ModelParams,
    student_spec: &ModelSpec,
    graph: &AttributedGraph,
    split: &Split,
    cfg: &DistillConfig,
) -> Result<DistillOutcome, DistillError> {
    distill(Method::Onehot, teacher, student_spec, graph, split, cfg)
}

fn check_inputs(
    method: Method,
    teacher: &ModelParams,
    student_spec: &ModelSpec,
    graph: &AttributedGraph,
    split: &Split,
    cfg: &DistillConfig,
) -> Result<(), DistillError> {
    cfg.validate()?;
    student_spec.validate()?;
    let pre = |m: String| Err(DistillError::Precondition(m));
    let d = graph.attributes().cols();
    let c = graph.class_count();
    if teacher.spec.input_dim != d {
        return pre(format!("teacher expects {} attributes, graph has {d}", teacher.spec.input_dim));
    }
    if teacher.spec.class_count != c || student_spec.class_count != c {
        return pre(format!(
            "class counts differ: teacher {}, student {}, graph {c}",
            teacher.spec.class_count, student_spec.class_count
        ));
    }
    let want = d + method.proxy_dim(cfg);
    if student_spec.input_dim != want {
        return pre(format!(
            "{} student needs input_dim {want} ({d} attributes + {} proxy columns), got {}",
            method.name(),
            method.proxy_dim(cfg),
            student_spec.input_dim
        ));
    }
    if split.train.is_empty() || split.test.is_empty() {
        return pre("training and test splits must be non-empty".into());
    }
    let n = graph.node_count();
    if split.train.iter().chain(&split.val).chain(&split.test).any(|&i| i >= n) {
        return pre("split references a node outside the graph".into());
    }
    Ok(())
}

/// Runs one distillation pipeline for `cfg.seed()`.
///
/// Each epoch updates the student on the objective `U + lambda * attribution`,
/// then (for learned proxies) takes one proxy step on the proxy loss with the
/// student held fixed. The teacher is evaluated once, without dropout.
pub fn distill(
    method: Method,
    teacher: &ModelParams,
    student_spec: &ModelSpec,
    graph: &AttributedGraph,
    split: &Split,
    cfg: &DistillConfig,
) -> Result<DistillOutcome, DistillError> {
    check_inputs(method, teacher, student_spec, graph, split, cfg)?;
    let seed = cfg.seed();
    let n = graph.node_count();
    let x = graph.attributes();
    let labels = graph.labels();
    let prop = Propagation::new(graph);
    let mut unused = stream(seed, Stream::Dropout);
    let teacher_logits = Arc::new(model_forward(teacher, &prop, x, false, &mut unused)?);
    let train_groups = GroupIndex::from_sensitive(graph.sensitive(), &split.train)?;

    let proxy_dim = method.proxy_dim(cfg);
    let mut proxy = match method {
        Method::Vanilla => None,
        Method::Onehot => Some(ProxyMatrix::one_hot(graph.sensitive())),
        Method::Reliant | Method::ProxyOnly => Some(ProxyMatrix::random(n, proxy_dim, cfg.proxy_init_std, seed)),
    };

    let setup = LossSetup {
        spec: student_spec,
        prop: &prop,
        teacher: teacher_logits,
        rows: Arc::new(split.train.clone()),
        groups: &train_groups,
        labels,
        notion: cfg.notion,
        distance: cfg.distance,
        proxy_dim,
        dropout: true,
    };
    let phi = setup.phi_objective(1.0, method.lambda(cfg), cfg.utility_on_pseudo)?;
    let proxy_objective =
        if method.learns_proxy() && proxy_dim > 0 { Some(setup.proxy_objective()?) } else { None };

    let mut params = init_params(student_spec, seed)?;
    let mut dropout_rng = stream(seed, Stream::Dropout);
    let s = &cfg.student;
    let mut student_adam = Adam::new(s.learning_rate, s.weight_decay, s.beta1, s.beta2, s.epsilon);
    let mut proxy_adam = Adam::new(cfg.proxy_learning_rate, cfg.proxy_weight_decay, s.beta1, s.beta2, s.epsilon);
    let mut history = DistillHistory::default();

    for epoch in 1..=cfg.epochs() {
        let masks = dropout_masks(student_spec, n, &mut dropout_rng);
        let pseudo = proxy.as_ref().filter(|_| proxy_dim > 0).map(|p| pseudo_proxy(p).broadcast(n));

        let grads = {
            let mut b = params.bind(Bindings::new().dense(DistillInputs::X, x));
            if let (Some(p), Some(ps)) = (&proxy, &pseudo) {
                b.set_dense(DistillInputs::PROXY, &p.values);
                b.set_dense(DistillInputs::PSEUDO, ps);
            }
            for (l, m) in masks.iter().enumerate() {
                b.set_dense(ModelInputs::mask(l), m);
            }
            phi.backward(&b).map_err(|source| DistillError::NonFinite { epoch, loss: "student", source })?
        };
        history.phi_loss.push(grads.value);
        student_adam.step(params.named_mut().into_iter().map(|(name, p)| {
            let g = &grads.grads[&name];
            (name, p, g)
        }));

        if let (Some(objective), Some(p)) = (&proxy_objective, proxy.as_mut()) {
            let grads = {
                let mut b = params.bind(Bindings::new().dense(DistillInputs::X, x));
                b.set_dense(DistillInputs::PROXY, &p.values);
                for (l, m) in masks.iter().enumerate() {
                    b.set_dense(ModelInputs::mask(l), m);
                }
                objective.backward(&b).map_err(|source| DistillError::NonFinite { epoch, loss: "proxy", source })?
            };
            history.proxy_loss.push(grads.value);
            proxy_adam.step([(DistillInputs::PROXY.to_string(), &mut p.values, &grads.grads[DistillInputs::PROXY])]);
        }
    }

    let (pred, probs) = match &proxy {
        None => predict(&params, &prop, x)?,
        Some(p) => infer_with(&params, &prop, x, p)?,
    };
    let report = evaluate_predictions(method.name(), seed, &pred, &probs, graph, &split.test)?;
    let train_proxy_report = match (method, &proxy) {
        (Method::Onehot, Some(p)) => {
            let (pred, probs) = predict(&params, &prop, &concat_proxy(x, &p.values)?)?;
            Some(evaluate_predictions(method.name(), seed, &pred, &probs, graph, &split.test)?)
        }
        _ => None,
    };
    Ok(DistillOutcome { method, student: params, proxy, report, train_proxy_report, history })
}
