//! Shared steps of the subcommands: data, teachers and distillation cells.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use fairdistill::distill::{distill, DistillConfig, DistillOutcome, Method};
use fairdistill::fairness::{evaluate_predictions, ReportRow};
use fairdistill::graph::{generate_biased_graph, load_graph, split_nodes, AttributedGraph, LoadOptions, Split};
use fairdistill::models::{predict, read_checkpoint, ModelParams, Propagation, TrainOutcome};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Source, SweepAxis};
use crate::error::{runtime, CliError};

pub fn load_data(cfg: &ExperimentConfig) -> Result<AttributedGraph, CliError> {
    match cfg.data.source {
        Source::Synth => generate_biased_graph(&cfg.data.synth).map_err(|e| CliError::Config(format!("data.synth: {e}"))),
        Source::Files => {
            let opts = LoadOptions {
                label_column: cfg.data.label_column.clone(),
                sensitive_column: cfg.data.sensitive_column.clone(),
                id_column: cfg.data.id_column.clone(),
                keep_sensitive: cfg.data.keep_sensitive,
            };
            let (edges, attrs) = (cfg.data.edges.as_ref(), cfg.data.attributes.as_ref());
            let (Some(edges), Some(attrs)) = (edges, attrs) else {
                return Err(CliError::Config("data.edges and data.attributes are required".into()));
            };
            load_graph(edges, attrs, &opts).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn split_for(cfg: &ExperimentConfig, graph: &AttributedGraph, seed: u64) -> Result<Split, CliError> {
    let [a, b, c] = cfg.data.split;
    split_nodes(graph.node_count(), (a, b, c), seed).map_err(|e| CliError::Config(format!("data.split: {e}")))
}

/// The seed's split and the graph its models see: attributes standardized
/// over the training rows unless `data.standardize` is off.
pub fn prepare(cfg: &ExperimentConfig, graph: &AttributedGraph, seed: u64) -> Result<(AttributedGraph, Split), CliError> {
    let split = split_for(cfg, graph, seed)?;
    let graph = if cfg.data.standardize { graph.standardized(&split.train) } else { graph.clone() };
    Ok((graph, split))
}

pub fn teacher_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("teacher_seed{seed}.json"))
}

pub fn load_teacher(dir: &Path, seed: u64) -> Result<ModelParams, CliError> {
    let path = teacher_path(dir, seed);
    if !path.is_file() {
        return Err(runtime(anyhow::anyhow!(
            "teacher checkpoint {} not found; run `train-teacher` with the same config first",
            path.display()
        )));
    }
    read_checkpoint(&path).map_err(runtime)
}

/// Test-node evaluation of a model without proxy columns.
pub fn evaluate_model(
    name: &str,
    seed: u64,
    params: &ModelParams,
    graph: &AttributedGraph,
    split: &Split,
) -> Result<ReportRow, CliError> {
    let (pred, probs) = predict(params, &Propagation::new(graph), graph.attributes()).map_err(runtime)?;
    evaluate_predictions(name, seed, &pred, &probs, graph, &split.test).map_err(runtime)
}

pub struct TeacherRun {
    pub seed: u64,
    pub outcome: TrainOutcome,
    pub report: ReportRow,
    pub seconds: f64,
}

pub fn train_teacher(cfg: &ExperimentConfig, graph: &AttributedGraph, seed: u64) -> Result<TeacherRun, CliError> {
    let (graph, split) = prepare(cfg, graph, seed)?;
    let graph = &graph;
    let spec = cfg.teacher.spec(graph.attributes().cols(), graph.class_count());
    let start = Instant::now();
    let outcome = fairdistill::models::train_supervised(&spec, graph, &split, &cfg.teacher.train_config(seed))
        .with_context(|| format!("teacher training, seed {seed}"))?;
    let seconds = start.elapsed().as_secs_f64();
    let report = evaluate_model("teacher", seed, &outcome.params, graph, &split)?;
    Ok(TeacherRun { seed, outcome, report, seconds })
}

/// One distillation run. `label` names the row in reports.
pub struct Cell {
    pub label: String,
    pub method: Method,
    pub seed: u64,
    /// Swept value, when part of a sweep.
    pub value: Option<f64>,
    pub config: DistillConfig,
}

pub struct CellResult {
    pub cell: Cell,
    pub outcome: DistillOutcome,
    pub seconds: f64,
}

impl ExperimentConfig {
    pub fn cell(&self, label: &str, method: Method, seed: u64) -> Cell {
        Cell { label: label.to_string(), method, seed, value: None, config: self.distill_config(seed) }
    }

    pub fn sweep_cell(&self, axis: SweepAxis, value: f64, seed: u64) -> Cell {
        let mut config = self.distill_config(seed);
        match axis {
            SweepAxis::Lambda => config.lambda = value,
            SweepAxis::ProxyDim => config.proxy_dim = value as usize,
        }
        Cell { label: self.distill.method.name().to_string(), method: self.distill.method, seed, value: Some(value), config }
    }
}

pub fn run_cell(
    cfg: &ExperimentConfig,
    graph: &AttributedGraph,
    teacher: &ModelParams,
    cell: Cell,
) -> Result<CellResult, CliError> {
    let (graph, split) = prepare(cfg, graph, cell.seed)?;
    let graph = &graph;
    let spec = cfg.student.spec(graph.attributes().cols() + cell.method.proxy_dim(&cell.config), graph.class_count());
    let start = Instant::now();
    let mut outcome = distill(cell.method, teacher, &spec, graph, &split, &cell.config)
        .with_context(|| format!("{} distillation, seed {}", cell.label, cell.seed))?;
    let seconds = start.elapsed().as_secs_f64();
    outcome.report.model = cell.label.clone();
    if let Some(r) = outcome.train_proxy_report.as_mut() {
        r.model = format!("{}-train-proxy", cell.label);
    }
    Ok(CellResult { cell, outcome, seconds })
}

/// Worker pool bounded by `run.threads`, the `FAIRDISTILL_THREADS` variable
/// and the core count.
pub fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool, CliError> {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut threads = cfg.run.threads.unwrap_or(cores);
    if let Ok(v) = std::env::var("FAIRDISTILL_THREADS") {
        let cap: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("FAIRDISTILL_THREADS must be a positive integer, got `{v}`")))?;
        threads = threads.min(cap);
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(runtime)
}

/// Runs `jobs` on the pool; results come back in input order.
pub fn run_all<T, R>(
    pool: &rayon::ThreadPool,
    jobs: Vec<T>,
    f: impl Fn(T) -> Result<R, CliError> + Sync + Send,
) -> Result<Vec<R>, CliError>
where
    T: Send,
    R: Send,
{
    pool.install(|| jobs.into_par_iter().map(f).collect())
}

/// Per-run entry of a manifest.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub model: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub wall_time_s: Option<f64>,
}

impl RunRecord {
    pub fn from_cell(r: &CellResult, deterministic: bool) -> Self {
        Self {
            model: r.cell.label.clone(),
            seed: r.cell.seed,
            value: r.cell.value,
            epochs_run: r.outcome.epochs_run(),
            // Distillation runs a fixed number of epochs and keeps the last.
            best_epoch: r.outcome.epochs_run(),
            wall_time_s: (!deterministic).then_some(r.seconds),
        }
    }
}
