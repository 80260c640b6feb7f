use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{delta_eo, delta_sp, soft_gaps, GroupIndex, MetricError, Notion};
use crate::autodiff::DenseMat;
use crate::graph::AttributedGraph;

pub const REPORT_HEADER: [&str; 7] = ["model", "accuracy", "delta_sp", "delta_eo", "soft_sp", "soft_eo", "seed"];

/// Evaluation of one model on one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub accuracy: f64,
    pub delta_sp: f64,
    pub delta_eo: f64,
    pub soft_sp: f64,
    pub soft_eo: f64,
    pub seed: u64,
    /// Mean-over-classes variants of the gaps; equal to the max variants for
    /// binary labels.
    pub delta_sp_mean: f64,
    pub delta_eo_mean: f64,
    /// Classes skipped by the equal-opportunity gap.
    pub eo_skipped: Vec<usize>,
}

/// Mean and population standard deviation of each metric over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub runs: usize,
    pub accuracy: (f64, f64),
    pub delta_sp: (f64, f64),
    pub delta_eo: (f64, f64),
    pub soft_sp: (f64, f64),
    pub soft_eo: (f64, f64),
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub rows: Vec<ReportRow>,
}

impl FairnessReport {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    /// Model names in first-seen order.
    pub fn models(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.model) {
                names.push(r.model.clone());
            }
        }
        names
    }

    pub fn aggregate(&self, model: &str) -> Option<AggregateRow> {
        let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.model == model).collect();
        if rows.is_empty() {
            return None;
        }
        let field = |f: fn(&ReportRow) -> f64| mean_std(rows.iter().map(move |r| f(r)));
        Some(AggregateRow {
            model: model.to_string(),
            runs: rows.len(),
            accuracy: field(|r| r.accuracy),
            delta_sp: field(|r| r.delta_sp),
            delta_eo: field(|r| r.delta_eo),
            soft_sp: field(|r| r.soft_sp),
            soft_eo: field(|r| r.soft_eo),
        })
    }

    /// CSV with one row per (model, seed), followed by a `mean±std` row per
    /// model when `with_aggregate` is set.
    pub fn to_csv(&self, with_aggregate: bool) -> String {
        let mut out = REPORT_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                csv_field(&r.model),
                r.accuracy,
                r.delta_sp,
                r.delta_eo,
                r.soft_sp,
                r.soft_eo,
                r.seed
            );
        }
        if with_aggregate {
            for model in self.models() {
                let a = self.aggregate(&model).expect("model has rows");
                let pm = |(m, s): (f64, f64)| format!("{m:.6}±{s:.6}");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},mean±std",
                    csv_field(&model),
                    pm(a.accuracy),
                    pm(a.delta_sp),
                    pm(a.delta_eo),
                    pm(a.soft_sp),
                    pm(a.soft_eo)
                );
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Scores predictions restricted to `nodes`. The soft EO value sums only the
/// classes present in both groups among `nodes`.
pub fn evaluate_predictions(
    model: &str,
    seed: u64,
    pred: &[usize],
    probs: &DenseMat,
    graph: &AttributedGraph,
    nodes: &[usize],
) -> Result<ReportRow, MetricError> {
    let n = graph.node_count();
    if pred.len() != n || probs.rows() != n {
        return Err(MetricError::LengthMismatch(format!(
            "graph has {n} nodes, got {} predictions and {} probability rows",
            pred.len(),
            probs.rows()
        )));
    }
    let labels = graph.labels();
    let c = graph.class_count();
    let groups = GroupIndex::from_sensitive(graph.sensitive(), nodes)?;
    let sp = delta_sp(pred, &groups, c)?;
    let eo = delta_eo(pred, labels, &groups, c)?;
    let sum = |gaps: Vec<Option<f64>>| gaps.into_iter().flatten().sum::<f64>();
    let soft_sp = sum(soft_gaps(probs, &groups, Notion::Sp, None)?);
    let soft_eo = sum(soft_gaps(probs, &groups, Notion::Eo, Some(labels))?);
    let accuracy = if nodes.is_empty() {
        0.0
    } else {
        nodes.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / nodes.len() as f64
    };
    Ok(ReportRow {
        model: model.to_string(),
        accuracy,
        delta_sp: sp.aggregate,
        delta_eo: eo.aggregate,
        soft_sp,
        soft_eo,
        seed,
        delta_sp_mean: sp.mean_aggregate(),
        delta_eo_mean: eo.mean_aggregate(),
        eo_skipped: eo.skipped(),
    })
}
