use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::anyhow;
use fairdistill::distill::{Method, ProxyMatrix};
use fairdistill::fairness::{FairnessReport, ReportRow, REPORT_HEADER};
use fairdistill::graph::write_graph;
use fairdistill::models::write_checkpoint;
use serde::Serialize;

use crate::config::{ExperimentConfig, SweepAxis};
use crate::error::{runtime, CliError};
use crate::pipeline::{self, load_teacher, run_all, CellResult, RunRecord};
use crate::plot::{grouped_bars, line_plot, Series};
use crate::Context;

pub const SWEEP_HEADER: [&str; 9] =
    ["axis", "value", "seed", "model", "accuracy", "delta_sp", "delta_eo", "soft_sp", "soft_eo"];

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| runtime(anyhow!("cannot write {}: {e}", path.display())))
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn checkpoint_dir(&self) -> PathBuf {
        self.config.teacher.checkpoint_dir.clone().unwrap_or_else(|| self.out.clone())
    }

    fn stamp(&self) -> Option<String> {
        if self.deterministic {
            return None;
        }
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Some(format!("at unix time {secs}"))
    }

    fn manifest(&self, command: &str, runs: &[RunRecord], start: Instant) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            version: &'a str,
            seeds: &'a [u64],
            config: &'a ExperimentConfig,
            runs: &'a [RunRecord],
            wall_time_s: Option<f64>,
        }
        // Pin the checkpoint directory so a replay with another --out still
        // finds the teachers.
        let mut config = self.config.clone();
        config.teacher.checkpoint_dir = Some(std::path::absolute(self.checkpoint_dir()).map_err(runtime)?);
        let m = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seeds: &self.config.run.seeds,
            config: &config,
            runs,
            wall_time_s: (!self.deterministic).then(|| start.elapsed().as_secs_f64()),
        };
        let text = serde_json::to_string_pretty(&m).map_err(runtime)?;
        write(&self.path(&format!("{command}_manifest.json")), &(text + "\n"))
    }
}

fn print_summary(report: &FairnessReport) {
    for model in report.models() {
        let a = report.aggregate(&model).expect("model has rows");
        println!(
            "{model}: accuracy {:.4} ± {:.4}, delta_sp {:.4} ± {:.4}, delta_eo {:.4} ± {:.4} ({} runs)",
            a.accuracy.0, a.accuracy.1, a.delta_sp.0, a.delta_sp.1, a.delta_eo.0, a.delta_eo.1, a.runs
        );
    }
}

pub fn train_teacher(ctx: &Context) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = &ctx.config;
    let graph = pipeline::load_data(cfg)?;
    let dir = ctx.checkpoint_dir();
    fs::create_dir_all(&dir).map_err(|e| runtime(anyhow!("cannot create {}: {e}", dir.display())))?;
    let pool = pipeline::pool(cfg)?;
    let runs = run_all(&pool, cfg.run.seeds.clone(), |seed| pipeline::train_teacher(cfg, &graph, seed))?;

    let mut report = FairnessReport::default();
    let mut records = Vec::new();
    for run in runs {
        write_checkpoint(&pipeline::teacher_path(&dir, run.seed), &run.outcome.params).map_err(runtime)?;
        let h = &run.outcome.history;
        let mut csv = String::from("epoch,train_loss,val_accuracy\n");
        for (e, (l, a)) in h.train_loss.iter().zip(&h.val_accuracy).enumerate() {
            let _ = writeln!(csv, "{},{l:.6},{a:.6}", e + 1);
        }
        write(&ctx.path(&format!("teacher_history_seed{}.csv", run.seed)), &csv)?;
        println!(
            "seed {}: accuracy {:.4}, delta_sp {:.4}, delta_eo {:.4} (best epoch {})",
            run.seed, run.report.accuracy, run.report.delta_sp, run.report.delta_eo, h.best_epoch
        );
        records.push(RunRecord {
            model: "teacher".into(),
            seed: run.seed,
            value: None,
            epochs_run: h.train_loss.len(),
            best_epoch: h.best_epoch,
            wall_time_s: (!ctx.deterministic).then_some(run.seconds),
        });
        report.push(run.report);
    }
    write(&ctx.path("teacher_report.csv"), &report.to_csv(true))?;
    print_summary(&report);
    ctx.manifest("train-teacher", &records, start)
}

fn proxy_csv(p: &ProxyMatrix) -> String {
    let mut out = (0..p.dim()).map(|j| format!("p{j}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..p.node_count() {
        let row: Vec<String> = p.values.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn distill(ctx: &Context) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = &ctx.config;
    let method = cfg.distill.method;
    let graph = pipeline::load_data(cfg)?;
    let dir = ctx.checkpoint_dir();
    let teachers = cfg.run.seeds.iter().map(|&s| load_teacher(&dir, s)).collect::<Result<Vec<_>, _>>()?;
    let pool = pipeline::pool(cfg)?;
    let jobs: Vec<_> = cfg.run.seeds.iter().zip(&teachers).map(|(&s, t)| (cfg.cell(method.name(), method, s), t)).collect();
    let results = run_all(&pool, jobs, |(cell, teacher)| pipeline::run_cell(cfg, &graph, teacher, cell))?;

    let name = method.name();
    let mut report = FairnessReport::default();
    let mut train_proxy = FairnessReport::default();
    for r in &results {
        let seed = r.cell.seed;
        write_checkpoint(&ctx.path(&format!("student_{name}_seed{seed}.json")), &r.outcome.student).map_err(runtime)?;
        if let Some(p) = &r.outcome.proxy {
            write(&ctx.path(&format!("proxy_{name}_seed{seed}.csv")), &proxy_csv(p))?;
        }
        report.push(r.outcome.report.clone());
        if let Some(t) = &r.outcome.train_proxy_report {
            train_proxy.push(t.clone());
        }
    }
    write(&ctx.path(&format!("report_{name}.csv")), &report.to_csv(true))?;
    if !train_proxy.rows.is_empty() {
        write(&ctx.path(&format!("report_{name}_train_proxy.csv")), &train_proxy.to_csv(true))?;
    }
    print_summary(&report);
    print_summary(&train_proxy);
    let records: Vec<_> = results.iter().map(|r| RunRecord::from_cell(r, ctx.deterministic)).collect();
    ctx.manifest("distill", &records, start)
}

fn sweep_csv(axis: SweepAxis, results: &[CellResult]) -> String {
    let mut out = SWEEP_HEADER.join(",");
    out.push('\n');
    for r in results {
        let row = &r.outcome.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            axis.name(),
            r.cell.value.expect("sweep cell"),
            r.cell.seed,
            row.model,
            row.accuracy,
            row.delta_sp,
            row.delta_eo,
            row.soft_sp,
            row.soft_eo
        );
    }
    out
}

/// Parsed long-form sweep row.
struct SweepPoint {
    axis: String,
    value: f64,
    model: String,
    accuracy: f64,
    delta_sp: f64,
    delta_eo: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// Writes the summary table and plots of a sweep.
fn render_sweep(ctx: &Context, points: &[SweepPoint]) -> Result<(), CliError> {
    let axis = points.first().map(|p| p.axis.clone()).unwrap_or_else(|| "value".into());
    let mut models: Vec<String> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for p in points {
        if !models.contains(&p.model) {
            models.push(p.model.clone());
        }
        if !values.contains(&p.value) {
            values.push(p.value);
        }
    }
    values.sort_by(f64::total_cmp);

    let mut summary = format!(
        "{axis},model,runs,accuracy_mean,accuracy_std,delta_sp_mean,delta_sp_std,delta_eo_mean,delta_eo_std\n"
    );
    let mut acc = Vec::new();
    let mut sp = Vec::new();
    let mut eo = Vec::new();
    for model in &models {
        let mut series = [Vec::new(), Vec::new(), Vec::new()];
        for &v in &values {
            let cell: Vec<&SweepPoint> = points.iter().filter(|p| &p.model == model && p.value == v).collect();
            if cell.is_empty() {
                continue;
            }
            let a = mean_std(&cell.iter().map(|p| p.accuracy).collect::<Vec<_>>());
            let s = mean_std(&cell.iter().map(|p| p.delta_sp).collect::<Vec<_>>());
            let e = mean_std(&cell.iter().map(|p| p.delta_eo).collect::<Vec<_>>());
            let _ = writeln!(
                summary,
                "{v},{model},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                cell.len(),
                a.0,
                a.1,
                s.0,
                s.1,
                e.0,
                e.1
            );
            series[0].push((v, a.0, a.1));
            series[1].push((v, s.0, s.1));
            series[2].push((v, e.0, e.1));
        }
        let [a, s, e] = series;
        acc.push(Series { label: model.clone(), points: a });
        sp.push(Series { label: format!("{model} ΔSP"), points: s });
        eo.push(Series { label: format!("{model} ΔEO"), points: e });
    }
    write(&ctx.path("sweep_summary.csv"), &summary)?;
    let log_x = axis == "lambda" || values.iter().all(|&v| v > 0.0);
    let stamp = ctx.stamp();
    let acc_svg = line_plot(&format!("Accuracy vs {axis}"), &axis, "test accuracy", &acc, log_x, stamp.as_deref());
    write(&ctx.path("sweep_accuracy.svg"), &acc_svg)?;
    sp.extend(eo);
    let bias_svg = line_plot(&format!("Bias vs {axis}"), &axis, "group gap", &sp, log_x, stamp.as_deref());
    write(&ctx.path("sweep_bias.svg"), &bias_svg)
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = &ctx.config;
    let Some(sweep) = &cfg.sweep else {
        return Err(CliError::Config("the sweep command needs a [sweep] section".into()));
    };
    let method = cfg.distill.method;
    let inert = match sweep.axis {
        SweepAxis::Lambda => method != Method::Reliant,
        SweepAxis::ProxyDim => !method.learns_proxy(),
    };
    if inert {
        return Err(CliError::Config(format!(
            "sweeping {} has no effect for method \"{}\"",
            sweep.axis.name(),
            method.name()
        )));
    }
    let graph = pipeline::load_data(cfg)?;
    let dir = ctx.checkpoint_dir();
    let teachers = cfg.run.seeds.iter().map(|&s| Ok((s, load_teacher(&dir, s)?))).collect::<Result<Vec<_>, CliError>>()?;
    let mut jobs = Vec::new();
    for &v in &sweep.values {
        for (seed, teacher) in &teachers {
            jobs.push((cfg.sweep_cell(sweep.axis, v, *seed), teacher));
        }
    }
    let pool = pipeline::pool(cfg)?;
    let results = run_all(&pool, jobs, |(cell, teacher)| pipeline::run_cell(cfg, &graph, teacher, cell))?;

    let csv = sweep_csv(sweep.axis, &results);
    write(&ctx.path("sweep.csv"), &csv)?;
    let points = parse_sweep(&csv).map_err(runtime)?;
    render_sweep(ctx, &points)?;
    for r in &results {
        let row = &r.outcome.report;
        println!(
            "{}={} seed {}: accuracy {:.4}, delta_sp {:.4}, delta_eo {:.4}",
            sweep.axis.name(),
            r.cell.value.unwrap_or_default(),
            r.cell.seed,
            row.accuracy,
            row.delta_sp,
            row.delta_eo
        );
    }
    let records: Vec<_> = results.iter().map(|r| RunRecord::from_cell(r, ctx.deterministic)).collect();
    ctx.manifest("sweep", &records, start)
}

fn render_ablation(ctx: &Context, report: &FairnessReport) -> Result<(), CliError> {
    let groups = report.models();
    let aggs: Vec<_> = groups.iter().map(|m| report.aggregate(m).expect("model has rows")).collect();
    let metrics = ["accuracy", "ΔSP", "ΔEO"].map(String::from);
    let values = vec![
        aggs.iter().map(|a| a.accuracy).collect(),
        aggs.iter().map(|a| a.delta_sp).collect(),
        aggs.iter().map(|a| a.delta_eo).collect(),
    ];
    let svg = grouped_bars("Ablation", &groups, &metrics, &values, ctx.stamp().as_deref());
    write(&ctx.path("ablation.svg"), &svg)
}

pub fn ablate(ctx: &Context) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = &ctx.config;
    if cfg.distill.method != Method::Reliant {
        return Err(CliError::Config(format!(
            "ablate needs distill.method = \"reliant\", got \"{}\"",
            cfg.distill.method.name()
        )));
    }
    let graph = pipeline::load_data(cfg)?;
    let dir = ctx.checkpoint_dir();
    let teachers = cfg.run.seeds.iter().map(|&s| Ok((s, load_teacher(&dir, s)?))).collect::<Result<Vec<_>, CliError>>()?;
    let variants = [Method::Vanilla, Method::ProxyOnly, Method::Reliant];
    let mut jobs = Vec::new();
    for m in variants {
        for (seed, teacher) in &teachers {
            jobs.push((cfg.cell(m.name(), m, *seed), teacher));
        }
    }
    let pool = pipeline::pool(cfg)?;
    let results = run_all(&pool, jobs, |(cell, teacher)| pipeline::run_cell(cfg, &graph, teacher, cell))?;
    let mut report = FairnessReport::default();
    for r in &results {
        report.push(r.outcome.report.clone());
    }
    write(&ctx.path("ablation.csv"), &report.to_csv(true))?;
    render_ablation(ctx, &report)?;
    print_summary(&report);
    let records: Vec<_> = results.iter().map(|r| RunRecord::from_cell(r, ctx.deterministic)).collect();
    ctx.manifest("ablate", &records, start)
}

pub fn synth(ctx: &Context) -> Result<(), CliError> {
    let mut cfg = ctx.config.clone();
    cfg.data.source = crate::config::Source::Synth;
    let graph = pipeline::load_data(&cfg)?;
    let (edges, nodes) = (ctx.path("edges.csv"), ctx.path("nodes.csv"));
    write_graph(&graph, &edges, &nodes).map_err(runtime)?;
    println!(
        "{} nodes, {} edges, {} classes, group-1 fraction {:.3}",
        graph.node_count(),
        graph.edge_count(),
        graph.class_count(),
        graph.group_one_fraction()
    );
    println!("wrote {} and {}", edges.display(), nodes.display());
    Ok(())
}

fn parse_sweep(text: &str) -> anyhow::Result<Vec<SweepPoint>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> anyhow::Result<f64> {
            rec.get(i).ok_or_else(|| anyhow!("short row"))?.parse().map_err(|e| anyhow!("column {}: {e}", SWEEP_HEADER[i]))
        };
        out.push(SweepPoint {
            axis: rec[0].to_string(),
            value: f(1)?,
            model: rec[3].to_string(),
            accuracy: f(4)?,
            delta_sp: f(5)?,
            delta_eo: f(6)?,
        });
    }
    Ok(out)
}

/// Reads per-seed rows of a report CSV, skipping aggregate rows.
fn parse_report(text: &str) -> anyhow::Result<FairnessReport> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut report = FairnessReport::default();
    for rec in rdr.records() {
        let rec = rec?;
        let Ok(seed) = rec[6].parse::<u64>() else { continue };
        let f = |i: usize| -> anyhow::Result<f64> { rec[i].parse().map_err(|e| anyhow!("column {}: {e}", REPORT_HEADER[i])) };
        report.push(ReportRow {
            model: rec[0].to_string(),
            accuracy: f(1)?,
            delta_sp: f(2)?,
            delta_eo: f(3)?,
            soft_sp: f(4)?,
            soft_eo: f(5)?,
            seed,
            delta_sp_mean: f(2)?,
            delta_eo_mean: f(3)?,
            eo_skipped: Vec::new(),
        });
    }
    Ok(report)
}

pub fn report(ctx: &Context, input: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
    let bad = |e: anyhow::Error| CliError::Config(format!("{}: {e:#}", input.display()));
    if header == SWEEP_HEADER {
        let points = parse_sweep(&text).map_err(bad)?;
        render_sweep(ctx, &points)?;
        println!("rendered {} and {}", ctx.path("sweep_accuracy.svg").display(), ctx.path("sweep_bias.svg").display());
    } else if header == REPORT_HEADER {
        let report = parse_report(&text).map_err(bad)?;
        if report.rows.is_empty() {
            return Err(CliError::Config(format!("{} has no per-seed rows", input.display())));
        }
        render_ablation(ctx, &report)?;
        println!("rendered {}", ctx.path("ablation.svg").display());
    } else {
        return Err(CliError::Config(format!("{} is neither a sweep nor a report CSV", input.display())));
    }
    Ok(())
}
