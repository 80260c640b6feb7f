//! Experiment configuration, read from TOML (or from the `config` field of a
//! run manifest).

use std::path::{Path, PathBuf};

use fairdistill::distill::{Distance, DistillConfig, Method};
use fairdistill::fairness::Notion;
use fairdistill::graph::{LoadOptions, SynthSpec};
use fairdistill::models::{Architecture, ModelSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub teacher: TeacherConfig,
    pub student: StudentConfig,
    pub distill: DistillSection,
    pub sweep: Option<SweepConfig>,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            teacher: TeacherConfig::default(),
            student: StudentConfig::default(),
            distill: DistillSection::default(),
            sweep: None,
            run: RunConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Synth,
    Files,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: Source,
    /// Edge list CSV (`src,dst`), for `source = "files"`.
    pub edges: Option<PathBuf>,
    /// Node attribute CSV, for `source = "files"`.
    pub attributes: Option<PathBuf>,
    pub id_column: String,
    pub label_column: String,
    pub sensitive_column: String,
    /// Append the binarized sensitive column to the attributes.
    pub keep_sensitive: bool,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    /// Standardize attributes over each seed's training rows.
    pub standardize: bool,
    pub synth: SynthSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        let opts = LoadOptions::default();
        Self {
            source: Source::Synth,
            edges: None,
            attributes: None,
            id_column: opts.id_column,
            label_column: opts.label_column,
            sensitive_column: opts.sensitive_column,
            keep_sensitive: false,
            split: [0.6, 0.2, 0.2],
            standardize: true,
            synth: SynthSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherConfig {
    pub architecture: Architecture,
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Where teacher checkpoints are written and read; defaults to `--out`.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        let spec = ModelSpec::gcn_teacher(1, 2);
        let train = TrainConfig::gcn_teacher(0);
        Self {
            architecture: spec.architecture,
            layers: spec.layer_count,
            hidden: spec.hidden_dim,
            dropout: spec.dropout_rate,
            max_epochs: train.max_epochs,
            patience: train.early_stopping_patience,
            learning_rate: train.learning_rate,
            weight_decay: train.weight_decay,
            checkpoint_dir: None,
        }
    }
}

impl TeacherConfig {
    pub fn spec(&self, input_dim: usize, class_count: usize) -> ModelSpec {
        ModelSpec {
            architecture: self.architecture,
            layer_count: self.layers,
            hidden_dim: self.hidden,
            input_dim,
            class_count,
            dropout_rate: self.dropout,
            sgc_power: 0,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            early_stopping_patience: self.patience,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudentConfig {
    pub architecture: Architecture,
    pub sgc_power: usize,
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl Default for StudentConfig {
    fn default() -> Self {
        let spec = ModelSpec::sgc_student(1, 2);
        let train = TrainConfig::student(0);
        Self {
            architecture: spec.architecture,
            sgc_power: spec.sgc_power,
            layers: spec.layer_count,
            hidden: spec.hidden_dim,
            dropout: spec.dropout_rate,
            epochs: train.max_epochs,
            learning_rate: train.learning_rate,
            weight_decay: train.weight_decay,
        }
    }
}

impl StudentConfig {
    pub fn spec(&self, input_dim: usize, class_count: usize) -> ModelSpec {
        ModelSpec {
            architecture: self.architecture,
            layer_count: self.layers,
            hidden_dim: self.hidden,
            input_dim,
            class_count,
            dropout_rate: self.dropout,
            sgc_power: self.sgc_power,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillSection {
    pub method: Method,
    pub distance: Distance,
    /// Left unset to use the default; flagged when set for a method that
    /// ignores it.
    pub lambda: Option<f64>,
    pub proxy_dim: usize,
    pub proxy_learning_rate: f64,
    pub proxy_weight_decay: f64,
    pub proxy_init_std: f64,
    pub notion: Notion,
    pub utility_on_pseudo: bool,
}

impl Default for DistillSection {
    fn default() -> Self {
        let d = DistillConfig::default();
        Self {
            method: Method::Reliant,
            distance: d.distance,
            lambda: None,
            proxy_dim: d.proxy_dim,
            proxy_learning_rate: d.proxy_learning_rate,
            proxy_weight_decay: d.proxy_weight_decay,
            proxy_init_std: d.proxy_init_std,
            notion: d.notion,
            utility_on_pseudo: d.utility_on_pseudo,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda,
    ProxyDim,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::ProxyDim => "proxy_dim",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    /// Worker threads for independent runs; `FAIRDISTILL_THREADS` caps it.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seeds: vec![0, 10, 100], threads: None }
    }
}

impl ExperimentConfig {
    /// Parses a TOML config, or a JSON manifest whose `config` field holds one.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let inner = manifest.get("config").cloned().unwrap_or(manifest);
            serde_json::from_value(inner).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data.edges, &mut cfg.data.attributes, &mut cfg.teacher.checkpoint_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.run.seeds.is_empty() {
            return bad("run.seeds must not be empty".into());
        }
        if self.data.source == Source::Files {
            for (key, p) in [("data.edges", &self.data.edges), ("data.attributes", &self.data.attributes)] {
                match p {
                    None => return bad(format!("{key} is required when data.source = \"files\"")),
                    Some(p) if !p.is_file() => return bad(format!("{key}: no such file {}", p.display())),
                    Some(_) => {}
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return bad("sweep.values must not be empty".into());
            }
            if sweep.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return bad("sweep.values must be positive".into());
            }
            if sweep.axis == SweepAxis::ProxyDim && sweep.values.iter().any(|v| v.fract() != 0.0) {
                return bad("proxy_dim sweep values must be whole numbers".into());
            }
        }
        if matches!(self.run.threads, Some(0)) {
            return bad("run.threads must be positive".into());
        }
        self.distill_config(0).validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn lambda(&self) -> f64 {
        self.distill.lambda.unwrap_or(DistillConfig::default().lambda)
    }

    /// Warnings about keys that have no effect.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.distill.lambda.is_some() && matches!(self.distill.method, Method::Vanilla | Method::Onehot) {
            out.push(format!("distill.lambda is ignored for method \"{}\"", self.distill.method.name()));
        }
        out
    }

    pub fn distill_config(&self, seed: u64) -> DistillConfig {
        let s = &self.student;
        DistillConfig {
            distance: self.distill.distance,
            lambda: self.lambda(),
            proxy_dim: self.distill.proxy_dim,
            proxy_learning_rate: self.distill.proxy_learning_rate,
            proxy_weight_decay: self.distill.proxy_weight_decay,
            proxy_init_std: self.distill.proxy_init_std,
            notion: self.distill.notion,
            utility_on_pseudo: self.distill.utility_on_pseudo,
            student: TrainConfig {
                max_epochs: s.epochs,
                early_stopping_patience: s.epochs,
                learning_rate: s.learning_rate,
                weight_decay: s.weight_decay,
                seed,
                ..TrainConfig::default()
            },
        }
    }
}
