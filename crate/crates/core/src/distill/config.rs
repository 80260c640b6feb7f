use serde::{Deserialize, Serialize};

use super::DistillError;
use crate::fairness::Notion;
use crate::models::TrainConfig;

/// Per-node distance between teacher and student logits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    #[default]
    SquaredEuclidean,
    /// `1 - cos(angle)`.
    Cosine,
    /// `KL(softmax(teacher) || softmax(student))`.
    Kl,
}

/// Which distillation pipeline to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Utility loss only, student sees raw attributes.
    Vanilla,
    /// Fixed one-hot group columns as the proxy.
    Onehot,
    /// Learned proxy plus the attribution loss.
    Reliant,
    /// Learned proxy without the attribution loss.
    ProxyOnly,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Onehot => "onehot",
            Method::Reliant => "reliant",
            Method::ProxyOnly => "proxy-only",
        }
    }

    /// Columns appended to the attributes for the student.
    pub fn proxy_dim(self, cfg: &DistillConfig) -> usize {
        match self {
            Method::Vanilla => 0,
            Method::Onehot => 2,
            Method::Reliant | Method::ProxyOnly => cfg.proxy_dim,
        }
    }

    pub(crate) fn lambda(self, cfg: &DistillConfig) -> f64 {
        match self {
            Method::Reliant => cfg.lambda,
            _ => 0.0,
        }
    }

    pub fn learns_proxy(self) -> bool {
        matches!(self, Method::Reliant | Method::ProxyOnly)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub distance: Distance,
    /// Weight of the attribution loss.
    pub lambda: f64,
    pub proxy_dim: usize,
    pub proxy_learning_rate: f64,
    pub proxy_weight_decay: f64,
    /// Standard deviation of the Gaussian proxy initialization.
    pub proxy_init_std: f64,
    /// Bias notion optimized by the proxy and attribution losses.
    pub notion: Notion,
    /// Also fit the teacher on pseudo-proxy inputs.
    pub utility_on_pseudo: bool,
    /// Student optimizer; `max_epochs` is the number of alternation rounds
    /// and `seed` drives initialization, dropout and the proxy.
    pub student: TrainConfig,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            distance: Distance::SquaredEuclidean,
            lambda: 100.0,
            proxy_dim: 8,
            proxy_learning_rate: 1e-2,
            proxy_weight_decay: 1e-2,
            proxy_init_std: 0.01,
            notion: Notion::Sp,
            utility_on_pseudo: false,
            student: TrainConfig::student(0),
        }
    }
}

impl DistillConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.student.seed = seed;
        self
    }

    pub fn seed(&self) -> u64 {
        self.student.seed
    }

    pub fn epochs(&self) -> usize {
        self.student.max_epochs
    }

    pub fn validate(&self) -> Result<(), DistillError> {
        let bad = |m: &str| Err(DistillError::InvalidConfig(m.to_string()));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be a finite non-negative number");
        }
        if !(self.proxy_learning_rate >= 0.0) || !(self.proxy_weight_decay >= 0.0) {
            return bad("proxy learning rate and weight decay must be non-negative");
        }
        if !(self.proxy_init_std >= 0.0) || !self.proxy_init_std.is_finite() {
            return bad("proxy_init_std must be finite and non-negative");
        }
        if self.student.max_epochs == 0 {
            return bad("student.max_epochs must be positive");
        }
        self.student.validate().map_err(|e| DistillError::InvalidConfig(e.to_string()))
    }
}
