use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Gcn,
    SageMean,
    Sgc,
    Mlp,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Gcn => "gcn",
            Architecture::SageMean => "sage-mean",
            Architecture::Sgc => "sgc",
            Architecture::Mlp => "mlp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    /// Number of weight layers. SGC always has a single linear map.
    pub layer_count: usize,
    pub hidden_dim: usize,
    pub input_dim: usize,
    pub class_count: usize,
    pub dropout_rate: f64,
    /// Propagation steps for SGC.
    pub sgc_power: usize,
}

impl ModelSpec {
    /// Teacher GCN: 3 layers, 64 hidden units, dropout 0.8.
    pub fn gcn_teacher(input_dim: usize, class_count: usize) -> Self {
        Self {
            architecture: Architecture::Gcn,
            layer_count: 3,
            hidden_dim: 64,
            input_dim,
            class_count,
            dropout_rate: 0.8,
            sgc_power: 0,
        }
    }

    /// Teacher GraphSAGE (mean aggregator): 3 layers, 128 hidden, dropout 0.5.
    pub fn sage_teacher(input_dim: usize, class_count: usize) -> Self {
        Self {
            architecture: Architecture::SageMean,
            layer_count: 3,
            hidden_dim: 128,
            input_dim,
            class_count,
            dropout_rate: 0.5,
            sgc_power: 0,
        }
    }

    /// SGC student with three propagation steps and one linear map.
    pub fn sgc_student(input_dim: usize, class_count: usize) -> Self {
        Self {
            architecture: Architecture::Sgc,
            layer_count: 1,
            hidden_dim: 0,
            input_dim,
            class_count,
            dropout_rate: 0.0,
            sgc_power: 3,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidSpec(m.to_string()));
        if self.layer_count == 0 {
            return bad("layer_count must be at least 1");
        }
        if self.input_dim == 0 || self.class_count == 0 {
            return bad("input_dim and class_count must be positive");
        }
        let needs_hidden = matches!(self.architecture, Architecture::Gcn | Architecture::SageMean | Architecture::Mlp);
        if needs_hidden && self.layer_count > 1 && self.hidden_dim == 0 {
            return bad("hidden_dim must be positive for multi-layer models");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        Ok(())
    }

    /// Number of weight matrices.
    pub fn depth(&self) -> usize {
        match self.architecture {
            Architecture::Sgc => 1,
            _ => self.layer_count,
        }
    }

    /// (fan_in, fan_out) of each weight matrix, in layer order.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        let depth = self.depth();
        let mut dims = vec![self.input_dim];
        dims.extend(std::iter::repeat_n(self.hidden_dim, depth - 1));
        dims.push(self.class_count);
        dims.windows(2)
            .map(|w| match self.architecture {
                Architecture::SageMean => (2 * w[0], w[1]),
                _ => (w[0], w[1]),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub early_stopping_patience: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            early_stopping_patience: 500,
            learning_rate: 1e-2,
            weight_decay: 1e-3,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn gcn_teacher(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn sage_teacher(seed: u64) -> Self {
        Self { seed, weight_decay: 5e-4, ..Self::default() }
    }

    /// Student optimizer settings: 600 epochs, weight decay 5e-4.
    pub fn student(seed: u64) -> Self {
        Self { seed, max_epochs: 600, early_stopping_patience: 600, weight_decay: 5e-4, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        // A zero rate is allowed: it leaves parameters untouched.
        if !(self.learning_rate >= 0.0) {
            return bad("learning_rate must be non-negative");
        }
        if self.early_stopping_patience > self.max_epochs {
            return bad("early_stopping_patience cannot exceed max_epochs");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return bad("Adam betas must lie in [0, 1) and epsilon must be positive");
        }
        Ok(())
    }
}
