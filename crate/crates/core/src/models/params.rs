use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ModelError, ModelSpec};
use crate::autodiff::{Bindings, DenseMat};
use crate::rng::{stream, Stream};

/// Weights and biases of one model, in layer order. Biases are 1 x fan_out rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub weights: Vec<DenseMat>,
    pub biases: Vec<DenseMat>,
    pub seed: u64,
}

pub(crate) fn weight_name(layer: usize) -> String {
    format!("w{layer}")
}

pub(crate) fn bias_name(layer: usize) -> String {
    format!("b{layer}")
}

/// Glorot-uniform weights with bound `sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<ModelParams, ModelError> {
    spec.validate()?;
    let mut rng = stream(seed, Stream::Init);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for (fan_in, fan_out) in spec.weight_shapes() {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)).collect();
        weights.push(DenseMat::from_vec(fan_in, fan_out, data)?);
        biases.push(DenseMat::zeros(1, fan_out));
    }
    Ok(ModelParams { spec: spec.clone(), weights, biases, seed })
}

impl ModelParams {
    /// Binds every weight and bias under the names the model graph uses.
    pub fn bind<'a>(&'a self, mut bindings: Bindings<'a>) -> Bindings<'a> {
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            bindings.set_dense(weight_name(l), w);
            bindings.set_dense(bias_name(l), b);
        }
        bindings
    }

    /// Mutable access to every parameter together with its binding name.
    pub fn named_mut(&mut self) -> Vec<(String, &mut DenseMat)> {
        let mut out = Vec::new();
        for (l, (w, b)) in self.weights.iter_mut().zip(self.biases.iter_mut()).enumerate() {
            out.push((weight_name(l), w));
            out.push((bias_name(l), b));
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(|m| m.data().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(DenseMat::is_finite)
    }
}
