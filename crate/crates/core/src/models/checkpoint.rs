use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelError, ModelParams};

pub const CHECKPOINT_FORMAT: &str = "fairdistill-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk model: spec, row-major weights and the init seed, as JSON.
/// Floats are written in shortest round-trip form, so reading back is
/// bit-exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: ModelParams,
}

pub fn write_checkpoint(path: &Path, params: &ModelParams) -> Result<(), ModelError> {
    let ck = Checkpoint { format: CHECKPOINT_FORMAT.into(), version: CHECKPOINT_VERSION, params: params.clone() };
    let err = |detail: String| ModelError::Checkpoint { path: path.display().to_string(), detail };
    let text = serde_json::to_string(&ck).map_err(|e| err(e.to_string()))?;
    fs::write(path, text).map_err(|e| err(e.to_string()))
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams, ModelError> {
    let err = |detail: String| ModelError::Checkpoint { path: path.display().to_string(), detail };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(err(format!("unexpected format `{}`", ck.format)));
    }
    if ck.version != CHECKPOINT_VERSION {
        return Err(err(format!("unsupported version {}", ck.version)));
    }
    ck.params.spec.validate()?;
    let shapes: Vec<_> = ck.params.weights.iter().map(|w| (w.rows(), w.cols())).collect();
    if shapes != ck.params.spec.weight_shapes() {
        return Err(err("weight shapes do not match the spec".into()));
    }
    for (w, b) in ck.params.weights.iter().zip(&ck.params.biases) {
        if w.data().len() != w.rows() * w.cols() || b.shape() != (1, w.cols()) {
            return Err(err("malformed weight or bias matrix".into()));
        }
    }
    Ok(ck.params)
}
