//! Teacher and student GNNs expressed as [`ExprGraph`](crate::autodiff::ExprGraph)s,
//! with Glorot initialization, Adam, and a supervised training loop.

mod checkpoint;
mod forward;
mod optim;
mod params;
mod spec;
mod train;

use thiserror::Error;

use crate::autodiff::AutodiffError;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use forward::{build_logits, dropout_masks, model_forward, predict, ModelInputs, Propagation};
pub use optim::Adam;
pub use params::{init_params, ModelParams};
pub use spec::{Architecture, ModelSpec, TrainConfig};
pub use train::{cross_entropy, train_supervised, TrainHistory, TrainOutcome};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Precondition(String),
    #[error("training diverged at epoch {epoch}: {source}")]
    Diverged {
        epoch: usize,
        #[source]
        source: AutodiffError,
    },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("checkpoint {path}: {detail}")]
    Checkpoint { path: String, detail: String },
}
