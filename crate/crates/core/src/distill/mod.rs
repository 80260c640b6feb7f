//! Knowledge distillation from a frozen teacher into a student, with a
//! learnable per-node proxy of bias that is averaged away at inference.

mod config;
mod losses;
mod proxy;
mod train;

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::fairness::MetricError;
use crate::models::ModelError;

pub use config::{Distance, DistillConfig, Method};
pub use losses::{
    attribution_loss, attribution_loss_value, proxy_loss, proxy_loss_value, student_logits, utility_loss,
    utility_loss_value, DistillInputs, LossSetup,
};
pub use proxy::{concat_proxy, pseudo_proxy, ProxyMatrix, PseudoProxy};
pub use train::{
    distill, infer_fair, one_hot_distill, reliant_train, vanilla_distill, DistillHistory, DistillOutcome,
};

#[derive(Debug, Error)]
pub enum DistillError {
    #[error("invalid distillation config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{loss} loss is not finite at epoch {epoch}: {source}")]
    NonFinite {
        epoch: usize,
        loss: &'static str,
        #[source]
        source: AutodiffError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
