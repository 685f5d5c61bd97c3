//! The convolutional spam classifier: architecture, training, persistence.

mod arch;
mod checkpoint;
mod network;
mod train;

pub use arch::{Activation, Architecture, LayerKind, LayerParams};
pub use checkpoint::{
    load_checkpoint, load_checkpoint_with_arch, read_checkpoint, save_checkpoint, write_checkpoint,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use network::{decide, CnnModel, Prediction, Trace, DEFAULT_THRESHOLD};
pub use train::{accuracy_on, train, train_with, EpochRecord, TrainConfig, TrainHistory};

use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("architecture mismatch: {0}")]
    Architecture(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains only {0} samples; both classes are required")]
    SingleClass(crate::dataset::Label),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("not a checkpoint file (bad magic {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint was written for a different architecture")]
    Fingerprint,
    #[error("checkpoint is truncated ({0})")]
    Truncated(&'static str),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
