use spamlens_core::dataset::DatasetError;
use spamlens_core::heatmap::HeatmapError;
use spamlens_core::lime::LimeError;
use spamlens_core::metrics::MetricsError;
use spamlens_core::model::ModelError;
use spamlens_core::overlay::OverlayError;
use spamlens_core::shap::ShapError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config keys, or input paths; nothing was written.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Runtime(e.to_string())
            }
        })*
    };
}

runtime_from!(
    DatasetError,
    ModelError,
    MetricsError,
    LimeError,
    ShapError,
    HeatmapError,
    OverlayError,
    std::io::Error,
    serde_json::Error
);

pub type Result<T> = std::result::Result<T, CliError>;
