//! Explainable image-spam classification.
//!
//! A small convolutional network classifies 128x128 RGB images as spam or
//! normal. Its decisions can be explained with three model-agnostic
//! methods that all treat the classifier as a black box `image -> probability`:
//!
//! * [`lime`]: sparse weighted linear surrogate over superpixel masks,
//! * [`shap`]: Kernel SHAP over superpixel coalitions, with an exact
//!   enumeration oracle,
//! * [`heatmap`]: occlusion sensitivity.

pub mod dataset;
pub mod heatmap;
pub mod io;
pub mod lime;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod overlay;
pub mod shap;
pub mod tensor;

pub use dataset::{DatasetSplit, ImageTensor, IngestReport, Label, LabeledSample};
pub use heatmap::{occlusion_map, Heatmap, HeatmapConfig};
pub use lime::{LimeConfig, LimeExplanation, Segmentation};
pub use metrics::ConfusionMatrix;
pub use model::{Architecture, CnnModel, TrainConfig, TrainHistory};
pub use shap::{ShapConfig, ShapExplanation};
pub use tensor::{Scalar, Tensor};
