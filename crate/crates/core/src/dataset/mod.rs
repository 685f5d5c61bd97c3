//! Labeled image corpora: decoding, normalization, deduplication,
//! stratified splitting, and a synthetic corpus generator.

mod ingest;
mod normalize;
mod split;
mod synthetic;

pub use ingest::{ingest, ingest_with_labels, write_normalized, IngestReport, KeptCounts};
pub use normalize::{content_hash, decode_file, normalize, resize_bilinear_u8, MODEL_SIZE};
pub use split::{split, DatasetSplit};
pub use synthetic::{gen_synthetic, horizontal_gradient_energy, synthesize};

use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("label directory {0} contains no decodable images")]
    EmptyLabel(PathBuf),
    #[error("image has zero area ({width}x{height})")]
    ZeroArea { width: usize, height: usize },
    #[error("unsupported channel count {0} (expected 1, 3 or 4)")]
    Channels(usize),
    #[error("pixel buffer holds {got} bytes, expected {expected}")]
    BufferLength { got: usize, expected: usize },
    #[error("invalid image tensor: {0}")]
    InvalidImage(String),
    #[error("split needs at least 4 samples, got {0}")]
    TooFewSamples(usize),
    #[error("class {label} has {count} sample(s); at least 2 are needed to split")]
    ClassTooSmall { label: Label, count: usize },
    #[error("n_per_class must be at least 1")]
    EmptyCorpus,
    #[error("output directory {0} already exists and is not empty")]
    OutputExists(PathBuf),
    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DatasetError {
    let path = path.into();
    move |source| DatasetError::Io { path, source }
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Class label; spam is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal = 0,
    Spam = 1,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Spam => "spam",
            Label::Normal => "normal",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spam" | "1" => Ok(Label::Spam),
            "normal" | "ham" | "0" => Ok(Label::Normal),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// `H x W x 3` RGB image with every value in `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct ImageTensor(Tensor<f32>);

impl ImageTensor {
    pub fn new(t: Tensor<f32>) -> Result<Self> {
        if t.rank() != 3 || t.shape()[2] != 3 {
            return Err(DatasetError::InvalidImage(format!(
                "expected HxWx3, got {:?}",
                t.shape()
            )));
        }
        if let Some(v) = t.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DatasetError::InvalidImage(format!(
                "value {v} outside [0, 1]"
            )));
        }
        Ok(Self(t))
    }

    /// Builds an image from a per-pixel RGB function.
    pub fn from_fn(
        height: usize,
        width: usize,
        f: impl Fn(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(y, x));
            }
        }
        let t = Tensor::from_vec(&[height, width, 3], data)
            .map_err(|e| DatasetError::InvalidImage(e.to_string()))?;
        Self::new(t)
    }

    pub fn height(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.0.shape()[1]
    }

    pub fn channels(&self) -> usize {
        3
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.width() + x) * 3;
        let d = self.0.data();
        [d[i], d[i + 1], d[i + 2]]
    }

    pub fn as_tensor(&self) -> &Tensor<f32> {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor<f32> {
        self.0
    }

    /// Mutable pixel access; callers must keep values inside `[0, 1]`.
    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        self.0.data_mut()
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let raw = self
            .0
            .data()
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        image::RgbImage::from_raw(self.width() as u32, self.height() as u32, raw)
            .expect("buffer size matches dimensions")
    }
}

impl fmt::Debug for ImageTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ImageTensor({}x{}x3)", self.height(), self.width())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub image: ImageTensor,
    pub label: Label,
    pub source_id: String,
    pub content_hash: [u8; 32],
}

impl LabeledSample {
    pub fn hash_hex(&self) -> String {
        hex::encode(self.content_hash)
    }
}
