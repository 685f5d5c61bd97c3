//! Local surrogate explanations over superpixels.
//!
//! An image is split into superpixels, random subsets of them are greyed
//! out to their mean color, the classifier is queried on each perturbation,
//! and a sparse weighted linear model is fit to those answers. The surrogate
//! coefficients are the per-segment attributions.

mod mask;
mod segment;
mod surrogate;

pub use mask::{apply_mask, SegmentMasker};
pub use segment::{segment, Segmentation};
pub use surrogate::fit_surrogate;

use crate::dataset::ImageTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LimeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot split {pixels} pixels into {requested} segments")]
    SegmentCount { requested: usize, pixels: usize },
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),
    #[error("image is {image:?} but segmentation is {segmentation:?}")]
    SizeMismatch {
        image: (usize, usize),
        segmentation: (usize, usize),
    },
    #[error("mask has {got} entries, expected {expected}")]
    MaskLength { got: usize, expected: usize },
    #[error("need at least {needed} perturbation samples, got {got}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("samples must include the unperturbed (all-present) mask")]
    MissingReference,
    #[error("surrogate system is singular; use a positive ridge penalty or more samples")]
    Singular,
    #[error("model returned a non-finite score ({0})")]
    NonFinite(f64),
    #[error("model evaluation failed: {0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub num_samples: usize,
    pub kernel_width: f64,
    pub ridge: f64,
    pub num_features: usize,
    pub num_segments: usize,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            num_samples: 1000,
            kernel_width: 0.25,
            ridge: 1e-3,
            num_features: 10,
            num_segments: 50,
            seed: 0,
        }
    }
}

impl LimeConfig {
    fn validate(&self, m: usize) -> Result<(), LimeError> {
        if !(self.kernel_width.is_finite() && self.kernel_width > 0.0) {
            return Err(LimeError::InvalidConfig(format!(
                "kernel width must be positive, got {}",
                self.kernel_width
            )));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(LimeError::InvalidConfig(format!(
                "ridge must be >= 0, got {}",
                self.ridge
            )));
        }
        if self.num_features == 0 {
            return Err(LimeError::InvalidConfig(
                "num_features must be at least 1".into(),
            ));
        }
        if self.num_samples < m + 1 {
            return Err(LimeError::TooFewSamples {
                got: self.num_samples,
                needed: m + 1,
            });
        }
        Ok(())
    }
}

/// One perturbation: which segments were kept, the model's score on the
/// perturbed input, and its proximity weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSample {
    pub mask: Vec<bool>,
    pub prediction: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimeExplanation {
    /// One coefficient per segment; all but `kept` of them are zero.
    pub segment_weights: Vec<f64>,
    pub intercept: f64,
    /// Weighted R^2 of the surrogate on its own samples.
    pub local_fidelity: f64,
    pub kept: usize,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct LimeJson {
    method: String,
    num_segments: usize,
    kept: usize,
    intercept: f64,
    weights: Vec<f64>,
    fidelity_r2: f64,
    seed: Option<u64>,
}

impl LimeExplanation {
    pub fn num_segments(&self) -> usize {
        self.segment_weights.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(LimeJson {
            method: "lime".into(),
            num_segments: self.num_segments(),
            kept: self.kept,
            intercept: self.intercept,
            weights: self.segment_weights.clone(),
            fidelity_r2: self.local_fidelity,
            seed: self.seed,
        })
        .expect("plain data serializes")
    }

    /// Segment indices ordered by decreasing attribution magnitude,
    /// restricted to the non-zero coefficients.
    pub fn ranked_segments(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.segment_weights.len())
            .filter(|&j| self.segment_weights[j] != 0.0)
            .collect();
        idx.sort_by(|&a, &b| {
            self.segment_weights[b]
                .abs()
                .total_cmp(&self.segment_weights[a].abs())
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Exponential kernel on the cosine distance between `mask` and the
/// all-present mask. An empty mask is at distance 1.
pub fn proximity(mask: &[bool], kernel_width: f64) -> f64 {
    let m = mask.len();
    let present = mask.iter().filter(|&&b| b).count();
    let d = if present == 0 || m == 0 {
        1.0
    } else {
        1.0 - present as f64 / ((present as f64).sqrt() * (m as f64).sqrt())
    };
    (-(d * d) / (kernel_width * kernel_width)).exp()
}

/// Draws `n` masks over `m` features: the all-present mask first, then
/// independent fair coin flips.
pub fn sample_masks(m: usize, n: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        out.push(vec![true; m]);
    }
    while out.len() < n {
        out.push((0..m).map(|_| rng.random::<bool>()).collect());
    }
    out
}

/// LIME over an abstract set of `m` binary features. `value` is evaluated
/// in parallel, once per sampled mask.
pub fn explain_game<F>(
    m: usize,
    value: F,
    config: &LimeConfig,
) -> Result<LimeExplanation, LimeError>
where
    F: Fn(&[bool]) -> Result<f64, LimeError> + Sync,
{
    if m == 0 {
        return Err(LimeError::InvalidConfig("need at least one feature".into()));
    }
    config.validate(m)?;
    let masks = sample_masks(m, config.num_samples, config.seed);
    let predictions: Vec<f64> = masks
        .par_iter()
        .map(|mask| {
            let v = value(mask)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(LimeError::NonFinite(v))
            }
        })
        .collect::<Result<_, _>>()?;
    let samples: Vec<PerturbationSample> = masks
        .into_iter()
        .zip(predictions)
        .map(|(mask, prediction)| {
            let weight = proximity(&mask, config.kernel_width);
            PerturbationSample {
                mask,
                prediction,
                weight,
            }
        })
        .collect();
    let mut e = fit_surrogate(&samples, config.ridge, config.num_features.min(m))?;
    e.seed = Some(config.seed);
    Ok(e)
}

/// Explains `model` on `image` using a precomputed segmentation.
pub fn explain_with_segmentation<F, E>(
    image: &ImageTensor,
    segmentation: &Segmentation,
    model: F,
    config: &LimeConfig,
) -> Result<LimeExplanation, LimeError>
where
    F: Fn(&ImageTensor) -> Result<f64, E> + Sync,
    E: std::fmt::Display,
{
    let masker = SegmentMasker::new(image, segmentation)?;
    explain_game(
        segmentation.num_segments(),
        |mask| {
            let perturbed = masker.apply(mask)?;
            model(&perturbed).map_err(|e| LimeError::Model(e.to_string()))
        },
        config,
    )
}

/// Segments `image` into `config.num_segments` superpixels and explains
/// `model` over them.
pub fn explain<F, E>(
    image: &ImageTensor,
    model: F,
    config: &LimeConfig,
) -> Result<(Segmentation, LimeExplanation), LimeError>
where
    F: Fn(&ImageTensor) -> Result<f64, E> + Sync,
    E: std::fmt::Display,
{
    let seg = segment(image, config.num_segments)?;
    let e = explain_with_segmentation(image, &seg, model, config)?;
    Ok((seg, e))
}
