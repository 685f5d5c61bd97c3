//! Kernel SHAP attributions over superpixels, plus brute-force Shapley
//! values for small games.
//!
//! Every explanation satisfies `base_value + sum(phi) == fx`: the empty and
//! full coalitions enter the weighted regression as hard constraints and are
//! eliminated before solving.

use crate::dataset::ImageTensor;
use crate::lime::{LimeError, SegmentMasker, Segmentation};
use crate::linalg::weighted_ridge;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest game [`exact_shapley`] will enumerate.
pub const MAX_EXACT_FEATURES: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("a game needs at least one player")]
    NoFeatures,
    #[error("coalition size {size} is outside 1..{m} for {m} players")]
    CoalitionSize { size: usize, m: usize },
    #[error("{m} players is too many for exhaustive enumeration (limit {limit})")]
    TooManyFeatures { m: usize, limit: usize },
    #[error("sampling {got} coalitions cannot determine {m} attributions; use at least {needed}")]
    Underdetermined { got: usize, needed: usize, m: usize },
    #[error("regression over sampled coalitions is singular; increase the sample count")]
    Singular,
    #[error("value function returned a non-finite result ({0})")]
    NonFinite(f64),
    #[error("model evaluation failed: {0}")]
    Model(String),
    #[error(transparent)]
    Masking(#[from] LimeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapConfig {
    /// Coalitions drawn in sampled mode.
    pub num_samples: usize,
    /// Games with at most this many players are enumerated exhaustively.
    pub exact_threshold: usize,
    pub num_segments: usize,
    /// Ridge penalty on the attributions; zero gives the exact Shapley
    /// solution under full enumeration. With zero, a rank-deficient sampled
    /// design falls back to a vanishing ridge instead of failing.
    pub ridge: f64,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            num_samples: 2048,
            exact_threshold: 12,
            num_segments: 50,
            ridge: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapExplanation {
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub fx: f64,
    pub mode: ShapMode,
    /// Distinct coalitions evaluated, including the empty and full ones.
    pub n_coalitions: usize,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct ShapJson<'a> {
    method: &'static str,
    base_value: f64,
    phi: &'a [f64],
    fx: f64,
    mode: ShapMode,
    n_coalitions: usize,
    seed: Option<u64>,
}

impl ShapExplanation {
    /// `|base_value + sum(phi) - fx|`.
    pub fn efficiency_gap(&self) -> f64 {
        (self.base_value + self.phi.iter().sum::<f64>() - self.fx).abs()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ShapJson {
            method: "shap",
            base_value: self.base_value,
            phi: &self.phi,
            fx: self.fx,
            mode: self.mode,
            n_coalitions: self.n_coalitions,
            seed: self.seed,
        })
        .expect("plain data serializes")
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel `(M-1) / (C(M,s) * s * (M-s))` for a coalition of size
/// `s`; defined only for `0 < s < M`.
pub fn shapley_kernel_weight(m: usize, s: usize) -> Result<f64, ShapError> {
    if s == 0 || s >= m {
        return Err(ShapError::CoalitionSize { size: s, m });
    }
    Ok((m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64))
}

fn bits_to_mask(bits: u64, m: usize) -> Vec<bool> {
    (0..m).map(|j| bits >> j & 1 == 1).collect()
}

fn checked<F>(value: &F, mask: &[bool]) -> Result<f64, ShapError>
where
    F: Fn(&[bool]) -> Result<f64, ShapError> + Sync,
{
    let v = value(mask)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ShapError::NonFinite(v))
    }
}

/// Shapley values by direct enumeration of all `2^m` coalitions, each
/// evaluated once. Returns `(v(empty), phi)`.
pub fn exact_shapley<F>(m: usize, value: F) -> Result<(f64, Vec<f64>), ShapError>
where
    F: Fn(&[bool]) -> Result<f64, ShapError> + Sync,
{
    if m == 0 {
        return Err(ShapError::NoFeatures);
    }
    if m > MAX_EXACT_FEATURES {
        return Err(ShapError::TooManyFeatures {
            m,
            limit: MAX_EXACT_FEATURES,
        });
    }
    let table: Vec<f64> = (0..1u64 << m)
        .into_par_iter()
        .map(|bits| checked(&value, &bits_to_mask(bits, m)))
        .collect::<Result<_, _>>()?;
    let weight: Vec<f64> = (0..m)
        .map(|s| 1.0 / (m as f64 * binomial(m - 1, s)))
        .collect();
    let phi = (0..m)
        .map(|j| {
            let bit = 1u64 << j;
            (0..1u64 << m)
                .filter(|s| s & bit == 0)
                .map(|s| {
                    weight[s.count_ones() as usize]
                        * (table[(s | bit) as usize] - table[s as usize])
                })
                .sum()
        })
        .collect();
    Ok((table[0], phi))
}

/// Solves the constrained weighted regression over proper coalitions:
/// `phi_0 = v(empty)` and `sum(phi) = v(full) - v(empty)` are substituted
/// out by expressing the last attribution through the others.
const RANK_DEFICIENT_RIDGE: f64 = 1e-9;

fn constrained_fit(
    m: usize,
    base: f64,
    fx: f64,
    coalitions: &[(Vec<bool>, f64, f64)],
    ridge: f64,
) -> Result<Vec<f64>, ShapError> {
    let delta = fx - base;
    if m == 1 {
        return Ok(vec![delta]);
    }
    let last = m - 1;
    let mut rows = Vec::with_capacity(coalitions.len());
    let mut y = Vec::with_capacity(coalitions.len());
    let mut w = Vec::with_capacity(coalitions.len());
    for (mask, v, weight) in coalitions {
        let zl = f64::from(u8::from(mask[last]));
        rows.push(
            mask[..last]
                .iter()
                .map(|&z| f64::from(u8::from(z)) - zl)
                .collect::<Vec<_>>(),
        );
        y.push(v - base - zl * delta);
        w.push(*weight);
    }
    let mut phi = match weighted_ridge(&rows, &y, &w, last, ridge) {
        Ok(phi) => phi,
        Err(_) if ridge == 0.0 => {
            // rank-deficient sample: a vanishing ridge picks the minimum-norm solution
            let tiny = RANK_DEFICIENT_RIDGE * w.iter().sum::<f64>();
            weighted_ridge(&rows, &y, &w, last, tiny).map_err(|_| ShapError::Singular)?
        }
        Err(_) => return Err(ShapError::Singular),
    };
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(phi)
}

/// Kernel SHAP over an abstract game with `m` players.
pub fn kernel_shap_game<F>(
    m: usize,
    value: F,
    config: &ShapConfig,
) -> Result<ShapExplanation, ShapError>
where
    F: Fn(&[bool]) -> Result<f64, ShapError> + Sync,
{
    if m == 0 {
        return Err(ShapError::NoFeatures);
    }
    if config.exact_threshold == 0 || !(config.ridge.is_finite() && config.ridge >= 0.0) {
        return Err(ShapError::InvalidConfig(format!(
            "exact_threshold must be >= 1 and ridge >= 0 (got {} and {})",
            config.exact_threshold, config.ridge
        )));
    }
    let exact = m <= config.exact_threshold.min(MAX_EXACT_FEATURES);
    let proper: Vec<(Vec<bool>, f64)> = if exact {
        (1..(1u64 << m) - 1)
            .map(|bits| {
                let mask = bits_to_mask(bits, m);
                let s = bits.count_ones() as usize;
                (mask, shapley_kernel_weight(m, s).expect("proper coalition"))
            })
            .collect()
    } else {
        let needed = 2 * m + 2;
        if config.num_samples < needed {
            return Err(ShapError::Underdetermined {
                got: config.num_samples,
                needed,
                m,
            });
        }
        sample_coalitions(m, config.num_samples, config.seed)
            .into_iter()
            .map(|mask| (mask, 1.0))
            .collect()
    };

    // evaluate each distinct coalition once
    let mut slot: HashMap<&[bool], usize> = HashMap::new();
    let empty = vec![false; m];
    let full = vec![true; m];
    let mut unique: Vec<&[bool]> = Vec::new();
    for mask in [&empty[..], &full[..]]
        .into_iter()
        .chain(proper.iter().map(|(z, _)| &z[..]))
    {
        slot.entry(mask).or_insert_with(|| {
            unique.push(mask);
            unique.len() - 1
        });
    }
    let values: Vec<f64> = unique
        .par_iter()
        .map(|mask| checked(&value, mask))
        .collect::<Result<_, _>>()?;
    let (base, fx) = (values[0], values[1]);
    let coalitions: Vec<(Vec<bool>, f64, f64)> = proper
        .iter()
        .map(|(mask, w)| (mask.clone(), values[slot[&mask[..]]], *w))
        .collect();
    let phi = constrained_fit(m, base, fx, &coalitions, config.ridge)?;
    Ok(ShapExplanation {
        base_value: base,
        phi,
        fx,
        mode: if exact {
            ShapMode::Exact
        } else {
            ShapMode::Sampled
        },
        n_coalitions: unique.len(),
        seed: (!exact).then_some(config.seed),
    })
}

/// Draws `n` proper coalitions: sizes with probability proportional to
/// `1 / (s (M - s))`, members uniformly, each followed by its complement.
pub fn sample_coalitions(m: usize, n: usize, seed: u64) -> Vec<Vec<bool>> {
    if m < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cumulative: Vec<f64> = (1..m)
        .scan(0.0, |acc, s| {
            *acc += 1.0 / (s * (m - s)) as f64;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u = rng.random::<f64>() * total;
        let s = 1 + cumulative.iter().position(|&c| u < c).unwrap_or(m - 2);
        let mut mask = vec![false; m];
        for j in index::sample(&mut rng, m, s) {
            mask[j] = true;
        }
        let complement: Vec<bool> = mask.iter().map(|b| !b).collect();
        out.push(mask);
        if out.len() < n {
            out.push(complement);
        }
    }
    out
}

/// Model score on `image` with absent segments filled by their mean color.
pub fn masked_predict<F, E>(
    image: &ImageTensor,
    segmentation: &Segmentation,
    coalition: &[bool],
    model: F,
) -> Result<f64, ShapError>
where
    F: Fn(&ImageTensor) -> Result<f64, E>,
    E: std::fmt::Display,
{
    let perturbed = SegmentMasker::new(image, segmentation)?.apply(coalition)?;
    model(&perturbed).map_err(|e| ShapError::Model(e.to_string()))
}

/// Kernel SHAP of `model` on `image` with superpixels as players.
pub fn kernel_shap<F, E>(
    image: &ImageTensor,
    segmentation: &Segmentation,
    model: F,
    config: &ShapConfig,
) -> Result<ShapExplanation, ShapError>
where
    F: Fn(&ImageTensor) -> Result<f64, E> + Sync,
    E: std::fmt::Display,
{
    let masker = SegmentMasker::new(image, segmentation)?;
    kernel_shap_game(
        segmentation.num_segments(),
        |mask| {
            let perturbed = masker.apply(mask)?;
            model(&perturbed).map_err(|e| ShapError::Model(e.to_string()))
        },
        config,
    )
}
