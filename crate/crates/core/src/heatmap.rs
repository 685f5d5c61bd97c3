//! Occlusion sensitivity maps: slide a flat patch over the image and record
//! how much the spam score drops at each position.

use crate::dataset::ImageTensor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HeatmapError {
    #[error("patch and stride must be positive (patch {patch}, stride {stride})")]
    ZeroSize { patch: usize, stride: usize },
    #[error("patch {patch} does not fit in a {height}x{width} image")]
    PatchTooLarge {
        patch: usize,
        height: usize,
        width: usize,
    },
    #[error("fill color {0:?} is outside [0, 1]")]
    Fill([f32; 3]),
    #[error("model returned a non-finite score ({0})")]
    NonFinite(f64),
    #[error("model evaluation failed: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fill {
    /// Mean color of the whole image.
    GlobalMean,
    Color([f32; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatmapConfig {
    pub patch: usize,
    pub stride: usize,
    pub fill: Fill,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            patch: 16,
            stride: 8,
            fill: Fill::GlobalMean,
        }
    }
}

/// Score drop per patch position: `grid[r][c] = f(x) - f(x occluded at
/// (r * stride, c * stride))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub patch: usize,
    pub stride: usize,
    pub baseline: f64,
}

#[derive(Serialize)]
struct HeatmapJson {
    method: &'static str,
    patch: usize,
    stride: usize,
    baseline: f64,
    grid: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn grid(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Position of the largest score drop (first on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let i =
            self.values.iter().enumerate().fold(
                0,
                |best, (i, &v)| if v > self.values[best] { i } else { best },
            );
        (i / self.cols, i % self.cols)
    }

    /// Bilinear resampling of the grid onto an `height x width` pixel
    /// lattice; cell values sit at patch centers.
    pub fn upsample(&self, height: usize, width: usize) -> Vec<f64> {
        let center = |k: usize| (k * self.stride) as f64 + (self.patch as f64 - 1.0) / 2.0;
        let locate = |p: f64, n: usize| -> (usize, usize, f64) {
            if n == 1 {
                return (0, 0, 0.0);
            }
            let t = ((p - center(0)) / self.stride as f64).clamp(0.0, (n - 1) as f64);
            let i0 = (t.floor() as usize).min(n - 2);
            (i0, i0 + 1, t - i0 as f64)
        };
        let mut out = Vec::with_capacity(height * width);
        for y in 0..height {
            let (r0, r1, fy) = locate(y as f64, self.rows);
            for x in 0..width {
                let (c0, c1, fx) = locate(x as f64, self.cols);
                let top = self.get(r0, c0) * (1.0 - fx) + self.get(r0, c1) * fx;
                let bottom = self.get(r1, c0) * (1.0 - fx) + self.get(r1, c1) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(HeatmapJson {
            method: "occlusion",
            patch: self.patch,
            stride: self.stride,
            baseline: self.baseline,
            grid: self.grid(),
        })
        .expect("plain data serializes")
    }
}

fn mean_color(image: &ImageTensor) -> [f32; 3] {
    let mut sum = [0.0f64; 3];
    for px in image.as_tensor().data().chunks_exact(3) {
        for c in 0..3 {
            sum[c] += px[c] as f64;
        }
    }
    let n = (image.height() * image.width()) as f64;
    sum.map(|s| (s / n) as f32)
}

/// Occludes `patch x patch` squares at every `stride` offset that fits
/// entirely inside the image and scores each occluded copy with `model`.
pub fn occlusion_map<F, E>(
    image: &ImageTensor,
    model: F,
    config: &HeatmapConfig,
) -> Result<Heatmap, HeatmapError>
where
    F: Fn(&ImageTensor) -> Result<f64, E> + Sync,
    E: std::fmt::Display,
{
    let HeatmapConfig {
        patch,
        stride,
        fill,
    } = *config;
    if patch == 0 || stride == 0 {
        return Err(HeatmapError::ZeroSize { patch, stride });
    }
    let (h, w) = (image.height(), image.width());
    if patch > h || patch > w {
        return Err(HeatmapError::PatchTooLarge {
            patch,
            height: h,
            width: w,
        });
    }
    let color = match fill {
        Fill::GlobalMean => mean_color(image),
        Fill::Color(c) if c.iter().all(|v| (0.0..=1.0).contains(v)) => c,
        Fill::Color(c) => return Err(HeatmapError::Fill(c)),
    };
    let score = |img: &ImageTensor| -> Result<f64, HeatmapError> {
        let v = model(img).map_err(|e| HeatmapError::Model(e.to_string()))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(HeatmapError::NonFinite(v))
        }
    };
    let baseline = score(image)?;
    let (rows, cols) = ((h - patch) / stride + 1, (w - patch) / stride + 1);
    let values = (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let (y0, x0) = ((i / cols) * stride, (i % cols) * stride);
            let mut occluded = image.clone();
            let data = occluded.data_mut();
            for y in y0..y0 + patch {
                for x in x0..x0 + patch {
                    let k = (y * w + x) * 3;
                    data[k..k + 3].copy_from_slice(&color);
                }
            }
            Ok(baseline - score(&occluded)?)
        })
        .collect::<Result<Vec<_>, HeatmapError>>()?;
    Ok(Heatmap {
        rows,
        cols,
        values,
        patch,
        stride,
        baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn brightness(img: &ImageTensor) -> Result<f64, Infallible> {
        Ok(img
            .as_tensor()
            .data()
            .iter()
            .map(|&v| v as f64)
            .sum::<f64>()
            / img.as_tensor().len() as f64)
    }

    #[test]
    fn grid_size_for_model_input() {
        let img = ImageTensor::from_fn(128, 128, |_, _| [0.5; 3]).unwrap();
        let map = occlusion_map(&img, brightness, &HeatmapConfig::default()).unwrap();
        assert_eq!((map.rows, map.cols), (15, 15));
        assert!(map.values.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn bright_square_is_located() {
        let img = ImageTensor::from_fn(64, 64, |y, x| {
            if (40..56).contains(&y) && (8..24).contains(&x) {
                [1.0; 3]
            } else {
                [0.1; 3]
            }
        })
        .unwrap();
        let map = occlusion_map(&img, brightness, &HeatmapConfig::default()).unwrap();
        assert_eq!(map.argmax(), (5, 1));
    }

    #[test]
    fn rejects_bad_config() {
        let img = ImageTensor::from_fn(8, 8, |_, _| [0.5; 3]).unwrap();
        let cfg = |patch, stride| HeatmapConfig {
            patch,
            stride,
            fill: Fill::GlobalMean,
        };
        assert!(occlusion_map(&img, brightness, &cfg(0, 1)).is_err());
        assert!(occlusion_map(&img, brightness, &cfg(9, 1)).is_err());
        assert!(occlusion_map(
            &img,
            brightness,
            &HeatmapConfig {
                fill: Fill::Color([2.0, 0.0, 0.0]),
                ..cfg(4, 4)
            }
        )
        .is_err());
    }

    #[test]
    fn upsample_hits_cell_centers() {
        let map = Heatmap {
            rows: 2,
            cols: 2,
            values: vec![0.0, 1.0, 2.0, 3.0],
            patch: 4,
            stride: 4,
            baseline: 0.0,
        };
        let up = map.upsample(8, 8);
        assert_eq!(up[0], 0.0);
        assert_eq!(up[7 * 8 + 7], 3.0);
        // centers sit at 1.5 and 5.5, so pixel 3 is 3/8 of the way along each axis
        assert!((up[3 * 8 + 3] - 1.125).abs() < 1e-12);
    }
}
