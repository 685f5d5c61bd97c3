//! Renders attributions as a translucent red/blue layer over a grayscale
//! copy of the image: red where a region pushes towards spam, blue where it
//! pushes away, opacity proportional to magnitude.

use crate::dataset::ImageTensor;
use crate::heatmap::Heatmap;
use crate::lime::Segmentation;
use image::RgbImage;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OverlayError {
    #[error("attribution has {got} values for {expected} pixels")]
    Length { got: usize, expected: usize },
    #[error("segmentation has {got} segments but {expected} weights were given")]
    Segments { got: usize, expected: usize },
    #[error("non-finite attribution value")]
    NonFinite,
    #[error("png encoding failed: {0}")]
    Encode(String),
}

/// Maximum overlay opacity.
pub const MAX_ALPHA: f64 = 0.5;

/// Broadcasts per-segment weights to a per-pixel map.
pub fn segment_attribution(
    segmentation: &Segmentation,
    weights: &[f64],
) -> Result<Vec<f64>, OverlayError> {
    if weights.len() != segmentation.num_segments() {
        return Err(OverlayError::Segments {
            got: segmentation.num_segments(),
            expected: weights.len(),
        });
    }
    Ok(segmentation
        .labels()
        .iter()
        .map(|&l| weights[l as usize])
        .collect())
}

/// Per-pixel attribution from an occlusion grid.
pub fn heatmap_attribution(heatmap: &Heatmap, height: usize, width: usize) -> Vec<f64> {
    heatmap.upsample(height, width)
}

/// Blends `attribution` (one value per pixel, row-major) over the image.
/// Values are scaled by the largest magnitude so the overlay is unchanged
/// by positive rescaling, and negating it swaps the red and blue channels.
pub fn render_overlay(image: &ImageTensor, attribution: &[f64]) -> Result<RgbImage, OverlayError> {
    let (h, w) = (image.height(), image.width());
    if attribution.len() != h * w {
        return Err(OverlayError::Length {
            got: attribution.len(),
            expected: h * w,
        });
    }
    if attribution.iter().any(|v| !v.is_finite()) {
        return Err(OverlayError::NonFinite);
    }
    let peak = attribution.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = RgbImage::new(w as u32, h as u32);
    for (i, px) in out.pixels_mut().enumerate() {
        let [r, g, b] = image.pixel(i / w, i % w).map(f64::from);
        let gray = 0.299 * r + 0.587 * g + 0.114 * b;
        let a = if peak > 0.0 {
            attribution[i] / peak
        } else {
            0.0
        };
        let alpha = MAX_ALPHA * a.abs();
        let hot = gray * (1.0 - alpha) + alpha;
        let cold = gray * (1.0 - alpha);
        let (red, blue) = if a > 0.0 {
            (hot, cold)
        } else if a < 0.0 {
            (cold, hot)
        } else {
            (gray, gray)
        };
        let q = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
        px.0 = [q(red), q(cold), q(blue)];
    }
    Ok(out)
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, OverlayError> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| OverlayError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}
