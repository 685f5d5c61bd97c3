use super::{io_err, DatasetError, ImageTensor, Result};
use crate::tensor::Tensor;
use image::{DynamicImage, ImageReader};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Side length of the square model input.
pub const MODEL_SIZE: usize = 128;

/// Bilinear resize of an interleaved 8-bit buffer using half-pixel centers.
/// Output is rounded back to 8 bits. Equal sizes reproduce the input exactly.
pub fn resize_bilinear_u8(
    src: &[u8],
    height: usize,
    width: usize,
    channels: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<u8> {
    let taps = |out: usize, inp: usize| -> Vec<(usize, usize, f32)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(inp - 1);
                (i0, i1, (s - i0 as f64) as f32)
            })
            .collect()
    };
    let ys = taps(out_h, height);
    let xs = taps(out_w, width);
    let at = |y: usize, x: usize, c: usize| src[(y * width + x) * channels + c] as f32;
    let mut out = Vec::with_capacity(out_h * out_w * channels);
    for &(y0, y1, ty) in &ys {
        for &(x0, x1, tx) in &xs {
            for c in 0..channels {
                let top = at(y0, x0, c) + tx * (at(y0, x1, c) - at(y0, x0, c));
                let bot = at(y1, x0, c) + tx * (at(y1, x1, c) - at(y1, x0, c));
                let v = top + ty * (bot - top);
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}

/// Converts a decoded `H x W x C` byte grid (C in {1, 3, 4}) to a
/// `128 x 128 x 3` unit-interval image: gray is replicated, alpha dropped.
pub fn normalize(
    pixels: &[u8],
    height: usize,
    width: usize,
    channels: usize,
) -> Result<ImageTensor> {
    if height == 0 || width == 0 {
        return Err(DatasetError::ZeroArea { width, height });
    }
    if !matches!(channels, 1 | 3 | 4) {
        return Err(DatasetError::Channels(channels));
    }
    let expected = height * width * channels;
    if pixels.len() != expected {
        return Err(DatasetError::BufferLength {
            got: pixels.len(),
            expected,
        });
    }
    let rgb: Vec<u8> = match channels {
        3 => pixels.to_vec(),
        1 => pixels.iter().flat_map(|&g| [g, g, g]).collect(),
        _ => pixels
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
    };
    let resized = resize_bilinear_u8(&rgb, height, width, 3, MODEL_SIZE, MODEL_SIZE);
    let data = resized.into_iter().map(|v| v as f32 / 255.0).collect();
    let t = Tensor::from_vec(&[MODEL_SIZE, MODEL_SIZE, 3], data)
        .map_err(|e| DatasetError::InvalidImage(e.to_string()))?;
    ImageTensor::new(t)
}

/// SHA-256 over the image quantized to 8 bits per channel, with the
/// dimensions prefixed.
pub fn content_hash(image: &ImageTensor) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((image.height() as u32).to_le_bytes());
    h.update((image.width() as u32).to_le_bytes());
    let bytes: Vec<u8> = image
        .as_tensor()
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    h.update(&bytes);
    h.finalize().into()
}

fn raw_pixels(img: DynamicImage) -> (Vec<u8>, usize, usize, usize) {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_alpha() {
        (img.to_rgba8().into_raw(), h, w, 4)
    } else if img.color().has_color() {
        (img.to_rgb8().into_raw(), h, w, 3)
    } else {
        (img.to_luma8().into_raw(), h, w, 1)
    }
}

/// Decodes a JPEG/PNG/GIF file (first frame for GIF) and normalizes it.
pub fn decode_file(path: &Path) -> Result<ImageTensor> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    if looks_truncated_jpeg(&bytes) {
        return Err(DatasetError::InvalidImage(format!(
            "{}: JPEG stream has no end-of-image marker",
            path.display()
        )));
    }
    let img = ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(io_err(path))?
        .decode()?;
    let (px, h, w, c) = raw_pixels(img);
    normalize(&px, h, w, c)
}

// The JPEG decoder pads truncated scans with gray instead of failing.
fn looks_truncated_jpeg(bytes: &[u8]) -> bool {
    if !bytes.starts_with(&[0xFF, 0xD8]) {
        return false;
    }
    let tail = &bytes[bytes.len().saturating_sub(1024)..];
    !tail.windows(2).any(|w| w == [0xFF, 0xD9])
}
