//! Synthetic stand-in corpus. Spam-like images are rendered text blocks on
//! flat or graded backgrounds; normal-like images are smooth blurred color
//! fields.

use super::{io_err, DatasetError, Label, Result};
use crate::io::StagedDir;
use image::codecs::jpeg::JpegEncoder;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::Path;

const SIDE: u32 = 128;
const JPEG_QUALITY: u8 = 90;

type Canvas = Vec<[f32; 3]>;

fn rng_for(seed: u64, label: Label, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((label as u64) << 40) | index as u64);
    rng
}

fn random_color(rng: &mut impl Rng, lo: f32, hi: f32) -> [f32; 3] {
    [
        rng.random_range(lo..hi),
        rng.random_range(lo..hi),
        rng.random_range(lo..hi),
    ]
}

fn luminance(c: [f32; 3]) -> f32 {
    0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
}

fn add_noise(canvas: &mut Canvas, rng: &mut impl Rng, amplitude: f32) {
    for px in canvas.iter_mut() {
        for v in px.iter_mut() {
            *v += rng.random_range(-amplitude..amplitude);
        }
    }
}

fn to_image(canvas: &Canvas) -> RgbImage {
    let n = SIDE as usize;
    RgbImage::from_fn(SIDE, SIDE, |x, y| {
        let p = canvas[y as usize * n + x as usize];
        Rgb(p.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
    })
}

fn render_spam(rng: &mut ChaCha8Rng) -> RgbImage {
    let n = SIDE as usize;
    let top = random_color(rng, 0.0, 1.0);
    let bottom = if rng.random_bool(0.5) {
        random_color(rng, 0.0, 1.0)
    } else {
        top
    };
    let mut canvas: Canvas = (0..n * n)
        .map(|i| {
            let t = (i / n) as f32 / (n - 1) as f32;
            [0, 1, 2].map(|c| top[c] + t * (bottom[c] - top[c]))
        })
        .collect();

    let bg = luminance([0, 1, 2].map(|c| 0.5 * (top[c] + bottom[c])));
    let ink = if bg > 0.5 {
        random_color(rng, 0.0, 0.25)
    } else {
        random_color(rng, 0.8, 1.0)
    };

    // glyphs are random 3x5 bitmaps drawn at integer scale
    let scale = rng.random_range(1..=2usize);
    let cell = 4 * scale;
    let glyph_h = 5 * scale;
    let pitch = glyph_h + rng.random_range(2..=4) * scale;
    let margin = rng.random_range(4..=12usize);
    let mut y = margin;
    let mut lines = 0;
    while y + glyph_h + margin <= n {
        let line_end = margin + rng.random_range((n - 2 * margin) / 2..=n - 2 * margin);
        let mut x = margin;
        while x + cell <= line_end {
            let word = rng.random_range(2..=8usize);
            for _ in 0..word {
                if x + cell > line_end {
                    break;
                }
                let mut bits: u16 = rng.random_range(0..1 << 15);
                if bits.count_ones() < 5 {
                    bits |= 0b010_111_010_101_010;
                }
                for gy in 0..5 {
                    for gx in 0..3 {
                        if bits >> (gy * 3 + gx) & 1 == 0 {
                            continue;
                        }
                        for dy in 0..scale {
                            for dx in 0..scale {
                                canvas[(y + gy * scale + dy) * n + x + gx * scale + dx] = ink;
                            }
                        }
                    }
                }
                x += cell;
            }
            x += cell;
        }
        y += pitch;
        lines += 1;
        // occasional paragraph break
        if lines % 4 == 0 && rng.random_bool(0.3) {
            y += pitch;
        }
    }

    add_noise(&mut canvas, rng, 0.02);
    for px in canvas.iter_mut() {
        if rng.random_bool(0.004) {
            *px = if rng.random_bool(0.5) {
                [0.0; 3]
            } else {
                [1.0; 3]
            };
        }
    }
    to_image(&canvas)
}

fn render_normal(rng: &mut ChaCha8Rng) -> RgbImage {
    let n = SIDE as usize;
    let base = random_color(rng, 0.15, 0.85);
    let gx = random_color(rng, -0.3, 0.3);
    let gy = random_color(rng, -0.3, 0.3);
    let blobs: Vec<(f32, f32, f32, [f32; 3])> = (0..rng.random_range(3..=7))
        .map(|_| {
            (
                rng.random_range(0.0..n as f32),
                rng.random_range(0.0..n as f32),
                rng.random_range(12.0..40.0f32),
                random_color(rng, -0.5, 0.5),
            )
        })
        .collect();
    let mut canvas: Canvas = (0..n * n)
        .map(|i| {
            let (y, x) = ((i / n) as f32, (i % n) as f32);
            let mut c = [0, 1, 2]
                .map(|k| base[k] + gx[k] * (x / n as f32 - 0.5) + gy[k] * (y / n as f32 - 0.5));
            for &(cy, cx, sigma, delta) in &blobs {
                let w = (-((y - cy).powi(2) + (x - cx).powi(2)) / (2.0 * sigma * sigma)).exp();
                for k in 0..3 {
                    c[k] += delta[k] * w;
                }
            }
            c
        })
        .collect();
    add_noise(&mut canvas, rng, 0.02);
    to_image(&canvas)
}

/// Renders synthetic image `index` of the given class. Pure in
/// `(label, seed, index)`.
pub fn synthesize(label: Label, seed: u64, index: usize) -> RgbImage {
    let mut rng = rng_for(seed, label, index);
    match label {
        Label::Spam => render_spam(&mut rng),
        Label::Normal => render_normal(&mut rng),
    }
}

fn encode_jpeg(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, JPEG_QUALITY).encode_image(img)?;
    Ok(buf)
}

/// Writes `n_per_class` JPEGs into each of `<out>/spam` and `<out>/normal`.
/// Output bytes depend only on `(n_per_class, seed)`.
pub fn gen_synthetic(n_per_class: usize, seed: u64, out: &Path) -> Result<usize> {
    if n_per_class == 0 {
        return Err(DatasetError::EmptyCorpus);
    }
    let staged = StagedDir::new(out).map_err(io_err(out))?;
    for label in [Label::Spam, Label::Normal] {
        let dir = staged.path().join(label.name());
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        (0..n_per_class).into_par_iter().try_for_each(|i| {
            let bytes = encode_jpeg(&synthesize(label, seed, i))?;
            let path = dir.join(format!("{}_{i:05}.jpg", label.name()));
            std::fs::write(&path, bytes).map_err(io_err(&path))
        })?;
    }
    staged.publish().map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => DatasetError::OutputExists(out.to_path_buf()),
        _ => DatasetError::Io {
            path: out.to_path_buf(),
            source: e,
        },
    })?;
    Ok(2 * n_per_class)
}

/// Mean squared difference between horizontally adjacent values, over all
/// channels.
pub fn horizontal_gradient_energy(img: &super::ImageTensor) -> f64 {
    let (h, w) = (img.height(), img.width());
    if w < 2 {
        return 0.0;
    }
    let d = img.as_tensor().data();
    let mut acc = 0.0f64;
    for y in 0..h {
        for x in 0..w - 1 {
            for c in 0..3 {
                let a = d[(y * w + x) * 3 + c] as f64;
                let b = d[(y * w + x + 1) * 3 + c] as f64;
                acc += (b - a) * (b - a);
            }
        }
    }
    acc / (h * (w - 1) * 3) as f64
}
