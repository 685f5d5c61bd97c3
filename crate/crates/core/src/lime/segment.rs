//! SLIC superpixels: k-means over (L, a, b, x, y) seeded on a regular grid,
//! followed by a pass that makes every segment a single 4-connected region.

use super::LimeError;
use crate::dataset::ImageTensor;
use std::collections::HashMap;

const COMPACTNESS: f64 = 10.0;
const ITERATIONS: usize = 10;

/// Per-pixel superpixel ids in `[0, num_segments)`, every id non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    num_segments: usize,
}

impl Segmentation {
    /// Validates a label map: ids must be dense and every id used.
    pub fn from_labels(height: usize, width: usize, labels: Vec<u32>) -> Result<Self, LimeError> {
        if labels.len() != height * width || labels.is_empty() {
            return Err(LimeError::InvalidSegmentation(format!(
                "{} labels for a {height}x{width} image",
                labels.len()
            )));
        }
        let m = *labels.iter().max().unwrap() as usize + 1;
        let mut used = vec![false; m];
        for &l in &labels {
            used[l as usize] = true;
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(LimeError::InvalidSegmentation(format!(
                "segment id {missing} is empty"
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
            num_segments: m,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_segments(&self) -> usize {
        self.num_segments
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, y: usize, x: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.num_segments];
        for &l in &self.labels {
            s[l as usize] += 1;
        }
        s
    }

    /// True when every segment is a single 4-connected region.
    pub fn is_connected(&self) -> bool {
        let (_, count) = components(&self.labels, self.height, self.width);
        count == self.num_segments
    }

    /// Label map as a 16-bit grayscale PNG whose pixel values are the ids.
    pub fn to_png(&self) -> Result<Vec<u8>, LimeError> {
        let raw: Vec<u16> = self.labels.iter().map(|&l| l as u16).collect();
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
            self.width as u32,
            self.height as u32,
            raw,
        )
        .expect("buffer matches dimensions");
        let mut buf = std::io::Cursor::new(Vec::new());
        img.write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|e| LimeError::InvalidSegmentation(e.to_string()))?;
        Ok(buf.into_inner())
    }
}

fn srgb_to_lab(rgb: [f32; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| {
        let c = c as f64;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    });
    let [r, g, b] = lin;
    let x = (0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b) / 0.950_47;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = (0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b) / 1.088_83;
    let f = |t: f64| {
        const D: f64 = 6.0 / 29.0;
        if t > D * D * D {
            t.cbrt()
        } else {
            t / (3.0 * D * D) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Exactly `m` seed positions laid out row by row, rows chosen to match
/// the aspect ratio; positions use pixel-center coordinates.
fn grid_seeds(h: usize, w: usize, m: usize) -> Vec<(f64, f64)> {
    let rows = ((m as f64 * h as f64 / w as f64).sqrt().round() as usize).clamp(1, m.min(h));
    let (base, extra) = (m / rows, m % rows);
    let mut seeds = Vec::with_capacity(m);
    for r in 0..rows {
        let count = base + usize::from(r < extra);
        let y = (r as f64 + 0.5) * h as f64 / rows as f64 - 0.5;
        for c in 0..count {
            let x = (c as f64 + 0.5) * w as f64 / count as f64 - 0.5;
            seeds.push((y, x));
        }
    }
    seeds
}

/// 4-connected components of a label map; returns per-pixel component id
/// (numbered in scan order) and the component count.
fn components(labels: &[u32], h: usize, w: usize) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; labels.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (y, x) = (i / w, i % w);
            let mut visit = |j: usize| {
                if comp[j] == usize::MAX && labels[j] == labels[i] {
                    comp[j] = count;
                    stack.push(j);
                }
            };
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
        }
        count += 1;
    }
    (comp, count)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Merges stray fragments (every component that is not the largest piece
/// of its cluster, and any piece below a quarter of the nominal segment
/// area) into the neighbor sharing the longest border, then renumbers ids
/// densely in scan order.
fn enforce_connectivity(labels: &[u32], h: usize, w: usize, target: usize) -> Vec<u32> {
    let (comp, count) = components(labels, h, w);
    let mut size = vec![0usize; count];
    let mut first = vec![usize::MAX; count];
    let mut cluster = vec![0u32; count];
    for (i, &c) in comp.iter().enumerate() {
        size[c] += 1;
        if first[c] == usize::MAX {
            first[c] = i;
            cluster[c] = labels[i];
        }
    }
    let mut largest: HashMap<u32, usize> = HashMap::new();
    for c in 0..count {
        let e = largest.entry(cluster[c]).or_insert(c);
        if size[c] > size[*e] {
            *e = c;
        }
    }
    let min_size = (h * w / target / 4).max(1);

    // shared border lengths between adjacent components
    let mut borders: Vec<HashMap<usize, usize>> = vec![HashMap::new(); count];
    for y in 0..h {
        for x in 0..w {
            let a = comp[y * w + x];
            for (ny, nx) in [(y + 1, x), (y, x + 1)] {
                if ny < h && nx < w {
                    let b = comp[ny * w + nx];
                    if a != b {
                        *borders[a].entry(b).or_default() += 1;
                        *borders[b].entry(a).or_default() += 1;
                    }
                }
            }
        }
    }

    let mut orphans: Vec<usize> = (0..count)
        .filter(|&c| largest[&cluster[c]] != c || size[c] < min_size)
        .collect();
    orphans.sort_by_key(|&c| (size[c], first[c]));
    let mut parent: Vec<usize> = (0..count).collect();
    let mut members: Vec<Vec<usize>> = (0..count).map(|c| vec![c]).collect();
    let mut merged_size = size.clone();
    for c in orphans {
        // absorbed earlier, or grown large enough by absorbing others
        if find(&mut parent, c) != c {
            continue;
        }
        if largest[&cluster[c]] == c && merged_size[c] >= min_size {
            continue;
        }
        let mut shared: HashMap<usize, usize> = HashMap::new();
        for &k in &members[c] {
            for (&n, &len) in &borders[k] {
                let nr = find(&mut parent, n);
                if nr != c {
                    *shared.entry(nr).or_default() += len;
                }
            }
        }
        let best = shared
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(first[b.0].cmp(&first[a.0])));
        if let Some((n, _)) = best {
            parent[c] = n;
            merged_size[n] += merged_size[c];
            let moved = std::mem::take(&mut members[c]);
            members[n].extend(moved);
        }
    }

    let mut ids: HashMap<usize, u32> = HashMap::new();
    comp.iter()
        .map(|&c| {
            let r = find(&mut parent, c);
            let next = ids.len() as u32;
            *ids.entry(r).or_insert(next)
        })
        .collect()
}

/// SLIC segmentation into about `target` superpixels (compactness 10, ten
/// k-means iterations). The returned count can be lower than `target` when
/// fragments are merged. Deterministic.
pub fn segment(image: &ImageTensor, target: usize) -> Result<Segmentation, LimeError> {
    let (h, w) = (image.height(), image.width());
    if target < 2 || target > h * w {
        return Err(LimeError::SegmentCount {
            requested: target,
            pixels: h * w,
        });
    }
    let lab: Vec<[f64; 3]> = (0..h * w)
        .map(|i| srgb_to_lab(image.pixel(i / w, i % w)))
        .collect();
    let step = ((h * w) as f64 / target as f64).sqrt();
    let gradient = |y: usize, x: usize| -> f64 {
        let at = |yy: usize, xx: usize| lab[yy.min(h - 1) * w + xx.min(w - 1)];
        let (l, r) = (at(y, x.saturating_sub(1)), at(y, x + 1));
        let (u, d) = (at(y.saturating_sub(1), x), at(y + 1, x));
        (0..3)
            .map(|c| (r[c] - l[c]).powi(2) + (d[c] - u[c]).powi(2))
            .sum()
    };

    // [L, a, b, y, x]
    let mut centers: Vec<[f64; 5]> = grid_seeds(h, w, target)
        .into_iter()
        .map(|(sy, sx)| {
            let (cy, cx) = (sy.round() as usize, sx.round() as usize);
            let mut best = (gradient(cy, cx), cy, cx);
            for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let g = gradient(ny, nx);
                    if g < best.0 {
                        best = (g, ny, nx);
                    }
                }
            }
            let (y, x) = if (best.1, best.2) == (cy, cx) {
                (sy, sx)
            } else {
                (best.1 as f64, best.2 as f64)
            };
            let c = lab[best.1 * w + best.2];
            [c[0], c[1], c[2], y, x]
        })
        .collect();

    let spatial = (COMPACTNESS / step).powi(2);
    let reach = (2.0 * step).ceil() as isize;
    let mut labels = vec![0u32; h * w];
    let mut dist = vec![f64::INFINITY; h * w];
    for _ in 0..ITERATIONS {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let (cy, cx) = (c[3].round() as isize, c[4].round() as isize);
            let y0 = (cy - reach).max(0) as usize;
            let y1 = ((cy + reach) as usize).min(h - 1);
            let x0 = (cx - reach).max(0) as usize;
            let x1 = ((cx + reach).max(0) as usize).min(w - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = y * w + x;
                    let p = lab[i];
                    let dc = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
                    let ds = (y as f64 - c[3]).powi(2) + (x as f64 - c[4]).powi(2);
                    let d = dc + ds * spatial;
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = k as u32;
                    }
                }
            }
        }
        // pixels beyond every window fall back to the nearest center
        for i in 0..h * w {
            if dist[i].is_infinite() {
                let (y, x) = ((i / w) as f64, (i % w) as f64);
                labels[i] = centers
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        let da = (a.1[3] - y).powi(2) + (a.1[4] - x).powi(2);
                        let db = (b.1[3] - y).powi(2) + (b.1[4] - x).powi(2);
                        da.total_cmp(&db)
                    })
                    .map(|(k, _)| k as u32)
                    .unwrap();
            }
        }
        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            let s = &mut sums[l as usize];
            let p = lab[i];
            s[0] += p[0];
            s[1] += p[1];
            s[2] += p[2];
            s[3] += (i / w) as f64;
            s[4] += (i % w) as f64;
            s[5] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[5] > 0.0 {
                for d in 0..5 {
                    c[d] = s[d] / s[5];
                }
            }
        }
    }

    let labels = enforce_connectivity(&labels, h, w, target);
    Segmentation::from_labels(h, w, labels)
}
