use super::{LimeError, Segmentation};
use crate::dataset::ImageTensor;

/// Replaces absent segments of an image by their mean color. The means are
/// computed once so many masks can be applied cheaply.
#[derive(Debug, Clone)]
pub struct SegmentMasker<'a> {
    image: &'a ImageTensor,
    segmentation: &'a Segmentation,
    means: Vec<[f32; 3]>,
}

impl<'a> SegmentMasker<'a> {
    pub fn new(image: &'a ImageTensor, segmentation: &'a Segmentation) -> Result<Self, LimeError> {
        if image.height() != segmentation.height() || image.width() != segmentation.width() {
            return Err(LimeError::SizeMismatch {
                image: (image.height(), image.width()),
                segmentation: (segmentation.height(), segmentation.width()),
            });
        }
        let m = segmentation.num_segments();
        let mut sums = vec![[0.0f64; 3]; m];
        let mut counts = vec![0usize; m];
        let w = image.width();
        for (i, &l) in segmentation.labels().iter().enumerate() {
            let p = image.pixel(i / w, i % w);
            let s = &mut sums[l as usize];
            for c in 0..3 {
                s[c] += p[c] as f64;
            }
            counts[l as usize] += 1;
        }
        let means = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| s.map(|v| (v / n as f64) as f32))
            .collect();
        Ok(Self {
            image,
            segmentation,
            means,
        })
    }

    pub fn num_segments(&self) -> usize {
        self.segmentation.num_segments()
    }

    pub fn segment_mean(&self, segment: usize) -> [f32; 3] {
        self.means[segment]
    }

    pub fn apply(&self, mask: &[bool]) -> Result<ImageTensor, LimeError> {
        if mask.len() != self.num_segments() {
            return Err(LimeError::MaskLength {
                got: mask.len(),
                expected: self.num_segments(),
            });
        }
        let mut out = self.image.clone();
        let data = out.data_mut();
        for (i, &l) in self.segmentation.labels().iter().enumerate() {
            if !mask[l as usize] {
                data[i * 3..i * 3 + 3].copy_from_slice(&self.means[l as usize]);
            }
        }
        Ok(out)
    }
}

/// Keeps pixels of present segments and fills absent segments with their
/// mean color.
pub fn apply_mask(
    image: &ImageTensor,
    segmentation: &Segmentation,
    mask: &[bool],
) -> Result<ImageTensor, LimeError> {
    SegmentMasker::new(image, segmentation)?.apply(mask)
}
