use crate::tensor::{Result, Scalar, Tensor, TensorError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

/// One row of a network description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv2d {
        filters: usize,
        kernel: usize,
        activation: Activation,
    },
    MaxPool2d {
        pool: usize,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
}

impl LayerKind {
    fn describe(&self) -> String {
        match *self {
            LayerKind::Conv2d {
                filters,
                kernel,
                activation,
            } => format!("conv2d({filters},{kernel}x{kernel},{activation:?})"),
            LayerKind::MaxPool2d { pool } => format!("maxpool2d({pool}x{pool})"),
            LayerKind::Flatten => "flatten".to_string(),
            LayerKind::Dense { units, activation } => format!("dense({units},{activation:?})"),
        }
    }
}

/// Weight and bias shapes of one trainable layer.
pub type ParamShapes = (Vec<usize>, Vec<usize>);

/// Input shape plus ordered layer list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input: [usize; 3],
    pub layers: Vec<LayerKind>,
}

impl Architecture {
    /// The 128x128x3 four-block classifier: conv(32,3) conv(64,3)
    /// conv(128,3) conv(128,5), each followed by ReLU and 2x2 pooling, then
    /// dense(512, ReLU) and a single sigmoid unit.
    pub fn spam_cnn() -> Self {
        use Activation::*;
        use LayerKind::*;
        Self {
            input: [128, 128, 3],
            layers: vec![
                Conv2d {
                    filters: 32,
                    kernel: 3,
                    activation: Relu,
                },
                MaxPool2d { pool: 2 },
                Conv2d {
                    filters: 64,
                    kernel: 3,
                    activation: Relu,
                },
                MaxPool2d { pool: 2 },
                Conv2d {
                    filters: 128,
                    kernel: 3,
                    activation: Relu,
                },
                MaxPool2d { pool: 2 },
                Conv2d {
                    filters: 128,
                    kernel: 5,
                    activation: Relu,
                },
                MaxPool2d { pool: 2 },
                Flatten,
                Dense {
                    units: 512,
                    activation: Relu,
                },
                Dense {
                    units: 1,
                    activation: Sigmoid,
                },
            ],
        }
    }

    /// Same layer kinds as [`Architecture::spam_cnn`] at 16x16x1, small
    /// enough for exhaustive finite-difference checks.
    pub fn reduced() -> Self {
        use Activation::*;
        use LayerKind::*;
        Self {
            input: [16, 16, 1],
            layers: vec![
                Conv2d {
                    filters: 4,
                    kernel: 3,
                    activation: Relu,
                },
                MaxPool2d { pool: 2 },
                Conv2d {
                    filters: 4,
                    kernel: 3,
                    activation: Relu,
                },
                MaxPool2d { pool: 2 },
                Flatten,
                Dense {
                    units: 8,
                    activation: Relu,
                },
                Dense {
                    units: 1,
                    activation: Sigmoid,
                },
            ],
        }
    }

    /// Output shape after each layer, validating the chain.
    pub fn output_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = self.input.to_vec();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = match *layer {
                LayerKind::Conv2d {
                    filters, kernel, ..
                } => {
                    let (h, w) = spatial("conv2d", &shape, kernel)?;
                    vec![h - kernel + 1, w - kernel + 1, filters]
                }
                LayerKind::MaxPool2d { pool } => {
                    let (h, w) = spatial("maxpool2d", &shape, pool)?;
                    vec![h / pool, w / pool, shape[2]]
                }
                LayerKind::Flatten => vec![shape.iter().product()],
                LayerKind::Dense { units, .. } => {
                    if shape.len() != 1 {
                        return Err(TensorError::Rank {
                            op: "dense",
                            expected: 1,
                            got: shape,
                        });
                    }
                    vec![units]
                }
            };
            shapes.push(shape.clone());
        }
        match shapes.last().map(Vec::as_slice) {
            Some([1]) => Ok(shapes),
            _ => Err(TensorError::ShapeMismatch {
                op: "architecture",
                dim: "output units",
                got: shape.iter().product(),
                expected: 1,
            }),
        }
    }

    /// Weight and bias shapes for each layer (`None` for parameter-free layers).
    pub fn param_shapes(&self) -> Result<Vec<Option<ParamShapes>>> {
        let outs = self.output_shapes()?;
        let mut prev = self.input.to_vec();
        let mut v = Vec::with_capacity(self.layers.len());
        for (layer, out) in self.layers.iter().zip(outs) {
            v.push(match *layer {
                LayerKind::Conv2d {
                    filters, kernel, ..
                } => Some((vec![kernel, kernel, prev[2], filters], vec![filters])),
                LayerKind::Dense { units, .. } => Some((vec![prev[0], units], vec![units])),
                _ => None,
            });
            prev = out;
        }
        Ok(v)
    }

    /// Parameter count per layer, weights plus bias.
    pub fn param_counts(&self) -> Result<Vec<usize>> {
        Ok(self
            .param_shapes()?
            .into_iter()
            .map(|p| {
                p.map_or(0, |(w, b)| {
                    w.iter().product::<usize>() + b.iter().product::<usize>()
                })
            })
            .collect())
    }

    /// Canonical text form; the checkpoint fingerprint is its SHA-256.
    pub fn spec_string(&self) -> String {
        let [h, w, c] = self.input;
        let mut s = format!("input({h}x{w}x{c})");
        for l in &self.layers {
            let _ = write!(s, ";{}", l.describe());
        }
        s
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::digest(self.spec_string().as_bytes()).into()
    }
}

fn spatial(op: &'static str, shape: &[usize], window: usize) -> Result<(usize, usize)> {
    if shape.len() != 3 {
        return Err(TensorError::Rank {
            op,
            expected: 3,
            got: shape.to_vec(),
        });
    }
    if shape[0] < window || shape[1] < window || window == 0 {
        return Err(TensorError::TooSmall {
            op,
            height: shape[0],
            width: shape[1],
            kernel_h: window,
            kernel_w: window,
        });
    }
    Ok((shape[0], shape[1]))
}

/// A layer together with its trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T = f32> {
    pub kind: LayerKind,
    pub weights: Option<Tensor<T>>,
    pub bias: Option<Tensor<T>>,
}

impl<T: Scalar> LayerParams<T> {
    /// Glorot-uniform weights (`limit = sqrt(6 / (fan_in + fan_out))`),
    /// zero bias. Samples are drawn in `f64` so both precisions see the
    /// same initial values.
    pub(crate) fn init(kind: LayerKind, shapes: Option<ParamShapes>, rng: &mut ChaCha8Rng) -> Self {
        let Some((ws, bs)) = shapes else {
            return Self {
                kind,
                weights: None,
                bias: None,
            };
        };
        let (fan_in, fan_out) = match ws.len() {
            4 => (ws[0] * ws[1] * ws[2], ws[0] * ws[1] * ws[3]),
            _ => (ws[0], ws[1]),
        };
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = ws.iter().product();
        let data = (0..n)
            .map(|_| T::from_f64(rng.random_range(-limit..limit)))
            .collect();
        Self {
            kind,
            weights: Some(Tensor::from_vec(&ws, data).expect("shape from architecture")),
            bias: Some(Tensor::zeros(&bs)),
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.as_ref().map_or(0, Tensor::len) + self.bias.as_ref().map_or(0, Tensor::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape_chain() {
        let shapes = Architecture::spam_cnn().output_shapes().unwrap();
        let expected: Vec<Vec<usize>> = vec![
            vec![126, 126, 32],
            vec![63, 63, 32],
            vec![61, 61, 64],
            vec![30, 30, 64],
            vec![28, 28, 128],
            vec![14, 14, 128],
            vec![10, 10, 128],
            vec![5, 5, 128],
            vec![3200],
            vec![512],
            vec![1],
        ];
        assert_eq!(shapes, expected);
    }

    #[test]
    fn table_param_counts() {
        let counts = Architecture::spam_cnn().param_counts().unwrap();
        assert_eq!(
            counts,
            vec![896, 0, 18_496, 0, 73_856, 0, 409_728, 0, 0, 1_638_912, 513]
        );
        assert_eq!(counts.iter().sum::<usize>(), 2_142_401);
    }

    #[test]
    fn reduced_chain_is_valid() {
        let shapes = Architecture::reduced().output_shapes().unwrap();
        assert_eq!(shapes[4], vec![16]);
    }

    #[test]
    fn fingerprint_distinguishes_architectures() {
        assert_ne!(
            Architecture::spam_cnn().fingerprint(),
            Architecture::reduced().fingerprint()
        );
        assert!(Architecture::spam_cnn()
            .spec_string()
            .starts_with("input(128x128x3);conv2d(32,3x3"));
    }

    #[test]
    fn invalid_chain_rejected() {
        let mut a = Architecture::reduced();
        a.input = [4, 4, 1];
        assert!(a.output_shapes().is_err());
        let mut b = Architecture::reduced();
        b.layers.pop();
        assert!(b.output_shapes().is_err());
    }
}
