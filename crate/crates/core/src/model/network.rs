use super::arch::{Activation, Architecture, LayerKind, LayerParams};
use super::ModelError;
use crate::dataset::Label;
use crate::tensor::{
    bce_grad, bce_loss, conv2d_backward, conv2d_forward, conv2d_param_grads, dense_backward,
    dense_forward, expect_shape, maxpool2d_backward, maxpool2d_forward, relu, relu_backward,
    sigmoid, sigmoid_backward, PoolIndices, Scalar, Tensor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Layer stack with trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<T = f32> {
    arch: Architecture,
    layers: Vec<LayerParams<T>>,
}

/// Values saved by [`CnnModel::forward_trace`] for the backward pass.
enum Saved<T> {
    Conv {
        input: Tensor<T>,
        pre: Tensor<T>,
    },
    Pool {
        indices: PoolIndices,
        input_shape: Vec<usize>,
    },
    Flatten {
        input_shape: Vec<usize>,
    },
    Dense {
        input: Tensor<T>,
        pre: Tensor<T>,
    },
}

pub struct Trace<T> {
    saved: Vec<Saved<T>>,
    probability: T,
}

impl<T> Trace<T> {
    pub fn probability(&self) -> T
    where
        T: Copy,
    {
        self.probability
    }
}

/// Thresholded decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub probability: f64,
}

/// Spam iff `probability >= threshold`.
pub fn decide(probability: f64, threshold: f64) -> Label {
    if probability >= threshold {
        Label::Spam
    } else {
        Label::Normal
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn activate<T: Scalar>(x: &Tensor<T>, act: Activation) -> Tensor<T> {
    match act {
        Activation::Relu => relu(x),
        Activation::Sigmoid => x.map(sigmoid),
    }
}

impl<T: Scalar> CnnModel<T> {
    /// Fresh model with Glorot-uniform weights and zero biases.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self, ModelError> {
        let shapes = arch.param_shapes()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .layers
            .iter()
            .zip(shapes)
            .map(|(&kind, s)| LayerParams::init(kind, s, &mut rng))
            .collect();
        Ok(Self { arch, layers })
    }

    /// Assembles a model from explicit layers, checking every tensor shape
    /// against the architecture.
    pub fn from_layers(
        arch: Architecture,
        layers: Vec<LayerParams<T>>,
    ) -> Result<Self, ModelError> {
        let shapes = arch.param_shapes()?;
        if layers.len() != shapes.len() {
            return Err(ModelError::Architecture(format!(
                "{} layers given, architecture has {}",
                layers.len(),
                shapes.len()
            )));
        }
        for (i, (l, s)) in layers.iter().zip(&shapes).enumerate() {
            if l.kind != arch.layers[i] {
                return Err(ModelError::Architecture(format!("layer {i} kind differs")));
            }
            let got = (
                l.weights.as_ref().map(|w| w.shape().to_vec()),
                l.bias.as_ref().map(|b| b.shape().to_vec()),
            );
            let want = match s {
                Some((w, b)) => (Some(w.clone()), Some(b.clone())),
                None => (None, None),
            };
            if got != want {
                return Err(ModelError::Architecture(format!(
                    "layer {i} parameter shapes {got:?}, expected {want:?}"
                )));
            }
        }
        Ok(Self { arch, layers })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[LayerParams<T>] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::param_count).sum()
    }

    /// Trainable tensors in layer order, weights before bias.
    pub fn params(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Sets every parameter to zero.
    pub fn zero_params(&mut self) {
        for p in self.params_mut() {
            p.data_mut().iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Element-type conversion, e.g. to `f64` for gradient checks.
    pub fn cast<U: Scalar>(&self) -> CnnModel<U> {
        CnnModel {
            arch: self.arch.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    kind: l.kind,
                    weights: l.weights.as_ref().map(Tensor::cast),
                    bias: l.bias.as_ref().map(Tensor::cast),
                })
                .collect(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<(), ModelError> {
        expect_shape("forward", input.shape(), &self.arch.input)?;
        Ok(())
    }

    /// Activations after every layer, for shape inspection.
    pub fn activations(&self, input: &Tensor<T>) -> Result<Vec<Tensor<T>>, ModelError> {
        self.check_input(input)?;
        let mut x = input.clone();
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            x = self.apply(layer, &x)?;
            out.push(x.clone());
        }
        Ok(out)
    }

    fn apply(&self, layer: &LayerParams<T>, x: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        let (w, b) = (layer.weights.as_ref(), layer.bias.as_ref());
        Ok(match layer.kind {
            LayerKind::Conv2d { activation, .. } => {
                activate(&conv2d_forward(x, w.unwrap(), b.unwrap())?, activation)
            }
            LayerKind::MaxPool2d { pool } => maxpool2d_forward(x, pool)?.0,
            LayerKind::Flatten => x.clone().reshape(&[x.len()])?,
            LayerKind::Dense { activation, .. } => {
                activate(&dense_forward(x, w.unwrap(), b.unwrap())?, activation)
            }
        })
    }

    /// Spam probability for one image.
    pub fn forward(&self, input: &Tensor<T>) -> Result<T, ModelError> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &self.layers {
            x = self.apply(layer, &x)?;
        }
        Ok(x.data()[0])
    }

    /// Output of the final layer before its activation.
    pub fn logit(&self, input: &Tensor<T>) -> Result<T, ModelError> {
        self.check_input(input)?;
        let (last, body) = self
            .layers
            .split_last()
            .ok_or_else(|| ModelError::Architecture("network has no layers".into()))?;
        let mut x = input.clone();
        for layer in body {
            x = self.apply(layer, &x)?;
        }
        let (w, b) = (last.weights.as_ref(), last.bias.as_ref());
        let pre = match last.kind {
            LayerKind::Dense { .. } => dense_forward(&x, w.unwrap(), b.unwrap())?,
            LayerKind::Conv2d { .. } => conv2d_forward(&x, w.unwrap(), b.unwrap())?,
            _ => self.apply(last, &x)?,
        };
        Ok(pre.data()[0])
    }

    /// Spam probability evaluated in `f64` from the logit. Unlike
    /// [`CnnModel::forward`] in `f32`, it still resolves differences between
    /// confident predictions whose single-precision sigmoid saturates just below 1.
    pub fn probability(&self, input: &Tensor<T>) -> Result<f64, ModelError> {
        Ok(sigmoid(self.logit(input)?.to_f64()))
    }

    pub fn predict(&self, input: &Tensor<T>, threshold: f64) -> Result<Prediction, ModelError> {
        let p = self.forward(input)?.to_f64();
        Ok(Prediction {
            label: decide(p, threshold),
            probability: p,
        })
    }

    /// Forward pass keeping everything the backward pass needs.
    pub fn forward_trace(&self, input: &Tensor<T>) -> Result<Trace<T>, ModelError> {
        self.check_input(input)?;
        let mut saved = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let (w, b) = (layer.weights.as_ref(), layer.bias.as_ref());
            x = match layer.kind {
                LayerKind::Conv2d { activation, .. } => {
                    let pre = conv2d_forward(&x, w.unwrap(), b.unwrap())?;
                    let out = activate(&pre, activation);
                    saved.push(Saved::Conv { input: x, pre });
                    out
                }
                LayerKind::MaxPool2d { pool } => {
                    let (out, indices) = maxpool2d_forward(&x, pool)?;
                    saved.push(Saved::Pool {
                        indices,
                        input_shape: x.shape().to_vec(),
                    });
                    out
                }
                LayerKind::Flatten => {
                    saved.push(Saved::Flatten {
                        input_shape: x.shape().to_vec(),
                    });
                    let n = x.len();
                    x.reshape(&[n])?
                }
                LayerKind::Dense { activation, .. } => {
                    let pre = dense_forward(&x, w.unwrap(), b.unwrap())?;
                    let out = activate(&pre, activation);
                    saved.push(Saved::Dense { input: x, pre });
                    out
                }
            };
        }
        Ok(Trace {
            probability: x.data()[0],
            saved,
        })
    }

    /// Parameter gradients (same order as [`CnnModel::params`]) given
    /// `dL/dp` at the output probability.
    pub fn backward(&self, trace: Trace<T>, dloss_dprob: T) -> Result<Vec<Tensor<T>>, ModelError> {
        let p = trace.probability;
        let mut grads: Vec<Tensor<T>> = Vec::new();
        let mut up = Tensor::filled(&[1], dloss_dprob);
        let last = self.layers.len() - 1;
        for (i, (layer, saved)) in self.layers.iter().zip(trace.saved).enumerate().rev() {
            let (w, b) = (layer.weights.as_ref(), layer.bias.as_ref());
            let act_grad = |pre: &Tensor<T>, up: &Tensor<T>, act: Activation| match act {
                Activation::Relu => relu_backward(pre, up),
                Activation::Sigmoid => {
                    let mut g = up.clone();
                    for (gv, &z) in g.data_mut().iter_mut().zip(pre.data()) {
                        *gv = *gv * sigmoid_backward(sigmoid(z));
                    }
                    Ok(g)
                }
            };
            match (layer.kind, saved) {
                (LayerKind::Conv2d { activation, .. }, Saved::Conv { input, pre }) => {
                    let dpre = act_grad(&pre, &up, activation)?;
                    if i == 0 {
                        let (dw, db) = conv2d_param_grads(&input, w.unwrap(), b.unwrap(), &dpre)?;
                        grads.push(db);
                        grads.push(dw);
                    } else {
                        let g = conv2d_backward(&input, w.unwrap(), b.unwrap(), &dpre)?;
                        grads.push(g.bias);
                        grads.push(g.weights);
                        up = g.input;
                    }
                }
                (
                    LayerKind::MaxPool2d { .. },
                    Saved::Pool {
                        indices,
                        input_shape,
                    },
                ) => {
                    up = maxpool2d_backward(&indices, &up, &input_shape)?;
                }
                (LayerKind::Flatten, Saved::Flatten { input_shape }) => {
                    up = up.reshape(&input_shape)?;
                }
                (LayerKind::Dense { activation, .. }, Saved::Dense { input, pre }) => {
                    // the output unit's sigmoid derivative is taken from its
                    // saved output to match the forward clamp exactly
                    let dpre = if i == last && activation == Activation::Sigmoid {
                        up.map(|g| g * sigmoid_backward(p))
                    } else {
                        act_grad(&pre, &up, activation)?
                    };
                    let (dx, dw, db) = dense_backward(&input, w.unwrap(), b.unwrap(), &dpre)?;
                    grads.push(db);
                    grads.push(dw);
                    up = dx;
                }
                _ => unreachable!("trace built from the same layer list"),
            }
        }
        grads.reverse();
        Ok(grads)
    }

    /// BCE loss, output probability, and parameter gradients for one sample.
    pub fn loss_and_grads(
        &self,
        input: &Tensor<T>,
        label: Label,
    ) -> Result<(T, T, Vec<Tensor<T>>), ModelError> {
        let trace = self.forward_trace(input)?;
        let p = trace.probability();
        let y = T::from_f64(label.as_f64());
        let loss = bce_loss(p, y);
        let grads = self.backward(trace, bce_grad(p, y))?;
        Ok((loss, p, grads))
    }
}

impl CnnModel<f32> {
    /// The 128x128x3 spam classifier, initialized under `seed`.
    pub fn build(seed: u64) -> Self {
        Self::new(Architecture::spam_cnn(), seed).expect("built-in architecture is valid")
    }
}
