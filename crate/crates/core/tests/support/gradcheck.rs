//! Central finite-difference checks of every backward kernel, in `f64`.
//!
//! Each trial draws fresh shapes and values, picks one coordinate, and
//! compares the analytic derivative with `(L(x + h) - L(x - h)) / 2h`.
//! Trials whose stencil straddles a ReLU kink or a pooling tie are redrawn
//! (and counted as skipped), since the derivative is not defined there.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spamlens_core::model::{Architecture, CnnModel, LayerKind};
use spamlens_core::tensor::{
    bce_grad, bce_loss, conv2d_backward, conv2d_forward, conv2d_param_grads, dense_backward,
    dense_forward, maxpool2d_backward, maxpool2d_forward, relu, relu_backward, sigmoid,
    sigmoid_backward, Tensor,
};
use spamlens_core::Label;

/// Gradients smaller than this are compared on an absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradCheck {
    pub name: &'static str,
    pub trials: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
}

impl GradCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            skipped: 0,
            max_rel_err: 0.0,
        }
    }

    fn record(&mut self, analytic: f64, numeric: f64) {
        self.trials += 1;
        self.max_rel_err = self.max_rel_err.max(rel_err(analytic, numeric));
    }
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn weighted_sum(u: &Tensor<f64>, y: &Tensor<f64>) -> f64 {
    u.data().iter().zip(y.data()).map(|(a, b)| a * b).sum()
}

fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn perturbed(t: &Tensor<f64>, i: usize, v: f64) -> Tensor<f64> {
    let mut t = t.clone();
    t.data_mut()[i] = v;
    t
}

pub fn conv(trials: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck::new("conv2d");
    let h = 1e-4;
    while out.trials < trials {
        let k = rng.random_range(1..=3);
        let (ih, iw) = (rng.random_range(k..k + 5), rng.random_range(k..k + 5));
        let (c, f) = (rng.random_range(1..=3), rng.random_range(1..=4));
        let x = random(&mut rng, &[ih, iw, c], -1.0, 1.0);
        let w = random(&mut rng, &[k, k, c, f], -1.0, 1.0);
        let b = random(&mut rng, &[f], -1.0, 1.0);
        let u = random(&mut rng, &[ih - k + 1, iw - k + 1, f], -1.0, 1.0);
        let g = conv2d_backward(&x, &w, &b, &u).unwrap();
        let (pw, pb) = conv2d_param_grads(&x, &w, &b, &u).unwrap();
        assert_eq!(pw.data(), g.weights.data());
        assert_eq!(pb.data(), g.bias.data());
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            weighted_sum(&u, &conv2d_forward(x, w, b).unwrap())
        };
        match out.trials % 3 {
            0 => {
                let i = rng.random_range(0..x.len());
                let n = central(|v| loss(&perturbed(&x, i, v), &w, &b), x.data()[i], h);
                out.record(g.input.data()[i], n);
            }
            1 => {
                let i = rng.random_range(0..w.len());
                let n = central(|v| loss(&x, &perturbed(&w, i, v), &b), w.data()[i], h);
                out.record(g.weights.data()[i], n);
            }
            _ => {
                let i = rng.random_range(0..b.len());
                let n = central(|v| loss(&x, &w, &perturbed(&b, i, v)), b.data()[i], h);
                out.record(g.bias.data()[i], n);
            }
        }
    }
    out
}

pub fn dense(trials: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck::new("dense");
    let h = 1e-4;
    while out.trials < trials {
        let (n_in, n_out) = (rng.random_range(1..40), rng.random_range(1..10));
        let x = random(&mut rng, &[n_in], -1.0, 1.0);
        let w = random(&mut rng, &[n_in, n_out], -1.0, 1.0);
        let b = random(&mut rng, &[n_out], -1.0, 1.0);
        let u = random(&mut rng, &[n_out], -1.0, 1.0);
        let (dx, dw, db) = dense_backward(&x, &w, &b, &u).unwrap();
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            weighted_sum(&u, &dense_forward(x, w, b).unwrap())
        };
        match out.trials % 3 {
            0 => {
                let i = rng.random_range(0..n_in);
                out.record(
                    dx.data()[i],
                    central(|v| loss(&perturbed(&x, i, v), &w, &b), x.data()[i], h),
                );
            }
            1 => {
                let i = rng.random_range(0..w.len());
                out.record(
                    dw.data()[i],
                    central(|v| loss(&x, &perturbed(&w, i, v), &b), w.data()[i], h),
                );
            }
            _ => {
                let i = rng.random_range(0..n_out);
                out.record(
                    db.data()[i],
                    central(|v| loss(&x, &w, &perturbed(&b, i, v)), b.data()[i], h),
                );
            }
        }
    }
    out
}

pub fn maxpool(trials: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck::new("maxpool2d");
    let h = 1e-5;
    while out.trials < trials {
        let (ih, iw, c) = (
            rng.random_range(2..9),
            rng.random_range(2..9),
            rng.random_range(1..4),
        );
        let x = random(&mut rng, &[ih, iw, c], -1.0, 1.0);
        let (y, idx) = maxpool2d_forward(&x, 2).unwrap();
        let u = random(&mut rng, y.shape(), -1.0, 1.0);
        let dx = maxpool2d_backward(&idx, &u, x.shape()).unwrap();
        let i = rng.random_range(0..x.len());
        // the coordinate's window must have a clear winner
        let (py, px, ch) = (i / (iw * c) / 2, (i / c) % iw / 2, i % c);
        if py < ih / 2 && px < iw / 2 {
            let mut vals: Vec<f64> = (0..4)
                .map(|k| x.data()[((2 * py + k / 2) * iw + 2 * px + k % 2) * c + ch])
                .collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            if vals[0] - vals[1] < 4.0 * h {
                out.skipped += 1;
                continue;
            }
        }
        let loss = |x: &Tensor<f64>| weighted_sum(&u, &maxpool2d_forward(x, 2).unwrap().0);
        out.record(
            dx.data()[i],
            central(|v| loss(&perturbed(&x, i, v)), x.data()[i], h),
        );
    }
    out
}

pub fn relu_layer(trials: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck::new("relu");
    let h = 1e-5;
    while out.trials < trials {
        let n = rng.random_range(1..30);
        let x = random(&mut rng, &[n], -1.0, 1.0);
        let u = random(&mut rng, &[n], -1.0, 1.0);
        let i = rng.random_range(0..n);
        if x.data()[i].abs() < 2.0 * h {
            out.skipped += 1;
            continue;
        }
        let dx = relu_backward(&x, &u).unwrap();
        let n = central(
            |v| weighted_sum(&u, &relu(&perturbed(&x, i, v))),
            x.data()[i],
            h,
        );
        out.record(dx.data()[i], n);
    }
    out
}

/// Sigmoid output followed by binary cross-entropy, checked with respect to
/// the logit.
pub fn sigmoid_bce(trials: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck::new("sigmoid+bce");
    let h = 1e-5;
    while out.trials < trials {
        let z: f64 = rng.random_range(-6.0..6.0);
        let y = if rng.random::<bool>() { 1.0 } else { 0.0 };
        let s = sigmoid(z);
        let analytic = bce_grad(s, y) * sigmoid_backward(s);
        let numeric = central(|v| bce_loss(sigmoid(v), y), z, h);
        out.record(analytic, numeric);
    }
    out
}

/// ReLU on/off pattern and pooling winners of a forward pass, used to tell
/// whether two parameter settings lie in the same linear piece.
fn activation_pattern(model: &CnnModel<f64>, input: &Tensor<f64>) -> Vec<usize> {
    let acts = model.activations(input).unwrap();
    let mut pattern = Vec::new();
    for (k, layer) in model.architecture().layers.iter().enumerate() {
        match layer {
            LayerKind::MaxPool2d { pool } => {
                let prev = if k == 0 { input } else { &acts[k - 1] };
                let (_, idx) = maxpool2d_forward(prev, *pool).unwrap();
                pattern.extend_from_slice(idx.argmax());
            }
            LayerKind::Flatten => {}
            _ => pattern.extend(acts[k].data().iter().map(|&v| usize::from(v > 0.0))),
        }
    }
    pattern
}

/// Loss gradient of the reduced 16x16x1 network with respect to randomly
/// chosen parameters, against central differences of the loss.
pub fn end_to_end(trials: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck::new("end-to-end (reduced network)");
    let h = 1e-5;
    while out.trials < trials {
        let mut model = CnnModel::<f64>::new(Architecture::reduced(), rng.random()).unwrap();
        // nonzero biases so pre-activations are not all symmetric around 0
        for p in model.params_mut() {
            if p.rank() == 1 {
                for v in p.data_mut() {
                    *v = rng.random_range(-0.1..0.1);
                }
            }
        }
        let input = random(&mut rng, &[16, 16, 1], 0.0, 1.0);
        let label = if rng.random::<bool>() {
            Label::Spam
        } else {
            Label::Normal
        };
        let (_, _, grads) = model.loss_and_grads(&input, label).unwrap();

        let t = rng.random_range(0..grads.len());
        let i = rng.random_range(0..grads[t].len());
        let base = model.params().nth(t).unwrap().data()[i];
        let at = |v: f64| {
            let mut m = model.clone();
            m.params_mut().nth(t).unwrap().data_mut()[i] = v;
            m
        };
        let (lo, hi) = (at(base - h), at(base + h));
        let centre = activation_pattern(&model, &input);
        if activation_pattern(&lo, &input) != centre || activation_pattern(&hi, &input) != centre {
            out.skipped += 1;
            continue;
        }
        let loss = |m: &CnnModel<f64>| {
            let p = m.forward(&input).unwrap();
            bce_loss(p, label.as_f64())
        };
        out.record(grads[t].data()[i], (loss(&hi) - loss(&lo)) / (2.0 * h));
    }
    out
}

pub fn layer_suite(trials: usize, seed: u64) -> Vec<GradCheck> {
    vec![
        conv(trials, seed),
        dense(trials, seed + 1),
        maxpool(trials, seed + 2),
        relu_layer(trials, seed + 3),
        sigmoid_bce(trials, seed + 4),
    ]
}
