use super::{expect_rank, expect_shape, Result, Scalar, Tensor, TensorError};

/// Gradients produced by [`conv2d_backward`].
#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

struct Geometry {
    h: usize,
    w: usize,
    c: usize,
    kh: usize,
    kw: usize,
    f: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn patch_len(&self) -> usize {
        self.kh * self.kw * self.c
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }
}

fn geometry<T: Scalar>(
    op: &'static str,
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Geometry> {
    expect_rank(op, input.shape(), 3)?;
    expect_rank(op, weights.shape(), 4)?;
    let (h, w, c) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (kh, kw, wc, f) = (
        weights.shape()[0],
        weights.shape()[1],
        weights.shape()[2],
        weights.shape()[3],
    );
    if wc != c {
        return Err(TensorError::ShapeMismatch {
            op,
            dim: "input channels",
            got: c,
            expected: wc,
        });
    }
    expect_shape(op, bias.shape(), &[f])?;
    if h < kh || w < kw {
        return Err(TensorError::TooSmall {
            op,
            height: h,
            width: w,
            kernel_h: kh,
            kernel_w: kw,
        });
    }
    Ok(Geometry {
        h,
        w,
        c,
        kh,
        kw,
        f,
        oh: h - kh + 1,
        ow: w - kw + 1,
    })
}

/// Unfolds every `kh x kw x C` window into one row of a `(oh*ow) x (kh*kw*C)`
/// matrix. Column order matches the `(kh, kw, C, F)` weight layout.
fn im2col<T: Scalar>(g: &Geometry, input: &[T]) -> Vec<T> {
    let k = g.patch_len();
    let run = g.kw * g.c;
    let mut cols = vec![T::zero(); g.positions() * k];
    for i in 0..g.oh {
        for j in 0..g.ow {
            let row = &mut cols[(i * g.ow + j) * k..][..k];
            for a in 0..g.kh {
                let src = ((i + a) * g.w + j) * g.c;
                row[a * run..(a + 1) * run].copy_from_slice(&input[src..src + run]);
            }
        }
    }
    cols
}

fn col2im<T: Scalar>(g: &Geometry, cols: &[T]) -> Vec<T> {
    let k = g.patch_len();
    let run = g.kw * g.c;
    let mut out = vec![T::zero(); g.h * g.w * g.c];
    for i in 0..g.oh {
        for j in 0..g.ow {
            let row = &cols[(i * g.ow + j) * k..][..k];
            for a in 0..g.kh {
                let dst = ((i + a) * g.w + j) * g.c;
                for (o, &v) in out[dst..dst + run]
                    .iter_mut()
                    .zip(&row[a * run..(a + 1) * run])
                {
                    *o = *o + v;
                }
            }
        }
    }
    out
}

/// Valid (unpadded), stride-1 convolution of an `H x W x C` input with
/// `(kh, kw, C, F)` weights, producing `(H-kh+1) x (W-kw+1) x F`.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let g = geometry("conv2d_forward", input, weights, bias)?;
    let cols = im2col(&g, input.data());
    let p = g.positions();
    let k = g.patch_len();
    let mut out = Vec::with_capacity(p * g.f);
    for _ in 0..p {
        out.extend_from_slice(bias.data());
    }
    T::gemm(
        p,
        k,
        g.f,
        &cols,
        k as isize,
        1,
        weights.data(),
        g.f as isize,
        1,
        T::one(),
        &mut out,
        g.f as isize,
        1,
    );
    Tensor::from_vec(&[g.oh, g.ow, g.f], out)
}

fn param_grads<T: Scalar>(
    g: &Geometry,
    cols: &[T],
    upstream: &Tensor<T>,
) -> (Tensor<T>, Tensor<T>) {
    let p = g.positions();
    let k = g.patch_len();
    let mut dw = vec![T::zero(); k * g.f];
    T::gemm(
        k,
        p,
        g.f,
        cols,
        1,
        k as isize,
        upstream.data(),
        g.f as isize,
        1,
        T::zero(),
        &mut dw,
        g.f as isize,
        1,
    );
    let mut db = vec![T::zero(); g.f];
    for row in upstream.data().chunks_exact(g.f) {
        for (b, &u) in db.iter_mut().zip(row) {
            *b = *b + u;
        }
    }
    (
        Tensor {
            shape: vec![g.kh, g.kw, g.c, g.f],
            data: dw,
        },
        Tensor {
            shape: vec![g.f],
            data: db,
        },
    )
}

fn check_upstream<T: Scalar>(op: &'static str, g: &Geometry, upstream: &Tensor<T>) -> Result<()> {
    expect_shape(op, upstream.shape(), &[g.oh, g.ow, g.f])
}

/// Gradients of a scalar loss w.r.t. input, weights and bias given the
/// loss gradient w.r.t. the forward output.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let g = geometry("conv2d_backward", input, weights, bias)?;
    check_upstream("conv2d_backward", &g, upstream)?;
    let cols = im2col(&g, input.data());
    let (dw, db) = param_grads(&g, &cols, upstream);
    drop(cols);

    let p = g.positions();
    let k = g.patch_len();
    let mut dcols = vec![T::zero(); p * k];
    T::gemm(
        p,
        g.f,
        k,
        upstream.data(),
        g.f as isize,
        1,
        weights.data(),
        1,
        g.f as isize,
        T::zero(),
        &mut dcols,
        k as isize,
        1,
    );
    let dx = col2im(&g, &dcols);
    Ok(ConvGrads {
        input: Tensor {
            shape: vec![g.h, g.w, g.c],
            data: dx,
        },
        weights: dw,
        bias: db,
    })
}

/// Weight and bias gradients only; used for the first layer, whose input
/// gradient is never consumed.
pub fn conv2d_param_grads<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let g = geometry("conv2d_backward", input, weights, bias)?;
    check_upstream("conv2d_backward", &g, upstream)?;
    let cols = im2col(&g, input.data());
    Ok(param_grads(&g, &cols, upstream))
}
