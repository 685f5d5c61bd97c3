use super::{expect_rank, expect_shape, Result, Scalar, Tensor};

/// `out = input^T W + bias` for a 1-D input and `(in, out)` weights.
pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    const OP: &str = "dense_forward";
    let (n_in, n_out) = dims(OP, input, weights, bias)?;
    let mut out = bias.data().to_vec();
    T::gemm(
        1,
        n_in,
        n_out,
        input.data(),
        n_in as isize,
        1,
        weights.data(),
        n_out as isize,
        1,
        T::one(),
        &mut out,
        n_out as isize,
        1,
    );
    Tensor::from_vec(&[n_out], out)
}

fn dims<T: Scalar>(
    op: &'static str,
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(usize, usize)> {
    expect_rank(op, weights.shape(), 2)?;
    let (n_in, n_out) = (weights.shape()[0], weights.shape()[1]);
    expect_shape(op, input.shape(), &[n_in])?;
    expect_shape(op, bias.shape(), &[n_out])?;
    Ok((n_in, n_out))
}

/// Returns `(input_grad, weight_grad, bias_grad)`.
pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    const OP: &str = "dense_backward";
    let (n_in, n_out) = dims(OP, input, weights, bias)?;
    expect_shape(OP, upstream.shape(), &[n_out])?;
    let x = input.data();
    let u = upstream.data();

    let mut dw = Vec::with_capacity(n_in * n_out);
    for &xi in x {
        dw.extend(u.iter().map(|&uj| xi * uj));
    }

    let mut dx = vec![T::zero(); n_in];
    T::gemm(
        1,
        n_out,
        n_in,
        u,
        n_out as isize,
        1,
        weights.data(),
        1,
        n_out as isize,
        T::zero(),
        &mut dx,
        n_in as isize,
        1,
    );
    Ok((
        Tensor::from_vec(&[n_in], dx)?,
        Tensor::from_vec(&[n_in, n_out], dw)?,
        upstream.clone(),
    ))
}
