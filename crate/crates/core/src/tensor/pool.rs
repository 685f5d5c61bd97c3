use super::{expect_rank, expect_shape, Result, Scalar, Tensor, TensorError};

/// Winning input offsets recorded by [`maxpool2d_forward`], one per output cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// Non-overlapping `pool x pool` max pooling with stride `pool`. Trailing
/// rows/columns that do not fill a window are dropped. Ties go to the first
/// index in row-major window order.
pub fn maxpool2d_forward<T: Scalar>(
    input: &Tensor<T>,
    pool: usize,
) -> Result<(Tensor<T>, PoolIndices)> {
    const OP: &str = "maxpool2d_forward";
    expect_rank(OP, input.shape(), 3)?;
    let (h, w, c) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if pool == 0 || h < pool || w < pool {
        return Err(TensorError::TooSmall {
            op: OP,
            height: h,
            width: w,
            kernel_h: pool,
            kernel_w: pool,
        });
    }
    let (oh, ow) = (h / pool, w / pool);
    let x = input.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut argmax = Vec::with_capacity(oh * ow * c);
    for i in 0..oh {
        for j in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((i * pool) * w + j * pool) * c + ch;
                let mut best = x[best_idx];
                for a in 0..pool {
                    for b in 0..pool {
                        let idx = ((i * pool + a) * w + j * pool + b) * c + ch;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    let output_shape = vec![oh, ow, c];
    Ok((
        Tensor::from_vec(&output_shape, out)?,
        PoolIndices {
            input_shape: input.shape().to_vec(),
            output_shape,
            argmax,
        },
    ))
}

/// Routes each upstream gradient to the input position that won its window.
pub fn maxpool2d_backward<T: Scalar>(
    indices: &PoolIndices,
    upstream: &Tensor<T>,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    const OP: &str = "maxpool2d_backward";
    expect_shape(OP, input_shape, &indices.input_shape)?;
    expect_shape(OP, upstream.shape(), &indices.output_shape)?;
    let mut grad = Tensor::zeros(input_shape);
    let g = grad.data_mut();
    for (&idx, &u) in indices.argmax.iter().zip(upstream.data()) {
        g[idx] = g[idx] + u;
    }
    Ok(grad)
}
