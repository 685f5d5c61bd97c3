use super::{expect_shape, Result, Scalar, Tensor};

/// RMSprop hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            rho: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// Running mean of squared gradients, one accumulator per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T = f32> {
    pub config: RmsProp,
    accumulators: Vec<Tensor<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new<'a>(config: RmsProp, params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        Self {
            config,
            accumulators: params
                .into_iter()
                .map(|p| Tensor::zeros(p.shape()))
                .collect(),
        }
    }

    pub fn accumulators(&self) -> &[Tensor<T>] {
        &self.accumulators
    }

    /// One update over every parameter tensor, in order:
    /// `v = rho*v + (1-rho)*g^2`, `theta -= lr * g / (sqrt(v) + eps)`.
    pub fn step<'a>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Tensor<T>>,
        grads: &[Tensor<T>],
    ) -> Result<()> {
        let params: Vec<&mut Tensor<T>> = params.into_iter().collect();
        if params.len() != self.accumulators.len() || grads.len() != params.len() {
            return Err(super::TensorError::ShapeMismatch {
                op: "rmsprop_step",
                dim: "tensor count",
                got: grads.len().min(params.len()),
                expected: self.accumulators.len(),
            });
        }
        for ((p, g), v) in params.iter().zip(grads).zip(&self.accumulators) {
            expect_shape("rmsprop_step", p.shape(), v.shape())?;
            expect_shape("rmsprop_step", g.shape(), v.shape())?;
        }
        let rho = T::from_f64(self.config.rho);
        let keep = T::one() - rho;
        let lr = T::from_f64(self.config.learning_rate);
        let eps = T::from_f64(self.config.epsilon);
        for ((p, g), v) in params.into_iter().zip(grads).zip(&mut self.accumulators) {
            for ((theta, &gv), acc) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                *acc = rho * *acc + keep * gv * gv;
                *theta = *theta - lr * gv / (acc.sqrt() + eps);
            }
        }
        Ok(())
    }
}
