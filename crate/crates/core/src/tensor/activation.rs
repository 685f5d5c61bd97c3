use super::{expect_shape, Result, Scalar, Tensor};

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes `upstream` where the forward input was strictly positive; the
/// subgradient at zero is taken as zero.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    expect_shape("relu_backward", upstream.shape(), x.shape())?;
    let mut g = upstream.clone();
    for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
        if xv <= T::zero() {
            *gv = T::zero();
        }
    }
    Ok(g)
}

/// Logistic function evaluated through `exp(-|x|)` so it never overflows.
/// The result is kept strictly inside (0, 1) even where the exact value
/// rounds to an endpoint.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    let e = (-x.abs()).exp();
    let s = if x >= T::zero() {
        T::one() / (T::one() + e)
    } else {
        e / (T::one() + e)
    };
    let upper = T::one() - T::epsilon() / (T::one() + T::one());
    s.max(T::min_positive_value()).min(upper)
}

/// Derivative expressed through the forward output `s`.
pub fn sigmoid_backward<T: Scalar>(s: T) -> T {
    s * (T::one() - s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_values_and_kink() {
        let x = Tensor::<f32>::from_vec(&[3], vec![-1.0, 2.5, 0.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 2.5, 0.0]);
        let g = relu_backward(&x, &Tensor::filled(&[3], 1.0)).unwrap();
        assert_eq!(g.data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(sigmoid_backward(sigmoid(0.0f64)), 0.25);
        let lo = sigmoid(-1000.0f32);
        assert!(lo > 0.0 && lo.is_finite());
        let hi = sigmoid(1000.0f32);
        assert!(hi < 1.0 && hi.is_finite());
        assert!(sigmoid(1000.0f64) < 1.0);
    }

    #[test]
    fn sigmoid_symmetry() {
        for &x in &[0.1f64, 1.0, 5.0, 20.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }
}
