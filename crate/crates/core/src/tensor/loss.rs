use super::Scalar;

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

fn clamp<T: Scalar>(p: T) -> T {
    let eps = T::from_f64(BCE_CLAMP);
    p.max(eps).min(T::one() - eps)
}

/// Binary cross-entropy of probability `p` against label `y` in {0, 1}.
pub fn bce_loss<T: Scalar>(p: T, y: T) -> T {
    let p = clamp(p);
    -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
}

/// `dL/dp`, evaluated at the clamped probability so saturated but wrong
/// predictions still receive a gradient.
pub fn bce_grad<T: Scalar>(p: T, y: T) -> T {
    let p = clamp(p);
    -y / p + (T::one() - y) / (T::one() - p)
}
