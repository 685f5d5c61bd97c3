use super::{LimeError, LimeExplanation, PerturbationSample};
use crate::linalg::weighted_ridge;

/// Fits `g(z) = b + w . z` by weighted ridge regression (intercept not
/// penalized), keeps the `k` largest-magnitude coefficients, and refits on
/// that support. The reported fidelity is the weighted R^2 of the final fit.
pub fn fit_surrogate(
    samples: &[PerturbationSample],
    ridge: f64,
    k: usize,
) -> Result<LimeExplanation, LimeError> {
    let m = samples
        .first()
        .map(|s| s.mask.len())
        .ok_or(LimeError::TooFewSamples { got: 0, needed: 2 })?;
    if samples.len() < m + 1 {
        return Err(LimeError::TooFewSamples {
            got: samples.len(),
            needed: m + 1,
        });
    }
    if let Some(bad) = samples.iter().find(|s| s.mask.len() != m) {
        return Err(LimeError::MaskLength {
            got: bad.mask.len(),
            expected: m,
        });
    }
    if !samples.iter().any(|s| s.mask.iter().all(|&b| b)) {
        return Err(LimeError::MissingReference);
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(LimeError::InvalidConfig(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    if k == 0 || k > m {
        return Err(LimeError::InvalidConfig(format!(
            "kept features must be in 1..={m}, got {k}"
        )));
    }
    if samples
        .iter()
        .any(|s| !s.weight.is_finite() || s.weight < 0.0 || !s.prediction.is_finite())
    {
        return Err(LimeError::InvalidConfig(
            "weights and predictions must be finite, weights >= 0".into(),
        ));
    }

    let all: Vec<usize> = (0..m).collect();
    let (mut weights, mut intercept) = fit_on(samples, &all, ridge)?;
    if k < m {
        let mut order = all.clone();
        order.sort_by(|&a, &b| {
            weights[b]
                .abs()
                .total_cmp(&weights[a].abs())
                .then(a.cmp(&b))
        });
        let mut support = order[..k].to_vec();
        support.sort_unstable();
        (weights, intercept) = fit_on(samples, &support, ridge)?;
    }

    let wsum: f64 = samples.iter().map(|s| s.weight).sum();
    let ybar = samples.iter().map(|s| s.weight * s.prediction).sum::<f64>() / wsum;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for s in samples {
        let g = intercept + dot(&weights, &s.mask);
        ss_res += s.weight * (s.prediction - g).powi(2);
        ss_tot += s.weight * (s.prediction - ybar).powi(2);
    }
    let fidelity = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };

    Ok(LimeExplanation {
        segment_weights: weights,
        intercept,
        local_fidelity: fidelity,
        kept: k,
        seed: None,
    })
}

fn dot(w: &[f64], mask: &[bool]) -> f64 {
    w.iter().zip(mask).filter(|(_, &z)| z).map(|(w, _)| w).sum()
}

/// Ridge fit restricted to `support`; features are centered by their
/// weighted means so the intercept is not shrunk.
fn fit_on(
    samples: &[PerturbationSample],
    support: &[usize],
    ridge: f64,
) -> Result<(Vec<f64>, f64), LimeError> {
    let m = samples[0].mask.len();
    let wsum: f64 = samples.iter().map(|s| s.weight).sum();
    if wsum.is_nan() || wsum <= 0.0 {
        return Err(LimeError::Singular);
    }
    let xbar: Vec<f64> = support
        .iter()
        .map(|&j| {
            samples
                .iter()
                .filter(|s| s.mask[j])
                .map(|s| s.weight)
                .sum::<f64>()
                / wsum
        })
        .collect();
    let ybar = samples.iter().map(|s| s.weight * s.prediction).sum::<f64>() / wsum;
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            support
                .iter()
                .zip(&xbar)
                .map(|(&j, &mu)| f64::from(u8::from(s.mask[j])) - mu)
                .collect()
        })
        .collect();
    let y: Vec<f64> = samples.iter().map(|s| s.prediction - ybar).collect();
    let w: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    let beta =
        weighted_ridge(&rows, &y, &w, support.len(), ridge).map_err(|_| LimeError::Singular)?;
    let mut full = vec![0.0; m];
    for (&j, &b) in support.iter().zip(&beta) {
        full[j] = b;
    }
    let intercept = ybar - beta.iter().zip(&xbar).map(|(b, mu)| b * mu).sum::<f64>();
    Ok((full, intercept))
}
