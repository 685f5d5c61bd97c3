//! Small dense solves for the explainers' least-squares problems.

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("linear system is singular to working precision")]
pub struct Singular;

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is `n x n` row-major; on success `b` holds `x`.
pub fn solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<(), Singular> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return if n == 0 { Ok(()) } else { Err(Singular) };
    }
    let tol = scale * 1e-13 * n as f64;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col].abs() <= tol {
            return Err(Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(())
}

/// Minimizes `sum_i w_i (y_i - x_i . beta)^2 + ridge * |beta|^2` over rows
/// `x_i` of length `p` via the normal equations.
pub fn weighted_ridge(
    rows: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    p: usize,
    ridge: f64,
) -> Result<Vec<f64>, Singular> {
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for ((x, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for a in 0..p {
            let wx = wi * x[a];
            if wx == 0.0 {
                continue;
            }
            rhs[a] += wx * yi;
            for b in a..p {
                gram[a * p + b] += wx * x[b];
            }
        }
    }
    for a in 0..p {
        gram[a * p + a] += ridge;
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
    }
    solve(&mut gram, &mut rhs, p)?;
    Ok(rhs)
}
