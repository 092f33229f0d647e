//! Dense weighted least squares through the normal equations.

/// Pivot of the Cholesky factorization fell below the rank threshold at this column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RankDeficient(pub usize);

/// Relative pivot threshold for declaring a design rank deficient.
pub(crate) const PIVOT_TOLERANCE: f64 = 1e-10;

/// In-place Cholesky factorization of a symmetric positive definite `p x p` matrix
/// (row-major). Only the lower triangle is read and written.
pub(crate) fn cholesky(a: &mut [f64], p: usize) -> Result<(), RankDeficient> {
    let max_diag = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max);
    let threshold = PIVOT_TOLERANCE * max_diag.max(f64::MIN_POSITIVE);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if d <= threshold {
            return Err(RankDeficient(j));
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in (j + 1)..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    Ok(())
}

/// Solves `L L^T x = b` given the factor from [`cholesky`].
pub(crate) fn cholesky_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in (i + 1)..p {
            s -= l[k * p + i] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}

/// Accumulates `X^T W X` and `X^T W y` for column-major design columns.
pub(crate) fn normal_equations(
    columns: &[&[f64]],
    y: &[f64],
    weights: Option<&[f64]>,
) -> (Vec<f64>, Vec<f64>) {
    let p = columns.len();
    let n = y.len();
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    let mut row = vec![0.0; p];
    for r in 0..n {
        let w = weights.map_or(1.0, |w| w[r]);
        if w == 0.0 {
            continue;
        }
        for (j, col) in columns.iter().enumerate() {
            row[j] = col[r];
        }
        for i in 0..p {
            let wi = w * row[i];
            xty[i] += wi * y[r];
            for j in 0..=i {
                xtx[i * p + j] += wi * row[j];
            }
        }
    }
    (xtx, xty)
}

/// Weighted least squares solution. Columns must already include the intercept.
pub(crate) fn solve_wls(
    columns: &[&[f64]],
    y: &[f64],
    weights: Option<&[f64]>,
) -> Result<Vec<f64>, RankDeficient> {
    let p = columns.len();
    let (mut xtx, mut xty) = normal_equations(columns, y, weights);
    cholesky(&mut xtx, p)?;
    cholesky_solve(&xtx, p, &mut xty);
    Ok(xty)
}
