//! Small dense symmetric solves for the IRLS normal equations.

/// Row-major square matrix.
pub type Matrix = Vec<Vec<f64>>;

/// Pivots of the unit-diagonal rescaled matrix below this are treated as zero.
const PIVOT_TOL: f64 = 1e-12;

/// Inverse of a symmetric positive definite matrix.
///
/// The matrix is first rescaled to unit diagonal so the singularity test does
/// not depend on column units (income in currency next to a 0/1 flag).
/// Returns `None` when the matrix is not numerically positive definite.
pub fn spd_inverse(a: &Matrix) -> Option<Matrix> {
    let p = a.len();
    let mut scale = vec![0.0; p];
    for i in 0..p {
        let d = a[i][i];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        scale[i] = 1.0 / d.sqrt();
    }
    let scaled: Matrix = (0..p)
        .map(|i| (0..p).map(|j| a[i][j] * scale[i] * scale[j]).collect())
        .collect();
    let l = cholesky(&scaled)?;

    // inv(C) column by column from L L^T x = e_k
    let mut inv = vec![vec![0.0; p]; p];
    let mut e = vec![0.0; p];
    for k in 0..p {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[k] = 1.0;
        let x = cholesky_solve(&l, &e);
        for i in 0..p {
            inv[i][k] = x[i];
        }
    }
    for i in 0..p {
        for j in 0..p {
            inv[i][j] *= scale[i] * scale[j];
        }
    }
    // symmetrize away rounding
    for i in 0..p {
        for j in (i + 1)..p {
            let m = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = m;
            inv[j][i] = m;
        }
    }
    Some(inv)
}

fn cholesky(a: &Matrix) -> Option<Matrix> {
    let p = a.len();
    let mut l = vec![vec![0.0; p]; p];
    for j in 0..p {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > PIVOT_TOL) {
            return None;
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in (j + 1)..p {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let p = l.len();
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in (i + 1)..p {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

pub fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}
