//! Binary logistic regression fitted by iteratively reweighted least squares.
//!
//! Each IRLS step is a Newton step on the Bernoulli log-likelihood with the
//! logit link:
//!
//! ```text
//! p      = 1 / (1 + exp(-X b))
//! W      = diag(p (1 - p))
//! b_new  = b + (X' W X)^-1 X' (y - p)
//! ```
//!
//! Standard errors are the square roots of the diagonal of `(X' W X)^-1`
//! evaluated at the final coefficients.

use serde::Serialize;

use super::linalg::{mat_vec, spd_inverse, Matrix};
use super::ScreeningError;
use crate::dataset::Dataset;

/// Name given to the intercept term in fits and Wald tables.
pub const INTERCEPT: &str = "constant";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub max_iter: usize,
    /// Convergence when the largest absolute coefficient change is below this.
    pub tol: f64,
    /// Any `|B_j|` above this is reported as quasi-separation.
    pub separation_bound: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-8,
            separation_bound: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "warning", rename_all = "kebab-case")]
pub enum FitWarning {
    NotConverged { iterations: usize },
    QuasiSeparation { term: String, coefficient: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    /// Explanatory variables in design order (intercept excluded).
    pub variables: Vec<String>,
    /// Intercept first, then one coefficient per variable.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    pub warnings: Vec<FitWarning>,
}

impl LogisticFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    /// `(name, B, SE)` for the variables, then the intercept.
    pub fn terms(&self) -> Vec<(&str, f64, f64)> {
        let mut out: Vec<(&str, f64, f64)> = self
            .variables
            .iter()
            .enumerate()
            .map(|(j, v)| (v.as_str(), self.coefficients[j + 1], self.std_errors[j + 1]))
            .collect();
        out.push((INTERCEPT, self.coefficients[0], self.std_errors[0]));
        out
    }

    pub fn separated(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, FitWarning::QuasiSeparation { .. }))
    }
}

/// Builds the design matrix (leading intercept column) and the 0/1 response.
pub fn design(data: &Dataset, variables: &[String]) -> Result<(Matrix, Vec<f64>), ScreeningError> {
    let columns = variables
        .iter()
        .map(|v| data.column(v))
        .collect::<Result<Vec<_>, _>>()?;
    let y: Vec<f64> = data.binary_targets()?.into_iter().map(f64::from).collect();
    let x = (0..data.n())
        .map(|i| {
            let mut row = Vec::with_capacity(variables.len() + 1);
            row.push(1.0);
            row.extend(columns.iter().map(|c| c[i]));
            row
        })
        .collect();
    Ok((x, y))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(eta))` without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood `sum(y eta - log(1 + exp(eta)))`.
pub fn log_likelihood(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = dot(row, beta);
            yi * eta - softplus(eta)
        })
        .sum()
}

/// Score vector `X' (y - p)`.
pub fn gradient(x: &Matrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for (row, &yi) in x.iter().zip(y) {
        let r = yi - sigmoid(dot(row, beta));
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    g
}

/// Observed information `X' W X`.
pub fn information(x: &Matrix, beta: &[f64]) -> Matrix {
    let p = beta.len();
    let mut info = vec![vec![0.0; p]; p];
    for row in x {
        let mu = sigmoid(dot(row, beta));
        let w = mu * (1.0 - mu);
        if w == 0.0 {
            continue;
        }
        for i in 0..p {
            let wi = w * row[i];
            for j in 0..=i {
                info[i][j] += wi * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            info[j][i] = info[i][j];
        }
    }
    info
}

/// IRLS on an explicit design matrix. `names` labels the columns after the
/// intercept and must have `x[0].len() - 1` entries.
pub fn fit_irls(x: &Matrix, y: &[f64], names: &[String], opts: &LogisticOptions) -> Result<LogisticFit, ScreeningError> {
    let p = names.len() + 1;
    if x.len() <= p {
        return Err(ScreeningError::TooFewRows { rows: x.len(), terms: p });
    }
    let mut beta = vec![0.0; p];
    let mut ll = log_likelihood(x, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    let mut warnings = Vec::new();

    while iterations < opts.max_iter {
        iterations += 1;
        let info = information(x, &beta);
        let inv = spd_inverse(&info).ok_or_else(|| singular(names, &info))?;
        let step = mat_vec(&inv, &gradient(x, y, &beta));

        // Newton steps on this objective rarely overshoot; halve if one does.
        let mut scale = 1.0;
        let mut candidate: Vec<f64>;
        let mut candidate_ll;
        loop {
            candidate = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            candidate_ll = log_likelihood(x, y, &candidate);
            if candidate_ll >= ll - 1e-12 * ll.abs().max(1.0) || scale < 1e-6 {
                break;
            }
            scale *= 0.5;
        }
        let change = beta
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = candidate;
        ll = candidate_ll;

        if let Some(j) = beta.iter().position(|b| b.abs() > opts.separation_bound) {
            let term = if j == 0 { INTERCEPT.to_string() } else { names[j - 1].clone() };
            warnings.push(FitWarning::QuasiSeparation { term, coefficient: beta[j] });
            break;
        }
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged && warnings.is_empty() {
        warnings.push(FitWarning::NotConverged { iterations });
    }

    let info = information(x, &beta);
    let std_errors = match spd_inverse(&info) {
        Some(inv) => (0..p).map(|j| inv[j][j].sqrt()).collect(),
        // separated fits can leave the information numerically singular
        None if !warnings.is_empty() => vec![f64::INFINITY; p],
        None => return Err(singular(names, &info)),
    };

    Ok(LogisticFit {
        variables: names.to_vec(),
        coefficients: beta,
        std_errors,
        iterations,
        converged,
        log_likelihood: ll,
        warnings,
    })
}

fn singular(names: &[String], info: &Matrix) -> ScreeningError {
    // name a zero-information column when there is one, for the diagnostic
    let culprit = info
        .iter()
        .enumerate()
        .skip(1)
        .find(|(j, row)| row[*j] <= 0.0)
        .map(|(j, _)| names[j - 1].clone());
    ScreeningError::Singular { variable: culprit }
}

/// Joint fit of `variables` plus an intercept on `data`.
pub fn fit_logistic(data: &Dataset, variables: &[String], opts: &LogisticOptions) -> Result<LogisticFit, ScreeningError> {
    let (x, y) = design(data, variables)?;
    fit_irls(&x, &y, variables, opts)
}

/// One intercept-plus-variable fit per variable, in input order.
pub fn fit_per_variable(
    data: &Dataset,
    variables: &[String],
    opts: &LogisticOptions,
) -> Result<Vec<LogisticFit>, ScreeningError> {
    variables
        .iter()
        .map(|v| fit_logistic(data, std::slice::from_ref(v), opts))
        .collect()
}
