use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Largest admissible |β| on standardized inputs.
    pub separation_limit: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-8, separation_limit: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Intercept first, then one coefficient per feature.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub n: usize,
    /// Number of non-intercept parameters.
    pub k: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood at the start and after every accepted step.
    pub ll_history: Vec<f64>,
    /// Inverse observed information at the optimum, row-major.
    pub covariance: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Bernoulli log-likelihood of linear predictor `eta`, computed stably.
fn log_likelihood(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &t)| {
            // log(1 + exp(e)) without overflow
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            t * e - softplus
        })
        .sum()
}

fn design(x: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols() + 1, |r, c| if c == 0 { 1.0 } else { x.get(r, c - 1) })
}

fn information(d: &DMatrix<f64>, eta: &[f64]) -> DMatrix<f64> {
    let p = d.ncols();
    let mut info = DMatrix::zeros(p, p);
    for (r, &e) in eta.iter().enumerate() {
        let mu = sigmoid(e);
        let w = mu * (1.0 - mu);
        for i in 0..p {
            let a = d[(r, i)] * w;
            for j in 0..=i {
                info[(i, j)] += a * d[(r, j)];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            info[(j, i)] = info[(i, j)];
        }
    }
    info
}

fn invert(info: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let scale = info.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let inv = info.clone().cholesky().map(|c| c.inverse()).or_else(|| info.try_inverse())?;
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Newton-Raphson (IRLS) maximum likelihood with step halving. Returns
/// [`Error::QuasiSeparation`] when a coefficient leaves
/// `[-separation_limit, separation_limit]`.
pub fn fit_logistic(x: &Matrix, y: &[bool], config: &LogisticConfig) -> Result<LogisticModel> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::InvalidArgument("label count differs from row count".into()));
    }
    let positives = y.iter().filter(|&&b| b).count();
    if positives == 0 || positives == n {
        return Err(Error::InvalidArgument("logistic regression needs both classes".into()));
    }
    let d = design(x);
    let p = d.ncols();
    let yv: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
    let mut beta = DVector::zeros(p);
    let mut eta = vec![0.0; n];
    let mut ll = log_likelihood(&eta, &yv);
    let mut ll_history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let separation = |beta: &DVector<f64>| -> Error {
        let (feature, _) = beta.iter().enumerate().fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        Error::QuasiSeparation { limit: config.separation_limit, feature, coefficients: beta.iter().copied().collect() }
    };
    while iterations < config.max_iter {
        iterations += 1;
        let info = information(&d, &eta);
        let score = DVector::from_fn(p, |j, _| (0..n).map(|r| d[(r, j)] * (yv[r] - sigmoid(eta[r]))).sum());
        let Some(inv) = invert(info) else {
            if ll > -1e-6 * n as f64 {
                return Err(separation(&beta));
            }
            return Err(Error::Singular);
        };
        let mut step = inv * score;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &beta + &step;
            let cand_eta: Vec<f64> = (d.clone() * &cand).iter().copied().collect();
            let cand_ll = log_likelihood(&cand_eta, &yv);
            if cand_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = Some((cand, cand_eta, cand_ll.max(ll)));
                break;
            }
            step /= 2.0;
        }
        let Some((cand, cand_eta, cand_ll)) = accepted else {
            converged = true;
            break;
        };
        let delta = step.amax();
        beta = cand;
        eta = cand_eta;
        ll = cand_ll;
        ll_history.push(ll);
        if beta.iter().any(|b| b.abs() > config.separation_limit) {
            return Err(separation(&beta));
        }
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    let cov = invert(information(&d, &eta)).ok_or(Error::Singular)?;
    let std_errors = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    Ok(LogisticModel {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        log_likelihood: ll,
        n,
        k: p - 1,
        iterations,
        converged,
        ll_history,
        covariance: cov.transpose().iter().copied().collect(),
    })
}

impl LogisticModel {
    /// Scoring-only model from the coefficients reached when a fit stopped
    /// on quasi-separation. It carries no standard errors and is marked
    /// unconverged, so inference on it is refused.
    pub fn from_separated(x: &Matrix, y: &[bool], coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != x.ncols() + 1 || y.len() != x.nrows() {
            return Err(Error::SchemaMismatch { expected: x.ncols() + 1, got: coefficients.len() });
        }
        let mut m = LogisticModel {
            coefficients,
            std_errors: vec![],
            log_likelihood: 0.0,
            n: x.nrows(),
            k: x.ncols(),
            iterations: 0,
            converged: false,
            ll_history: vec![],
            covariance: vec![],
        };
        let eta = m.linear_predictor(x)?;
        let t: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
        m.log_likelihood = log_likelihood(&eta, &t);
        Ok(m)
    }

    pub fn linear_predictor(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.k {
            return Err(Error::SchemaMismatch { expected: self.k, got: x.ncols() });
        }
        Ok(x.rows_iter()
            .map(|row| self.coefficients[0] + row.iter().zip(&self.coefficients[1..]).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.linear_predictor(x)?.into_iter().map(sigmoid).collect())
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * (self.k + 1) + j]
    }
}
