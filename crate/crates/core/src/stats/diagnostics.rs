use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::effect::{normal_two_sided_p, z_quantile};
use crate::error::{Error, Result};
use crate::learners::{fit_logistic, sigmoid, LogisticConfig, LogisticModel};
use crate::matrix::Matrix;

pub const VIF_LIMIT: f64 = 10.0;
const BOX_TIDWELL_SHIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrTest {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoR2 {
    pub tjur: f64,
    pub cox_snell: f64,
    pub nagelkerke: f64,
    pub adj_mcfadden: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: f64,
    pub p_value: f64,
    /// Absent for the intercept.
    pub vif: Option<f64>,
    pub odds_ratio: f64,
    pub or_ci_low: f64,
    pub or_ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityTerm {
    pub feature: String,
    pub estimate: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierTest {
    pub row: usize,
    pub rstudent: f64,
    pub p_unadjusted: f64,
    pub p_bonferroni: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrDiagnostics {
    pub n: usize,
    pub k: usize,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub llr: LlrTest,
    pub pseudo_r2: PseudoR2,
    pub coefficients: Vec<CoefficientRow>,
    pub vif_flagged: Vec<String>,
    pub linearity: Vec<LinearityTerm>,
    pub outlier: OutlierTest,
    /// Confidence level of the odds-ratio intervals.
    pub or_level: f64,
}

pub fn llr_test(ll: f64, ll0: f64, df: usize) -> LlrTest {
    let chi2 = (2.0 * (ll - ll0)).max(0.0);
    let p_value = if df == 0 { 1.0 } else { ChiSquared::new(df as f64).expect("df > 0").sf(chi2) };
    LlrTest { chi2, df, p_value }
}

pub fn tjur(y: &[bool], p: &[f64]) -> f64 {
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &pi) in y.iter().zip(p) {
        if t {
            s1 += pi;
            n1 += 1.0;
        } else {
            s0 += pi;
            n0 += 1.0;
        }
    }
    s1 / n1 - s0 / n0
}

pub fn pseudo_r2(ll: f64, ll0: f64, n: usize, k: usize, y: &[bool], p: &[f64]) -> PseudoR2 {
    let n = n as f64;
    let cox_snell = 1.0 - (2.0 * (ll0 - ll) / n).exp();
    let nagelkerke = cox_snell / (1.0 - (2.0 * ll0 / n).exp());
    let adj_mcfadden = if k == 0 { 0.0 } else { 1.0 - (ll - k as f64) / ll0 };
    PseudoR2 { tjur: tjur(y, p), cox_snell, nagelkerke, adj_mcfadden }
}

/// `1 / (1 - R²_j)` from regressing each column on the others plus an
/// intercept.
pub fn vif(x: &Matrix) -> Result<Vec<f64>> {
    let (n, k) = (x.nrows(), x.ncols());
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        if k == 1 {
            out.push(1.0);
            continue;
        }
        let others: Vec<usize> = (0..k).filter(|&c| c != j).collect();
        let d = DMatrix::from_fn(n, k, |r, c| if c == 0 { 1.0 } else { x.get(r, others[c - 1]) });
        let target = DVector::from_iterator(n, x.column(j));
        let beta = (d.transpose() * &d).cholesky().ok_or(Error::Singular)?.solve(&(d.transpose() * &target));
        let fitted = &d * beta;
        let mean = target.mean();
        let ss_res: f64 = target.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        let ss_tot: f64 = target.iter().map(|a| (a - mean).powi(2)).sum();
        let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
        out.push(if r2 >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - r2) });
    }
    Ok(out)
}

/// Studentized deviance residuals `sign(r_D) sqrt(r_D² + h r_P² / (1 - h))`.
pub fn rstudent(model: &LogisticModel, x: &Matrix, y: &[bool]) -> Result<Vec<f64>> {
    let eta = model.linear_predictor(x)?;
    let p1 = model.k + 1;
    let mut out = Vec::with_capacity(y.len());
    for (r, (&e, &t)) in eta.iter().zip(y).enumerate() {
        let mu = sigmoid(e);
        let w = mu * (1.0 - mu);
        let row: Vec<f64> = std::iter::once(1.0).chain(x.row(r).iter().copied()).collect();
        let mut q = 0.0;
        for i in 0..p1 {
            for j in 0..p1 {
                q += row[i] * model.covariance(i, j) * row[j];
            }
        }
        let h = (w * q).clamp(0.0, 1.0 - 1e-12);
        let yv = f64::from(u8::from(t));
        let dev = if t { -2.0 * mu.ln() } else { -2.0 * (1.0 - mu).ln() };
        let r_d = (yv - mu).signum() * dev.max(0.0).sqrt();
        let r_p = (yv - mu) / w.sqrt().max(1e-300);
        out.push(r_d.signum() * (r_d * r_d + h * r_p * r_p / (1.0 - h)).sqrt());
    }
    Ok(out)
}

pub fn outlier_test(model: &LogisticModel, x: &Matrix, y: &[bool]) -> Result<OutlierTest> {
    let r = rstudent(model, x, y)?;
    let (row, &rs) = r
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .ok_or(Error::Empty("no rows for outlier test"))?;
    let p = normal_two_sided_p(rs);
    Ok(OutlierTest { row, rstudent: rs, p_unadjusted: p, p_bonferroni: (p * r.len() as f64).min(1.0) })
}

/// Refit with `f' ln f'` terms, `f' = f - min(f) + 1e-6`, appended for
/// every column; returns the added terms' estimates and p-values.
pub fn box_tidwell(x: &Matrix, y: &[bool], names: &[String], config: &LogisticConfig) -> Result<Vec<LinearityTerm>> {
    let k = x.ncols();
    let mut aug = Matrix::zeros(x.nrows(), 2 * k);
    for c in 0..k {
        let col = x.column(c);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let terms: Vec<f64> = col
            .iter()
            .map(|v| {
                let s = v - min + BOX_TIDWELL_SHIFT;
                s * s.ln()
            })
            .collect();
        aug.set_column(c, &col);
        aug.set_column(k + c, &terms);
    }
    let m = fit_logistic(&aug, y, config)?;
    Ok((0..k)
        .map(|c| {
            let j = 1 + k + c;
            let est = m.coefficients[j];
            LinearityTerm { feature: names[c].clone(), estimate: est, p_value: normal_two_sided_p(est / m.std_errors[j]) }
        })
        .collect())
}

/// Full diagnostic battery for a fitted model against its intercept-only
/// counterpart. Odds-ratio intervals use `z_{1 - alpha / (2 m)}`.
pub fn lr_diagnostics(
    model: &LogisticModel,
    null_model: &LogisticModel,
    x: &Matrix,
    y: &[bool],
    names: &[String],
    alpha: f64,
    m_corrections: usize,
    config: &LogisticConfig,
) -> Result<LrDiagnostics> {
    if names.len() != model.k || x.ncols() != model.k {
        return Err(Error::SchemaMismatch { expected: model.k, got: x.ncols() });
    }
    if null_model.k != 0 {
        return Err(Error::InvalidArgument("null model must be intercept-only".into()));
    }
    let n = y.len();
    let (ll, ll0) = (model.log_likelihood, null_model.log_likelihood);
    let p = model.predict_proba(x)?;
    let vifs = vif(x)?;
    let m = m_corrections.max(1);
    let z = z_quantile(1.0 - alpha / (2.0 * m as f64));
    let coefficients = (0..=model.k)
        .map(|j| {
            let est = model.coefficients[j];
            let se = model.std_errors[j];
            let zv = est / se;
            CoefficientRow {
                name: if j == 0 { "(Intercept)".into() } else { names[j - 1].clone() },
                estimate: est,
                std_error: se,
                z_value: zv,
                p_value: normal_two_sided_p(zv),
                vif: (j > 0).then(|| vifs[j - 1]),
                odds_ratio: est.exp(),
                or_ci_low: (est - z * se).exp(),
                or_ci_high: (est + z * se).exp(),
            }
        })
        .collect();
    let vif_flagged = names.iter().zip(&vifs).filter(|(_, &v)| v > VIF_LIMIT).map(|(n, _)| n.clone()).collect();
    Ok(LrDiagnostics {
        n,
        k: model.k,
        log_likelihood: ll,
        null_log_likelihood: ll0,
        llr: llr_test(ll, ll0, model.k),
        pseudo_r2: pseudo_r2(ll, ll0, n, model.k, y, &p),
        coefficients,
        vif_flagged,
        linearity: box_tidwell(x, y, names, config)?,
        outlier: outlier_test(model, x, y)?,
        or_level: 1.0 - alpha / m as f64,
    })
}
