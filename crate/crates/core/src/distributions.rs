//! Null laws of the sufficient pair `(t~_K, b)` and the noncentrality
//! bookkeeping under `H1`.

use serde::Serialize;
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoncentralityParams {
    /// `SNR * b * cos^2(theta)`, conditional on `b`.
    pub delta_sq: f64,
    /// `SNR * sin^2(theta)`.
    pub delta_b_sq: f64,
}

fn check_kn(k: usize, n: usize) -> Result<()> {
    if n < 2 || k < n {
        return Err(Error::Domain(format!(
            "need K >= N >= 2, got K = {k}, N = {n}"
        )));
    }
    Ok(())
}

/// Survival function of `t~_K` under `H0`: `(1+y)^-(K-N+1)` for `y >= 0`.
pub fn central_f_tail(y: f64, k: usize, n: usize) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let m = (k + 1).saturating_sub(n) as f64;
    (-m * y.ln_1p()).exp()
}

/// Density of `b` under `H0`: `x^{K-N+1} (1-x)^{N-2} / B(K+2-N, N-1)`.
pub fn central_beta_pdf(x: f64, k: usize, n: usize) -> Result<f64> {
    check_kn(k, n)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    let a = (k + 2 - n) as f64;
    let b = (n - 1) as f64;
    if x == 0.0 || (x == 1.0 && n > 2) {
        return Ok(0.0);
    }
    let log_core = if n == 2 {
        0.0
    } else {
        (b - 1.0) * (-x).ln_1p()
    };
    Ok(((a - 1.0) * x.ln() + log_core - ln_beta(a, b)).exp())
}

/// Distribution function of `b` under `H0`, the regularized incomplete beta
/// function `I_x(K+2-N, N-1)`.
pub fn central_beta_cdf(x: f64, k: usize, n: usize) -> Result<f64> {
    check_kn(k, n)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    Ok(statrs::function::beta::beta_reg(
        (k + 2 - n) as f64,
        (n - 1) as f64,
        x,
    ))
}

pub fn noncentrality(snr_linear: f64, cos2: f64, b: f64) -> Result<NoncentralityParams> {
    if !(snr_linear >= 0.0) || !snr_linear.is_finite() {
        return Err(Error::Domain(format!(
            "SNR = {snr_linear} must be finite and >= 0"
        )));
    }
    if !(0.0..=1.0).contains(&cos2) {
        return Err(Error::Domain(format!("cos^2 = {cos2} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!("b = {b} outside [0, 1]")));
    }
    Ok(NoncentralityParams {
        delta_sq: snr_linear * b * cos2,
        delta_b_sq: snr_linear * (1.0 - cos2),
    })
}
