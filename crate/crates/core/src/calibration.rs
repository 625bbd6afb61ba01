//! False-alarm calibration: the closed-form Pfa of the parametric detector,
//! its inversion, and order-statistic thresholds for the other detectors.

use std::io::Write;

use serde::{Serialize, Serializer};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::detectors::{zeta_epsilon, DetectorSpec};
use crate::error::{Error, Result};
use crate::montecarlo::{fmt_f64, simulate_statistics, TrialPlan};
use crate::scenario::{Hypothesis, Sampler, Scenario};

/// Detection threshold. `AlwaysDetect` stands for `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    AlwaysDetect,
    Finite(f64),
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::AlwaysDetect => f64::NEG_INFINITY,
            Threshold::Finite(x) => x,
        }
    }

    /// `statistic > eta`.
    pub fn exceeded_by(self, statistic: f64) -> bool {
        match self {
            Threshold::AlwaysDetect => true,
            Threshold::Finite(eta) => statistic > eta,
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::AlwaysDetect => s.serialize_str("always_detect"),
            Threshold::Finite(x) => s.serialize_f64(*x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub detector: DetectorSpec,
    pub target_pfa: f64,
    pub threshold: Threshold,
    pub method: CalibrationMethod,
    /// Zero for closed-form thresholds.
    pub trials: usize,
    /// Closed-form Pfa at the threshold, or the fraction of calibration trials
    /// exceeding it.
    pub achieved_pfa_estimate: f64,
}

/// Non-regularized incomplete beta function `B_u(nu, mu)`.
pub fn incomplete_beta(u: f64, nu: f64, mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(nu > 0.0) || !(mu > 0.0) || !nu.is_finite() || !mu.is_finite()
    {
        return Err(Error::Domain(format!(
            "B_u(nu, mu) undefined for u = {u}, nu = {nu}, mu = {mu}"
        )));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok(beta_reg(nu, mu, u) * ln_beta(nu, mu).exp())
}

fn check_kn(k: usize, n: usize) -> Result<()> {
    if n < 2 || k < n {
        return Err(Error::Domain(format!(
            "need K >= N >= 2, got K = {k}, N = {n}"
        )));
    }
    Ok(())
}

/// `ln(1 + y_eps(x))`.
fn ln_one_plus_y(x: f64, eta: f64, zeta: f64) -> f64 {
    eta.ln() + x.ln() + ((zeta - 1.0).ln() + (-x).ln_1p() - x.ln()) / zeta + zeta.ln()
        - (zeta - 1.0).ln()
}

/// `y_eps(x) = eta x ((zeta-1)(1-x)/x)^{1/zeta} zeta/(zeta-1) - 1`.
pub fn y_epsilon(x: f64, eta: f64, k: usize, n: usize, epsilon: f64) -> Result<f64> {
    check_kn(k, n)?;
    if !(x > 0.0 && x < 1.0) || !(eta > 0.0) {
        return Err(Error::Domain(format!(
            "y_eps needs 0 < x < 1 and eta > 0, got x = {x}, eta = {eta}"
        )));
    }
    let zeta = zeta_epsilon(k, n, epsilon)?;
    Ok(ln_one_plus_y(x, eta, zeta).exp_m1())
}

/// Root of `y_eps` on `(0, 1 - 1/zeta)` for `eta > 1`.
fn x_bar(eta: f64, zeta: f64) -> Result<f64> {
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1.0 / zeta;
    if !(ln_one_plus_y(hi, eta, zeta) > 0.0) {
        return Err(Error::RootBracketFailure(format!(
            "y_eps(1 - 1/zeta) <= 0 at eta = {eta}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 {
            break;
        }
        if ln_one_plus_y(mid, eta, zeta) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `int_a^b x^{p-1} (1-x)^{q-1} dx` for `0 < a <= b < 1` by composite Simpson.
fn beta_integrand_quadrature(a: f64, b: f64, p: f64, q: f64) -> f64 {
    let f = |x: f64| ((p - 1.0) * x.ln() + (q - 1.0) * (-x).ln_1p()).exp();
    let n = 4096;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Closed-form false-alarm probability of the parametric detector at
/// threshold `eta`. Equals 1 for `eta <= 1`.
pub fn pfa_closed_form(eta: f64, k: usize, n: usize, epsilon: f64) -> Result<f64> {
    check_kn(k, n)?;
    let zeta = zeta_epsilon(k, n, epsilon)?;
    if eta.is_nan() {
        return Err(Error::Domain("eta is NaN".into()));
    }
    if eta <= 1.0 {
        return Ok(1.0);
    }
    if eta == f64::INFINITY {
        return Ok(0.0);
    }
    let m = (k + 1 - n) as f64;
    let (a, b) = (m + 1.0, (n - 1) as f64);
    let x1 = 1.0 - 1.0 / zeta;
    let xb = x_bar(eta, zeta)?;
    let ln_eta_m = -m * eta.ln();
    let ln_b_ref = ln_beta(a, b);

    let head = beta_reg(a, b, xb);
    let tail = ln_eta_m.exp() * (1.0 - beta_reg(a, b, x1));

    let ln_a_eps = m * ((zeta - 1.0) / zeta).ln() - m / zeta * (zeta - 1.0).ln();
    let nu = m / zeta + 1.0;
    let mu = b - m / zeta;
    let middle = if mu > 0.0 {
        (ln_a_eps + ln_eta_m + ln_beta(nu, mu) - ln_b_ref).exp()
            * (beta_reg(nu, mu, x1) - beta_reg(nu, mu, xb)).max(0.0)
    } else {
        (ln_a_eps + ln_eta_m - ln_b_ref).exp() * beta_integrand_quadrature(xb, x1, nu, mu)
    };
    Ok((head + middle + tail).clamp(0.0, 1.0))
}

/// Threshold `eta` with `pfa_closed_form(eta) = pfa` (to 1e-3 relative).
/// Returns 1 for `pfa >= 1`.
pub fn threshold_from_pfa(pfa: f64, k: usize, n: usize, epsilon: f64) -> Result<f64> {
    if !(pfa > 0.0) {
        return Err(Error::Domain(format!(
            "target pfa = {pfa} must be positive"
        )));
    }
    if pfa >= 1.0 {
        return Ok(1.0);
    }
    let p = |eta: f64| pfa_closed_form(eta, k, n, epsilon);
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    let mut p_lo = 1.0;
    let mut p_hi = p(hi)?;
    while p_hi > pfa {
        if p_hi > p_lo {
            return Err(Error::NonMonotoneDetected(format!(
                "Pfa rises from {p_lo:e} to {p_hi:e} between eta = {lo} and {hi}"
            )));
        }
        if hi > 1e300 {
            return Err(Error::NonMonotoneDetected(format!(
                "no threshold reaches pfa = {pfa:e}"
            )));
        }
        lo = hi;
        p_lo = p_hi;
        hi *= 2.0;
        p_hi = p(hi)?;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi {
            break;
        }
        if p(mid)? > pfa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    let achieved = p(eta)?;
    if (achieved - pfa).abs() > 1e-3 * pfa {
        return Err(Error::NonMonotoneDetected(format!(
            "inversion reached pfa = {achieved:e} for target {pfa:e}"
        )));
    }
    Ok(eta)
}

/// The `ceil(trials * pfa)`-th largest statistic.
pub fn order_statistic_threshold(statistics: &[f64], pfa: f64) -> Result<Threshold> {
    if !(pfa > 0.0) {
        return Err(Error::Domain(format!(
            "target pfa = {pfa} must be positive"
        )));
    }
    if pfa >= 1.0 {
        return Ok(Threshold::AlwaysDetect);
    }
    if statistics.is_empty() {
        return Err(Error::InvalidParameter("no calibration trials".into()));
    }
    let rank = ((statistics.len() as f64 * pfa).ceil() as usize).clamp(1, statistics.len());
    let mut sorted = statistics.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(rank - 1, |a, b| b.total_cmp(a));
    Ok(Threshold::Finite(*kth))
}

/// Monte Carlo thresholds for several detectors from one set of `H0` trials.
pub fn threshold_monte_carlo_many(
    specs: &[DetectorSpec],
    scenario: &Scenario,
    pfa: f64,
    plan: &TrialPlan,
) -> Result<Vec<CalibrationResult>> {
    if !(pfa > 0.0) {
        return Err(Error::Domain(format!(
            "target pfa = {pfa} must be positive"
        )));
    }
    if (plan.trials as f64) * pfa < 100.0 && pfa < 1.0 {
        log::warn!(
            "{} trials at pfa = {pfa:e} fall below the 100/pfa calibration protocol ({} trials)",
            plan.trials,
            (100.0 / pfa).round()
        );
    }
    let h0 = scenario.with_hypothesis(Hypothesis::H0);
    let sampler = Sampler::new(&h0)?;
    let stats = if pfa >= 1.0 {
        vec![Vec::new(); specs.len()]
    } else {
        simulate_statistics(&sampler, &h0.nominal_steering()?, specs, plan)?
    };
    specs
        .iter()
        .zip(stats)
        .map(|(spec, col)| {
            let threshold = order_statistic_threshold(&col, pfa)?;
            let achieved = if col.is_empty() {
                1.0
            } else {
                col.iter().filter(|&&x| threshold.exceeded_by(x)).count() as f64 / col.len() as f64
            };
            Ok(CalibrationResult {
                detector: spec.clone(),
                target_pfa: pfa,
                threshold,
                method: CalibrationMethod::MonteCarlo,
                trials: col.len(),
                achieved_pfa_estimate: achieved,
            })
        })
        .collect()
}

/// Monte Carlo threshold: the `ceil(trials * pfa)`-th largest `H0` statistic.
pub fn threshold_monte_carlo(
    spec: &DetectorSpec,
    scenario: &Scenario,
    pfa: f64,
    plan: &TrialPlan,
) -> Result<CalibrationResult> {
    Ok(threshold_monte_carlo_many(std::slice::from_ref(spec), scenario, pfa, plan)?.remove(0))
}

/// Closed-form threshold for a detector of the `Sigma = C` family.
pub fn threshold_closed_form(
    spec: &DetectorSpec,
    scenario: &Scenario,
    pfa: f64,
) -> Result<CalibrationResult> {
    let eps = spec.epsilon().ok_or_else(|| {
        Error::InvalidParameter(format!("{} has no closed-form Pfa", spec.label()))
    })?;
    if !(pfa > 0.0) {
        return Err(Error::Domain(format!(
            "target pfa = {pfa} must be positive"
        )));
    }
    let (threshold, achieved) = if pfa >= 1.0 {
        (Threshold::AlwaysDetect, 1.0)
    } else {
        let eta = threshold_from_pfa(pfa, scenario.k, scenario.n, eps)?;
        (
            Threshold::Finite(eta),
            pfa_closed_form(eta, scenario.k, scenario.n, eps)?,
        )
    };
    Ok(CalibrationResult {
        detector: spec.clone(),
        target_pfa: pfa,
        threshold,
        method: CalibrationMethod::ClosedForm,
        trials: 0,
        achieved_pfa_estimate: achieved,
    })
}

/// Calibrates every detector: closed form where available, Monte Carlo (on
/// shared `H0` trials) otherwise. Results are in the order of `specs`.
pub fn calibrate(
    specs: &[DetectorSpec],
    scenario: &Scenario,
    pfa: f64,
    plan: &TrialPlan,
) -> Result<Vec<CalibrationResult>> {
    let mc: Vec<DetectorSpec> = specs
        .iter()
        .filter(|s| !s.has_closed_form_pfa())
        .cloned()
        .collect();
    let mut mc_results = if mc.is_empty() {
        Vec::new()
    } else {
        threshold_monte_carlo_many(&mc, scenario, pfa, plan)?
    }
    .into_iter();
    specs
        .iter()
        .map(|s| {
            if s.has_closed_form_pfa() {
                threshold_closed_form(s, scenario, pfa)
            } else {
                Ok(mc_results.next().expect("one result per Monte Carlo spec"))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PfaCurveRow {
    pub eta: f64,
    pub pfa: f64,
    pub epsilon: f64,
    pub k: usize,
    pub n: usize,
}

/// `pfa_closed_form` on an increasing `eta` grid, checked to be non-increasing.
pub fn pfa_curve(etas: &[f64], k: usize, n: usize, epsilon: f64) -> Result<Vec<PfaCurveRow>> {
    let mut rows: Vec<PfaCurveRow> = Vec::with_capacity(etas.len());
    for &eta in etas {
        let pfa = pfa_closed_form(eta, k, n, epsilon)?;
        if let Some(prev) = rows.last() {
            if eta < prev.eta {
                return Err(Error::InvalidParameter(
                    "eta grid must be increasing".into(),
                ));
            }
            if pfa > prev.pfa {
                return Err(Error::NonMonotoneDetected(format!(
                    "Pfa rises from {:e} at eta = {} to {pfa:e} at eta = {eta}",
                    prev.pfa, prev.eta
                )));
            }
        }
        rows.push(PfaCurveRow {
            eta,
            pfa,
            epsilon,
            k,
            n,
        });
    }
    Ok(rows)
}

pub const PFA_CSV_HEADER: &str = "eta,pfa,epsilon,k,n";

pub fn write_pfa_curve_csv(rows: &[PfaCurveRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{PFA_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.eta),
            fmt_f64(r.pfa),
            fmt_f64(r.epsilon),
            r.k,
            r.n
        )?;
    }
    Ok(())
}
