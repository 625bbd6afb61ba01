//! Experimental world: steering vectors, Gaussian-shaped clutter covariance,
//! mismatch geometry, SNR mapping, and seeded complex Gaussian sampling.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, HermitianPd, ZERO_FLOOR};

/// Signal level of the cell under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalLevel {
    /// No target echo (`-inf` dB).
    NoSignal,
    SnrDb(f64),
}

impl SignalLevel {
    /// Linear SNR, zero for [`SignalLevel::NoSignal`].
    pub fn linear(self) -> f64 {
        match self {
            SignalLevel::NoSignal => 0.0,
            SignalLevel::SnrDb(db) => 10f64.powf(db / 10.0),
        }
    }
}

impl fmt::Display for SignalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalLevel::NoSignal => write!(f, "none"),
            SignalLevel::SnrDb(db) => write!(f, "{db}"),
        }
    }
}

impl Serialize for SignalLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SignalLevel::NoSignal => s.serialize_str("none"),
            SignalLevel::SnrDb(db) => s.serialize_f64(*db),
        }
    }
}

impl<'de> Deserialize<'de> for SignalLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() => Ok(SignalLevel::SnrDb(v)),
            Raw::Num(v) if v == f64::NEG_INFINITY => Ok(SignalLevel::NoSignal),
            Raw::Int(v) => Ok(SignalLevel::SnrDb(v as f64)),
            Raw::Text(t) if matches!(t.to_ascii_lowercase().as_str(), "none" | "-inf") => {
                Ok(SignalLevel::NoSignal)
            }
            _ => Err(serde::de::Error::custom(
                "snr_db must be a finite number or \"none\"",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Full description of one experimental condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Samples per vector.
    pub n: usize,
    /// Number of secondary vectors.
    pub k: usize,
    /// Nominal normalized Doppler (cycles/sample).
    pub fd: f64,
    /// Doppler offset of the actual target signature; 0 means matched.
    pub delta_f: f64,
    /// Clutter spectral spread.
    pub sigma_f: f64,
    /// White noise power relative to the unit clutter power.
    pub noise_power: f64,
    pub snr_db: SignalLevel,
    pub hypothesis: Hypothesis,
    /// Phase of the target amplitude (radians). Not part of the config file.
    #[serde(skip)]
    pub alpha_phase: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            n: 16,
            k: 32,
            fd: 0.08,
            delta_f: 0.0,
            sigma_f: 0.073,
            noise_power: 0.1,
            snr_db: SignalLevel::NoSignal,
            hypothesis: Hypothesis::H0,
            alpha_phase: 0.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "n = {} must be at least 2",
                self.n
            )));
        }
        if self.k < self.n {
            return Err(Error::InvalidParameter(format!(
                "k = {} must be at least n = {}",
                self.k, self.n
            )));
        }
        if !(self.sigma_f > 0.0) || !self.sigma_f.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_f = {} must be positive",
                self.sigma_f
            )));
        }
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_power = {} must be positive",
                self.noise_power
            )));
        }
        if !self.fd.is_finite() || !self.delta_f.is_finite() {
            return Err(Error::InvalidParameter(
                "fd and delta_f must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn with_hypothesis(&self, hypothesis: Hypothesis) -> Self {
        Self {
            hypothesis,
            ..self.clone()
        }
    }

    pub fn with_snr(&self, snr_db: SignalLevel) -> Self {
        Self {
            snr_db,
            ..self.clone()
        }
    }

    /// Nominal steering vector `v`.
    pub fn nominal_steering(&self) -> Result<ComplexVector> {
        time_steering_vector(self.n, self.fd)
    }

    /// Actual target signature `p` at `fd + delta_f`.
    pub fn actual_steering(&self) -> Result<ComplexVector> {
        time_steering_vector(self.n, self.fd + self.delta_f)
    }

    pub fn covariance(&self) -> Result<HermitianPd> {
        clutter_covariance(self.n, self.sigma_f, self.noise_power)
    }

    /// Signal level actually injected: none under H0.
    pub fn effective_signal(&self) -> SignalLevel {
        match self.hypothesis {
            Hypothesis::H0 => SignalLevel::NoSignal,
            Hypothesis::H1 => self.snr_db,
        }
    }
}

/// `[1, e^{i 2 pi fd}, ..., e^{i 2 pi (N-1) fd}]^T`.
pub fn time_steering_vector(n: usize, fd: f64) -> Result<ComplexVector> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least 2"
        )));
    }
    if !fd.is_finite() {
        return Err(Error::InvalidParameter("Doppler must be finite".into()));
    }
    Ok(ComplexVector::from_vec_unchecked(
        (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * fd * k as f64))
            .collect(),
    ))
}

/// Lag-one correlation coefficient of the Gaussian-shaped clutter.
pub fn clutter_one_lag(sigma_f: f64) -> f64 {
    (-2.0 * PI * PI * sigma_f * sigma_f).exp()
}

/// `C = R_c + sigma_n^2 I` with `[R_c]_{m1,m2} = exp(-2 pi^2 sigma_f^2 (m1-m2)^2)`
/// (unit clutter power on the diagonal).
pub fn clutter_covariance(n: usize, sigma_f: f64, noise_power: f64) -> Result<HermitianPd> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least 2"
        )));
    }
    if !(sigma_f > 0.0) || !(noise_power > 0.0) {
        return Err(Error::InvalidParameter(
            "sigma_f and noise_power must be positive".into(),
        ));
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let lag = i as f64 - j as f64;
            entries[i * n + j] = (-2.0 * PI * PI * sigma_f * sigma_f * lag * lag).exp()
                + if i == j { noise_power } else { 0.0 };
        }
    }
    HermitianPd::from_real(n, &entries)
}

/// Whitened cosine squared between the actual signature `p` and the nominal `v`.
pub fn cos_squared_theta(p: &ComplexVector, v: &ComplexVector, c: &HermitianPd) -> Result<f64> {
    for x in [p, v] {
        if x.norm() < ZERO_FLOOR {
            return Err(Error::ZeroVector { norm: x.norm() });
        }
    }
    let pv = c.quad_form(p, v)?;
    let vv = c.quad_form_real(v)?;
    let pp = c.quad_form_real(p)?;
    Ok((pv.norm_sqr() / (vv * pp)).clamp(0.0, 1.0))
}

/// Target amplitude whose whitened energy `|alpha|^2 p^H C^-1 p` equals the SNR.
pub fn amplitude_from_snr(
    snr: SignalLevel,
    p: &ComplexVector,
    c: &HermitianPd,
) -> Result<Complex64> {
    amplitude_from_snr_with_phase(snr, p, c, 0.0)
}

pub fn amplitude_from_snr_with_phase(
    snr: SignalLevel,
    p: &ComplexVector,
    c: &HermitianPd,
    phase: f64,
) -> Result<Complex64> {
    if p.norm() < ZERO_FLOOR {
        return Err(Error::ZeroVector { norm: p.norm() });
    }
    if let SignalLevel::NoSignal = snr {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let energy = c.quad_form_real(p)?;
    Ok(Complex64::from_polar((snr.linear() / energy).sqrt(), phase))
}

/// Realization of the CUT and the secondary data.
#[derive(Debug, Clone)]
pub struct Dataset {
    z: ComplexVector,
    secondaries: Vec<Complex64>,
    scatter: HermitianPd,
    truth: Scenario,
}

impl Dataset {
    /// Builds a dataset, computing the scatter matrix from the secondaries.
    pub fn new(z: ComplexVector, secondaries: Vec<ComplexVector>, truth: Scenario) -> Result<Self> {
        let n = z.len();
        let mut flat = Vec::with_capacity(n * secondaries.len());
        for r in &secondaries {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: r.len(),
                });
            }
            flat.extend_from_slice(r.as_slice());
        }
        let scatter = HermitianPd::from_scatter(n, &flat)?;
        Ok(Self {
            z,
            secondaries: flat,
            scatter,
            truth,
        })
    }

    pub fn z(&self) -> &ComplexVector {
        &self.z
    }

    pub fn scatter(&self) -> &HermitianPd {
        &self.scatter
    }

    pub fn truth(&self) -> &Scenario {
        &self.truth
    }

    pub fn secondary_count(&self) -> usize {
        self.secondaries.len() / self.z.len()
    }

    pub fn secondary(&self, k: usize) -> ComplexVector {
        let n = self.z.len();
        ComplexVector::from_vec_unchecked(self.secondaries[k * n..(k + 1) * n].to_vec())
    }
}

/// Precomputed sampling state for one scenario: covariance factor, signature,
/// and amplitude. Reused across Monte Carlo trials.
#[derive(Debug, Clone)]
pub struct Sampler {
    scenario: Scenario,
    covariance: HermitianPd,
    white: bool,
    mean: Option<Vec<Complex64>>,
}

impl Sampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Self::with_covariance(scenario, scenario.covariance()?)
    }

    /// Uses an explicit covariance in place of the scenario's clutter model.
    pub fn with_covariance(scenario: &Scenario, covariance: HermitianPd) -> Result<Self> {
        scenario.validate()?;
        if covariance.dim() != scenario.n {
            return Err(Error::DimensionMismatch {
                expected: scenario.n,
                actual: covariance.dim(),
            });
        }
        let n = scenario.n;
        let white = (0..n).all(|i| {
            (0..n).all(|j| {
                covariance.get(i, j)
                    == if i == j {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
            })
        });
        let mean = match scenario.effective_signal() {
            SignalLevel::NoSignal => None,
            level => {
                let p = scenario.actual_steering()?;
                let alpha =
                    amplitude_from_snr_with_phase(level, &p, &covariance, scenario.alpha_phase)?;
                Some(p.as_slice().iter().map(|x| alpha * x).collect())
            }
        };
        Ok(Self {
            scenario: scenario.clone(),
            covariance,
            white,
            mean,
        })
    }

    pub fn covariance(&self) -> &HermitianPd {
        &self.covariance
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn fill_colored(&self, rng: &mut impl Rng, out: &mut [Complex64]) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for x in out.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *x = Complex64::new(re * s, im * s);
        }
        if !self.white {
            for chunk in out.chunks_exact_mut(self.scenario.n) {
                self.covariance.color_in_place(chunk);
            }
        }
    }

    /// Draws one dataset. The CUT is drawn first, then the K secondaries.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<Dataset> {
        let n = self.scenario.n;
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        self.fill_colored(rng, &mut z);
        if let Some(mean) = &self.mean {
            for (zi, m) in z.iter_mut().zip(mean) {
                *zi += m;
            }
        }
        let mut secondaries = vec![Complex64::new(0.0, 0.0); n * self.scenario.k];
        self.fill_colored(rng, &mut secondaries);
        let scatter = HermitianPd::from_scatter(n, &secondaries)?;
        Ok(Dataset {
            z: ComplexVector::from_vec_unchecked(z),
            secondaries,
            scatter,
            truth: self.scenario.clone(),
        })
    }
}

/// Random stream for trial `index` of a run with `master_seed`. Counter based:
/// the stream depends only on the pair, not on which worker draws it.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Draws one dataset for `scenario`, deterministically from `seed`.
pub fn sample_dataset(scenario: &Scenario, seed: u64) -> Result<Dataset> {
    let sampler = Sampler::new(scenario)?;
    sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_vector_cases() {
        let v = time_steering_vector(2, 0.0).unwrap();
        assert_eq!(v.as_slice(), &[c(1.0, 0.0), c(1.0, 0.0)]);
        let v = time_steering_vector(2, 0.25).unwrap();
        assert!((v[1] - c(0.0, 1.0)).norm() < 1e-15);
        let v = time_steering_vector(16, 0.08).unwrap();
        assert_eq!(v[0], c(1.0, 0.0));
        for k in 0..16 {
            let expected = Complex64::from_polar(1.0, 2.0 * PI * 0.08 * k as f64);
            assert!((v[k] - expected).norm() < 1e-14);
            assert!((v[k].norm() - 1.0).abs() < 1e-15);
        }
        assert!((v.norm_sqr() - 16.0).abs() < 1e-12);
        assert!(time_steering_vector(1, 0.1).is_err());
    }

    #[test]
    fn clutter_covariance_structure() {
        let cov = clutter_covariance(16, 0.073, 0.1).unwrap();
        assert!((cov.get(0, 0).re - 1.1).abs() < 1e-15);
        assert!((cov.get(3, 4).re - 0.9).abs() < 1e-3);
        assert!((clutter_one_lag(0.073) - 0.9).abs() < 1e-3);
        for i in 0..16 {
            for j in 0..16 {
                // Toeplitz
                if i > 0 && j > 0 {
                    assert_eq!(cov.get(i, j), cov.get(i - 1, j - 1));
                }
                assert_eq!(cov.get(i, j), cov.get(j, i));
            }
        }
        let wide = clutter_covariance(4, 1e3, 0.1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.1 } else { 0.0 };
                assert!((wide.get(i, j).re - expected).abs() < 1e-15);
            }
        }
        assert!(clutter_covariance(4, 0.0, 0.1).is_err());
    }

    #[test]
    fn clutter_covariance_extreme_eigenvalues_positive() {
        // Power iteration on C for the largest eigenvalue and on C^-1 (via whitening
        // solves) for the smallest.
        let n = 16;
        let cov = clutter_covariance(n, 0.073, 0.1).unwrap();
        let mut x = ComplexVector::from_real(&vec![1.0; n]).unwrap();
        let mut lmax = 0.0;
        for _ in 0..500 {
            let y = cov.mul_vec(&x).unwrap();
            lmax = y.norm() / x.norm();
            x = y.normalized().unwrap();
        }
        let mut x =
            ComplexVector::from_real(&(0..n).map(|i| (i as f64).sin() + 0.5).collect::<Vec<_>>())
                .unwrap();
        let mut inv_max = 0.0;
        for _ in 0..2000 {
            let w = solve(&cov, &x);
            inv_max = w.norm() / x.norm();
            x = w.normalized().unwrap();
        }
        let lmin = 1.0 / inv_max;
        assert!(lmin > 0.0);
        assert!(
            lmin >= 0.1 - 1e-9,
            "smallest eigenvalue {lmin} below the noise floor"
        );
        let cond = lmax / lmin;
        assert!(cond.is_finite() && cond < 1e3, "condition number {cond}");
    }

    fn solve(m: &HermitianPd, x: &ComplexVector) -> ComplexVector {
        // C^-1 x = L^-H (L^-1 x)
        let n = m.dim();
        let l = m.factor();
        let mut y = m.whiten(x).unwrap().into_inner();
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= l[j * n + i].conj() * y[j];
            }
            y[i] = acc / l[i * n + i].re;
        }
        ComplexVector::new(y).unwrap()
    }

    #[test]
    fn cos2_trivial_cases() {
        let cov = clutter_covariance(8, 0.073, 0.1).unwrap();
        let v = time_steering_vector(8, 0.08).unwrap();
        assert!((cos_squared_theta(&v, &v, &cov).unwrap() - 1.0).abs() < 1e-12);
        let i2 = HermitianPd::identity(2);
        let e0 = ComplexVector::from_real(&[1.0, 0.0]).unwrap();
        let e1 = ComplexVector::from_real(&[0.0, 1.0]).unwrap();
        assert_eq!(cos_squared_theta(&e0, &e1, &i2).unwrap(), 0.0);
        assert!(matches!(
            cos_squared_theta(&ComplexVector::zeros(2), &e1, &i2),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn cos2_scale_invariant() {
        let cov = clutter_covariance(16, 0.073, 0.1).unwrap();
        let v = time_steering_vector(16, 0.08).unwrap();
        let p = time_steering_vector(16, 0.08 + 0.4 / 16.0).unwrap();
        let base = cos_squared_theta(&p, &v, &cov).unwrap();
        let scaled =
            cos_squared_theta(&p.scale(c(-2.0, 3.0)), &v.scale(c(0.0, 0.5)), &cov).unwrap();
        assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn amplitude_cases() {
        let cov = clutter_covariance(16, 0.073, 0.1).unwrap();
        let p = time_steering_vector(16, 0.1).unwrap();
        assert_eq!(
            amplitude_from_snr(SignalLevel::NoSignal, &p, &cov).unwrap(),
            c(0.0, 0.0)
        );
        let e0 = ComplexVector::from_real(&[1.0, 0.0]).unwrap();
        let a =
            amplitude_from_snr(SignalLevel::SnrDb(0.0), &e0, &HermitianPd::identity(2)).unwrap();
        assert!((a - c(1.0, 0.0)).norm() < 1e-15);
        for db in [-10.0, 0.0, 13.5, 30.0] {
            let a = amplitude_from_snr(SignalLevel::SnrDb(db), &p, &cov).unwrap();
            let snr = a.norm_sqr() * cov.quad_form_real(&p).unwrap();
            assert!((10.0 * snr.log10() - db).abs() < 1e-10);
            assert_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn h0_cut_mean_is_small() {
        let scenario = Scenario {
            n: 4,
            k: 4,
            ..Scenario::default()
        };
        let sampler = Sampler::new(&scenario).unwrap();
        let trials = 10_000;
        let mut mean = [c(0.0, 0.0); 4];
        for i in 0..trials {
            let d = sampler.sample(&mut trial_rng(3, i)).unwrap();
            for (m, z) in mean.iter_mut().zip(d.z().as_slice()) {
                *m += z / trials as f64;
            }
        }
        let norm: f64 = mean.iter().map(|m| m.norm_sqr()).sum::<f64>().sqrt();
        let bound = 5.0 * (4.0 * 1.1 / trials as f64).sqrt();
        assert!(norm <= bound, "{norm} > {bound}");
    }

    #[test]
    fn h1_high_snr_cut_follows_signature() {
        let scenario = Scenario {
            n: 8,
            k: 8,
            delta_f: 0.01,
            snr_db: SignalLevel::SnrDb(80.0),
            hypothesis: Hypothesis::H1,
            ..Scenario::default()
        };
        let d = sample_dataset(&scenario, 9).unwrap();
        let p = scenario.actual_steering().unwrap();
        let cov = scenario.covariance().unwrap();
        let alpha = amplitude_from_snr(scenario.snr_db, &p, &cov).unwrap();
        for i in 0..8 {
            assert!((d.z()[i] / alpha - p[i]).norm() < 1e-2);
        }
    }

    #[test]
    fn empirical_covariance_matches() {
        let scenario = Scenario {
            n: 4,
            k: 4,
            ..Scenario::default()
        };
        let sampler = Sampler::new(&scenario).unwrap();
        let cov = scenario.covariance().unwrap();
        let mut acc = vec![c(0.0, 0.0); 16];
        let draws = 100_000u64;
        // each dataset contributes K + 1 = 5 independent vectors
        let datasets = draws / 5;
        for i in 0..datasets {
            let d = sampler.sample(&mut trial_rng(17, i)).unwrap();
            let mut vecs = vec![d.z().clone()];
            vecs.extend((0..4).map(|k| d.secondary(k)));
            for x in vecs {
                for a in 0..4 {
                    for b in 0..4 {
                        acc[a * 4 + b] += x[a] * x[b].conj();
                    }
                }
            }
        }
        let max_err = (0..16)
            .map(|idx| (acc[idx] / draws as f64 - cov.entries()[idx]).norm())
            .fold(0.0, f64::max);
        assert!(max_err <= 5e-2, "max entry error {max_err}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let scenario = Scenario {
            hypothesis: Hypothesis::H1,
            snr_db: SignalLevel::SnrDb(10.0),
            ..Scenario::default()
        };
        let a = sample_dataset(&scenario, 42).unwrap();
        let b = sample_dataset(&scenario, 42).unwrap();
        assert_eq!(a.z(), b.z());
        assert_eq!(a.scatter(), b.scatter());
        let c2 = sample_dataset(&scenario, 43).unwrap();
        assert_ne!(a.z(), c2.z());
    }

    #[test]
    fn scatter_factorizes_across_draws() {
        let scenario = Scenario::default();
        let sampler = Sampler::new(&scenario).unwrap();
        for i in 0..1000 {
            sampler.sample(&mut trial_rng(5, i)).unwrap();
        }
    }

    #[test]
    fn dataset_new_checks_scatter() {
        let z = ComplexVector::from_real(&[1.0, 0.0]).unwrap();
        let r1 = ComplexVector::from_real(&[1.0, 0.0]).unwrap();
        let r2 = ComplexVector::new(vec![c(0.0, 0.0), c(0.0, 2.0)]).unwrap();
        let d = Dataset::new(
            z,
            vec![r1, r2],
            Scenario {
                n: 2,
                k: 2,
                ..Scenario::default()
            },
        )
        .unwrap();
        assert_eq!(d.scatter().get(0, 0), c(1.0, 0.0));
        assert_eq!(d.scatter().get(1, 1), c(4.0, 0.0));
        assert_eq!(d.secondary_count(), 2);
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario {
            k: 8,
            ..Scenario::default()
        }
        .validate()
        .is_err());
        assert!(Scenario {
            noise_power: 0.0,
            ..Scenario::default()
        }
        .validate()
        .is_err());
        assert!(Scenario::default().validate().is_ok());
    }

    #[test]
    fn scenario_parses_from_toml() {
        let text = r#"
            n = 16
            k = 32
            fd = 0.08
            delta_f = 0.025
            sigma_f = 0.073
            noise_power = 0.1
            snr_db = "none"
            hypothesis = "H0"
        "#;
        let s: Scenario = toml::from_str(text).unwrap();
        assert_eq!(s.snr_db, SignalLevel::NoSignal);
        assert_eq!(s.delta_f, 0.025);
        let bad = format!("{text}\nextra = 1");
        assert!(toml::from_str::<Scenario>(&bad).is_err());
        let s: Scenario = toml::from_str(&text.replace("\"none\"", "12")).unwrap();
        assert_eq!(s.snr_db, SignalLevel::SnrDb(12.0));
    }
}
