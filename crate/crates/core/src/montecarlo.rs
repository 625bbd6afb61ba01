//! Seeded, parallel trial engine: false-alarm and detection rates, Pd-vs-SNR
//! curves, and paired detector comparisons with common random numbers.

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::Threshold;
use crate::detectors::{DetectorSpec, WhitenedCut};
use crate::error::{Error, Result};
use crate::linalg::ComplexVector;
use crate::scenario::{cos_squared_theta, trial_rng, Hypothesis, Sampler, Scenario, SignalLevel};

/// Seeding and size of a Monte Carlo run. Trial `i` draws from
/// `trial_rng(master_seed, i)`, so results do not depend on `workers`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialPlan {
    pub master_seed: u64,
    pub trials: usize,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
}

impl TrialPlan {
    pub fn new(master_seed: u64, trials: usize) -> Self {
        Self {
            master_seed,
            trials,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    /// `round(100 / pfa)` trials.
    pub fn for_pfa(master_seed: u64, pfa: f64) -> Self {
        Self::new(master_seed, (100.0 / pfa).round() as usize)
    }

    /// Runs `f(i, rng_i)` for every trial and returns the results in trial order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
    {
        let seed = self.master_seed;
        let task = |i: usize| {
            let mut rng = trial_rng(seed, i as u64);
            f(i as u64, &mut rng)
        };
        if self.workers == Some(1) {
            return (0..self.trials).map(task).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.unwrap_or(0))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
        pool.install(|| (0..self.trials).into_par_iter().map(task).collect())
    }
}

/// Statistics of every detector on the same trials, indexed `[detector][trial]`.
pub fn simulate_statistics(
    sampler: &Sampler,
    v: &ComplexVector,
    specs: &[DetectorSpec],
    plan: &TrialPlan,
) -> Result<Vec<Vec<f64>>> {
    for spec in specs {
        spec.validate()?;
    }
    let k = sampler.scenario().k;
    let rows = plan.run(|_, rng| {
        let data = sampler.sample(rng)?;
        let cut = WhitenedCut::new(data.z(), data.scatter(), v, k)?;
        specs
            .iter()
            .map(|s| cut.evaluate(s))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(transpose(rows, specs.len()))
}

/// Decisions of every detector on the same trials, indexed `[detector][trial]`.
pub fn simulate_decisions(
    sampler: &Sampler,
    v: &ComplexVector,
    detectors: &[(DetectorSpec, Threshold)],
    plan: &TrialPlan,
) -> Result<Vec<Vec<bool>>> {
    let specs: Vec<DetectorSpec> = detectors.iter().map(|(s, _)| s.clone()).collect();
    let stats = simulate_statistics(sampler, v, &specs, plan)?;
    Ok(stats
        .into_iter()
        .zip(detectors)
        .map(|(col, (_, eta))| col.into_iter().map(|x| eta.exceeded_by(x)).collect())
        .collect())
}

fn transpose<T: Copy>(rows: Vec<Vec<T>>, width: usize) -> Vec<Vec<T>> {
    let mut cols: Vec<Vec<T>> = (0..width).map(|_| Vec::with_capacity(rows.len())).collect();
    for row in rows {
        for (col, x) in cols.iter_mut().zip(row) {
            col.push(x);
        }
    }
    cols
}

/// Fraction of `true` decisions and its binomial standard error.
pub fn rate(decisions: &[bool]) -> (f64, f64) {
    let n = decisions.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let p = decisions.iter().filter(|&&d| d).count() as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Mean of `a_i - b_i` over paired trials and its standard error
/// `sqrt(var(d) / n)`.
pub fn paired_difference(a: &[bool], b: &[bool]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "need at least two paired trials".into(),
        ));
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x as i32 as f64 - y as i32 as f64)
        .collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// One ordinate of a Pd (or Pfa) curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub snr_db: SignalLevel,
    pub detector: String,
    pub pd: f64,
    pub stderr: f64,
    pub trials: usize,
    pub cos2theta: f64,
    pub pfa: f64,
}

fn cos2_of(scenario: &Scenario, sampler: &Sampler) -> Result<f64> {
    cos_squared_theta(
        &scenario.actual_steering()?,
        &scenario.nominal_steering()?,
        sampler.covariance(),
    )
}

/// Rate at which `spec` exceeds `eta` on `scenario`. With `snr_db = NoSignal`
/// (or `H0`) this is a false-alarm estimate.
pub fn estimate_rate(
    spec: &DetectorSpec,
    eta: Threshold,
    scenario: &Scenario,
    plan: &TrialPlan,
    pfa: f64,
) -> Result<CurvePoint> {
    let sampler = Sampler::new(scenario)?;
    let decisions = simulate_decisions(
        &sampler,
        &scenario.nominal_steering()?,
        &[(spec.clone(), eta)],
        plan,
    )?;
    let (pd, stderr) = rate(&decisions[0]);
    Ok(CurvePoint {
        snr_db: scenario.effective_signal(),
        detector: spec.label(),
        pd,
        stderr,
        trials: plan.trials,
        cos2theta: cos2_of(scenario, &sampler)?,
        pfa,
    })
}

/// Pd of every detector at every SNR of the grid. Within an SNR point, all
/// detectors see the same datasets.
pub fn pd_curve(
    detectors: &[(DetectorSpec, Threshold)],
    snr_grid_db: &[f64],
    template: &Scenario,
    pfa: f64,
    plan: &TrialPlan,
) -> Result<Vec<CurvePoint>> {
    if detectors.is_empty() {
        return Err(Error::InvalidParameter("no detectors to evaluate".into()));
    }
    let mut out = Vec::with_capacity(detectors.len() * snr_grid_db.len());
    for &snr in snr_grid_db {
        let scenario = template
            .with_hypothesis(Hypothesis::H1)
            .with_snr(SignalLevel::SnrDb(snr));
        let sampler = Sampler::new(&scenario)?;
        let cos2 = cos2_of(&scenario, &sampler)?;
        let decisions =
            simulate_decisions(&sampler, &scenario.nominal_steering()?, detectors, plan)?;
        for ((spec, _), col) in detectors.iter().zip(&decisions) {
            let (pd, stderr) = rate(col);
            out.push(CurvePoint {
                snr_db: SignalLevel::SnrDb(snr),
                detector: spec.label(),
                pd,
                stderr,
                trials: plan.trials,
                cos2theta: cos2,
                pfa,
            });
        }
    }
    Ok(out)
}

pub const CURVE_CSV_HEADER: &str = "snr_db,detector,pd,stderr,trials,cos2theta,pfa";

/// Full-precision (17 significant digit) float formatting for CSV output.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

pub fn write_curve_csv(points: &[CurvePoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CURVE_CSV_HEADER}")?;
    for p in points {
        let snr = match p.snr_db {
            SignalLevel::NoSignal => "-inf".to_string(),
            SignalLevel::SnrDb(db) => fmt_f64(db),
        };
        writeln!(
            w,
            "{snr},{},{},{},{},{},{}",
            p.detector,
            fmt_f64(p.pd),
            fmt_f64(p.stderr),
            p.trials,
            fmt_f64(p.cos2theta),
            fmt_f64(p.pfa)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::threshold_from_pfa;

    fn small() -> Scenario {
        Scenario {
            n: 4,
            k: 8,
            ..Scenario::default()
        }
    }

    #[test]
    fn results_independent_of_worker_count() {
        let sc = small();
        let sampler = Sampler::new(&sc).unwrap();
        let v = sc.nominal_steering().unwrap();
        let specs = [
            DetectorSpec::Kelly,
            DetectorSpec::ParametricEpsilon { epsilon: 0.1 },
        ];
        let base = TrialPlan::new(11, 300);
        let one = simulate_statistics(&sampler, &v, &specs, &base.with_workers(Some(1))).unwrap();
        let three = simulate_statistics(&sampler, &v, &specs, &base.with_workers(Some(3))).unwrap();
        let default = simulate_statistics(&sampler, &v, &specs, &base).unwrap();
        assert_eq!(one, three);
        assert_eq!(one, default);
        let other = simulate_statistics(&sampler, &v, &specs, &TrialPlan::new(12, 300)).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn duplicate_specs_give_identical_columns() {
        let sc = small();
        let eta = Threshold::Finite(threshold_from_pfa(1e-2, 8, 4, 0.0).unwrap());
        let dets = vec![
            (DetectorSpec::SigmaC, eta),
            (DetectorSpec::ParametricEpsilon { epsilon: 0.0 }, eta),
        ];
        let pts = pd_curve(&dets, &[0.0, 10.0], &sc, 1e-2, &TrialPlan::new(3, 200)).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0].pd, pts[1].pd);
        assert_eq!(pts[2].pd, pts[3].pd);
    }

    #[test]
    fn always_detect_gives_unit_rate() {
        let p = estimate_rate(
            &DetectorSpec::Kelly,
            Threshold::AlwaysDetect,
            &small(),
            &TrialPlan::new(1, 100),
            1.0,
        )
        .unwrap();
        assert_eq!(p.pd, 1.0);
        assert_eq!(p.stderr, 0.0);
        assert_eq!(p.snr_db, SignalLevel::NoSignal);
    }

    #[test]
    fn high_snr_matched_detects() {
        let sc = Scenario {
            n: 4,
            k: 8,
            snr_db: SignalLevel::SnrDb(35.0),
            hypothesis: Hypothesis::H1,
            ..Scenario::default()
        };
        let eta = Threshold::Finite(threshold_from_pfa(1e-3, 8, 4, 0.1).unwrap());
        let p = estimate_rate(
            &DetectorSpec::ParametricEpsilon { epsilon: 0.1 },
            eta,
            &sc,
            &TrialPlan::new(2, 500),
            1e-3,
        )
        .unwrap();
        assert!(p.pd >= 0.99, "{}", p.pd);
        assert!((p.cos2theta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_signal_rate_matches_closed_form_threshold() {
        let sc = small();
        let pfa = 0.05;
        let eta = Threshold::Finite(threshold_from_pfa(pfa, 8, 4, 0.0).unwrap());
        let p = estimate_rate(
            &DetectorSpec::SigmaC,
            eta,
            &sc,
            &TrialPlan::new(21, 20_000),
            pfa,
        )
        .unwrap();
        let sigma = (pfa * (1.0 - pfa) / 20_000f64).sqrt();
        assert!((p.pd - pfa).abs() <= 3.0 * sigma, "{} vs {pfa}", p.pd);
    }

    #[test]
    fn rate_and_paired_difference() {
        let (p, se) = rate(&[true, false, true, true]);
        assert_eq!(p, 0.75);
        assert!((se - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
        let a = [true, true, false, false];
        let b = [true, false, false, true];
        let (d, se) = paired_difference(&a, &b).unwrap();
        assert_eq!(d, 0.0);
        // d = (0, 1, 0, -1): sample variance 2/3
        assert!((se - (2.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(paired_difference(&a, &a).unwrap(), (0.0, 0.0));
        assert!(paired_difference(&a, &b[..3]).is_err());
    }

    #[test]
    fn empty_detector_list_rejected() {
        assert!(pd_curve(&[], &[0.0], &small(), 1e-3, &TrialPlan::new(0, 10)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![CurvePoint {
            snr_db: SignalLevel::SnrDb(12.5),
            detector: "kelly".into(),
            pd: 0.123_456_789_012_345_67,
            stderr: 1.0 / 3.0,
            trials: 4000,
            cos2theta: 0.46,
            pfa: 1e-3,
        }];
        let mut buf = Vec::new();
        write_curve_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CURVE_CSV_HEADER));
        let f: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(f[0].parse::<f64>().unwrap(), 12.5);
        assert_eq!(f[1], "kelly");
        assert_eq!(f[2].parse::<f64>().unwrap(), pts[0].pd);
        assert_eq!(f[3].parse::<f64>().unwrap(), pts[0].stderr);
        assert_eq!(f[4], "4000");
        assert_eq!(f[6].parse::<f64>().unwrap(), 1e-3);
    }

    #[test]
    fn for_pfa_trial_count() {
        assert_eq!(TrialPlan::for_pfa(0, 1e-3).trials, 100_000);
        assert_eq!(TrialPlan::for_pfa(0, 1e-2).trials, 10_000);
    }
}
