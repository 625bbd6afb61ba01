//! TOML run configuration.
//!
//! ```toml
//! pfa = 1e-3
//! snr_grid_db = [0, 5, 10, 15, 20]
//! output_dir = "out"
//!
//! [scenario]
//! n = 16
//! k = 32
//! delta_f = 0.025
//!
//! [plan]
//! seed = 1
//! pd_trials = 4000
//!
//! [[detector]]
//! kind = "kelly"
//!
//! [[detector]]
//! kind = "parametric_epsilon"
//! epsilon = 0.1
//!
//! [[detector]]
//! kind = "rank_one_glrt"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::detectors::{DetectorSpec, RankOneGlrtParams};
use crate::error::{Error, Result};
use crate::linalg::HermitianPd;
use crate::montecarlo::TrialPlan;
use crate::scenario::{time_steering_vector, Scenario};

/// One `[[detector]]` table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorConfig {
    Kelly {},
    Amf {},
    SigmaC {},
    ParametricEpsilon {
        epsilon: f64,
    },
    RankOneGlrt {
        /// Doppler offset of `u` from the nominal Doppler; defaults to `0.03/N`.
        #[serde(default)]
        u_offset: Option<f64>,
        #[serde(default = "default_b_max")]
        b_max: f64,
        #[serde(default = "default_n_b")]
        n_b: usize,
        #[serde(default = "default_n_t")]
        n_t: usize,
        #[serde(default = "default_refine")]
        refine: bool,
    },
}

fn default_b_max() -> f64 {
    1e3
}
fn default_n_b() -> usize {
    60
}
fn default_n_t() -> usize {
    41
}
fn default_refine() -> bool {
    true
}

impl DetectorConfig {
    pub fn resolve(&self, scenario: &Scenario) -> Result<DetectorSpec> {
        let spec = match self {
            DetectorConfig::Kelly {} => DetectorSpec::Kelly,
            DetectorConfig::Amf {} => DetectorSpec::Amf,
            DetectorConfig::SigmaC {} => DetectorSpec::SigmaC,
            DetectorConfig::ParametricEpsilon { epsilon } => {
                DetectorSpec::ParametricEpsilon { epsilon: *epsilon }
            }
            DetectorConfig::RankOneGlrt {
                u_offset,
                b_max,
                n_b,
                n_t,
                refine,
            } => {
                let offset = u_offset.unwrap_or(0.03 / scenario.n as f64);
                let u = time_steering_vector(scenario.n, scenario.fd + offset)?;
                DetectorSpec::RankOneGlrt(RankOneGlrtParams::new(&u, *b_max, *n_b, *n_t, *refine)?)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub seed: u64,
    pub pd_trials: usize,
    /// Monte Carlo calibration trials; `round(100/pfa)` when absent.
    pub threshold_trials: Option<usize>,
    pub workers: Option<usize>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            pd_trials: 4000,
            threshold_trials: None,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfaCurveConfig {
    pub eta_max: f64,
    pub points: usize,
    pub epsilons: Vec<f64>,
}

impl Default for PfaCurveConfig {
    fn default() -> Self {
        Self {
            eta_max: 3.0,
            points: 201,
            epsilons: vec![0.0, 0.1, 0.2],
        }
    }
}

impl PfaCurveConfig {
    /// `points` values of `eta` evenly spaced on `[0, eta_max]`.
    pub fn etas(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.eta_max * i as f64 / last)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Real covariance (row by row) used in place of the clutter model.
    pub covariance_override: Option<Vec<Vec<f64>>>,
}

impl VerifyConfig {
    pub fn covariance(&self, scenario: &Scenario) -> Result<HermitianPd> {
        match &self.covariance_override {
            None => scenario.covariance(),
            Some(rows) => {
                let n = rows.len();
                if let Some(bad) = rows.iter().find(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: bad.len(),
                    });
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                HermitianPd::from_real(n, &flat)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pfa: f64,
    pub snr_grid_db: Vec<f64>,
    pub output_dir: PathBuf,
    pub scenario: Scenario,
    pub plan: PlanConfig,
    #[serde(rename = "detector")]
    pub detectors: Vec<DetectorConfig>,
    pub pfa_curve: PfaCurveConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pfa: 1e-3,
            snr_grid_db: (0..=25).map(f64::from).collect(),
            output_dir: PathBuf::from("out"),
            scenario: Scenario::default(),
            plan: PlanConfig::default(),
            detectors: vec![
                DetectorConfig::Kelly {},
                DetectorConfig::Amf {},
                DetectorConfig::SigmaC {},
                DetectorConfig::ParametricEpsilon { epsilon: 0.1 },
                DetectorConfig::ParametricEpsilon { epsilon: 0.2 },
            ],
            pfa_curve: PfaCurveConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::Config(format!(
                "pfa = {} must lie in (0, 1)",
                self.pfa
            )));
        }
        self.scenario
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.snr_grid_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("snr_grid_db entries must be finite".into()));
        }
        if self.plan.pd_trials == 0 || self.plan.threshold_trials == Some(0) {
            return Err(Error::Config("trial counts must be positive".into()));
        }
        if self.plan.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let pc = &self.pfa_curve;
        if pc.points < 2 || !(pc.eta_max > 0.0) || !pc.eta_max.is_finite() {
            return Err(Error::Config(
                "pfa_curve needs points >= 2 and a positive eta_max".into(),
            ));
        }
        if pc.epsilons.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::Config("pfa_curve epsilons must be >= 0".into()));
        }
        self.detector_specs()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn detector_specs(&self) -> Result<Vec<DetectorSpec>> {
        self.detectors
            .iter()
            .map(|d| d.resolve(&self.scenario))
            .collect()
    }

    pub fn pd_plan(&self) -> TrialPlan {
        TrialPlan::new(self.plan.seed, self.plan.pd_trials).with_workers(self.plan.workers)
    }

    /// Calibration trials use a seed distinct from the Pd trials.
    pub fn threshold_plan(&self) -> TrialPlan {
        let trials = self
            .plan
            .threshold_trials
            .unwrap_or_else(|| TrialPlan::for_pfa(0, self.pfa).trials);
        TrialPlan::new(self.plan.seed ^ 0x5eed_ca11_b2a7_e000, trials)
            .with_workers(self.plan.workers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.threshold_plan().trials, 100_000);
        assert_eq!(cfg.detector_specs().unwrap().len(), 5);
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
            pfa = 1e-2
            snr_grid_db = [0, 10.5]
            output_dir = "results"

            [scenario]
            n = 8
            k = 16
            delta_f = 0.05

            [plan]
            seed = 42
            pd_trials = 100
            threshold_trials = 500
            workers = 2

            [[detector]]
            kind = "kelly"

            [[detector]]
            kind = "parametric_epsilon"
            epsilon = 0.2

            [[detector]]
            kind = "rank_one_glrt"
            n_b = 20
            refine = false

            [pfa_curve]
            eta_max = 4.0
            points = 11
            epsilons = [0.0]
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.scenario.n, 8);
        assert_eq!(cfg.scenario.fd, 0.08);
        assert_eq!(cfg.plan.workers, Some(2));
        let specs = cfg.detector_specs().unwrap();
        assert_eq!(specs[1], DetectorSpec::ParametricEpsilon { epsilon: 0.2 });
        match &specs[2] {
            DetectorSpec::RankOneGlrt(p) => {
                assert_eq!((p.n_b, p.n_t, p.refine, p.b_max), (20, 41, false, 1e3));
                let expected = time_steering_vector(8, 0.08 + 0.03 / 8.0)
                    .unwrap()
                    .normalized()
                    .unwrap();
                assert!(
                    p.u()
                        .sub_scaled(num_complex::Complex64::new(1.0, 0.0), &expected)
                        .unwrap()
                        .norm()
                        < 1e-12
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        let etas = cfg.pfa_curve.etas();
        assert_eq!(etas.len(), 11);
        assert_eq!((etas[0], etas[10]), (0.0, 4.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("[scenario]\nm = 3").is_err());
        assert!(RunConfig::from_toml("[[detector]]\nkind = \"kelly\"\nepsilon = 0.1").is_err());
        assert!(RunConfig::from_toml("[[detector]]\nkind = \"nope\"").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml("pfa = 0").is_err());
        assert!(RunConfig::from_toml("pfa = 1.5").is_err());
        assert!(RunConfig::from_toml("[scenario]\nn = 16\nk = 8").is_err());
        assert!(
            RunConfig::from_toml("[[detector]]\nkind = \"parametric_epsilon\"\nepsilon = -1")
                .is_err()
        );
        assert!(RunConfig::from_toml("[plan]\nworkers = 0").is_err());
    }

    #[test]
    fn covariance_override() {
        let v = VerifyConfig {
            covariance_override: Some(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
        };
        let sc = Scenario {
            n: 2,
            k: 4,
            ..Scenario::default()
        };
        assert!(matches!(
            v.covariance(&sc),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let ragged = VerifyConfig {
            covariance_override: Some(vec![vec![1.0], vec![2.0, 1.0]]),
        };
        assert!(ragged.covariance(&sc).is_err());
        assert_eq!(
            VerifyConfig::default().covariance(&sc).unwrap(),
            sc.covariance().unwrap()
        );
    }
}
