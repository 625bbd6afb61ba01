//! Adaptive detection of a signal of known direction in Gaussian clutter with
//! unknown covariance, including detectors that stay robust when the actual
//! signal direction departs from the nominal one.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod config;
pub mod detectors;
pub mod distributions;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod scenario;
pub mod verify;

pub use calibration::{CalibrationMethod, CalibrationResult, Threshold};
pub use config::RunConfig;
pub use detectors::{DetectorSpec, RankOneGlrtParams, SufficientPair, WhitenedCut};
pub use error::{Error, Result};
pub use linalg::{ComplexVector, HermitianPd};
pub use montecarlo::{CurvePoint, TrialPlan};
pub use scenario::{Dataset, Hypothesis, Sampler, Scenario, SignalLevel};
