//! Python bindings for `robust_detect`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use robust_detect::calibration::{self, CalibrationMethod, CalibrationResult, Threshold};
use robust_detect::detectors::{self, DetectorSpec, RankOneGlrtParams};
use robust_detect::montecarlo::{self, CurvePoint, TrialPlan};
use robust_detect::scenario::{self, sample_dataset, Hypothesis, SignalLevel};
use robust_detect::{ComplexVector, HermitianPd};

create_exception!(robust_detect_py, NumericalError, PyException);

fn py_err(e: robust_detect::Error) -> PyErr {
    let msg = format!("[{}] {e}", e.module());
    if e.is_numerical() {
        NumericalError::new_err(msg)
    } else {
        PyValueError::new_err(msg)
    }
}

fn vector(x: Vec<Complex64>) -> PyResult<ComplexVector> {
    ComplexVector::new(x).map_err(py_err)
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<HermitianPd> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    HermitianPd::factorize(n, rows.into_iter().flatten().collect()).map_err(py_err)
}

fn rows_of(m: &HermitianPd) -> Vec<Vec<Complex64>> {
    m.entries()
        .chunks(m.dim())
        .map(<[Complex64]>::to_vec)
        .collect()
}

fn threshold_from(eta: f64) -> Threshold {
    if eta == f64::NEG_INFINITY {
        Threshold::AlwaysDetect
    } else {
        Threshold::Finite(eta)
    }
}

/// Radar scenario: dimensions, clutter model, target signal, hypothesis.
#[pyclass(name = "Scenario", module = "robust_detect_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    /// `snr_db=None` means no target echo. `hypothesis` is `"H0"` or `"H1"`.
    #[new]
    #[pyo3(signature = (n=16, k=32, fd=0.08, delta_f=0.0, sigma_f=0.073, noise_power=0.1, snr_db=None, hypothesis="H0"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        k: usize,
        fd: f64,
        delta_f: f64,
        sigma_f: f64,
        noise_power: f64,
        snr_db: Option<f64>,
        hypothesis: &str,
    ) -> PyResult<Self> {
        let hypothesis = match hypothesis {
            "H0" => Hypothesis::H0,
            "H1" => Hypothesis::H1,
            other => {
                return Err(PyValueError::new_err(format!(
                    "hypothesis must be 'H0' or 'H1', got {other:?}"
                )))
            }
        };
        let inner = scenario::Scenario {
            n,
            k,
            fd,
            delta_f,
            sigma_f,
            noise_power,
            snr_db: snr_db.map_or(SignalLevel::NoSignal, SignalLevel::SnrDb),
            hypothesis,
            ..scenario::Scenario::default()
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn fd(&self) -> f64 {
        self.inner.fd
    }

    #[getter]
    fn delta_f(&self) -> f64 {
        self.inner.delta_f
    }

    #[getter]
    fn snr_db(&self) -> Option<f64> {
        match self.inner.snr_db {
            SignalLevel::NoSignal => None,
            SignalLevel::SnrDb(x) => Some(x),
        }
    }

    #[getter]
    fn hypothesis(&self) -> &'static str {
        match self.inner.hypothesis {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        }
    }

    fn nominal_steering(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.nominal_steering().map_err(py_err)?.into_inner())
    }

    fn actual_steering(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.actual_steering().map_err(py_err)?.into_inner())
    }

    /// Clutter-plus-noise covariance as a list of rows.
    fn covariance(&self) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows_of(&self.inner.covariance().map_err(py_err)?))
    }

    /// Squared cosine of the whitened angle between actual and nominal signatures.
    fn cos2theta(&self) -> PyResult<f64> {
        let cov = self.inner.covariance().map_err(py_err)?;
        let (p, v) = (
            self.inner.actual_steering().map_err(py_err)?,
            self.inner.nominal_steering().map_err(py_err)?,
        );
        scenario::cos_squared_theta(&p, &v, &cov).map_err(py_err)
    }

    /// One reproducible dataset.
    fn sample(&self, seed: u64) -> PyResult<PyDataset> {
        Ok(PyDataset {
            inner: sample_dataset(&self.inner, seed).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "Scenario(n={}, k={}, fd={}, delta_f={}, snr_db={}, hypothesis={:?})",
            s.n, s.k, s.fd, s.delta_f, s.snr_db, s.hypothesis
        )
    }
}

/// Cell under test plus secondary data.
#[pyclass(name = "Dataset", module = "robust_detect_py")]
pub struct PyDataset {
    inner: scenario::Dataset,
}

#[pymethods]
impl PyDataset {
    #[getter]
    fn z(&self) -> Vec<Complex64> {
        self.inner.z().as_slice().to_vec()
    }

    /// Sample covariance `S = sum r r^H` of the secondaries.
    #[getter]
    fn scatter(&self) -> Vec<Vec<Complex64>> {
        rows_of(self.inner.scatter())
    }

    fn secondaries(&self) -> Vec<Vec<Complex64>> {
        (0..self.inner.secondary_count())
            .map(|i| self.inner.secondary(i).into_inner())
            .collect()
    }

    /// Statistic of `detector` with the nominal steering vector `v`.
    fn statistic(&self, detector: PyRef<'_, PyDetector>, v: Vec<Complex64>) -> PyResult<f64> {
        let k = self.inner.secondary_count();
        detectors::evaluate(
            &detector.inner,
            self.inner.z(),
            self.inner.scatter(),
            &vector(v)?,
            k,
        )
        .map_err(py_err)
    }
}

/// Detector selection.
#[pyclass(name = "Detector", module = "robust_detect_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyDetector {
    inner: DetectorSpec,
}

#[pymethods]
impl PyDetector {
    #[staticmethod]
    fn kelly() -> Self {
        Self {
            inner: DetectorSpec::Kelly,
        }
    }

    #[staticmethod]
    fn amf() -> Self {
        Self {
            inner: DetectorSpec::Amf,
        }
    }

    #[staticmethod]
    fn sigma_c() -> Self {
        Self {
            inner: DetectorSpec::SigmaC,
        }
    }

    #[staticmethod]
    fn parametric(epsilon: f64) -> PyResult<Self> {
        let inner = DetectorSpec::ParametricEpsilon { epsilon };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Rank-one perturbation GLRT with direction `u`.
    #[staticmethod]
    #[pyo3(signature = (u, b_max=1e3, n_b=60, n_t=41, refine=true))]
    fn rank_one(
        u: Vec<Complex64>,
        b_max: f64,
        n_b: usize,
        n_t: usize,
        refine: bool,
    ) -> PyResult<Self> {
        let params =
            RankOneGlrtParams::new(&vector(u)?, b_max, n_b, n_t, refine).map_err(py_err)?;
        Ok(Self {
            inner: DetectorSpec::RankOneGlrt(params),
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[getter]
    fn epsilon(&self) -> Option<f64> {
        self.inner.epsilon()
    }

    #[getter]
    fn has_closed_form_pfa(&self) -> bool {
        self.inner.has_closed_form_pfa()
    }

    fn __repr__(&self) -> String {
        format!("Detector({})", self.inner.label())
    }
}

fn specs(dets: &[PyRef<'_, PyDetector>]) -> Vec<DetectorSpec> {
    dets.iter().map(|d| d.inner.clone()).collect()
}

fn plan(seed: u64, trials: usize, workers: Option<usize>) -> PyResult<TrialPlan> {
    if trials == 0 || workers == Some(0) {
        return Err(PyValueError::new_err("trials and workers must be positive"));
    }
    Ok(TrialPlan::new(seed, trials).with_workers(workers))
}

fn calibration_dict<'py>(py: Python<'py>, r: &CalibrationResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("detector", r.detector.label())?;
    d.set_item("target_pfa", r.target_pfa)?;
    d.set_item("threshold", r.threshold.value())?;
    let method = match r.method {
        CalibrationMethod::ClosedForm => "closed_form",
        CalibrationMethod::MonteCarlo => "monte_carlo",
    };
    d.set_item("method", method)?;
    d.set_item("trials", r.trials)?;
    d.set_item("achieved_pfa_estimate", r.achieved_pfa_estimate)?;
    Ok(d)
}

fn point_dict<'py>(py: Python<'py>, p: &CurvePoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let snr = match p.snr_db {
        SignalLevel::NoSignal => None,
        SignalLevel::SnrDb(x) => Some(x),
    };
    d.set_item("snr_db", snr)?;
    d.set_item("detector", &p.detector)?;
    d.set_item("pd", p.pd)?;
    d.set_item("stderr", p.stderr)?;
    d.set_item("trials", p.trials)?;
    d.set_item("cos2theta", p.cos2theta)?;
    d.set_item("pfa", p.pfa)?;
    Ok(d)
}

/// Detector statistic for cell `z`, scatter matrix `scatter` (list of rows)
/// built from `k` secondaries, and nominal steering `v`.
#[pyfunction]
fn statistic(
    detector: PyRef<'_, PyDetector>,
    z: Vec<Complex64>,
    scatter: Vec<Vec<Complex64>>,
    v: Vec<Complex64>,
    k: usize,
) -> PyResult<f64> {
    detectors::evaluate(
        &detector.inner,
        &vector(z)?,
        &matrix(scatter)?,
        &vector(v)?,
        k,
    )
    .map_err(py_err)
}

/// `(t_tilde, b)` of a cell.
#[pyfunction]
fn sufficient_pair(
    z: Vec<Complex64>,
    scatter: Vec<Vec<Complex64>>,
    v: Vec<Complex64>,
) -> PyResult<(f64, f64)> {
    let p =
        detectors::sufficient_pair(&vector(z)?, &matrix(scatter)?, &vector(v)?).map_err(py_err)?;
    Ok((p.t_tilde, p.b))
}

#[pyfunction]
fn steering_vector(n: usize, fd: f64) -> PyResult<Vec<Complex64>> {
    Ok(scenario::time_steering_vector(n, fd)
        .map_err(py_err)?
        .into_inner())
}

/// Closed-form false-alarm probability of `Lambda_eps` at threshold `eta`.
#[pyfunction]
fn pfa_closed_form(eta: f64, k: usize, n: usize, epsilon: f64) -> PyResult<f64> {
    calibration::pfa_closed_form(eta, k, n, epsilon).map_err(py_err)
}

/// Threshold of `Lambda_eps` giving false-alarm probability `pfa`.
#[pyfunction]
fn threshold_from_pfa(pfa: f64, k: usize, n: usize, epsilon: f64) -> PyResult<f64> {
    calibration::threshold_from_pfa(pfa, k, n, epsilon).map_err(py_err)
}

/// Thresholds for `detectors` at `pfa`: closed form where available,
/// Monte Carlo under `H0` otherwise.
#[pyfunction]
#[pyo3(signature = (detectors, scenario, pfa, seed=1, trials=None, workers=None))]
fn calibrate<'py>(
    py: Python<'py>,
    detectors: Vec<PyRef<'py, PyDetector>>,
    scenario: PyRef<'py, PyScenario>,
    pfa: f64,
    seed: u64,
    trials: Option<usize>,
    workers: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(PyValueError::new_err(format!(
            "pfa = {pfa} must lie in (0, 1)"
        )));
    }
    let trials = trials.unwrap_or_else(|| TrialPlan::for_pfa(seed, pfa).trials);
    let plan = plan(seed, trials, workers)?;
    let specs = specs(&detectors);
    let sc = scenario.inner.clone();
    let results = py
        .detach(|| calibration::calibrate(&specs, &sc, pfa, &plan))
        .map_err(py_err)?;
    results.iter().map(|r| calibration_dict(py, r)).collect()
}

/// Monte Carlo exceedance rate of `detector` over `threshold` on `scenario`.
#[pyfunction]
#[pyo3(signature = (detector, threshold, scenario, trials, seed=1, pfa=f64::NAN, workers=None))]
#[allow(clippy::too_many_arguments)]
fn estimate_rate<'py>(
    py: Python<'py>,
    detector: PyRef<'py, PyDetector>,
    threshold: f64,
    scenario: PyRef<'py, PyScenario>,
    trials: usize,
    seed: u64,
    pfa: f64,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let plan = plan(seed, trials, workers)?;
    let (spec, sc) = (detector.inner.clone(), scenario.inner.clone());
    let point = py
        .detach(|| montecarlo::estimate_rate(&spec, threshold_from(threshold), &sc, &plan, pfa))
        .map_err(py_err)?;
    point_dict(py, &point)
}

/// Pd of each `(detector, threshold)` pair over `snr_grid_db`.
#[pyfunction]
#[pyo3(signature = (detectors, thresholds, snr_grid_db, scenario, pfa, trials=4000, seed=1, workers=None))]
#[allow(clippy::too_many_arguments)]
fn pd_curve<'py>(
    py: Python<'py>,
    detectors: Vec<PyRef<'py, PyDetector>>,
    thresholds: Vec<f64>,
    snr_grid_db: Vec<f64>,
    scenario: PyRef<'py, PyScenario>,
    pfa: f64,
    trials: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    if detectors.len() != thresholds.len() {
        return Err(PyValueError::new_err(
            "one threshold per detector is required",
        ));
    }
    let plan = plan(seed, trials, workers)?;
    let dets: Vec<(DetectorSpec, Threshold)> = specs(&detectors)
        .into_iter()
        .zip(thresholds.iter().map(|&t| threshold_from(t)))
        .collect();
    let sc = scenario.inner.clone();
    let points = py
        .detach(|| montecarlo::pd_curve(&dets, &snr_grid_db, &sc, pfa, &plan))
        .map_err(py_err)?;
    points.iter().map(|p| point_dict(py, p)).collect()
}

#[pymodule]
fn robust_detect_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyDetector>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(statistic, m)?)?;
    m.add_function(wrap_pyfunction!(sufficient_pair, m)?)?;
    m.add_function(wrap_pyfunction!(steering_vector, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_from_pfa, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_rate, m)?)?;
    m.add_function(wrap_pyfunction!(pd_curve, m)?)?;
    Ok(())
}
