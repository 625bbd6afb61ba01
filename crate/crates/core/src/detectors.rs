//! Detection statistics: Kelly's detector, the AMF, the GLRT for a rank-one
//! perturbation covariance `u u^H`, the GLRT for a perturbation shaped like the
//! noise covariance, and its parametric generalization.
//!
//! All statistics are computed from whitened quantities `z_w = L^-1 z`,
//! `v_w = L^-1 v` where `L L^H = S` is the factorized secondary scatter matrix.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sqr, ComplexVector, HermitianPd};

/// Relative size of `||P_u^perp v_w||^2 / ||v_w||^2` below which `u` and `v`
/// are treated as parallel.
pub const PARALLEL_RTOL: f64 = 1e-12;

/// Smallest positive `b` on the logarithmic grid of the rank-one search.
const B_GRID_FLOOR: f64 = 1e-3;

/// Pair of scalar statistics `(t~_K, b)` through which the `Sigma = C` family
/// and its null distributions are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficientPair {
    pub t_tilde: f64,
    pub b: f64,
}

/// Search settings for the rank-one perturbation GLRT.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankOneGlrtParams {
    u: ComplexVector,
    pub b_max: f64,
    pub n_b: usize,
    pub n_t: usize,
    pub refine: bool,
}

impl RankOneGlrtParams {
    /// `u` is normalized to unit norm.
    pub fn new(
        u: &ComplexVector,
        b_max: f64,
        n_b: usize,
        n_t: usize,
        refine: bool,
    ) -> Result<Self> {
        if !(b_max > 0.0) || !b_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "b_max = {b_max} must be positive"
            )));
        }
        if n_b < 2 || n_t < 2 {
            return Err(Error::InvalidParameter(
                "n_b and n_t must be at least 2".into(),
            ));
        }
        Ok(Self {
            u: u.normalized()?,
            b_max,
            n_b,
            n_t,
            refine,
        })
    }

    /// `b_max = 1e3`, 60 logarithmic `b` points, 41 `t` points, refinement on.
    pub fn with_defaults(u: &ComplexVector) -> Result<Self> {
        Self::new(u, 1e3, 60, 41, true)
    }

    pub fn u(&self) -> &ComplexVector {
        &self.u
    }

    /// `b = 0` followed by `n_b - 1` log-spaced points ending at `b_max`.
    pub fn b_grid(&self) -> Vec<f64> {
        let lo = B_GRID_FLOOR.min(self.b_max / 10.0);
        let m = self.n_b - 1;
        let mut grid = Vec::with_capacity(self.n_b);
        grid.push(0.0);
        if m == 1 {
            grid.push(self.b_max);
        } else {
            let step = (self.b_max / lo).ln() / (m - 1) as f64;
            grid.extend((0..m).map(|i| lo * (step * i as f64).exp()));
            *grid.last_mut().unwrap() = self.b_max;
        }
        grid
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n_t)
            .map(|i| i as f64 / (self.n_t - 1) as f64)
            .collect()
    }
}

/// Which statistic to compute.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorSpec {
    Kelly,
    Amf,
    /// GLRT with perturbation covariance `u u^H`.
    RankOneGlrt(RankOneGlrtParams),
    /// GLRT with perturbation covariance equal to the noise covariance.
    SigmaC,
    /// Parametric detector with `zeta_eps = (K+1)(1+eps)/N`.
    ParametricEpsilon {
        epsilon: f64,
    },
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DetectorSpec::ParametricEpsilon { epsilon }
                if !(*epsilon >= 0.0) || !epsilon.is_finite() =>
            {
                Err(Error::InvalidParameter(format!(
                    "epsilon = {epsilon} must be >= 0"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Epsilon of the `Sigma = C` family, if this detector belongs to it.
    pub fn epsilon(&self) -> Option<f64> {
        match self {
            DetectorSpec::SigmaC => Some(0.0),
            DetectorSpec::ParametricEpsilon { epsilon } => Some(*epsilon),
            _ => None,
        }
    }

    /// Whether the false-alarm probability is available in closed form.
    pub fn has_closed_form_pfa(&self) -> bool {
        self.epsilon().is_some()
    }

    pub fn label(&self) -> String {
        match self {
            DetectorSpec::Kelly => "kelly".into(),
            DetectorSpec::Amf => "amf".into(),
            DetectorSpec::RankOneGlrt(_) => "glrt_rank_one".into(),
            DetectorSpec::SigmaC => "glrt_sigma_c".into(),
            DetectorSpec::ParametricEpsilon { epsilon } => format!("lambda_eps_{epsilon}"),
        }
    }
}

/// Decision rule: `H1` only when the statistic strictly exceeds the threshold.
pub fn decide(statistic: f64, threshold: f64) -> bool {
    statistic > threshold
}

/// Whitened view of one cell under test, shared by all statistics.
#[derive(Debug, Clone)]
pub struct WhitenedCut<'a> {
    scatter: &'a HermitianPd,
    k: usize,
    z_w: Vec<Complex64>,
    v_w: Vec<Complex64>,
    zz: f64,
    vv: f64,
    vz: Complex64,
}

impl<'a> WhitenedCut<'a> {
    /// `k` is the number of secondary vectors behind `scatter`.
    pub fn new(
        z: &ComplexVector,
        scatter: &'a HermitianPd,
        v: &ComplexVector,
        k: usize,
    ) -> Result<Self> {
        let z_w = scatter.whiten(z)?.into_inner();
        let v_w = scatter.whiten(v)?.into_inner();
        let vv = norm_sqr(&v_w);
        if !(vv > 0.0) || !vv.is_finite() {
            return Err(Error::DegenerateSteering(vv));
        }
        let zz = norm_sqr(&z_w);
        let vz = dot(&v_w, &z_w);
        Ok(Self {
            scatter,
            k,
            z_w,
            v_w,
            zz,
            vv,
            vz,
        })
    }

    /// `z^H S^-1 z`.
    pub fn zz(&self) -> f64 {
        self.zz
    }

    /// `|z^H S^-1 v|^2 / (v^H S^-1 v)`, the AMF statistic.
    pub fn matched_energy(&self) -> f64 {
        self.vz.norm_sqr() / self.vv
    }

    /// `||P_{v_w}^perp z_w||^2 = z^H S^-1 z - |z^H S^-1 v|^2 / v^H S^-1 v`.
    pub fn perp_energy(&self) -> f64 {
        (self.zz - self.matched_energy()).max(0.0)
    }

    pub fn kelly(&self) -> f64 {
        self.matched_energy() / (1.0 + self.zz)
    }

    pub fn amf(&self) -> f64 {
        self.matched_energy()
    }

    pub fn sufficient_pair(&self) -> SufficientPair {
        let denom = 1.0 + self.perp_energy();
        SufficientPair {
            t_tilde: self.matched_energy() / denom,
            b: 1.0 / denom,
        }
    }

    /// Natural log of the parametric statistic.
    pub fn sigma_c_log(&self, epsilon: f64) -> Result<f64> {
        let zeta = zeta_epsilon(self.k, self.z_w.len(), epsilon)?;
        let perp = self.perp_energy();
        let head = self.zz.ln_1p();
        Ok(if perp > 1.0 / (zeta - 1.0) {
            head + (1.0 - 1.0 / zeta).ln() - ((zeta - 1.0) * perp).ln() / zeta
        } else {
            head - perp.ln_1p()
        })
    }

    pub fn sigma_c(&self, epsilon: f64) -> Result<f64> {
        Ok(self.sigma_c_log(epsilon)?.exp())
    }

    /// Log of the maximized likelihood ratio of the rank-one GLRT (the
    /// `(K+1)`-th power scale).
    pub fn rank_one_log_objective(&self, params: &RankOneGlrtParams) -> Result<f64> {
        let u_w = self.scatter.whiten(params.u())?.into_inner();
        let kp1 = (self.k + 1) as f64;
        let geometry = match RankOneGeometry::new(&self.z_w, &self.v_w, &u_w) {
            Ok(g) => g,
            Err(Error::ParallelUV) => {
                return Ok(kp1 * (self.zz.ln_1p() - self.perp_energy().ln_1p()));
            }
            Err(e) => return Err(e),
        };
        Ok(geometry.maximize(params, self.k) + kp1 * self.zz.ln_1p())
    }

    /// Rank-one GLRT reported as `Lambda^{1/(K+1)}`, so that the `u = v` case
    /// coincides with `(1 + z^H S^-1 z) / (1 + ||P_v^perp z_w||^2)`.
    pub fn rank_one(&self, params: &RankOneGlrtParams) -> Result<f64> {
        Ok((self.rank_one_log_objective(params)? / (self.k + 1) as f64).exp())
    }

    pub fn evaluate(&self, spec: &DetectorSpec) -> Result<f64> {
        match spec {
            DetectorSpec::Kelly => Ok(self.kelly()),
            DetectorSpec::Amf => Ok(self.amf()),
            DetectorSpec::RankOneGlrt(p) => self.rank_one(p),
            DetectorSpec::SigmaC => self.sigma_c(0.0),
            DetectorSpec::ParametricEpsilon { epsilon } => self.sigma_c(*epsilon),
        }
    }
}

/// `zeta_eps = (K+1)(1+eps)/N`, which must exceed 1.
pub fn zeta_epsilon(k: usize, n: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must be >= 0"
        )));
    }
    let zeta = (k + 1) as f64 * (1.0 + epsilon) / n as f64;
    if !(zeta > 1.0) {
        return Err(Error::InvalidZeta(zeta));
    }
    Ok(zeta)
}

pub fn sufficient_pair(
    z: &ComplexVector,
    s: &HermitianPd,
    v: &ComplexVector,
) -> Result<SufficientPair> {
    Ok(WhitenedCut::new(z, s, v, 0)?.sufficient_pair())
}

/// `|z^H S^-1 v|^2 / (v^H S^-1 v (1 + z^H S^-1 z))`.
pub fn kelly_statistic(z: &ComplexVector, s: &HermitianPd, v: &ComplexVector) -> Result<f64> {
    Ok(WhitenedCut::new(z, s, v, 0)?.kelly())
}

/// `|z^H S^-1 v|^2 / (v^H S^-1 v)`.
pub fn amf_statistic(z: &ComplexVector, s: &HermitianPd, v: &ComplexVector) -> Result<f64> {
    Ok(WhitenedCut::new(z, s, v, 0)?.amf())
}

/// Parametric `Sigma = C` statistic; `epsilon = 0` is the plain GLRT.
pub fn sigma_c_statistic(
    z: &ComplexVector,
    s: &HermitianPd,
    v: &ComplexVector,
    k: usize,
    epsilon: f64,
) -> Result<f64> {
    WhitenedCut::new(z, s, v, k)?.sigma_c(epsilon)
}

/// The parametric statistic written in terms of the sufficient pair.
pub fn sigma_c_from_pair(pair: SufficientPair, k: usize, n: usize, epsilon: f64) -> Result<f64> {
    let zeta = zeta_epsilon(k, n, epsilon)?;
    let SufficientPair { t_tilde, b } = pair;
    Ok(if b < 1.0 - 1.0 / zeta {
        (1.0 + t_tilde) / b * (1.0 - 1.0 / zeta) / ((zeta - 1.0) * (1.0 / b - 1.0)).powf(1.0 / zeta)
    } else {
        1.0 + t_tilde
    })
}

pub fn rank_one_glrt_statistic(
    z: &ComplexVector,
    s: &HermitianPd,
    v: &ComplexVector,
    k: usize,
    params: &RankOneGlrtParams,
) -> Result<f64> {
    WhitenedCut::new(z, s, v, k)?.rank_one(params)
}

/// Uniform dispatch over every statistic.
pub fn evaluate(
    spec: &DetectorSpec,
    z: &ComplexVector,
    s: &HermitianPd,
    v: &ComplexVector,
    k: usize,
) -> Result<f64> {
    spec.validate()?;
    WhitenedCut::new(z, s, v, k)?.evaluate(spec)
}

/// Endpoints of the segment that carries the maximizer of the partially
/// compressed likelihood over the complex amplitude:
/// `alpha_1 = v_w^H z_w / ||v_w||^2`,
/// `alpha_2 = v_w^H P_u^perp z_w / v_w^H P_u^perp v_w`.
pub fn alpha_endpoints(
    z_w: &ComplexVector,
    v_w: &ComplexVector,
    u_w: &ComplexVector,
) -> Result<(Complex64, Complex64)> {
    let g = RankOneGeometry::new(z_w.as_slice(), v_w.as_slice(), u_w.as_slice())?;
    Ok((g.alpha1, g.alpha2))
}

/// `ln l1(b, y1) = -ln(1+b) - (K+1) ln(1+b+y1)`.
pub fn ln_l1(b: f64, y1: f64, k: usize) -> f64 {
    -b.ln_1p() - (k + 1) as f64 * (1.0 + b + y1).ln()
}

/// `ln l2(b, y2) = (K+1) ln((1+b+y2)/(1+y2))`.
pub fn ln_l2(b: f64, y2: f64, k: usize) -> f64 {
    (k + 1) as f64 * (b / (1.0 + y2)).ln_1p()
}

/// Scalar geometry of the rank-one problem along the segment
/// `alpha(t) = t alpha_1 + (1-t) alpha_2`.
#[derive(Debug, Clone)]
struct RankOneGeometry {
    alpha1: Complex64,
    alpha2: Complex64,
    /// `||P_v^perp z_w||^2`
    c1: f64,
    /// `z_w^H P_u^perp P_{P_u^perp v}^perp P_u^perp z_w`
    c2: f64,
    /// `R^2 ||v_w||^2`
    r2_vv: f64,
    /// `R^2 v_w^H P_u^perp v_w`
    r2_vpv: f64,
}

impl RankOneGeometry {
    fn new(z_w: &[Complex64], v_w: &[Complex64], u_w: &[Complex64]) -> Result<Self> {
        let n = z_w.len();
        if v_w.len() != n || u_w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v_w.len().min(u_w.len()),
            });
        }
        let vv = norm_sqr(v_w);
        if !(vv > 0.0) {
            return Err(Error::DegenerateSteering(vv));
        }
        let uu = norm_sqr(u_w);
        if !(uu > 0.0) {
            return Err(Error::ZeroVector { norm: uu.sqrt() });
        }
        let cu_v = dot(u_w, v_w) / uu;
        let cu_z = dot(u_w, z_w) / uu;
        let pv: Vec<Complex64> = v_w.iter().zip(u_w).map(|(v, u)| v - cu_v * u).collect();
        let pz: Vec<Complex64> = z_w.iter().zip(u_w).map(|(z, u)| z - cu_z * u).collect();
        let pvpv = norm_sqr(&pv);
        if pvpv < PARALLEL_RTOL * vv {
            return Err(Error::ParallelUV);
        }
        let vz = dot(v_w, z_w);
        let pvpz = dot(&pv, &pz);
        let alpha1 = vz / vv;
        let alpha2 = pvpz / pvpv;
        let c1 = (norm_sqr(z_w) - vz.norm_sqr() / vv).max(0.0);
        let c2 = (norm_sqr(&pz) - pvpz.norm_sqr() / pvpv).max(0.0);
        let r2 = (alpha1 - alpha2).norm_sqr();
        Ok(Self {
            alpha1,
            alpha2,
            c1,
            c2,
            r2_vv: r2 * vv,
            r2_vpv: r2 * pvpv,
        })
    }

    fn y1(&self, t: f64) -> f64 {
        self.c1 + (1.0 - t) * (1.0 - t) * self.r2_vv
    }

    fn y2(&self, t: f64) -> f64 {
        self.c2 + t * t * self.r2_vpv
    }

    /// `ln l1 + ln l2` at `(b, alpha(t))`.
    fn objective(&self, b: f64, t: f64, k: usize) -> f64 {
        ln_l1(b, self.y1(t), k) + ln_l2(b, self.y2(t), k)
    }

    /// Grid search over `(b, t)` with optional coordinate-wise golden-section
    /// refinement around the best cell. Returns the maximum of `ln l1 + ln l2`.
    fn maximize(&self, params: &RankOneGlrtParams, k: usize) -> f64 {
        let b_grid = params.b_grid();
        let t_grid = params.t_grid();
        let kp1 = (k + 1) as f64;
        let ys: Vec<(f64, f64, f64)> = t_grid
            .iter()
            .map(|&t| {
                let y2 = self.y2(t);
                (self.y1(t), y2, y2.ln_1p())
            })
            .collect();
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
        for (i, &b) in b_grid.iter().enumerate() {
            let lb = b.ln_1p();
            for (j, &(y1, y2, ly2)) in ys.iter().enumerate() {
                let val = -lb - kp1 * (1.0 + b + y1).ln() + kp1 * ((1.0 + b + y2).ln() - ly2);
                if val > best.0 {
                    best = (val, i, j);
                }
            }
        }
        if !params.refine {
            return best.0;
        }
        let (mut value, i, j) = best;
        let (mut b, mut t) = (b_grid[i], t_grid[j]);
        let t_lo = t_grid[j.saturating_sub(1)];
        let t_hi = t_grid[(j + 1).min(t_grid.len() - 1)];
        let b_lo = b_grid[i.saturating_sub(1)];
        let b_hi = b_grid[(i + 1).min(b_grid.len() - 1)];
        for _ in 0..3 {
            let (tc, vt) = golden_section_max(|x| self.objective(b, x, k), t_lo, t_hi, 60);
            if vt > value {
                value = vt;
                t = tc;
            }
            let (bc, vb) = golden_section_max(|x| self.objective(x, t, k), b_lo, b_hi, 60);
            if vb > value {
                value = vb;
                b = bc;
            }
        }
        value
    }
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
/// Returns `(x_max, f_max)`.
pub fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    iters: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimizer of `f(nu) = (1+nu)^{N/(K+1)} (1 + a/(1+nu))` over `nu >= 0`.
/// Returns `(nu_hat, f_min)`.
pub fn prop3_minimize(a: f64, k: usize, n: usize) -> (f64, f64) {
    let kp1 = (k + 1) as f64;
    let n = n as f64;
    let nu = (kp1 / n - 1.0) * a - 1.0;
    if nu > 0.0 {
        let base = (kp1 - n) / n * a;
        (nu, base.powf(n / kp1) * kp1 / (kp1 - n))
    } else {
        (0.0, 1.0 + a)
    }
}
