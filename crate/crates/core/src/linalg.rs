//! Complex vector and Hermitian positive definite matrix kernels.
//!
//! Every detection statistic in this crate is a function of inner products of
//! the form `x^H M^-1 y`. Those are evaluated through the lower-triangular
//! Cholesky factor `L` (`L L^H = M`): with `x_w = L^-1 x` and `y_w = L^-1 y`,
//! `x_w^H y_w = x^H M^-1 y`. Any other square root of `M` gives the same inner
//! products, so the triangular factor is used throughout.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on `max |M_ij - conj(M_ji)|` before a matrix is rejected.
pub const HERMITIAN_RTOL: f64 = 1e-10;
/// Smallest pivot accepted by the Cholesky factorization.
pub const PIVOT_FLOOR: f64 = 1e-300;
/// Norm below which a vector is treated as zero.
pub const ZERO_FLOOR: f64 = 1e-300;
/// Relative tolerance for the imaginary part of `x^H M^-1 x`.
const QUAD_IMAG_RTOL: f64 = 1e-9;

/// `x^H y` for slices of equal length.
#[inline]
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `||x||^2`.
#[inline]
pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum()
}

/// A finite complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(elements: Vec<Complex64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter("empty vector".into()));
        }
        if let Some(i) = elements
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(elements))
    }

    /// Builds a vector from real parts only.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n.max(1)])
    }

    pub(crate) fn from_vec_unchecked(elements: Vec<Complex64>) -> Self {
        Self(elements)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// `self^H other`.
    pub fn dot(&self, other: &ComplexVector) -> Result<Complex64> {
        check_dim(self.len(), other.len())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> ComplexVector {
        ComplexVector(self.0.iter().map(|x| x * c).collect())
    }

    /// `self - c * other`.
    pub fn sub_scaled(&self, c: Complex64, other: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.len(), other.len())?;
        Ok(ComplexVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - c * b)
                .collect(),
        ))
    }

    /// Returns the vector scaled to unit norm.
    pub fn normalized(&self) -> Result<ComplexVector> {
        let norm = self.norm();
        if norm < ZERO_FLOOR {
            return Err(Error::ZeroVector { norm });
        }
        Ok(self.scale(Complex64::new(1.0 / norm, 0.0)))
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Serialized as a list of `[re, im]` pairs.
impl serde::Serialize for ComplexVector {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for c in &self.0 {
            seq.serialize_element(&[c.re, c.im])?;
        }
        seq.end()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Hermitian positive definite matrix together with its lower Cholesky factor.
///
/// Storage is row-major. The factor is computed once at construction, so the
/// type is immutable and can be shared freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPd {
    n: usize,
    entries: Vec<Complex64>,
    factor: Vec<Complex64>,
}

impl HermitianPd {
    /// Validates, symmetrizes, and factorizes a square row-major matrix.
    pub fn factorize(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be positive".into(),
            ));
        }
        check_dim(n * n, entries.len())?;
        if let Some(i) = entries
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        let scale = entries.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut asymmetry = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                asymmetry = asymmetry.max((entries[i * n + j] - entries[j * n + i].conj()).norm());
            }
            asymmetry = asymmetry.max(entries[i * n + i].im.abs());
        }
        let tolerance = HERMITIAN_RTOL * scale;
        if asymmetry > tolerance {
            return Err(Error::NotHermitian {
                asymmetry,
                tolerance,
            });
        }
        let mut sym = entries;
        for i in 0..n {
            sym[i * n + i].im = 0.0;
            for j in 0..i {
                let avg = (sym[i * n + j] + sym[j * n + i].conj()) * 0.5;
                sym[i * n + j] = avg;
                sym[j * n + i] = avg.conj();
            }
        }
        let factor = cholesky_lower(n, &sym)?;
        Ok(Self {
            n,
            entries: sym,
            factor,
        })
    }

    /// Builds `M` from real row-major entries.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        Self::factorize(n, entries.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self {
            n,
            factor: entries.clone(),
            entries,
        }
    }

    /// Scatter matrix `sum_k r_k r_k^H` from vectors stored contiguously
    /// (`samples.len() == count * n`). The result is Hermitian by construction.
    pub(crate) fn from_scatter(n: usize, samples: &[Complex64]) -> Result<Self> {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for r in samples.chunks_exact(n) {
            for i in 0..n {
                let ri = r[i];
                let row = &mut entries[i * n..i * n + i + 1];
                for (e, rj) in row.iter_mut().zip(&r[..=i]) {
                    *e += ri * rj.conj();
                }
            }
        }
        for i in 0..n {
            entries[i * n + i].im = 0.0;
            for j in 0..i {
                entries[j * n + i] = entries[i * n + j].conj();
            }
        }
        let factor = cholesky_lower(n, &entries)?;
        Ok(Self { n, entries, factor })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    /// Lower-triangular factor `L`, row-major.
    pub fn factor(&self) -> &[Complex64] {
        &self.factor
    }

    /// Returns `c * M` (refactorized through the scaled factor).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale {c} must be positive"
            )));
        }
        let s = c.sqrt();
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().map(|x| x * c).collect(),
            factor: self.factor.iter().map(|x| x * s).collect(),
        })
    }

    /// `L^-1 x` by forward substitution.
    pub fn whiten(&self, x: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.n, x.len())?;
        let mut out = x.as_slice().to_vec();
        self.whiten_in_place(&mut out);
        Ok(ComplexVector(out))
    }

    pub(crate) fn whiten_in_place(&self, x: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.factor[i * n..i * n + i];
            let acc: Complex64 = row.iter().zip(&x[..i]).map(|(l, xj)| l * xj).sum();
            x[i] = (x[i] - acc) / self.factor[i * n + i].re;
        }
    }

    /// `L g`, used to color white samples.
    pub(crate) fn color_in_place(&self, g: &mut [Complex64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let row = &self.factor[i * n..i * n + i + 1];
            g[i] = row.iter().zip(&g[..=i]).map(|(l, gj)| l * gj).sum();
        }
    }

    /// `x^H M^-1 y`.
    pub fn quad_form(&self, x: &ComplexVector, y: &ComplexVector) -> Result<Complex64> {
        let xw = self.whiten(x)?;
        if x == y {
            return Ok(Complex64::new(xw.norm_sqr(), 0.0));
        }
        let yw = self.whiten(y)?;
        Ok(dot(xw.as_slice(), yw.as_slice()))
    }

    /// `x^H M^-1 x` as a real number.
    pub fn quad_form_real(&self, x: &ComplexVector) -> Result<f64> {
        let q = self.quad_form(x, x)?;
        if q.im.abs() > QUAD_IMAG_RTOL * q.re.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalInconsistency(format!(
                "imaginary part {:e} of a Hermitian quadratic form",
                q.im
            )));
        }
        Ok(q.re.max(0.0))
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.n, x.len())?;
        let n = self.n;
        Ok(ComplexVector(
            (0..n)
                .map(|i| {
                    self.entries[i * n..(i + 1) * n]
                        .iter()
                        .zip(x.as_slice())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
        ))
    }
}

fn cholesky_lower(n: usize, m: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut pivot = m[j * n + j].re;
        for k in 0..j {
            pivot -= l[j * n + k].norm_sqr();
        }
        if !(pivot > PIVOT_FLOOR) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[j * n + j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut acc = m[i * n + j];
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = acc / d;
        }
    }
    Ok(l)
}

/// Projection of `x` onto the orthogonal complement of `u`:
/// `x - u (u^H x) / ||u||^2`.
pub fn proj_perp(u: &ComplexVector, x: &ComplexVector) -> Result<ComplexVector> {
    check_dim(u.len(), x.len())?;
    let uu = u.norm_sqr();
    if uu.sqrt() < ZERO_FLOOR {
        return Err(Error::ZeroVector { norm: uu.sqrt() });
    }
    let c = dot(u.as_slice(), x.as_slice()) / uu;
    x.sub_scaled(c, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
        ComplexVector::new(
            (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    /// A A^H + I for a random complex A.
    fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        let a: Vec<Complex64> = (0..n * n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut m = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = c(0.0, 0.0);
                for k in 0..n {
                    acc += a[i * n + k] * a[j * n + k].conj();
                }
                m[i * n + j] = acc + if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
            }
        }
        m
    }

    /// Gauss-Jordan inverse with partial pivoting.
    fn explicit_inverse(n: usize, m: &[Complex64]) -> Vec<Complex64> {
        let mut a = m.to_vec();
        let mut inv = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            inv[i * n + i] = c(1.0, 0.0);
        }
        for col in 0..n {
            let p = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
                .unwrap();
            for k in 0..n {
                a.swap(col * n + k, p * n + k);
                inv.swap(col * n + k, p * n + k);
            }
            let d = a[col * n + col];
            for k in 0..n {
                a[col * n + k] /= d;
                inv[col * n + k] /= d;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r * n + col];
                    for k in 0..n {
                        let (ack, ick) = (a[col * n + k], inv[col * n + k]);
                        a[r * n + k] -= f * ack;
                        inv[r * n + k] -= f * ick;
                    }
                }
            }
        }
        inv
    }

    fn inverse_quad(n: usize, m: &[Complex64], x: &ComplexVector, y: &ComplexVector) -> Complex64 {
        let inv = explicit_inverse(n, m);
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += x[i].conj() * inv[i * n + j] * y[j];
            }
        }
        acc
    }

    #[test]
    fn identity_factor_is_identity() {
        let m = HermitianPd::factorize(3, HermitianPd::identity(3).entries().to_vec()).unwrap();
        assert_eq!(m.factor(), HermitianPd::identity(3).entries());
    }

    #[test]
    fn diagonal_factor_is_sqrt() {
        let m = HermitianPd::from_real(2, &[4.0, 0.0, 0.0, 9.0]).unwrap();
        assert_eq!(
            m.factor(),
            &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]
        );
    }

    #[test]
    fn random_factor_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let raw = random_pd(&mut rng, n);
        let m = HermitianPd::factorize(n, raw.clone()).unwrap();
        let l = m.factor();
        for i in 0..n {
            for j in 0..n {
                let mut acc = c(0.0, 0.0);
                for k in 0..n {
                    acc += l[i * n + k] * l[j * n + k].conj();
                }
                assert!((acc - raw[i * n + j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let err = HermitianPd::from_real(2, &[1.0, 2.0, 2.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
        let err = HermitianPd::from_real(2, &[1.0, 0.5, 0.4, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
        let err = HermitianPd::from_real(2, &[1.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let m = HermitianPd::from_real(2, &[2.0, 0.5 + 1e-14, 0.5, 2.0]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn whiten_identity_and_scalar() {
        let x = ComplexVector::new(vec![c(1.0, 2.0), c(-3.0, 0.5)]).unwrap();
        assert_eq!(HermitianPd::identity(2).whiten(&x).unwrap(), x);
        let m = HermitianPd::from_real(1, &[4.0]).unwrap();
        let w = m
            .whiten(&ComplexVector::from_real(&[2.0]).unwrap())
            .unwrap();
        assert_eq!(w.as_slice(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn whitened_inner_product_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 5;
        let raw = random_pd(&mut rng, n);
        let m = HermitianPd::factorize(n, raw.clone()).unwrap();
        let x = random_vec(&mut rng, n);
        let y = random_vec(&mut rng, n);
        let via_whiten = dot(
            m.whiten(&x).unwrap().as_slice(),
            m.whiten(&y).unwrap().as_slice(),
        );
        let oracle = inverse_quad(n, &raw, &x, &y);
        assert!((via_whiten - oracle).norm() <= 1e-10 * oracle.norm());
        let q = m.quad_form(&x, &y).unwrap();
        assert!((q - oracle).norm() <= 1e-10 * oracle.norm());
    }

    #[test]
    fn quad_form_trivial_cases() {
        let i3 = HermitianPd::identity(3);
        let e0 = ComplexVector::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let e1 = ComplexVector::from_real(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(i3.quad_form(&e0, &e0).unwrap(), c(1.0, 0.0));
        assert_eq!(i3.quad_form(&e0, &e1).unwrap(), c(0.0, 0.0));
        assert!(matches!(
            i3.quad_form(&e0, &ComplexVector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn proj_perp_cases() {
        let u = ComplexVector::new(vec![c(1.0, 1.0), c(0.0, 2.0)]).unwrap();
        let p = proj_perp(&u, &u).unwrap();
        assert!(p.norm() < 1e-15);
        // u^H w = (1-i)(2) + (-2i)(-1-i) = 0
        let w = ComplexVector::new(vec![c(2.0, 0.0), c(-1.0, -1.0)]).unwrap();
        assert!(
            proj_perp(&u, &w)
                .unwrap()
                .sub_scaled(c(1.0, 0.0), &w)
                .unwrap()
                .norm()
                < 1e-15
        );
        let x = ComplexVector::new(vec![c(2.0, 0.0), c(0.0, -1.0)]).unwrap();
        let ortho = proj_perp(&u, &x).unwrap();
        let again = proj_perp(&u, &ortho).unwrap();
        assert!(ortho.sub_scaled(c(1.0, 0.0), &again).unwrap().norm() < 1e-15);
        assert!(matches!(
            proj_perp(&ComplexVector::zeros(2), &x),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            ComplexVector::new(vec![c(1.0, 0.0), c(f64::NAN, 0.0)]),
            Err(Error::NonFinite(1))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cvec(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
            proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), n)
        }

        fn to_cv(v: &[(f64, f64)]) -> ComplexVector {
            ComplexVector::new(v.iter().map(|&(a, b)| c(a, b)).collect()).unwrap()
        }

        proptest! {
            #[test]
            fn whitening_consistency(seed in any::<u64>(), x in cvec(6)) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = HermitianPd::factorize(6, random_pd(&mut rng, 6)).unwrap();
                let x = to_cv(&x);
                let w = m.whiten(&x).unwrap().norm_sqr();
                let q = m.quad_form_real(&x).unwrap();
                prop_assert!((w - q).abs() <= 1e-10 * q.max(1e-300));
            }

            #[test]
            fn square_root_independence(seed in any::<u64>(), z in cvec(5), v in cvec(5)) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let raw = random_pd(&mut rng, 5);
                let m = HermitianPd::factorize(5, raw.clone()).unwrap();
                let (z, v) = (to_cv(&z), to_cv(&v));
                prop_assume!(v.norm() > 1e-3);
                let zw = m.whiten(&z).unwrap();
                let vw = m.whiten(&v).unwrap();
                let via_whitened = proj_perp(&vw, &zw).unwrap().norm_sqr();
                let zz = inverse_quad(5, &raw, &z, &z).re;
                let vz = inverse_quad(5, &raw, &v, &z);
                let vv = inverse_quad(5, &raw, &v, &v).re;
                let via_quad = zz - vz.norm_sqr() / vv;
                prop_assert!((via_whitened - via_quad).abs() <= 1e-10 * zz.max(1e-12));
            }

            #[test]
            fn projector_idempotent_and_self_adjoint(u in cvec(6), x in cvec(6), y in cvec(6)) {
                let (u, x, y) = (to_cv(&u), to_cv(&x), to_cv(&y));
                prop_assume!(u.norm() > 1e-3);
                let px = proj_perp(&u, &x).unwrap();
                let ppx = proj_perp(&u, &px).unwrap();
                prop_assert!(px.sub_scaled(c(1.0, 0.0), &ppx).unwrap().norm() <= 1e-12 * (1.0 + x.norm()));
                prop_assert!(dot(u.as_slice(), px.as_slice()).norm() <= 1e-12 * u.norm() * x.norm().max(1.0));
                let py = proj_perp(&u, &y).unwrap();
                let lhs = dot(y.as_slice(), px.as_slice());
                let rhs = dot(py.as_slice(), x.as_slice());
                prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + x.norm() * y.norm()));
            }
        }
    }
}
