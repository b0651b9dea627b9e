//! Matrix-valued rational functions in realization form, Blaschke–Potapov
//! products, Schur-class tests and Kreĭn–Langer factorization.

mod blaschke;
mod krein_langer;

pub use blaschke::{BlaschkePotapovProduct, BpFactor, BpInverse};
pub use krein_langer::{disk_poles, krein_langer_left, krein_langer_right, laurent_coefficients, KLFactorization, PoleInfo, Side};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, identity, norm2, solve};
use crate::pontryagin::KernelEvaluator;
use crate::scalar::{from_c64, modulus, to_c64, unimodular, Real};
use crate::{CMatrix, Error, Result};

pub(crate) fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// A matrix-valued function of one complex variable.
pub trait MatrixFunction<T: Real> {
    fn out_dim(&self) -> usize;
    fn in_dim(&self) -> usize;
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>>;

    /// A finite superset of the singular points, if known.
    fn singular_points(&self) -> Vec<Complex<T>> {
        Vec::new()
    }

    fn derivative(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        cauchy_derivative(self, z)
    }

    /// `(f(λ) − f(μ))/(λ − μ)`, continued by `f′(λ)` on the diagonal.
    fn diff_quotient(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        cauchy_diff_quotient(self, lambda, mu)
    }
}

impl<T: Real, F: MatrixFunction<T> + ?Sized> MatrixFunction<T> for &F {
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        (**self).eval(z)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        (**self).singular_points()
    }
    fn derivative(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        (**self).derivative(z)
    }
    fn diff_quotient(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        (**self).diff_quotient(lambda, mu)
    }
}

impl<T: Real, F: MatrixFunction<T> + ?Sized> MatrixFunction<T> for Box<F> {
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        (**self).eval(z)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        (**self).singular_points()
    }
    fn derivative(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        (**self).derivative(z)
    }
    fn diff_quotient(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        (**self).diff_quotient(lambda, mu)
    }
}

const CAUCHY_NODES: usize = 32;

fn cauchy_radius<T: Real, F: MatrixFunction<T> + ?Sized>(f: &F, z: Complex<T>, min_radius: T) -> T {
    let mut r = T::lit(1e-2).max(min_radius);
    for p in f.singular_points() {
        let d = modulus(p - z);
        if d > T::zero() {
            r = r.min(T::lit(0.5) * d);
        }
    }
    r
}

/// `f′(z)` by the trapezoidal rule on a small circle around `z`.
pub fn cauchy_derivative<T: Real, F: MatrixFunction<T> + ?Sized>(f: &F, z: Complex<T>) -> Result<CMatrix<T>> {
    let r = cauchy_radius(f, z, T::zero());
    let n = CAUCHY_NODES;
    let mut acc = CMatrix::zeros(f.out_dim(), f.in_dim());
    for j in 0..n {
        let w = unimodular(T::two_pi() * T::lit(j as f64 / n as f64)) * r;
        acc += f.eval(z + w)? * (one::<T>() / w);
    }
    Ok(acc * Complex::new(T::one() / T::lit(n as f64), T::zero()))
}

/// Divided difference: direct quotient for well separated points, contour
/// integral `(1/2πi)∮ f(ζ)/((ζ−λ)(ζ−μ)) dζ` otherwise.
pub fn cauchy_diff_quotient<T: Real, F: MatrixFunction<T> + ?Sized>(
    f: &F,
    lambda: Complex<T>,
    mu: Complex<T>,
) -> Result<CMatrix<T>> {
    let d = lambda - mu;
    if modulus(d) > T::lit(1e-3) {
        return Ok((f.eval(lambda)? - f.eval(mu)?) * (one::<T>() / d));
    }
    let c = (lambda + mu) * T::lit(0.5);
    let r = cauchy_radius(f, c, T::lit(4.0) * modulus(d));
    let n = CAUCHY_NODES;
    let mut acc = CMatrix::zeros(f.out_dim(), f.in_dim());
    for j in 0..n {
        let w = unimodular(T::two_pi() * T::lit(j as f64 / n as f64)) * r;
        let zeta = c + w;
        acc += f.eval(zeta)? * (w / ((zeta - lambda) * (zeta - mu)));
    }
    Ok(acc * Complex::new(T::one() / T::lit(n as f64), T::zero()))
}

/// `s(λ) = H + (λ−c)G(I − (λ−c)T)⁻¹F` with expansion center `c` (default 0,
/// where the formula reads `H + λG(I−λT)⁻¹F`).
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrixFunction<T: Real> {
    t: CMatrix<T>,
    f: CMatrix<T>,
    g: CMatrix<T>,
    h: CMatrix<T>,
    center: Complex<T>,
}

impl<T: Real> RationalMatrixFunction<T> {
    pub fn new(t: CMatrix<T>, f: CMatrix<T>, g: CMatrix<T>, h: CMatrix<T>) -> Result<Self> {
        Self::with_center(t, f, g, h, czero())
    }

    pub fn with_center(t: CMatrix<T>, f: CMatrix<T>, g: CMatrix<T>, h: CMatrix<T>, center: Complex<T>) -> Result<Self> {
        let d = t.nrows();
        let (p, q) = h.shape();
        if t.ncols() != d || f.shape() != (d, q) || g.shape() != (p, d) {
            return Err(Error::InvalidInput(format!(
                "inconsistent realization: T {:?}, F {:?}, G {:?}, H {:?}",
                t.shape(),
                f.shape(),
                g.shape(),
                h.shape()
            )));
        }
        Ok(Self { t, f, g, h, center })
    }

    /// The constant function `H`.
    pub fn constant(h: CMatrix<T>) -> Self {
        let (p, q) = h.shape();
        Self { t: CMatrix::zeros(0, 0), f: CMatrix::zeros(0, q), g: CMatrix::zeros(p, 0), h, center: czero() }
    }

    /// `λ·I_n`.
    pub fn lambda(n: usize) -> Self {
        Self { t: CMatrix::zeros(n, n), f: identity(n), g: identity(n), h: CMatrix::zeros(n, n), center: czero() }
    }

    /// `λ⁻¹·I_n`, expanded around `λ = 1/2`.
    pub fn reciprocal_lambda(n: usize) -> Self {
        let c = T::lit(0.5);
        let id = identity::<T>(n);
        Self {
            t: &id * Complex::new(-T::one() / c, T::zero()),
            f: id.clone(),
            g: &id * Complex::new(-T::one() / (c * c), T::zero()),
            h: &id * Complex::new(T::one() / c, T::zero()),
            center: Complex::new(c, T::zero()),
        }
    }

    /// Scalar disk automorphism `(λ−α)/(1−ᾱλ)`.
    pub fn blaschke_factor(alpha: Complex<T>) -> Self {
        let m = |z: Complex<T>| CMatrix::from_element(1, 1, z);
        Self {
            t: m(alpha.conj()),
            f: m(one()),
            g: m(Complex::new(T::one() - alpha.norm_sqr(), T::zero())),
            h: m(-alpha),
            center: czero(),
        }
    }

    pub fn t(&self) -> &CMatrix<T> {
        &self.t
    }
    pub fn f(&self) -> &CMatrix<T> {
        &self.f
    }
    pub fn g(&self) -> &CMatrix<T> {
        &self.g
    }
    pub fn h(&self) -> &CMatrix<T> {
        &self.h
    }
    pub fn center(&self) -> Complex<T> {
        self.center
    }
    pub fn state_dim(&self) -> usize {
        self.t.nrows()
    }
    pub fn out_dim(&self) -> usize {
        self.h.nrows()
    }
    pub fn in_dim(&self) -> usize {
        self.h.ncols()
    }

    /// `(I − (z−c)T)⁻¹`.
    fn resolvent(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        let d = self.state_dim();
        let a = identity::<T>(d) - &self.t * (z - self.center);
        solve(&a, &identity(d)).ok_or_else(|| Error::Pole(to_c64(z)))
    }

    pub fn evaluate(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        if self.state_dim() == 0 {
            return Ok(self.h.clone());
        }
        let r = self.resolvent(z)?;
        Ok(&self.h + &self.g * r * &self.f * (z - self.center))
    }

    /// `s′(z) = G R(z)² F`.
    pub fn derivative_at(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        if self.state_dim() == 0 {
            return Ok(CMatrix::zeros(self.out_dim(), self.in_dim()));
        }
        let r = self.resolvent(z)?;
        Ok(&self.g * &r * &r * &self.f)
    }

    /// `(s(λ)−s(μ))/(λ−μ) = G R(λ) R(μ) F`, exact on and off the diagonal.
    pub fn divided_difference(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        if self.state_dim() == 0 {
            return Ok(CMatrix::zeros(self.out_dim(), self.in_dim()));
        }
        Ok(&self.g * self.resolvent(lambda)? * self.resolvent(mu)? * &self.f)
    }

    /// Poles `c + 1/e` over the nonzero eigenvalues `e` of `T`.
    pub fn poles(&self) -> Result<Vec<Complex<T>>> {
        let eig = linalg::eigenvalues(&self.t)?;
        let tiny = T::default_epsilon() * T::lit(16.0) * linalg::scale(&self.t);
        Ok(eig.into_iter().filter(|e| modulus(*e) > tiny).map(|e| self.center + one::<T>() / e).collect())
    }

    /// Same function expanded around a new center (which must be regular).
    pub fn recenter(&self, center: Complex<T>) -> Result<Self> {
        let delta = center - self.center;
        if self.state_dim() == 0 {
            return Ok(Self { center, ..self.clone() });
        }
        let k = self.resolvent(center)?;
        Ok(Self {
            h: &self.h + &self.g * &k * &self.f * delta,
            t: &k * &self.t,
            f: &k * &self.f,
            g: &self.g * &k,
            center,
        })
    }

    /// Series connection `self(λ)·other(λ)`, expanded at `self`'s center.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.in_dim() != other.out_dim() {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.out_dim(),
                self.in_dim(),
                other.out_dim(),
                other.in_dim()
            )));
        }
        let y = if other.center == self.center { other.clone() } else { other.recenter(self.center)? };
        let x = self;
        let (dx, dy) = (x.state_dim(), y.state_dim());
        let t = linalg::block2(&x.t, &(&x.f * &y.g), &CMatrix::zeros(dy, dx), &y.t);
        let f = linalg::vstack(&[&(&x.f * &y.h), &y.f]);
        let g = linalg::hstack(&[&x.g, &(&x.h * &y.g)]);
        Ok(Self { t, f, g, h: &x.h * &y.h, center: self.center })
    }

    /// Pointwise inverse; needs `s(center)` invertible.
    pub fn inverse(&self) -> Result<Self> {
        if self.out_dim() != self.in_dim() {
            return Err(Error::InvalidInput("only square functions can be inverted".into()));
        }
        let hinv = linalg::inverse(&self.h)
            .ok_or_else(|| Error::Domain("function is not invertible at its expansion center".into()))?;
        Ok(Self {
            t: &self.t - &self.f * &hinv * &self.g,
            f: &self.f * &hinv,
            g: -(&hinv * &self.g),
            h: hinv,
            center: self.center,
        })
    }

    /// `s~(λ) = s(λ̄)*`.
    pub fn reflect(&self) -> Self {
        Self {
            t: self.t.adjoint(),
            f: self.g.adjoint(),
            g: self.f.adjoint(),
            h: self.h.adjoint(),
            center: self.center.conj(),
        }
    }

    /// `A·s(λ)·B` for constant matrices.
    pub fn sandwich(&self, a: &CMatrix<T>, b: &CMatrix<T>) -> Self {
        Self { t: self.t.clone(), f: &self.f * b, g: a * &self.g, h: a * &self.h * b, center: self.center }
    }

    /// Removes unreachable and unobservable state directions. Directions whose
    /// coupling falls below `rel_tol` times the data scale are dropped.
    pub fn reduce(&self, rel_tol: T) -> Self {
        if self.state_dim() == 0 {
            return self.clone();
        }
        let sc = norm2(&self.t).max(norm2(&self.f)).max(norm2(&self.g)).max(T::one());
        let tol = rel_tol * sc;
        let q = krylov_basis(&self.t, &self.f, tol);
        let (t, f, g) = (q.adjoint() * &self.t * &q, q.adjoint() * &self.f, &self.g * &q);
        let w = krylov_basis(&t.adjoint(), &g.adjoint(), tol);
        Self { t: w.adjoint() * &t * &w, f: w.adjoint() * &f, g: &g * &w, h: self.h.clone(), center: self.center }
    }
}

/// Orthonormal basis of `span{TᵏF}` by the staircase iteration.
fn krylov_basis<T: Real>(t: &CMatrix<T>, f: &CMatrix<T>, tol: T) -> CMatrix<T> {
    let d = t.nrows();
    let mut basis = orth_abs(f, tol);
    let mut last = basis.clone();
    while basis.ncols() < d && last.ncols() > 0 {
        let mut cand = t * &last;
        cand -= &basis * (basis.adjoint() * &cand);
        cand -= &basis * (basis.adjoint() * &cand);
        let new = orth_abs(&cand, tol);
        if new.ncols() == 0 {
            break;
        }
        basis = linalg::hstack(&[&basis, &new]);
        last = new;
    }
    basis
}

fn orth_abs<T: Real>(a: &CMatrix<T>, tol: T) -> CMatrix<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return CMatrix::zeros(a.nrows(), 0);
    }
    let svd = linalg::Svd::new(a);
    let keep: Vec<usize> = (0..svd.values.len().min(a.nrows())).filter(|&k| svd.values[k] > tol).collect();
    CMatrix::from_fn(a.nrows(), keep.len(), |r, c| svd.u[(r, keep[c])])
}

impl<T: Real> MatrixFunction<T> for RationalMatrixFunction<T> {
    fn out_dim(&self) -> usize {
        self.h.nrows()
    }
    fn in_dim(&self) -> usize {
        self.h.ncols()
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        self.evaluate(z)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        self.poles().unwrap_or_default()
    }
    fn derivative(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        self.derivative_at(z)
    }
    fn diff_quotient(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        self.divided_difference(lambda, mu)
    }
}

/// Matrix function given by a closure.
pub struct FnMatrixFunction<T: Real, F> {
    out_dim: usize,
    in_dim: usize,
    f: F,
    singular: Vec<Complex<T>>,
}

impl<T: Real, F: Fn(Complex<T>) -> Result<CMatrix<T>>> FnMatrixFunction<T, F> {
    pub fn new(out_dim: usize, in_dim: usize, f: F) -> Self {
        Self { out_dim, in_dim, f, singular: Vec::new() }
    }

    pub fn with_singular_points(mut self, points: Vec<Complex<T>>) -> Self {
        self.singular = points;
        self
    }
}

impl<T: Real, F: Fn(Complex<T>) -> Result<CMatrix<T>>> MatrixFunction<T> for FnMatrixFunction<T, F> {
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        (self.f)(z)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        self.singular.clone()
    }
}

/// Pointwise product `a(λ)·b(λ)`.
pub struct Product<A, B>(pub A, pub B);

impl<T: Real, A: MatrixFunction<T>, B: MatrixFunction<T>> MatrixFunction<T> for Product<A, B> {
    fn out_dim(&self) -> usize {
        self.0.out_dim()
    }
    fn in_dim(&self) -> usize {
        self.1.in_dim()
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        Ok(self.0.eval(z)? * self.1.eval(z)?)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        let mut s = self.0.singular_points();
        s.extend(self.1.singular_points());
        s
    }
}

/// Result of a sampled Schur-class test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurTest {
    pub is_schur: bool,
    /// Largest operator norm seen (infinite when a pole was found).
    pub worst_norm: f64,
    /// A confirmed pole in the closed disk, if any.
    pub pole: Option<[f64; 2]>,
}

/// Deterministic quasi-random points of the disk: a golden-angle spiral with a
/// seeded rotation, area-uniform in radius.
pub fn spiral_points<T: Real>(n: usize, radius: f64, seed: u64) -> Vec<Complex<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let r = radius * ((k as f64 + 0.5) / n as f64).sqrt();
            let th = offset + golden * k as f64;
            from_c64(Complex::new(r * th.cos(), r * th.sin()))
        })
        .collect()
}

/// Checks `‖f‖ ≤ 1 + tol` on `n_samples` spiral points of the disk and as
/// many points of the circle, after ruling out poles in the closed disk.
pub fn schur_membership<T: Real, F: MatrixFunction<T> + ?Sized>(f: &F, n_samples: usize, tol: T, seed: u64) -> SchurTest {
    let limit = T::one() - T::lit(1e-6);
    let near: Vec<Complex<T>> = f.singular_points().into_iter().filter(|z| modulus(*z) <= T::one() + T::lit(1e-6)).collect();
    if !near.is_empty() {
        match disk_poles(f, T::one() + T::lit(1e-6)) {
            Ok(poles) => {
                if let Some(p) = poles.first() {
                    let z = to_c64(p.location);
                    return SchurTest { is_schur: false, worst_norm: f64::INFINITY, pole: Some([z.re, z.im]) };
                }
            }
            Err(Error::UnsupportedPoleStructure(_)) => {
                let z = to_c64(near[0]);
                return SchurTest { is_schur: false, worst_norm: f64::INFINITY, pole: Some([z.re, z.im]) };
            }
            Err(_) => {}
        }
    }
    let mut points = spiral_points::<T>(n_samples, limit.to_f64_lossy(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    points.extend((0..n_samples).map(|k| {
        let th = phase + std::f64::consts::TAU * k as f64 / n_samples.max(1) as f64;
        from_c64::<T>(Complex::new(th.cos(), th.sin()))
    }));
    let mut worst = T::zero();
    for z in points {
        match f.eval(z) {
            Ok(v) => worst = worst.max(norm2(&v)),
            Err(_) => {
                let zz = to_c64(z);
                return SchurTest { is_schur: false, worst_norm: f64::INFINITY, pole: Some([zz.re, zz.im]) };
            }
        }
    }
    SchurTest { is_schur: worst <= T::one() + tol, worst_norm: worst.to_f64_lossy(), pole: None }
}

/// `(I − s(λ)s(ω)*)/(1 − λω̄)`.
pub fn schur_kernel<T: Real, F: MatrixFunction<T> + ?Sized>(f: &F, lambda: Complex<T>, omega: Complex<T>) -> Result<CMatrix<T>> {
    let den = one::<T>() - lambda * omega.conj();
    if modulus(den) <= T::lit(1e-14) {
        return Err(Error::Domain(format!("1 - λω̄ vanishes at λ = {lambda}, ω = {omega}")));
    }
    let sl = f.eval(lambda).map_err(as_domain)?;
    let so = f.eval(omega).map_err(as_domain)?;
    Ok((identity::<T>(f.out_dim()) - sl * so.adjoint()) * (one::<T>() / den))
}

fn as_domain(e: Error) -> Error {
    match e {
        Error::Pole(z) => Error::Domain(format!("pole at {z}")),
        other => other,
    }
}

/// The Schur kernel of `f` as a [`KernelEvaluator`] on the disk minus the
/// singular points of `f`.
pub struct SchurKernel<F> {
    pub function: F,
    exclusion: f64,
}

impl<F> SchurKernel<F> {
    pub fn new(function: F) -> Self {
        Self { function, exclusion: 1e-3 }
    }
}

impl<T: Real, F: MatrixFunction<T>> KernelEvaluator<T> for SchurKernel<F> {
    fn size(&self) -> usize {
        self.function.out_dim()
    }
    fn eval(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        schur_kernel(&self.function, lambda, mu)
    }
    fn contains(&self, z: Complex<T>) -> bool {
        modulus(z) < T::one() && self.function.singular_points().iter().all(|p| modulus(*p - z) > T::lit(self.exclusion))
    }
}

/// `Δ_s = [[I, −s], [−s*, I]]` for a value `s` of size `p×q`.
pub fn delta_matrix<T: Real>(s: &CMatrix<T>) -> CMatrix<T> {
    let (p, q) = s.shape();
    linalg::block2(&identity(p), &(-s), &(-s.adjoint()), &identity(q))
}

/// Moore–Penrose pseudoinverse of `Δ_s(μ)` for `μ` on the unit circle.
pub fn delta_pinv<T: Real, F: MatrixFunction<T> + ?Sized>(f: &F, mu: Complex<T>, rank_tol: T) -> Result<CMatrix<T>> {
    if (modulus(mu) - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::Domain(format!("{mu} is not on the unit circle")));
    }
    let s = f.eval(mu).map_err(as_domain)?;
    Ok(linalg::pinv(&delta_matrix(&s), rank_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_disk_point, random_matrix, real_matrix};
    use crate::scalar::cplx;
    use proptest::prelude::*;

    type R = RationalMatrixFunction<f64>;
    type M = CMatrix<f64>;

    fn scalar(z: f64) -> M {
        real_matrix(1, 1, &[z])
    }

    #[test]
    fn evaluation_examples() {
        let h = real_matrix::<f64>(2, 1, &[1.0, -2.0]);
        let c = R::constant(h.clone());
        assert_eq!(c.evaluate(cplx(0.3, 0.4)).unwrap(), h);

        let id = R::new(scalar(0.0), scalar(1.0), scalar(1.0), scalar(0.0)).unwrap();
        let z = cplx(0.2, -0.7);
        assert!((id.evaluate(z).unwrap()[(0, 0)] - z).norm() < 1e-15);

        let alpha = cplx::<f64>(0.3, 0.4);
        let b = R::blaschke_factor(alpha);
        assert!((b.evaluate(cplx(0.0, 0.0)).unwrap()[(0, 0)] + alpha).norm() < 1e-15);
        let z = cplx(-0.1, 0.5);
        let expect = (z - alpha) / (1.0 - alpha.conj() * z);
        assert!((b.evaluate(z).unwrap()[(0, 0)] - expect).norm() < 1e-14);
    }

    #[test]
    fn pole_is_reported() {
        let b = R::blaschke_factor(cplx(0.5, 0.0));
        assert!(matches!(b.evaluate(cplx(2.0, 0.0)), Err(Error::Pole(_))));
        let poles = b.poles().unwrap();
        assert!((poles[0] - cplx(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn reciprocal_lambda_and_inverse() {
        let r = R::reciprocal_lambda(1);
        let z = cplx(0.3, -0.2);
        assert!((r.evaluate(z).unwrap()[(0, 0)] - 1.0 / z).norm() < 1e-13);
        assert!((r.poles().unwrap()[0]).norm() < 1e-14);
        let lam = R::lambda(1).recenter(cplx(0.5, 0.0)).unwrap().inverse().unwrap();
        assert!((lam.evaluate(z).unwrap()[(0, 0)] - 1.0 / z).norm() < 1e-13);
    }

    #[test]
    fn derivative_and_divided_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = R::new(
            random_matrix::<f64, _>(&mut rng, 3, 3) * cplx(0.3, 0.0),
            random_matrix(&mut rng, 3, 2),
            random_matrix(&mut rng, 2, 3),
            random_matrix(&mut rng, 2, 2),
        )
        .unwrap();
        let (l, m) = (cplx(0.2, 0.1), cplx(-0.3, 0.4));
        let direct = (f.evaluate(l).unwrap() - f.evaluate(m).unwrap()) / (l - m);
        assert!(norm2(&(f.divided_difference(l, m).unwrap() - direct)) < 1e-12);
        let cd = cauchy_derivative(&f, l).unwrap();
        assert!(norm2(&(f.derivative_at(l).unwrap() - &cd)) < 1e-10);
        let closure = FnMatrixFunction::new(2, 2, |z| f.evaluate(z));
        assert!(norm2(&(closure.diff_quotient(l, l + cplx(1e-6, 0.0)).unwrap() - cd)) < 1e-5);
    }

    #[test]
    fn product_recenter_reduce() {
        let a = R::blaschke_factor(cplx(0.3, 0.2));
        let b = R::blaschke_factor(cplx(-0.5, 0.1));
        let ab = a.product(&b).unwrap();
        let z = cplx(0.1, 0.6);
        let expect = a.evaluate(z).unwrap() * b.evaluate(z).unwrap();
        assert!(norm2(&(ab.evaluate(z).unwrap() - &expect)) < 1e-14);
        let moved = ab.recenter(cplx(0.2, -0.3)).unwrap();
        assert!(norm2(&(moved.evaluate(z).unwrap() - &expect)) < 1e-13);
        // b · b⁻¹ = 1 reduces to a constant
        let cancel = b.product(&b.inverse().unwrap()).unwrap().reduce(1e-10);
        assert_eq!(cancel.state_dim(), 0);
        assert!((cancel.evaluate(z).unwrap()[(0, 0)] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn schur_membership_examples() {
        let zero = R::constant(M::zeros(2, 2));
        let t = schur_membership(&zero, 64, 1e-9, 1);
        assert!(t.is_schur && t.worst_norm == 0.0);
        let lam = R::lambda(1);
        let t = schur_membership(&lam, 64, 1e-9, 1);
        assert!(t.is_schur && t.worst_norm <= 1.0 + 1e-12);
        let inv = R::reciprocal_lambda(1);
        let t = schur_membership(&inv, 64, 1e-9, 1);
        assert!(!t.is_schur);
        let p = t.pole.unwrap();
        assert!(p[0].abs() < 1e-8 && p[1].abs() < 1e-8);
    }

    #[test]
    fn schur_kernel_examples() {
        let inv = R::reciprocal_lambda(1);
        let k = schur_kernel(&inv, cplx(0.5, 0.0), cplx(0.5, 0.0)).unwrap();
        assert!((k[(0, 0)] - cplx(-4.0, 0.0)).norm() < 1e-12);
        let zero = R::constant(M::zeros(1, 1));
        let (l, w) = (cplx(0.3, 0.1), cplx(-0.2, 0.5));
        let k = schur_kernel(&zero, l, w).unwrap();
        assert!((k[(0, 0)] - 1.0 / (1.0 - l * w.conj())).norm() < 1e-15);
    }

    #[test]
    fn delta_pinv_examples() {
        let zero = R::constant(M::zeros(1, 2));
        let mu = cplx(0.0, 1.0);
        assert!(norm2(&(delta_pinv(&zero, mu, 1e-10).unwrap() - identity::<f64>(3))) < 1e-14);
        let theta = 0.7f64;
        let unimod = R::constant(M::from_element(1, 1, Complex::from_polar(1.0, theta)));
        let x = delta_pinv(&unimod, mu, 1e-10).unwrap();
        let d = delta_matrix(&unimod.evaluate(mu).unwrap());
        assert_eq!(linalg::rank(&d, 1e-10), 1);
        assert!(norm2(&(&x - &d / cplx(4.0, 0.0))) < 1e-14);
    }

    proptest! {
        #[test]
        fn evaluation_matches_scalar_formula(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Complex<f64> = random_disk_point(&mut rng, 0.9);
            let b: Complex<f64> = random_disk_point(&mut rng, 0.9);
            let f = R::blaschke_factor(a).product(&R::blaschke_factor(b)).unwrap().sandwich(&scalar(0.5), &scalar(1.0));
            for _ in 0..100 {
                let z: Complex<f64> = random_disk_point(&mut rng, 1.0);
                let exact = 0.5 * (z - a) / (1.0 - a.conj() * z) * (z - b) / (1.0 - b.conj() * z);
                prop_assert!((f.evaluate(z).unwrap()[(0, 0)] - exact).norm() <= 1e-12);
            }
        }

        #[test]
        fn delta_pinv_penrose(seed in 0u64..500, unimodular_value in proptest::bool::ANY) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s: M = random_matrix(&mut rng, 2, 2);
            if unimodular_value {
                s = linalg::random_unitary(&mut rng, 2);
            }
            let d = delta_matrix(&s);
            let x = linalg::pinv(&d, 1e-10);
            prop_assert!(norm2(&(&d * &x * &d - &d)) <= 1e-10 * linalg::scale(&d).powi(2));
            prop_assert!(norm2(&(&x * &d * &x - &x)) <= 1e-10 * linalg::scale(&x).powi(2));
            prop_assert!(linalg::hermiticity_defect(&(&d * &x)) <= 1e-10);
            prop_assert!(linalg::hermiticity_defect(&(&x * &d)) <= 1e-10);
        }
    }
}
