use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{schur_membership, BlaschkePotapovProduct, BpFactor, MatrixFunction, RationalMatrixFunction, SchurKernel};
use crate::linalg::{self, norm2};
use crate::pontryagin::{estimate_negative_squares, NegativeSquares, SampleOptions};
use crate::scalar::{modulus, to_c64, unimodular, Real};
use crate::{CMatrix, Error, Result};

const CONTOUR_NODES: usize = 64;
const REMOVABLE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A confirmed pole with its leading Laurent data.
#[derive(Clone, Debug)]
pub struct PoleInfo<T: Real> {
    pub location: Complex<T>,
    /// 1 for simple poles; otherwise the highest nonvanishing negative power
    /// among the three inspected.
    pub order: usize,
    /// Coefficient of `(λ−α)⁻¹`.
    pub residue: CMatrix<T>,
}

/// Negative Laurent coefficients `c_{−1}, …, c_{−k}` of `f` at `α` from the
/// trapezoidal rule on `|λ−α| = r`, and the largest norm of `f` on the contour.
pub fn laurent_coefficients<T: Real, F: MatrixFunction<T> + ?Sized>(
    f: &F,
    alpha: Complex<T>,
    r: T,
    k_max: usize,
) -> Result<(Vec<CMatrix<T>>, T)> {
    let n = CONTOUR_NODES;
    let mut coeffs = vec![CMatrix::zeros(f.out_dim(), f.in_dim()); k_max];
    let mut max_norm = T::zero();
    for j in 0..n {
        let w = unimodular(T::two_pi() * T::lit(j as f64 / n as f64)) * r;
        let v = f.eval(alpha + w)?;
        max_norm = max_norm.max(norm2(&v));
        let mut pw = w;
        for c in coeffs.iter_mut() {
            *c += &v * pw;
            pw *= w;
        }
    }
    let inv_n = Complex::new(T::one() / T::lit(n as f64), T::zero());
    for c in coeffs.iter_mut() {
        *c *= inv_n;
    }
    Ok((coeffs, max_norm))
}

fn cluster<T: Real>(points: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let mut out: Vec<Complex<T>> = Vec::new();
    for p in points {
        if out.iter().all(|q| modulus(*q - p) > T::lit(1e-7)) {
            out.push(p);
        }
    }
    out
}

/// Singular points of `f` with `|z| < radius` that are confirmed as poles by
/// their Laurent coefficients, sorted by modulus.
pub fn disk_poles<T: Real, F: MatrixFunction<T> + ?Sized>(f: &F, radius: T) -> Result<Vec<PoleInfo<T>>> {
    let all = cluster(f.singular_points());
    let mut out = Vec::new();
    for (i, &alpha) in all.iter().enumerate() {
        if modulus(alpha) >= radius {
            continue;
        }
        let mut r = T::lit(0.1);
        for (j, &other) in all.iter().enumerate() {
            if i != j {
                r = r.min(T::lit(0.3) * modulus(other - alpha));
            }
        }
        let (coeffs, max_norm) = laurent_coefficients(f, alpha, r, 3)?;
        let thresh = T::tol(REMOVABLE_TOL) * max_norm.max(T::lit(1e-300));
        let mut order = 0;
        let mut rk = T::one();
        for (k, c) in coeffs.iter().enumerate() {
            rk *= r;
            if norm2(c) / rk > thresh {
                order = k + 1;
            }
        }
        if order > 0 {
            out.push(PoleInfo { location: alpha, order, residue: coeffs[0].clone() });
        }
    }
    out.sort_by(|a, b| {
        modulus(a.location)
            .partial_cmp(&modulus(b.location))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.location.im.partial_cmp(&b.location.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(out)
}

/// `s = b_l⁻¹ s_l` (left) or `s = s_r b_r⁻¹` (right).
#[derive(Clone, Debug)]
pub struct KLFactorization<T: Real> {
    pub side: Side,
    pub blaschke_part: BlaschkePotapovProduct<T>,
    pub schur_part: RationalMatrixFunction<T>,
    /// Degree of the Blaschke–Potapov part.
    pub certified_degree: usize,
    /// Sampled negative-squares count of the Schur kernel of the input.
    pub kernel_estimate: Option<NegativeSquares>,
}

impl<T: Real> KLFactorization<T> {
    /// `‖b_l(λ)f(λ) − s_l(λ)‖` (left) or `‖f(λ)b_r(λ) − s_r(λ)‖` (right), maximized over `points`.
    pub fn reconstruction_residual<F: MatrixFunction<T> + ?Sized>(&self, f: &F, points: &[Complex<T>]) -> Result<T> {
        let mut worst = T::zero();
        for &z in points {
            let b = self.blaschke_part.evaluate(z)?;
            let fz = f.eval(z)?;
            let prod = match self.side {
                Side::Left => b * fz,
                Side::Right => fz * b,
            };
            worst = worst.max(norm2(&(prod - self.schur_part.evaluate(z)?)));
        }
        Ok(worst)
    }

    /// Smallest rank of `[b_l(λ), s_l(λ)]` (left) or `[b_r(λ); s_r(λ)]` (right)
    /// over `points`.
    pub fn rank_condition(&self, points: &[Complex<T>]) -> Result<usize> {
        let mut worst = usize::MAX;
        for &z in points {
            let b = self.blaschke_part.evaluate(z)?;
            let s = self.schur_part.evaluate(z)?;
            let m = match self.side {
                Side::Left => linalg::hstack(&[&b, &s]),
                Side::Right => linalg::vstack(&[&b, &s]),
            };
            worst = worst.min(linalg::rank(&m, T::tol(1e-10)));
        }
        Ok(worst)
    }

    /// Whether the kernel estimate (if any) agrees with the degree.
    pub fn is_consistent(&self) -> bool {
        self.kernel_estimate.as_ref().is_none_or(|e| e.kappa == self.certified_degree)
    }
}

/// Left Kreĭn–Langer factorization by peeling simple disk poles one rank at a
/// time.
pub fn krein_langer_left<T: Real>(f: &RationalMatrixFunction<T>) -> Result<KLFactorization<T>> {
    let mut kl = peel_left(f)?;
    kl.kernel_estimate = Some(kernel_count(f)?);
    Ok(kl)
}

/// Right factorization, obtained from the left one of `f~(λ) = f(λ̄)*`.
pub fn krein_langer_right<T: Real>(f: &RationalMatrixFunction<T>) -> Result<KLFactorization<T>> {
    let mirrored = peel_left(&f.reflect())?;
    Ok(KLFactorization {
        side: Side::Right,
        blaschke_part: mirrored.blaschke_part.reflect(),
        schur_part: mirrored.schur_part.reflect(),
        certified_degree: mirrored.certified_degree,
        kernel_estimate: Some(kernel_count(f)?),
    })
}

fn kernel_count<T: Real>(f: &RationalMatrixFunction<T>) -> Result<NegativeSquares> {
    estimate_negative_squares(&SchurKernel::new(f), &SampleOptions::default())
}

fn peel_left<T: Real>(f: &RationalMatrixFunction<T>) -> Result<KLFactorization<T>> {
    let p = f.out_dim();
    let mut current = f.clone();
    let mut b = BlaschkePotapovProduct::identity(p);
    let max_steps = f.state_dim() + 1;
    for _ in 0..=max_steps {
        let poles = disk_poles(&current, T::one())?;
        let Some(pole) = poles.first() else {
            return finish(b, current);
        };
        if pole.order > 1 {
            return Err(Error::UnsupportedPoleStructure(format!(
                "pole of order {} at {}",
                pole.order,
                to_c64(pole.location)
            )));
        }
        let top = linalg::range_basis(&pole.residue, T::zero());
        if top.ncols() == 0 {
            return Err(Error::KlConsistency("pole with vanishing residue".into()));
        }
        let factor = BpFactor::rank_one(pole.location, &top.columns(0, 1).into_owned());
        let fr = factor.realization().recenter(current.center())?;
        current = fr.product(&current)?.reduce(T::tol(1e-10));
        b = BlaschkePotapovProduct::new(p, vec![factor])?.concat(&b)?;
    }
    Err(Error::KlConsistency("pole peeling did not terminate".into()))
}

fn finish<T: Real>(b: BlaschkePotapovProduct<T>, current: RationalMatrixFunction<T>) -> Result<KLFactorization<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let schur_part = if current.center() != zero {
        current.recenter(zero).unwrap_or(current)
    } else {
        current
    };
    let test = schur_membership(&schur_part, 64, T::tol(1e-8), 0);
    if !test.is_schur {
        return Err(Error::NotGeneralizedSchur(format!(
            "peeled function has norm {:.6e} on the disk",
            test.worst_norm
        )));
    }
    let certified_degree = b.degree();
    Ok(KLFactorization { side: Side::Left, blaschke_part: b, schur_part, certified_degree, kernel_estimate: None })
}
