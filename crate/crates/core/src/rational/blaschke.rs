use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{one, MatrixFunction, RationalMatrixFunction};
use crate::linalg::{self, identity, norm2};
use crate::scalar::{modulus, to_c64, Real};
use crate::{CMatrix, Error, Result};

/// `I − P + ((λ−α)/(1−ᾱλ))P` with an orthogonal projection `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct BpFactor<T: Real> {
    pub alpha: Complex<T>,
    pub projection: CMatrix<T>,
}

impl<T: Real> BpFactor<T> {
    /// Rank-one factor with `P = uu*/‖u‖²`.
    pub fn rank_one(alpha: Complex<T>, u: &CMatrix<T>) -> Self {
        let n2 = u.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        Self { alpha, projection: u * u.adjoint() * Complex::new(T::one() / n2, T::zero()) }
    }

    pub fn rank(&self) -> usize {
        linalg::hermitian_eigen(&self.projection).0.iter().filter(|e| **e > T::lit(0.5)).count()
    }

    fn phi(&self, z: Complex<T>) -> Result<Complex<T>> {
        let den = one::<T>() - self.alpha.conj() * z;
        if modulus(den) <= T::lit(1e-14) {
            return Err(Error::Pole(to_c64(z)));
        }
        Ok((z - self.alpha) / den)
    }

    pub fn evaluate(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        let phi = self.phi(z)?;
        let m = self.projection.nrows();
        Ok(identity::<T>(m) - &self.projection + &self.projection * phi)
    }

    /// `I − P + ((1−ᾱλ)/(λ−α))P`.
    pub fn evaluate_inverse(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        let num = z - self.alpha;
        if modulus(num) <= T::lit(1e-14) {
            return Err(Error::Pole(to_c64(z)));
        }
        let inv = (one::<T>() - self.alpha.conj() * z) / num;
        let m = self.projection.nrows();
        Ok(identity::<T>(m) - &self.projection + &self.projection * inv)
    }

    /// Orthonormal columns spanning the range of `P`.
    pub fn range(&self) -> CMatrix<T> {
        let (vals, vecs) = linalg::hermitian_eigen(&self.projection);
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > T::lit(0.5)).collect();
        CMatrix::from_fn(vecs.nrows(), keep.len(), |r, c| vecs[(r, keep[c])])
    }

    /// Realization `T = ᾱI_r, F = U*, G = (1−|α|²)U, H = I − (1+α)P`.
    pub fn realization(&self) -> RationalMatrixFunction<T> {
        let u = self.range();
        let r = u.ncols();
        let m = self.projection.nrows();
        RationalMatrixFunction::new(
            identity::<T>(r) * self.alpha.conj(),
            u.adjoint(),
            &u * Complex::new(T::one() - self.alpha.norm_sqr(), T::zero()),
            identity::<T>(m) - &self.projection * (one::<T>() + self.alpha),
        )
        .expect("consistent factor realization")
    }
}

/// Ordered product `b_1 b_2 ⋯ b_k` of Blaschke–Potapov factors on `ℂ^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkePotapovProduct<T: Real> {
    dim: usize,
    factors: Vec<BpFactor<T>>,
}

/// Serializable view of a product (complex numbers as `[re, im]`).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BpSummary {
    pub alphas: Vec<[f64; 2]>,
    pub ranks: Vec<usize>,
    pub degree: usize,
}

impl<T: Real> BlaschkePotapovProduct<T> {
    pub fn identity(dim: usize) -> Self {
        Self { dim, factors: Vec::new() }
    }

    pub fn new(dim: usize, factors: Vec<BpFactor<T>>) -> Result<Self> {
        let mut b = Self::identity(dim);
        for f in factors {
            b.push(f)?;
        }
        Ok(b)
    }

    /// Scalar product `∏ (λ−α_j)/(1−ᾱ_jλ)`.
    pub fn scalar(alphas: &[Complex<T>]) -> Result<Self> {
        Self::new(1, alphas.iter().map(|a| BpFactor { alpha: *a, projection: identity(1) }).collect())
    }

    /// Appends a factor on the right after checking `|α| < 1` and `P² = P = P*`.
    pub fn push(&mut self, factor: BpFactor<T>) -> Result<()> {
        if factor.projection.shape() != (self.dim, self.dim) {
            return Err(Error::InvalidInput("projection has the wrong size".into()));
        }
        if modulus(factor.alpha) >= T::one() {
            return Err(Error::InvalidInput(format!("zero {} is not in the open disk", factor.alpha)));
        }
        let p = &factor.projection;
        let tol = T::tol(1e-12) * linalg::scale(p);
        if norm2(&(p * p - p)) > tol || linalg::hermiticity_defect(p) > tol {
            return Err(Error::InvalidInput("factor matrix is not an orthogonal projection".into()));
        }
        self.factors.push(factor);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[BpFactor<T>] {
        &self.factors
    }

    /// `Σ rank P_j`.
    pub fn degree(&self) -> usize {
        self.factors.iter().map(|f| f.rank()).sum()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidInput("products act on different spaces".into()));
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Ok(Self { dim: self.dim, factors })
    }

    pub fn evaluate(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        let mut acc = identity::<T>(self.dim);
        for f in &self.factors {
            acc *= f.evaluate(z)?;
        }
        Ok(acc)
    }

    /// `b(λ)⁻¹`.
    pub fn evaluate_inverse(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        let mut acc = identity::<T>(self.dim);
        for f in self.factors.iter().rev() {
            acc *= f.evaluate_inverse(z)?;
        }
        Ok(acc)
    }

    /// `b~(λ) = b(λ̄)*`: factors reversed with conjugated zeros.
    pub fn reflect(&self) -> Self {
        Self {
            dim: self.dim,
            factors: self
                .factors
                .iter()
                .rev()
                .map(|f| BpFactor { alpha: f.alpha.conj(), projection: f.projection.clone() })
                .collect(),
        }
    }

    /// The zeros `α_j` in order, repeated by rank.
    pub fn zeros(&self) -> Vec<Complex<T>> {
        self.factors.iter().flat_map(|f| std::iter::repeat_n(f.alpha, f.rank())).collect()
    }

    /// State-space realization centered at 0.
    pub fn to_realization(&self) -> RationalMatrixFunction<T> {
        let mut acc = RationalMatrixFunction::constant(identity(self.dim));
        for f in &self.factors {
            acc = acc.product(&f.realization()).expect("matching dimensions");
        }
        acc
    }

    pub fn summary(&self) -> BpSummary {
        BpSummary {
            alphas: self.factors.iter().map(|f| {
                let z = to_c64(f.alpha);
                [z.re, z.im]
            }).collect(),
            ranks: self.factors.iter().map(|f| f.rank()).collect(),
            degree: self.degree(),
        }
    }
}

impl<T: Real> MatrixFunction<T> for BlaschkePotapovProduct<T> {
    fn out_dim(&self) -> usize {
        self.dim
    }
    fn in_dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        self.evaluate(z)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        self.factors
            .iter()
            .filter(|f| modulus(f.alpha) > T::zero())
            .map(|f| one::<T>() / f.alpha.conj())
            .collect()
    }
}

/// `λ ↦ b(λ)⁻¹`.
pub struct BpInverse<'a, T: Real>(pub &'a BlaschkePotapovProduct<T>);

impl<T: Real> MatrixFunction<T> for BpInverse<'_, T> {
    fn out_dim(&self) -> usize {
        self.0.dim
    }
    fn in_dim(&self) -> usize {
        self.0.dim
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        self.0.evaluate_inverse(z)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        self.0.factors.iter().map(|f| f.alpha).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_circle_point, random_disk_point, random_matrix};
    use crate::scalar::cplx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_product(seed: u64, dim: usize, k: usize) -> BlaschkePotapovProduct<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = BlaschkePotapovProduct::identity(dim);
        for _ in 0..k {
            let u = random_matrix(&mut rng, dim, 1);
            b.push(BpFactor::rank_one(random_disk_point(&mut rng, 0.9), &u)).unwrap();
        }
        b
    }

    #[test]
    fn alpha_zero_full_projection_is_lambda() {
        let b = BlaschkePotapovProduct::new(3, vec![BpFactor { alpha: cplx(0.0, 0.0), projection: identity(3) }]).unwrap();
        let z = cplx(0.4, -0.1);
        assert!(norm2(&(b.evaluate(z).unwrap() - identity::<f64>(3) * z)) < 1e-15);
        assert_eq!(b.degree(), 3);
    }

    #[test]
    fn rank_one_factor_has_degree_one() {
        assert_eq!(random_product(1, 3, 1).degree(), 1);
    }

    #[test]
    fn degree_is_additive() {
        let a = random_product(2, 2, 2);
        let b = random_product(3, 2, 3);
        assert_eq!(a.concat(&b).unwrap().degree(), a.degree() + b.degree());
    }

    #[test]
    fn unitary_on_circle_and_inverse() {
        let b = random_product(4, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let t: Complex<f64> = random_circle_point(&mut rng);
            let v = b.evaluate(t).unwrap();
            assert!(norm2(&(v.adjoint() * &v - identity::<f64>(3))) < 1e-10);
            let z: Complex<f64> = random_disk_point(&mut rng, 0.95);
            let w = b.evaluate(z).unwrap() * b.evaluate_inverse(z).unwrap();
            assert!(norm2(&(w - identity::<f64>(3))) < 1e-9);
        }
    }

    #[test]
    fn realization_and_reflection_agree() {
        let b = random_product(5, 2, 3);
        let r = b.to_realization();
        let bt = b.reflect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let z: Complex<f64> = random_disk_point(&mut rng, 0.95);
            assert!(norm2(&(r.evaluate(z).unwrap() - b.evaluate(z).unwrap())) < 1e-12);
            let lhs = bt.evaluate(z).unwrap();
            let rhs = b.evaluate(z.conj()).unwrap().adjoint();
            assert!(norm2(&(lhs - rhs)) < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_factors() {
        let mut b = BlaschkePotapovProduct::<f64>::identity(1);
        assert!(b.push(BpFactor { alpha: cplx(1.0, 0.0), projection: identity(1) }).is_err());
        assert!(b.push(BpFactor { alpha: cplx(0.0, 0.0), projection: identity::<f64>(1) * cplx(0.5, 0.0) }).is_err());
    }
}
