use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use super::AipData;
use crate::linalg::{self, identity, norm2};
use crate::pontryagin::{estimate_negative_squares, KernelEvaluator, NegativeSquares, SampleOptions};
use crate::rational::{MatrixFunction, RationalMatrixFunction};
use crate::scalar::{modulus, to_c64, Real};
use crate::{CMatrix, Error, Result};

/// `W(λ) = I − (1 − λā) C(M − λN)⁻¹P⁻¹(M − aN)^{-*}C*J`.
#[derive(Clone, Debug)]
pub struct ResolventMatrix<T: Real> {
    data: AipData<T>,
    anchor: Complex<T>,
    c: CMatrix<T>,
    j: CMatrix<T>,
    p_inv: CMatrix<T>,
    /// `P⁻¹(M − aN)^{-*}C*J`.
    tail: CMatrix<T>,
    singular_points: Vec<Complex<T>>,
}

impl<T: Real> ResolventMatrix<T> {
    /// Uses the anchor of `data`, or scans the circle for one.
    pub fn new(data: &AipData<T>) -> Result<Self> {
        let anchor = data.resolve_anchor()?;
        Self::with_anchor(data, anchor)
    }

    pub fn with_anchor(data: &AipData<T>, anchor: Complex<T>) -> Result<Self> {
        if (modulus(anchor) - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::invalid(format!("anchor {anchor} is not on the unit circle")));
        }
        let p_inv = linalg::inverse(&data.p).ok_or_else(|| Error::Validation(vec!["A1".into()]))?;
        let ra = data.pencil_inverse(anchor)?;
        let c = data.c();
        let j = data.j();
        let tail = &p_inv * ra.adjoint() * c.adjoint() * &j;
        let mut singular_points = Vec::new();
        if let Some(k) = linalg::solve(&data.pencil(anchor), &data.n) {
            let tiny = T::tol(1e-13) * linalg::scale(&k);
            for nu in linalg::eigenvalues(&k)? {
                if modulus(nu) > tiny {
                    singular_points.push(anchor + Complex::new(T::one(), T::zero()) / nu);
                }
            }
        }
        Ok(Self { data: data.clone(), anchor, c, j, p_inv, tail, singular_points })
    }

    pub fn anchor(&self) -> Complex<T> {
        self.anchor
    }
    pub fn data(&self) -> &AipData<T> {
        &self.data
    }
    pub fn j(&self) -> &CMatrix<T> {
        &self.j
    }
    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    /// All generalized eigenvalues of `(M, N)`.
    pub fn pencil_singular_points(&self) -> &[Complex<T>] {
        &self.singular_points
    }

    /// `G(λ) = C(M − λN)⁻¹` restricted to `H`.
    pub fn g(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        Ok(&self.c * self.data.pencil_inverse(lambda)?)
    }

    /// `G(μ)^× = P⁻¹(M − μN)^{-*}C*`.
    pub fn g_adjoint(&self, mu: Complex<T>) -> Result<CMatrix<T>> {
        Ok(&self.p_inv * self.data.pencil_inverse(mu)?.adjoint() * self.c.adjoint())
    }

    pub fn evaluate(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        let coef = Complex::new(T::one(), T::zero()) - lambda * self.anchor.conj();
        Ok(identity::<T>(self.dim()) - self.g(lambda)? * &self.tail * coef)
    }

    /// `(w11, w12, w21, w22)`.
    pub fn blocks(&self, lambda: Complex<T>) -> Result<[CMatrix<T>; 4]> {
        let w = self.evaluate(lambda)?;
        let (p, q) = (self.data.out_dim(), self.data.in_dim());
        Ok([
            w.view((0, 0), (p, p)).into_owned(),
            w.view((0, p), (p, q)).into_owned(),
            w.view((p, 0), (q, p)).into_owned(),
            w.view((p, p), (q, q)).into_owned(),
        ])
    }

    /// `‖J − W(λ)JW(μ)* − (1 − λμ̄)G(λ)G(μ)^×‖`.
    pub fn identity_residual(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<T> {
        let wl = self.evaluate(lambda)?;
        let wm = self.evaluate(mu)?;
        let coef = Complex::new(T::one(), T::zero()) - lambda * mu.conj();
        let rhs = self.g(lambda)? * self.g_adjoint(mu)? * coef;
        Ok(norm2(&(&self.j - &wl * &self.j * wm.adjoint() - rhs)))
    }

    /// Realization of `W` expanded at a regular `center`.
    pub fn to_rational(&self, center: Complex<T>) -> Result<RationalMatrixFunction<T>> {
        let rc = self.data.pencil_inverse(center)?;
        let t = &rc * &self.data.n;
        let e = &rc * &self.tail;
        let one = Complex::new(T::one(), T::zero());
        let abar = self.anchor.conj();
        let h = identity::<T>(self.dim()) - &self.c * &e * (one - center * abar);
        let f = &e * abar - &t * &e * (one - center * abar);
        RationalMatrixFunction::with_center(t, f, self.c.clone(), h, center)
    }
}

impl<T: Real> MatrixFunction<T> for ResolventMatrix<T> {
    fn out_dim(&self) -> usize {
        self.dim()
    }
    fn in_dim(&self) -> usize {
        self.dim()
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        self.evaluate(z)
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        self.singular_points.clone()
    }
}

/// `K^W_ω(λ) = (J − W(λ)JW(ω)*)/(1 − λω̄)` built from values of `W`.
pub struct WKernel<'a, T: Real>(pub &'a ResolventMatrix<T>);

impl<T: Real> KernelEvaluator<T> for WKernel<'_, T> {
    fn size(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, lambda: Complex<T>, omega: Complex<T>) -> Result<CMatrix<T>> {
        let den = Complex::new(T::one(), T::zero()) - lambda * omega.conj();
        if modulus(den) <= T::lit(1e-14) {
            return Err(Error::Domain(format!("1 - λω̄ vanishes at λ = {lambda}")));
        }
        let w = &self.0;
        Ok((&w.j - w.evaluate(lambda)? * &w.j * w.evaluate(omega)?.adjoint()) / den)
    }
    fn contains(&self, z: Complex<T>) -> bool {
        modulus(z) < T::one() && self.0.singular_points.iter().all(|s| modulus(*s - z) > T::lit(1e-3))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotapovReport {
    pub kappa_hat: NegativeSquares,
    pub kappa: usize,
    /// The stacked `C(M − λ_iN)⁻¹` over the sample has rank `n`.
    pub kerpen_ok: bool,
    pub kerpen_rank: usize,
    /// `κ̂_W ≤ κ`.
    pub bound_ok: bool,
    /// `κ̂_W = κ`; only meaningful when stabilized with `kerpen_ok`.
    pub equality_ok: bool,
}

/// Sampled negative squares of `K^W` and the kernel condition on `C(M − λN)⁻¹`.
pub fn check_potapov_class<T: Real>(w: &ResolventMatrix<T>, options: &SampleOptions) -> Result<PotapovReport> {
    let kernel = WKernel(w);
    let kappa_hat = estimate_negative_squares(&kernel, options)?;
    let kappa = crate::pontryagin::inertia(&w.data.p, T::lit(options.zero_tol))?.n_minus;
    let (pts, _) = crate::pontryagin::sample_kernel_points(&kernel, 32, options.radius, options.seed);
    let blocks: Vec<CMatrix<T>> = pts.iter().filter_map(|z| w.g(*z).ok()).collect();
    let n = w.data.dim();
    let kerpen_rank = if blocks.is_empty() {
        0
    } else {
        let refs: Vec<&CMatrix<T>> = blocks.iter().collect();
        linalg::rank(&linalg::vstack(&refs), T::tol(1e-10))
    };
    let kerpen_ok = kerpen_rank == n;
    Ok(PotapovReport {
        bound_ok: kappa_hat.kappa <= kappa,
        equality_ok: kappa_hat.kappa == kappa,
        kappa_hat,
        kappa,
        kerpen_ok,
        kerpen_rank,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JInnerReport {
    /// `max ‖J − W(μ)JW(μ)*‖` over the evaluated samples.
    pub max_defect: f64,
    pub evaluated: usize,
    /// Samples where `M − μN` was singular.
    pub skipped: Vec<Complex64>,
}

pub fn check_j_inner<T: Real>(w: &ResolventMatrix<T>, samples: &[Complex<T>]) -> JInnerReport {
    let mut max_defect = T::zero();
    let mut evaluated = 0;
    let mut skipped = Vec::new();
    for mu in samples {
        match w.evaluate(*mu) {
            Ok(v) => {
                max_defect = max_defect.max(norm2(&(&w.j - &v * &w.j * v.adjoint())));
                evaluated += 1;
            }
            Err(_) => skipped.push(to_c64(*mu)),
        }
    }
    JInnerReport { max_defect: max_defect.to_f64_lossy(), evaluated, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aip::encode_nevanlinna_pick;
    use crate::linalg::{random_circle_point, random_disk_point, real_matrix};
    fn cplx(re: f64, im: f64) -> num_complex::Complex64 {
        num_complex::Complex64::new(re, im)
    }
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_dim(c1: f64, c2: f64, p: f64) -> AipData<f64> {
        let r = |x: f64| real_matrix(1, 1, &[x]);
        AipData::new(r(1.0), r(0.0), r(c1), r(c2), r(p)).unwrap()
    }

    #[test]
    fn closed_forms_of_one_dim_instances() {
        let s2 = 2f64.sqrt();
        let w = ResolventMatrix::with_anchor(&one_dim(s2, 1.0, 1.0), cplx(1.0, 0.0)).unwrap();
        let l = cplx(0.3, -0.2);
        let one = cplx(1.0, 0.0);
        let expected = CMatrix::from_row_slice(2, 2, &[l * 2.0 - one, (one - l) * s2, -(one - l) * s2, one * 2.0 - l]);
        assert!(norm2(&(w.evaluate(l).unwrap() - expected)) < 1e-14);
        let w0 = w.evaluate(cplx(0.0, 0.0)).unwrap();
        let expected0 = real_matrix(2, 2, &[-1.0, s2, -s2, 2.0]);
        assert!(norm2(&(w0 - expected0)) < 1e-14);

        let w = ResolventMatrix::with_anchor(&one_dim(1.0, s2, -1.0), cplx(1.0, 0.0)).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[one * 2.0 - l, -(one - l) * s2, (one - l) * s2, l * 2.0 - one]);
        assert!(norm2(&(w.evaluate(l).unwrap() - expected)) < 1e-14);
        let r = check_j_inner(&w, &[cplx(0.0, 1.0)]);
        assert!(r.max_defect < 1e-12);
    }

    #[test]
    fn identity_and_normalization_with_complex_anchor() {
        let d = encode_nevanlinna_pick(&[cplx(0.1, 0.2), cplx(-0.5, 0.1), cplx(0.3, -0.6)], &[cplx(0.2, 0.1), cplx(1.4, 0.0), cplx(-0.3, 0.5)])
            .unwrap();
        let a = crate::scalar::unimodular(1.1);
        let w = ResolventMatrix::with_anchor(&d, a).unwrap();
        assert!(norm2(&(w.evaluate(a).unwrap() - identity::<f64>(2))) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (l, m) = (random_disk_point(&mut rng, 0.95), random_disk_point(&mut rng, 0.95));
            assert!(w.identity_residual(l, m).unwrap() < 1e-9);
        }
        let circle: Vec<_> = (0..100).map(|_| random_circle_point(&mut rng)).collect();
        assert!(check_j_inner(&w, &circle).max_defect < 1e-9);
        assert_eq!(check_j_inner(&w, &[a]).max_defect, 0.0);
        let r = w.to_rational(cplx(0.2, 0.1)).unwrap();
        for _ in 0..10 {
            let z = random_disk_point(&mut rng, 0.9);
            assert!(norm2(&(r.evaluate(z).unwrap() - w.evaluate(z).unwrap())) < 1e-10);
        }
    }

    #[test]
    fn potapov_class_of_pick_instances() {
        let z = [cplx(0.0, 0.0), cplx(0.5, 0.0)];
        let opts = SampleOptions::default();
        let d = encode_nevanlinna_pick(&z, &[cplx(0.0, 0.0), cplx(0.25, 0.0)]).unwrap();
        let r = check_potapov_class(&ResolventMatrix::new(&d).unwrap(), &opts).unwrap();
        assert_eq!(r.kappa_hat.kappa, 0);
        assert!(r.bound_ok);
        let d = encode_nevanlinna_pick(&z, &[cplx(0.0, 0.0), cplx(2.0, 0.0)]).unwrap();
        let r = check_potapov_class(&ResolventMatrix::new(&d).unwrap(), &opts).unwrap();
        assert_eq!(r.kappa_hat.kappa, 1);
        assert!(r.kerpen_ok && r.equality_ok && r.kappa_hat.stabilized);
    }

    #[test]
    fn kerpen_fails_for_vanishing_channels() {
        let i = identity::<f64>(2);
        let c = CMatrix::zeros(1, 2);
        let d = AipData::new(i.clone(), i.clone() * cplx(0.5, 0.0), c.clone(), c, i).unwrap();
        let r = check_potapov_class(&ResolventMatrix::new(&d).unwrap(), &SampleOptions::default()).unwrap();
        assert!(!r.kerpen_ok);
        assert_eq!(r.kerpen_rank, 0);
    }
}
