//! Unitary colligations with an indefinite state space, their characteristic
//! functions, the kernel `D_s`, the Fourier representation and the functional
//! model.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, identity, norm2, random_circle_point, random_disk_point, random_matrix, random_unitary};
use crate::pontryagin::{unitarity_residual, GramSpace, Inertia, KernelEvaluator};
use crate::rational::{delta_matrix, MatrixFunction, RationalMatrixFunction};
use crate::scalar::{modulus, to_c64, Real};
use crate::{CMatrix, CVector, Error, Result};

/// Default bound on the unitarity residual accepted by [`Colligation::new`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// `U = [[T, F], [G, H]]` unitary from `(ℂ^d, X) ⊕ ℂ^q` onto `(ℂ^d, X) ⊕ ℂ^p`.
#[derive(Clone, Debug)]
pub struct Colligation<T: Real> {
    state: GramSpace<T>,
    t: CMatrix<T>,
    f: CMatrix<T>,
    g: CMatrix<T>,
    h: CMatrix<T>,
    residual: T,
}

impl<T: Real> Colligation<T> {
    pub fn new(x: CMatrix<T>, t: CMatrix<T>, f: CMatrix<T>, g: CMatrix<T>, h: CMatrix<T>) -> Result<Self> {
        Self::with_tolerance(x, t, f, g, h, T::tol(UNITARITY_TOL))
    }

    /// Like [`Colligation::new`] with an explicit bound on the unitarity residual.
    pub fn with_tolerance(x: CMatrix<T>, t: CMatrix<T>, f: CMatrix<T>, g: CMatrix<T>, h: CMatrix<T>, tol: T) -> Result<Self> {
        let state = GramSpace::new(x)?;
        let d = state.dim();
        let (p, q) = h.shape();
        if t.shape() != (d, d) || f.shape() != (d, q) || g.shape() != (p, d) {
            return Err(Error::InvalidInput("colligation blocks have inconsistent sizes".into()));
        }
        let mut c = Self { state, t, f, g, h, residual: T::zero() };
        let residual = unitarity_residual(&c.operator(), &c.in_space(), &c.out_space())?;
        if !(residual <= tol) {
            return Err(Error::InvalidInput(format!("colligation is not unitary (residual {residual:.3e})")));
        }
        c.residual = residual;
        Ok(c)
    }

    pub fn operator(&self) -> CMatrix<T> {
        linalg::block2(&self.t, &self.f, &self.g, &self.h)
    }

    /// `(ℂ^d, X) ⊕ ℂ^q`.
    pub fn in_space(&self) -> GramSpace<T> {
        self.state.direct_sum(&GramSpace::hilbert(self.in_dim()))
    }

    /// `(ℂ^d, X) ⊕ ℂ^p`.
    pub fn out_space(&self) -> GramSpace<T> {
        self.state.direct_sum(&GramSpace::hilbert(self.out_dim()))
    }

    pub fn state(&self) -> &GramSpace<T> {
        &self.state
    }
    pub fn gram(&self) -> &CMatrix<T> {
        self.state.gram()
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
    pub fn state_dim(&self) -> usize {
        self.t.nrows()
    }
    pub fn in_dim(&self) -> usize {
        self.h.ncols()
    }
    pub fn out_dim(&self) -> usize {
        self.h.nrows()
    }
    pub fn unitarity_residual(&self) -> T {
        self.residual
    }

    /// Negative index of the state space.
    pub fn kappa_state(&self) -> usize {
        self.state.inertia().n_minus
    }

    pub fn state_inertia(&self) -> Inertia {
        self.state.inertia()
    }

    /// `s(λ) = H + λG(I−λT)⁻¹F`.
    pub fn characteristic_function(&self) -> RationalMatrixFunction<T> {
        RationalMatrixFunction::new(self.t.clone(), self.f.clone(), self.g.clone(), self.h.clone())
            .expect("blocks were checked at construction")
    }

    /// `T^[×] = X⁻¹T*X`.
    pub fn t_adjoint(&self) -> CMatrix<T> {
        self.state.gram_inv() * self.t.adjoint() * self.state.gram()
    }

    /// `G^[×] = X⁻¹G*`.
    pub fn g_adjoint(&self) -> CMatrix<T> {
        self.state.gram_inv() * self.g.adjoint()
    }

    fn resolvent(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        let d = self.state_dim();
        linalg::solve(&(identity::<T>(d) - &self.t * lambda), &identity(d)).ok_or(Error::Pole(to_c64(lambda)))
    }

    /// Whether the state space is spanned by `TⁿF` and `(T^[×])ⁿG^[×]`.
    pub fn is_simple(&self, tol: T) -> Simplicity {
        let d = self.state_dim();
        let mut cols = krylov(&self.t, &self.f);
        cols.extend(krylov(&self.t_adjoint(), &self.g_adjoint()));
        let refs: Vec<&CMatrix<T>> = cols.iter().collect();
        let stacked = if refs.is_empty() { CMatrix::zeros(d, 0) } else { linalg::hstack(&refs) };
        let rank = if d == 0 { 0 } else { linalg::rank(&stacked, tol) };
        Simplicity { simple: rank == d, rank, defect_dim: d - rank }
    }

    /// `G_1(λ)^× = G(I−λT)⁻¹` (`p×d`).
    pub fn g1_adjoint(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        Ok(&self.g * self.resolvent(lambda)?)
    }

    /// `G_1(λ) = X⁻¹(I−λT)^{-*}G*` (`d×p`).
    pub fn g1(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        Ok(self.state.gram_inv() * self.g1_adjoint(lambda)?.adjoint())
    }

    /// `G_2(λ) = −(I−λT)⁻¹F` (`d×q`).
    pub fn g2(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        Ok(-(self.resolvent(lambda)? * &self.f))
    }

    /// Matrix of `h ↦ (Fh)(λ) = [G(I−λT)⁻¹h; −λ̄F*(I−λT)^{-*}Xh]`.
    pub fn fourier_matrix(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        let r = self.resolvent(lambda)?;
        let upper = &self.g * &r;
        let lower = (&r * &self.f).adjoint() * self.state.gram() * (-lambda.conj());
        Ok(linalg::vstack(&[&upper, &lower]))
    }

    pub fn fourier_representation(&self, h: &CVector<T>, lambda: Complex<T>) -> Result<CVector<T>> {
        Ok(self.fourier_matrix(lambda)? * h)
    }
}

pub(crate) fn krylov<T: Real>(t: &CMatrix<T>, f: &CMatrix<T>) -> Vec<CMatrix<T>> {
    let d = t.nrows();
    let mut out = Vec::with_capacity(d);
    if f.ncols() == 0 {
        return out;
    }
    let mut cur = f.clone();
    for _ in 0..d {
        // normalize each block so powers of T do not swamp the rank test
        let n = norm2(&cur);
        if n > T::zero() {
            cur /= Complex::new(n, T::zero());
        }
        out.push(cur.clone());
        cur = t * &cur;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Simplicity {
    pub simple: bool,
    pub rank: usize,
    pub defect_dim: usize,
}

/// The kernel `D_s(μ, λ)`; the diagonal `λ = μ` of the difference quotients
/// uses the derivative supplied by `s`.
pub fn ds_kernel<T: Real, F: MatrixFunction<T> + ?Sized>(s: &F, mu: Complex<T>, lambda: Complex<T>) -> Result<CMatrix<T>> {
    let one = Complex::new(T::one(), T::zero());
    let d1 = one - lambda * mu.conj();
    let d2 = one - lambda.conj() * mu;
    if modulus(d1) <= T::lit(1e-14) {
        return Err(Error::Domain(format!("1 - λμ̄ vanishes at λ = {lambda}, μ = {mu}")));
    }
    let dom = |e: Error| match e {
        Error::Pole(z) => Error::Domain(format!("pole at {z}")),
        other => other,
    };
    let sl = s.eval(lambda).map_err(dom)?;
    let sm = s.eval(mu).map_err(dom)?;
    let dq = s.diff_quotient(lambda, mu).map_err(dom)?;
    let (p, q) = sl.shape();
    let b11 = (identity::<T>(p) - &sl * sm.adjoint()) / d1;
    let b12 = &dq * (-mu);
    let b21 = dq.adjoint() * (-lambda.conj());
    let b22 = (identity::<T>(q) - sl.adjoint() * &sm) * (lambda.conj() * mu / d2);
    Ok(linalg::block2(&b11, &b12, &b21, &b22))
}

/// `D_s` as a [`KernelEvaluator`]: `K(λ, μ) = D_s(μ, λ)`.
pub struct DsKernel<F> {
    pub function: F,
}

impl<T: Real, F: MatrixFunction<T>> KernelEvaluator<T> for DsKernel<F> {
    fn size(&self) -> usize {
        self.function.out_dim() + self.function.in_dim()
    }
    fn eval(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        ds_kernel(&self.function, mu, lambda)
    }
    fn contains(&self, z: Complex<T>) -> bool {
        modulus(z) < T::one() && self.function.singular_points().iter().all(|p| modulus(*p - z) > T::lit(1e-3))
    }
}

/// Largest `|(D_s(μ,λ)f̃, g̃) − [G_1(μ)f̃_1 + μG_2(μ)f̃_2, G_1(λ)g̃_1 + λG_2(λ)g̃_2]|`
/// over the pairs `(μ, λ)` with random unit vectors.
pub fn check_kernel_factorization<T: Real>(delta: &Colligation<T>, pairs: &[(Complex<T>, Complex<T>)], seed: u64) -> Result<T> {
    let s = delta.characteristic_function();
    let (p, q) = (delta.out_dim(), delta.in_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for &(mu, lambda) in pairs {
        let f: CVector<T> = unit(linalg::random_vector(&mut rng, p + q));
        let g: CVector<T> = unit(linalg::random_vector(&mut rng, p + q));
        let lhs = (g.adjoint() * ds_kernel(&s, mu, lambda)? * &f)[(0, 0)];
        let v = |z: Complex<T>, x: &CVector<T>| -> Result<CVector<T>> {
            Ok(delta.g1(z)? * x.rows(0, p) + delta.g2(z)? * x.rows(p, q) * z)
        };
        let rhs = delta.state().inner(&v(mu, &f)?, &v(lambda, &g)?);
        worst = worst.max(modulus(lhs - rhs));
    }
    Ok(worst)
}

fn unit<T: Real>(v: CVector<T>) -> CVector<T> {
    let n = linalg::vec_norm(&v);
    if n == T::zero() {
        v
    } else {
        v / Complex::new(n, T::zero())
    }
}

/// Largest residual of the boundary relation
/// `F(t)P_H U^× + [s(t); −I]P_{L_2}U^× = tF(t)P_H + [I; −s(t)*]P_{L_1}` over `ts`.
pub fn check_boundary_relation<T: Real>(delta: &Colligation<T>, ts: &[Complex<T>]) -> Result<T> {
    let (d, p, q) = (delta.state_dim(), delta.out_dim(), delta.in_dim());
    let u = delta.operator();
    let ux = crate::pontryagin::indefinite_adjoint(&u, &delta.in_space(), &delta.out_space())?;
    let ux_h = ux.rows(0, d).into_owned();
    let ux_l2 = ux.rows(d, q).into_owned();
    let s = delta.characteristic_function();
    let mut worst = T::zero();
    for &t in ts {
        let fm = delta.fourier_matrix(t)?;
        let st = s.evaluate(t)?;
        let lhs = &fm * &ux_h + linalg::vstack(&[&st, &(-identity::<T>(q))]) * &ux_l2;
        let ph = linalg::hstack(&[&identity::<T>(d), &CMatrix::zeros(d, p)]);
        let pl1 = linalg::hstack(&[&CMatrix::zeros(p, d), &identity::<T>(p)]);
        let rhs = &fm * ph * t + linalg::vstack(&[&identity::<T>(p), &(-st.adjoint())]) * pl1;
        worst = worst.max(norm2(&(lhs - rhs)));
    }
    Ok(worst)
}

/// The functional-model colligation in Fourier coordinates together with the
/// residuals of its defining relations.
#[derive(Clone, Debug)]
pub struct FunctionalModel<T: Real> {
    pub model: Colligation<T>,
    /// Pointwise residual of `U_s [F 0; 0 I] = [F 0; 0 I] U` on the circle samples.
    pub uniteq_residual: T,
    /// Residual of the boundary relation on the same samples.
    pub boundary_residual: T,
    /// `max ‖s_model(λ) − s(λ)‖` over disk samples.
    pub characteristic_residual: T,
}

/// Builds `U_s = [[T_s, F_s], [G_s, H_s]]` with `T_s f = t̄(f − Δ_s[f_+(0); 0])`,
/// `F_s = −t̄Δ_s[s(0); I]`, `G_s f = f_+(0)`, `H_s = s(0)`, reads its matrix in
/// the coordinates `h ↦ Fh` from `n_samples` circle points and checks it
/// against `Δ`.
pub fn functional_model<T: Real>(delta: &Colligation<T>, n_samples: usize, seed: u64) -> Result<FunctionalModel<T>> {
    let simple = delta.is_simple(T::tol(1e-9));
    if !simple.simple {
        return Err(Error::NotSimple { rank: simple.rank, dim: delta.state_dim() });
    }
    let (d, p, q) = (delta.state_dim(), delta.out_dim(), delta.in_dim());
    let s = delta.characteristic_function();
    let s0 = s.evaluate(Complex::new(T::zero(), T::zero()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts = Vec::with_capacity(n_samples);
    while ts.len() < n_samples {
        let t: Complex<T> = random_circle_point(&mut rng);
        if delta.fourier_matrix(t).is_ok() {
            ts.push(t);
        }
    }
    let f0 = delta.fourier_matrix(Complex::new(T::zero(), T::zero()))?;
    let g_s = f0.rows(0, p).into_owned();
    let m = p + q;
    let mut phi = CMatrix::zeros(m * n_samples, d);
    let mut ts_rhs = CMatrix::zeros(m * n_samples, d);
    let mut fs_rhs = CMatrix::zeros(m * n_samples, q);
    let mut uniteq = T::zero();
    for (k, &t) in ts.iter().enumerate() {
        let fm = delta.fourier_matrix(t)?;
        let dl = delta_matrix(&s.evaluate(t)?);
        let tb = t.conj();
        let shift = (&fm - &dl * linalg::vstack(&[&g_s, &CMatrix::zeros(q, d)])) * tb;
        let fs = &dl * linalg::vstack(&[&s0, &identity::<T>(q)]) * (-tb);
        uniteq = uniteq.max(norm2(&(&shift - &fm * delta.t()))).max(norm2(&(&fs - &fm * delta.f())));
        phi.view_mut((k * m, 0), (m, d)).copy_from(&fm);
        ts_rhs.view_mut((k * m, 0), (m, d)).copy_from(&shift);
        fs_rhs.view_mut((k * m, 0), (m, q)).copy_from(&fs);
    }
    uniteq = uniteq.max(norm2(&(&g_s - delta.g()))).max(norm2(&(&s0 - delta.h())));
    let phi_pinv = linalg::pinv(&phi, T::tol(1e-13));
    let t_s = &phi_pinv * ts_rhs;
    let f_s = &phi_pinv * fs_rhs;
    let model = Colligation::with_tolerance(delta.gram().clone(), t_s, f_s, g_s, s0, T::lit(1e-7))?;
    let boundary = check_boundary_relation(delta, &ts)?.max(check_boundary_relation(&model, &ts)?);
    let sm = model.characteristic_function();
    let mut chr = T::zero();
    let mut n = 0;
    while n < n_samples {
        let z: Complex<T> = random_disk_point(&mut rng, 0.95);
        if let (Ok(a), Ok(b)) = (s.evaluate(z), sm.evaluate(z)) {
            chr = chr.max(norm2(&(a - b)));
            n += 1;
        }
    }
    Ok(FunctionalModel { model, uniteq_residual: uniteq, boundary_residual: boundary, characteristic_residual: chr })
}

/// Random simple unitary colligation with `p = q` channels and a state Gram
/// of negative index `kappa`, built by a Cayley transform of a `J`-skew matrix.
/// The spectrum of `T` is kept at distance at least `0.05` from the circle.
pub fn random_colligation<T: Real>(d: usize, p: usize, kappa: usize, seed: u64) -> Result<Colligation<T>> {
    if kappa > d {
        return Err(Error::InvalidInput("negative index exceeds the state dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d + p;
    for _ in 0..500 {
        // X = Q diag(±w) Q*, so X ⊕ I = L* J L with L = diag(√w) Q* ⊕ I
        let q: CMatrix<T> = random_unitary(&mut rng, d);
        let w: Vec<T> = (0..d).map(|_| T::lit(rng.random_range(0.5..2.0))).collect();
        let signs: Vec<T> = (0..n).map(|i| if i < d && i >= d - kappa { -T::one() } else { T::one() }).collect();
        let x = &q * linalg::real_diagonal(&w.iter().zip(&signs).map(|(a, s)| *a * *s).collect::<Vec<_>>()) * q.adjoint();
        let sqrt_w = linalg::real_diagonal(&w.iter().map(|a| a.sqrt()).collect::<Vec<_>>());
        let l = linalg::direct_sum(&(sqrt_w * q.adjoint()), &identity(p));
        let l_inv = match linalg::inverse(&l) {
            Some(v) => v,
            None => continue,
        };
        let v = match random_j_unitary(&signs, &mut rng) {
            Some(v) => v,
            None => continue,
        };
        let u = &l_inv * v * &l;
        let t = u.view((0, 0), (d, d)).into_owned();
        let eig = linalg::eigenvalues(&t)?;
        if eig.iter().any(|e| (modulus(*e) - T::one()).abs() < T::lit(0.05)) {
            continue;
        }
        let c = match Colligation::new(
            x,
            t,
            u.view((0, d), (d, p)).into_owned(),
            u.view((d, 0), (p, d)).into_owned(),
            u.view((d, d), (p, p)).into_owned(),
        ) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if c.is_simple(T::tol(1e-8)).simple && c.kappa_state() == kappa {
            return Ok(c);
        }
    }
    Err(Error::Numerical("could not generate a simple colligation".into()))
}

/// Random `J`-unitary matrix (`V*JV = J`) for `J = diag(signs)` with entries
/// `±1`: a Cayley transform of `JK` with `K` skew-Hermitian, followed by a
/// unitary that commutes with `J`. `None` if the Cayley denominator is singular.
pub fn random_j_unitary<T: Real, R: Rng + ?Sized>(signs: &[T], rng: &mut R) -> Option<CMatrix<T>> {
    let n = signs.len();
    let j = linalg::real_diagonal(signs);
    let b: CMatrix<T> = random_matrix(rng, n, n);
    let scale = T::lit(rng.random_range(0.5..2.5));
    let k = (&b - b.adjoint()) * Complex::new(T::lit(0.5) * scale, T::zero());
    let a = &j * k;
    let cayley = linalg::solve(&(identity::<T>(n) - &a), &(identity::<T>(n) + &a))?;
    let pos: Vec<usize> = (0..n).filter(|i| signs[*i] > T::zero()).collect();
    let neg: Vec<usize> = (0..n).filter(|i| signs[*i] < T::zero()).collect();
    let mut block = CMatrix::zeros(n, n);
    for idx in [&pos, &neg] {
        let q: CMatrix<T> = random_unitary(rng, idx.len());
        for (a_, &i) in idx.iter().enumerate() {
            for (b_, &jj) in idx.iter().enumerate() {
                block[(i, jj)] = q[(a_, b_)];
            }
        }
    }
    Some(cayley * block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::{kernel_section, CircleGrid, DbrSpace};
    use crate::pontryagin::{negative_squares_estimate, sample_kernel_points};
    use crate::rational::schur_membership;
    use crate::scalar::cplx;

    type M = CMatrix<f64>;

    fn s11(z: f64) -> M {
        M::from_element(1, 1, cplx(z, 0.0))
    }

    #[test]
    fn swap_colligation_has_lambda_as_characteristic_function() {
        let c = Colligation::new(s11(1.0), s11(0.0), s11(1.0), s11(1.0), s11(0.0)).unwrap();
        let s = c.characteristic_function();
        let z = cplx(0.3, -0.4);
        assert!((s.evaluate(z).unwrap()[(0, 0)] - z).norm() < 1e-15);
        assert!(c.is_simple(1e-10).simple);
    }

    #[test]
    fn non_unitary_is_rejected() {
        assert!(Colligation::new(s11(1.0), s11(0.5), s11(1.0), s11(1.0), s11(0.0)).is_err());
    }

    #[test]
    fn decoupled_block_is_not_simple() {
        let base = random_colligation::<f64>(2, 1, 0, 4).unwrap();
        let d = 3;
        let x = linalg::direct_sum(base.gram(), &s11(1.0));
        let t = linalg::direct_sum(base.t(), &M::from_element(1, 1, cplx(0.0, 1.0)));
        let f = linalg::vstack(&[base.f(), &M::zeros(1, 1)]);
        let g = linalg::hstack(&[base.g(), &M::zeros(1, 1)]);
        let c = Colligation::new(x, t, f, g, base.h().clone()).unwrap();
        let simple = c.is_simple(1e-9);
        assert!(!simple.simple);
        assert_eq!(simple.defect_dim, 1);
        assert_eq!(simple.rank, d - 1);
    }

    #[test]
    fn random_colligations_are_unitary_and_simple() {
        for (seed, kappa) in [(1u64, 0usize), (2, 1), (3, 2)] {
            let c = random_colligation::<f64>(4, 2, kappa, seed).unwrap();
            assert!(c.unitarity_residual() <= 1e-10);
            assert_eq!(c.kappa_state(), kappa);
            assert!(c.is_simple(1e-9).simple);
            let s = c.characteristic_function();
            assert_eq!(s.h(), c.h());
            if kappa == 0 {
                assert!(schur_membership(&s, 64, 1e-9, 0).is_schur);
            }
        }
    }

    #[test]
    fn ds_kernel_of_zero() {
        let s = RationalMatrixFunction::constant(M::zeros(1, 2));
        let (mu, l) = (cplx(0.2, 0.1), cplx(-0.3, 0.5));
        let k = ds_kernel(&s, mu, l).unwrap();
        assert!((k[(0, 0)] - 1.0 / (1.0 - l * mu.conj())).norm() < 1e-15);
        assert!((k[(1, 1)] - l.conj() * mu / (1.0 - l.conj() * mu)).norm() < 1e-15);
        assert!(k[(0, 1)].norm() == 0.0 && k[(2, 0)].norm() == 0.0);
    }

    #[test]
    fn ds_kernel_symmetry_and_factorization() {
        let c = random_colligation::<f64>(3, 1, 1, 7).unwrap();
        let s = c.characteristic_function();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pairs = Vec::new();
        for _ in 0..50 {
            let (a, b): (Complex<f64>, Complex<f64>) = (random_disk_point(&mut rng, 0.9), random_disk_point(&mut rng, 0.9));
            if let (Ok(k1), Ok(k2)) = (ds_kernel(&s, a, b), ds_kernel(&s, b, a)) {
                assert!(norm2(&(k1.adjoint() - k2)) < 1e-10 * (1.0 + norm2(&k1)));
                pairs.push((a, b));
            }
        }
        pairs.push((cplx(0.0, 0.0), cplx(0.0, 0.0)));
        pairs.push((cplx(0.3, 0.1), cplx(0.3, 0.1)));
        assert!(check_kernel_factorization(&c, &pairs, 3).unwrap() < 1e-9);
    }

    #[test]
    fn kernel_equals_fourier_product() {
        let c = random_colligation::<f64>(3, 2, 1, 11).unwrap();
        let s = c.characteristic_function();
        let (mu, l) = (cplx(0.1, 0.4), cplx(-0.5, 0.2));
        let rhs = c.fourier_matrix(l).unwrap() * c.state().gram_inv() * c.fourier_matrix(mu).unwrap().adjoint();
        assert!(norm2(&(ds_kernel(&s, mu, l).unwrap() - rhs)) < 1e-10);
        // G_s(Fh) = Gh
        let f0 = c.fourier_matrix(cplx(0.0, 0.0)).unwrap();
        assert!(norm2(&(f0.rows(0, 2).into_owned() - c.g())) < 1e-15);
    }

    #[test]
    fn ds_kernel_negative_squares_match_state_index() {
        for (seed, kappa) in [(21u64, 1usize), (22, 2)] {
            let c = random_colligation::<f64>(4, 1, kappa, seed).unwrap();
            let k = DsKernel { function: c.characteristic_function() };
            let (pts, dirs) = sample_kernel_points(&k, 48, 0.9, seed);
            let est = negative_squares_estimate(&k, &pts, &dirs, 1e-8).unwrap();
            assert_eq!(est.kappa, kappa);
        }
    }

    #[test]
    fn functional_model_and_boundary_relation() {
        let c = random_colligation::<f64>(4, 2, 2, 31).unwrap();
        let fm = functional_model(&c, 20, 5).unwrap();
        assert!(fm.uniteq_residual < 1e-9, "{}", fm.uniteq_residual);
        assert!(fm.boundary_residual < 1e-9, "{}", fm.boundary_residual);
        assert!(fm.characteristic_residual < 1e-9, "{}", fm.characteristic_residual);
        assert!(fm.model.is_simple(1e-9).simple);
        assert_eq!(fm.model.h(), c.h());
    }

    #[test]
    fn fourier_representation_is_isometric_into_dbr_space() {
        let c = random_colligation::<f64>(2, 1, 1, 41).unwrap();
        let s = c.characteristic_function();
        let grid = CircleGrid::new(1024).unwrap();
        let space = DbrSpace::from_rational(&s, &grid).unwrap();
        assert_eq!(space.kappa(), 1);
        let d = c.state_dim();
        let mut fh = Vec::new();
        for i in 0..d {
            let e = identity::<f64>(d).column(i).into_owned();
            fh.push(
                grid.function(2, |t| c.fourier_representation(&e, t)).unwrap().with_split(1),
            );
        }
        let gram = space.gram(&fh).unwrap();
        assert!(norm2(&(gram.clone() - c.gram())) < 1e-5, "{gram} vs {}", c.gram());
        // reproducing property against a kernel section
        let mu = cplx(0.2, -0.3);
        let x = CVector::from_vec(vec![cplx(1.0, 0.5), cplx(-0.3, 0.2)]);
        let sec = kernel_section(&grid, &s, mu, &x).unwrap();
        for (i, f) in fh.iter().enumerate() {
            let lhs = space.inner(f, &sec).unwrap();
            let e = identity::<f64>(d).column(i).into_owned();
            let rhs = (x.adjoint() * c.fourier_representation(&e, mu).unwrap())[(0, 0)];
            assert!((lhs - rhs).norm() < 1e-5, "{lhs} vs {rhs}");
        }
    }
}
