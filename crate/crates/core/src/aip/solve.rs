use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{AipData, ResolventMatrix};
use crate::hardy::{BoundaryFunction, CircleGrid, DbrSpace, DEFAULT_RANK_TOL};
use crate::linalg::{self, identity, norm2};
use crate::pontryagin::{estimate_negative_squares, inertia, NegativeSquares, SampleOptions, DEFAULT_ZERO_TOL};
use crate::rational::{
    delta_matrix, schur_membership, spiral_points, BlaschkePotapovProduct, MatrixFunction, RationalMatrixFunction, SchurKernel,
};
use crate::scalar::{to_c64, Real};
use crate::{CMatrix, Error, Result};

/// `s = (w11 ε + w12)(w21 ε + w22)⁻¹` for a Schur-class parameter `ε`.
#[derive(Clone, Debug)]
pub struct LftSolution<T: Real> {
    w: ResolventMatrix<T>,
    epsilon: RationalMatrixFunction<T>,
    /// `w21(0)ε(0) + w22(0)` is invertible.
    pub admissible: bool,
    pub denominator_sigma_min: f64,
    realization: Option<RationalMatrixFunction<T>>,
}

impl<T: Real> LftSolution<T> {
    pub fn epsilon(&self) -> &RationalMatrixFunction<T> {
        &self.epsilon
    }

    pub fn resolvent(&self) -> &ResolventMatrix<T> {
        &self.w
    }

    /// State-space realization of `s`, when one could be assembled and
    /// agrees with the pointwise formula.
    pub fn realization(&self) -> Option<&RationalMatrixFunction<T>> {
        self.realization.as_ref()
    }

    fn pointwise(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        let [w11, w12, w21, w22] = self.w.blocks(lambda)?;
        let e = self.epsilon.evaluate(lambda)?;
        let num = &w11 * &e + w12;
        let den = &w21 * &e + w22;
        linalg::solve_right(&num, &den).ok_or(Error::DenominatorSingular(to_c64(lambda)))
    }

    pub fn evaluate(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        self.pointwise(lambda)
    }
}

impl<T: Real> MatrixFunction<T> for LftSolution<T> {
    fn out_dim(&self) -> usize {
        self.w.data().out_dim()
    }
    fn in_dim(&self) -> usize {
        self.w.data().in_dim()
    }
    fn eval(&self, z: Complex<T>) -> Result<CMatrix<T>> {
        self.pointwise(z).map_err(|e| match e {
            Error::DenominatorSingular(z) => Error::Pole(z),
            other => other,
        })
    }
    fn singular_points(&self) -> Vec<Complex<T>> {
        let mut pts = self.w.pencil_singular_points().to_vec();
        if let Some(r) = &self.realization {
            pts.extend(r.poles().unwrap_or_default());
        }
        pts.extend(self.epsilon.poles().unwrap_or_default());
        pts
    }
}

/// Applies the linear fractional map of `W` to `ε`. Parameters outside the
/// Schur class are rejected; parameters with a singular denominator at `0`
/// are returned with `admissible = false`.
pub fn lft_solve<T: Real>(w: &ResolventMatrix<T>, epsilon: &RationalMatrixFunction<T>) -> Result<LftSolution<T>> {
    let (p, q) = (w.data().out_dim(), w.data().in_dim());
    if epsilon.out_dim() != p || epsilon.in_dim() != q {
        return Err(Error::invalid(format!("parameter must be {p}x{q}")));
    }
    let test = schur_membership(epsilon, 64, T::tol(1e-8), 0);
    if !test.is_schur {
        return Err(Error::invalid(format!("parameter is not in the Schur class (sup norm {:.6})", test.worst_norm)));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let den0 = match w.blocks(zero) {
        Ok([_, _, w21, w22]) => Some(&w21 * epsilon.evaluate(zero)? + w22),
        Err(_) => None,
    };
    let sigma = den0.as_ref().map(linalg::min_singular).unwrap_or_else(T::zero);
    let admissible = den0.as_ref().is_some_and(|d| sigma > T::tol(1e-10) * linalg::scale(d));
    let mut sol = LftSolution {
        w: w.clone(),
        epsilon: epsilon.clone(),
        admissible,
        denominator_sigma_min: sigma.to_f64_lossy(),
        realization: None,
    };
    if admissible {
        sol.realization = assemble_realization(&sol);
    }
    Ok(sol)
}

fn assemble_realization<T: Real>(sol: &LftSolution<T>) -> Option<RationalMatrixFunction<T>> {
    let (p, q) = (sol.out_dim(), sol.in_dim());
    let mut centers = vec![Complex::new(T::zero(), T::zero())];
    centers.extend(spiral_points::<T>(16, 0.5, 7));
    for c in centers {
        let Ok(wr) = sol.w.to_rational(c) else { continue };
        let Ok(e) = sol.epsilon.recenter(c) else { continue };
        let stacked = RationalMatrixFunction::with_center(
            e.t().clone(),
            e.f().clone(),
            linalg::vstack(&[e.g(), &CMatrix::zeros(q, e.state_dim())]),
            linalg::vstack(&[e.h(), &identity::<T>(q)]),
            c,
        )
        .ok()?;
        let Ok(x) = wr.product(&stacked) else { continue };
        let upper = linalg::hstack(&[&identity::<T>(p), &CMatrix::zeros(p, q)]);
        let lower = linalg::hstack(&[&CMatrix::zeros(q, p), &identity::<T>(q)]);
        let num = x.sandwich(&upper, &identity(q));
        let Ok(den_inv) = x.sandwich(&lower, &identity(q)).inverse() else { continue };
        let Ok(s) = num.product(&den_inv) else { continue };
        let mut s = s.reduce(T::tol(1e-12));
        if let Ok(s0) = s.recenter(Complex::new(T::zero(), T::zero())) {
            s = s0;
        }
        let ok = spiral_points::<T>(8, 0.8, 3).iter().all(|z| match (s.evaluate(*z), sol.pointwise(*z)) {
            (Ok(a), Ok(b)) => norm2(&(&a - &b)) <= T::tol(1e-8) * linalg::scale(&b),
            (Err(_), Err(_)) => true,
            _ => false,
        });
        if ok {
            return Some(s);
        }
    }
    None
}

/// `Φ(t) = Δ_s(t)C(M − tN)⁻¹`.
pub fn phi_map<T: Real, F: MatrixFunction<T> + ?Sized>(data: &AipData<T>, s: &F, t: Complex<T>) -> Result<CMatrix<T>> {
    let r = data.pencil_inverse(t)?;
    Ok(delta_matrix(&s.eval(t)?) * data.c() * r)
}

#[derive(Clone, Debug)]
pub struct VerifyOptions<T: Real> {
    pub grid: usize,
    pub seed: u64,
    /// Accept when the condition (ii) residual is below `ii_tol · max(1, ‖C‖)`.
    pub ii_tol: f64,
    pub membership_tol: f64,
    /// Lower bound accepted for the condition (i) margin.
    pub margin_tol: f64,
    pub samples: SampleOptions,
    /// Solution used to build `Φ` when checking (ii) against `s`; by default
    /// `s` itself.
    pub reference: Option<RationalMatrixFunction<T>>,
    /// Free-form description of the parameter, copied into the report.
    pub parameter: Option<String>,
}

impl<T: Real> Default for VerifyOptions<T> {
    fn default() -> Self {
        Self {
            grid: 2048,
            seed: 0,
            ii_tol: 1e-8,
            membership_tol: 1e-6,
            margin_tol: 1e-6,
            samples: SampleOptions::default(),
            reference: None,
            parameter: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    /// `max_t ‖Φ(t)M − tΦ(t)N − Δ_s(t)C‖` over the grid.
    pub condition_ii_residual: f64,
    /// Largest membership residuals of the columns of `Φ` in `D(s)`.
    pub membership_residuals: [f64; 3],
    pub membership_ok: bool,
    pub kappa_hat: NegativeSquares,
    pub kappa_target: usize,
    /// `λ_min(P − [Φ·,Φ·]_{D(s)})`.
    pub condition_i_margin: Option<f64>,
    /// Set when the margin involves the `Γ_r` correction and is only a
    /// quadrature estimate.
    pub condition_i_caveat: bool,
    /// `‖[Φ·,Φ·]_{D(s)} − P‖`.
    pub parseval_gap: Option<f64>,
    /// Relative change of the Gram matrix between grids `N/2` and `N`.
    pub quadrature_change: Option<f64>,
    pub grid: usize,
    pub skipped_nodes: usize,
    pub parameter: Option<String>,
    pub notes: Vec<String>,
    pub accepted: bool,
}

/// Checks a candidate solution `s` against the problem data.
pub fn verify_solution<T: Real>(data: &AipData<T>, s: &RationalMatrixFunction<T>, options: &VerifyOptions<T>) -> Result<SolutionReport> {
    let (n, p, q) = (data.dim(), data.out_dim(), data.in_dim());
    if s.out_dim() != p || s.in_dim() != q {
        return Err(Error::invalid(format!("solution must be {p}x{q}")));
    }
    let grid = CircleGrid::<T>::new(options.grid)?;
    let c = data.c();
    let reference = options.reference.as_ref().unwrap_or(s);
    let mut notes = Vec::new();

    let mut ii = T::zero();
    let mut skipped = 0;
    for t in grid.nodes() {
        match (phi_map(data, reference, *t), s.evaluate(*t)) {
            (Ok(phi), Ok(sv)) => {
                let r = &phi * &data.m - &phi * &data.n * *t - delta_matrix(&sv) * &c;
                ii = ii.max(norm2(&r));
            }
            _ => skipped += 1,
        }
    }

    let mut samples = options.samples.clone();
    samples.seed = options.seed;
    let kappa_hat = estimate_negative_squares(&SchurKernel::new(s), &samples)?;
    let kappa_p = inertia(&data.p, T::tol(DEFAULT_ZERO_TOL))?.n_minus;
    let kappa_target = data.kappa_target.unwrap_or(kappa_p);

    let mut membership = [0.0f64; 3];
    let mut membership_ok = false;
    let mut margin = None;
    let mut parseval = None;
    let mut change = None;
    let mut caveat = false;
    match dbr_space(s, &grid, kappa_hat.kappa) {
        Ok(space) => {
            let cols = phi_columns(data, s, &grid);
            membership_ok = true;
            for f in &cols {
                let m = space.membership(f, T::lit(options.membership_tol))?;
                membership_ok &= m.ok;
                for k in 0..3 {
                    membership[k] = membership[k].max(m.residuals[k]);
                }
            }
            caveat = space.kappa() > 0;
            let gram = space.gram(&cols)?;
            let diff = &data.p - &gram;
            let (vals, _) = linalg::hermitian_eigen(&diff);
            margin = vals.first().map(|v| v.to_f64_lossy()).or(Some(f64::INFINITY));
            parseval = Some(norm2(&diff).to_f64_lossy());
            if options.grid >= 16 {
                let coarse = CircleGrid::<T>::new(options.grid / 2)?;
                if let Ok(cs) = dbr_space(s, &coarse, kappa_hat.kappa) {
                    if let Ok(g2) = cs.gram(&phi_columns(data, s, &coarse)) {
                        let rel = norm2(&(&gram - g2)) / linalg::scale(&gram);
                        change = Some(rel.to_f64_lossy());
                    }
                }
            }
            if n == 0 {
                margin = None;
            }
        }
        Err(e) => notes.push(format!("D(s) could not be built: {e}")),
    }

    let ii_ok = ii <= T::lit(options.ii_tol) * norm2(&c).max(T::one());
    let kappa_ok = kappa_hat.kappa <= kappa_target;
    let margin_ok = kappa_target > 0 || margin.is_none_or(|m| m >= -options.margin_tol);
    if !ii_ok {
        notes.push("condition (ii) fails".into());
    }
    if !membership_ok {
        notes.push("columns of Φ are not in D(s)".into());
    }
    if !kappa_ok {
        notes.push(format!("Schur kernel has {} negative squares, more than {kappa_target}", kappa_hat.kappa));
    }
    if !margin_ok {
        notes.push("condition (i) fails".into());
    }
    Ok(SolutionReport {
        condition_ii_residual: ii.to_f64_lossy(),
        membership_residuals: membership,
        membership_ok,
        accepted: ii_ok && membership_ok && kappa_ok && margin_ok,
        kappa_hat,
        kappa_target,
        condition_i_margin: margin,
        condition_i_caveat: caveat,
        parseval_gap: parseval,
        quadrature_change: change,
        grid: options.grid,
        skipped_nodes: skipped,
        parameter: options.parameter.clone(),
        notes,
    })
}

fn dbr_space<T: Real>(s: &RationalMatrixFunction<T>, grid: &CircleGrid<T>, kappa: usize) -> Result<DbrSpace<T>> {
    if kappa == 0 {
        let bl = BlaschkePotapovProduct::identity(s.out_dim());
        let br = BlaschkePotapovProduct::identity(s.in_dim());
        DbrSpace::new(s, &bl, &br, grid, T::tol(DEFAULT_RANK_TOL))
    } else {
        DbrSpace::from_rational(s, grid)
    }
}

/// `t ↦ Φ(t)e_i` on the grid; nodes where `Φ` is undefined are set to zero.
fn phi_columns<T: Real>(data: &AipData<T>, s: &RationalMatrixFunction<T>, grid: &CircleGrid<T>) -> Vec<BoundaryFunction<T>> {
    let (n, p, q) = (data.dim(), data.out_dim(), data.in_dim());
    let mut cols = vec![CMatrix::zeros(p + q, grid.len()); n];
    for (k, t) in grid.nodes().iter().enumerate() {
        if let Ok(phi) = phi_map(data, s, *t) {
            for (i, c) in cols.iter_mut().enumerate() {
                c.set_column(k, &phi.column(i));
            }
        }
    }
    cols.into_iter().map(|v| BoundaryFunction::from_values(v).with_split(p)).collect()
}
