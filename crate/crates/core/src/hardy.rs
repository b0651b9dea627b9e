//! Hardy-space computations on a uniform grid of the unit circle: Riesz
//! projections, model spaces `H(b)` and `H_*(b)`, the operators `X_r`, `Γ_r`
//! and the de Branges–Rovnyak inner product.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::colligation::ds_kernel;
use crate::linalg::{self, identity, norm2};
use crate::rational::{delta_matrix, krein_langer_left, krein_langer_right, BlaschkePotapovProduct, MatrixFunction, RationalMatrixFunction};
use crate::scalar::{modulus, unimodular, Real};
use crate::{CMatrix, CVector, Error, Result};

pub const DEFAULT_GRID: usize = 1024;

/// Relative singular-value cut used for `Δ_s⁺` and the range test.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// The `N`-th roots of unity `t_k = exp(2πik/N)` with cached FFT plans.
#[derive(Clone)]
pub struct CircleGrid<T: Real> {
    n: usize,
    nodes: Vec<Complex<T>>,
    forward: Arc<dyn Fft<T>>,
    backward: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for CircleGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleGrid").field("n", &self.n).finish()
    }
}

impl<T: Real> CircleGrid<T> {
    /// `n` must be a power of two, at least 8.
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!("grid size {n} is not a power of two >= 8")));
        }
        let mut planner = FftPlanner::new();
        let nodes = (0..n).map(|k| unimodular(T::two_pi() * T::lit(k as f64) / T::lit(n as f64))).collect();
        Ok(Self { n, nodes, forward: planner.plan_fft_forward(n), backward: planner.plan_fft_inverse(n) })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nodes(&self) -> &[Complex<T>] {
        &self.nodes
    }

    /// Frequency carried by FFT slot `k`, in `[−N/2, N/2)`.
    pub fn frequency(&self, k: usize) -> isize {
        if k < self.n / 2 {
            k as isize
        } else {
            k as isize - self.n as isize
        }
    }

    /// FFT slot of frequency `j` (must lie in the band).
    pub fn slot(&self, j: isize) -> usize {
        debug_assert!(j >= -(self.n as isize) / 2 && j < self.n as isize / 2);
        j.rem_euclid(self.n as isize) as usize
    }

    /// Fourier coefficients `ĉ_j = (1/N) Σ_k f(t_k) t_k^{−j}` of every
    /// component, stored by FFT slot.
    pub fn coefficients(&self, f: &BoundaryFunction<T>) -> CMatrix<T> {
        self.transform(&f.values, true)
    }

    pub fn synthesize(&self, coeffs: &CMatrix<T>) -> BoundaryFunction<T> {
        BoundaryFunction::from_values(self.transform(coeffs, false))
    }

    fn transform(&self, data: &CMatrix<T>, forward: bool) -> CMatrix<T> {
        assert_eq!(data.ncols(), self.n, "grid size mismatch");
        let mut out = data.clone();
        let mut row = vec![Complex::new(T::zero(), T::zero()); self.n];
        let scale = Complex::new(T::one() / T::lit(self.n as f64), T::zero());
        for r in 0..data.nrows() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = data[(r, k)];
            }
            if forward {
                self.forward.process(&mut row);
            } else {
                self.backward.process(&mut row);
            }
            for (k, v) in row.iter().enumerate() {
                out[(r, k)] = if forward { *v * scale } else { *v };
            }
        }
        out
    }

    /// `Π_+`: keeps frequencies `0 ≤ j < N/2`.
    pub fn project_plus(&self, f: &BoundaryFunction<T>) -> BoundaryFunction<T> {
        let mut c = self.coefficients(f);
        for k in self.n / 2..self.n {
            c.column_mut(k).fill(Complex::new(T::zero(), T::zero()));
        }
        self.synthesize(&c).with_split_of(f)
    }

    /// `Π_−`: keeps frequencies `−N/2 ≤ j < 0`.
    pub fn project_minus(&self, f: &BoundaryFunction<T>) -> BoundaryFunction<T> {
        let mut c = self.coefficients(f);
        for k in 0..self.n / 2 {
            c.column_mut(k).fill(Complex::new(T::zero(), T::zero()));
        }
        self.synthesize(&c).with_split_of(f)
    }

    /// Values of `f` at every node.
    pub fn sample<F: MatrixFunction<T> + ?Sized>(&self, f: &F) -> Result<Vec<CMatrix<T>>> {
        self.nodes.iter().map(|t| f.eval(*t)).collect()
    }

    /// Values at every node, `None` where evaluation fails.
    pub fn sample_partial<F: MatrixFunction<T> + ?Sized>(&self, f: &F) -> Vec<Option<CMatrix<T>>> {
        self.nodes.iter().map(|t| f.eval(*t).ok()).collect()
    }

    pub fn function<E>(&self, dim: usize, f: impl FnMut(Complex<T>) -> std::result::Result<CVector<T>, E>) -> std::result::Result<BoundaryFunction<T>, E> {
        BoundaryFunction::from_fn(self, dim, f)
    }
}

/// A `ℂ^m`-valued function sampled on a [`CircleGrid`] (column `k` holds the
/// value at `t_k`), optionally split as `[f_+; f_−]` with `f_+` of size `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunction<T: Real> {
    values: CMatrix<T>,
    split: Option<usize>,
}

impl<T: Real> BoundaryFunction<T> {
    pub fn from_values(values: CMatrix<T>) -> Self {
        Self { values, split: None }
    }

    pub fn zeros(dim: usize, n: usize) -> Self {
        Self::from_values(CMatrix::zeros(dim, n))
    }

    pub fn from_fn<E>(
        grid: &CircleGrid<T>,
        dim: usize,
        mut f: impl FnMut(Complex<T>) -> std::result::Result<CVector<T>, E>,
    ) -> std::result::Result<Self, E> {
        let mut values = CMatrix::zeros(dim, grid.len());
        for (k, t) in grid.nodes().iter().enumerate() {
            values.set_column(k, &f(*t)?);
        }
        Ok(Self::from_values(values))
    }

    /// Stacks `[upper; lower]` and records the split.
    pub fn stack(upper: &Self, lower: &Self) -> Self {
        Self { values: linalg::vstack(&[&upper.values, &lower.values]), split: Some(upper.dim()) }
    }

    pub fn with_split(mut self, p: usize) -> Self {
        assert!(p <= self.dim());
        self.split = Some(p);
        self
    }

    fn with_split_of(mut self, other: &Self) -> Self {
        self.split = other.split;
        self
    }

    pub fn split(&self) -> Option<usize> {
        self.split
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn values(&self) -> &CMatrix<T> {
        &self.values
    }

    pub fn value(&self, k: usize) -> CVector<T> {
        self.values.column(k).into_owned()
    }

    /// `f_+` (first `p` components).
    pub fn upper(&self) -> Self {
        let p = self.split.expect("function has no component split");
        Self::from_values(self.values.rows(0, p).into_owned())
    }

    /// `f_−` (remaining components).
    pub fn lower(&self) -> Self {
        let p = self.split.expect("function has no component split");
        Self::from_values(self.values.rows(p, self.dim() - p).into_owned())
    }

    /// `⟨self, other⟩ = (1/N) Σ other(t)* self(t)`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        other.values.dotc(&self.values) * Complex::new(T::one() / T::lit(self.len() as f64), T::zero())
    }

    pub fn norm(&self) -> T {
        self.inner(self).re.max(T::zero()).sqrt()
    }

    /// Largest pointwise Euclidean norm.
    pub fn sup_norm(&self) -> T {
        self.values
            .column_iter()
            .map(|c| c.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { values: &self.values * c, split: self.split }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { values: &self.values + &other.values, split: self.split }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { values: &self.values - &other.values, split: self.split }
    }

    /// Pointwise `A(t_k)·f(t_k)`.
    pub fn apply(&self, samples: &[CMatrix<T>]) -> Self {
        assert_eq!(samples.len(), self.len());
        let rows = samples.first().map(|a| a.nrows()).unwrap_or(0);
        let mut values = CMatrix::zeros(rows, self.len());
        for (k, a) in samples.iter().enumerate() {
            values.set_column(k, &(a * self.values.column(k)));
        }
        Self::from_values(values)
    }

    /// Pointwise `A(t_k)*·f(t_k)`.
    pub fn apply_adjoint(&self, samples: &[CMatrix<T>]) -> Self {
        assert_eq!(samples.len(), self.len());
        let rows = samples.first().map(|a| a.ncols()).unwrap_or(0);
        let mut values = CMatrix::zeros(rows, self.len());
        for (k, a) in samples.iter().enumerate() {
            values.set_column(k, &(a.adjoint() * self.values.column(k)));
        }
        Self::from_values(values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSide {
    /// `H(b) = H² ⊖ bH²`.
    Analytic,
    /// `H_*(b) = (H²)^⊥ ⊖ b*(H²)^⊥`.
    CoAnalytic,
}

/// Orthonormal basis of a model space on the grid.
#[derive(Clone, Debug)]
pub struct ModelSpaceBasis<T: Real> {
    pub side: ModelSide,
    pub basis: Vec<BoundaryFunction<T>>,
    /// Number of Fourier coefficients kept in the Toeplitz truncation.
    pub truncation: usize,
    /// Largest singular value declared zero and smallest declared nonzero,
    /// relative to the largest.
    pub gap: (f64, f64),
}

impl<T: Real> ModelSpaceBasis<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `(⟨g, e_i⟩)_i`.
    pub fn coordinates(&self, g: &BoundaryFunction<T>) -> CVector<T> {
        CVector::from_iterator(self.basis.len(), self.basis.iter().map(|e| g.inner(e)))
    }

    /// `Σ c_i e_i`.
    pub fn combine(&self, c: &CVector<T>, dim: usize, n: usize) -> BoundaryFunction<T> {
        let mut acc = CMatrix::zeros(dim, n);
        for (e, ci) in self.basis.iter().zip(c.iter()) {
            acc += e.values() * *ci;
        }
        BoundaryFunction::from_values(acc)
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, g: &BoundaryFunction<T>) -> BoundaryFunction<T> {
        self.combine(&self.coordinates(g), g.dim(), g.len())
    }

    /// Relative distance from the span of the reproducing-kernel candidates
    /// `(I − b(t)b(w)*)x/(1 − w̄t)` (analytic side) or
    /// `(I − b(t)*b(w))x/(t − w)` (co-analytic side) at the points `ws`.
    pub fn kernel_residual(&self, grid: &CircleGrid<T>, b: &BlaschkePotapovProduct<T>, ws: &[Complex<T>]) -> Result<T> {
        let m = b.dim();
        let bs = grid.sample(b)?;
        let mut worst = T::zero();
        for &w in ws {
            let bw = b.evaluate(w)?;
            for i in 0..m {
                let x = identity::<T>(m).column(i).into_owned();
                let cand = BoundaryFunction::from_fn(grid, m, |t| -> Result<CVector<T>> {
                    let k = grid.nodes().iter().position(|z| *z == t).expect("grid node");
                    Ok(match self.side {
                        ModelSide::Analytic => (identity::<T>(m) - &bs[k] * bw.adjoint()) * &x / (Complex::new(T::one(), T::zero()) - w.conj() * t),
                        ModelSide::CoAnalytic => (identity::<T>(m) - bs[k].adjoint() * &bw) * &x / (t - w),
                    })
                })?;
                let nrm = cand.norm();
                if nrm > T::tol(1e-12) {
                    worst = worst.max(cand.sub(&self.project(&cand)).norm() / nrm);
                }
            }
        }
        Ok(worst)
    }
}

fn zeros_are_simple<T: Real>(b: &BlaschkePotapovProduct<T>) -> bool {
    let f = b.factors();
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            if modulus(f[i].alpha - f[j].alpha) < T::lit(1e-7) {
                let cross = &f[i].projection * &f[j].projection;
                if norm2(&cross) > T::tol(1e-8) {
                    return false;
                }
            }
        }
    }
    true
}

/// Null-space threshold for the truncated Toeplitz systems.
const NULL_TOL: f64 = 1e-8;

/// Model space of `b` as the numerical null space of a truncated block
/// Toeplitz system built from the Fourier coefficients of `b`.
pub fn model_space_basis<T: Real>(grid: &CircleGrid<T>, b: &BlaschkePotapovProduct<T>, side: ModelSide) -> Result<ModelSpaceBasis<T>> {
    let deg = b.degree();
    let m = b.dim();
    let n = grid.len();
    if deg == 0 {
        return Ok(ModelSpaceBasis { side, basis: Vec::new(), truncation: 0, gap: (0.0, 1.0) });
    }
    if !zeros_are_simple(b) {
        return Err(Error::UnsupportedPoleStructure("Blaschke–Potapov product has a repeated zero".into()));
    }
    let amax = b.factors().iter().map(|f| modulus(f.alpha).to_f64_lossy()).fold(0.0, f64::max);
    let wanted = if amax < 1e-3 { 0 } else { (1e-14f64.ln() / amax.ln()).ceil() as usize };
    let len = wanted.clamp(deg + 2, (n / 4).max(deg + 2));
    if len > n / 2 {
        return Err(Error::NumericalRankFailure(format!("grid of size {n} too small for degree {deg}")));
    }

    // Fourier coefficients b̂(k), k = 0..len, as m×m blocks
    let samples = grid.sample(b)?;
    let mut flat = CMatrix::zeros(m * m, n);
    for (k, s) in samples.iter().enumerate() {
        for r in 0..m {
            for c in 0..m {
                flat[(r * m + c, k)] = s[(r, c)];
            }
        }
    }
    let coef = grid.transform(&flat, true);
    let bhat = |k: usize| CMatrix::from_fn(m, m, |r, c| coef[(r * m + c, grid.slot(k as isize))]);

    let mut a = CMatrix::zeros(m * len, m * len);
    for row in 0..len {
        for col in row..len {
            let blk = match side {
                ModelSide::Analytic => bhat(col - row).adjoint(),
                ModelSide::CoAnalytic => bhat(col - row),
            };
            a.view_mut((row * m, col * m), (m, m)).copy_from(&blk);
        }
    }
    let (values, vectors) = linalg::smallest_right_singular(&a, deg + 1);
    let smax = values[0];
    let rel: Vec<f64> = values.iter().map(|v| (*v / smax).to_f64_lossy()).collect();
    let null_dim = rel.iter().filter(|v| **v <= NULL_TOL).count();
    let gap = (rel[rel.len() - deg], if rel.len() > deg { rel[rel.len() - deg - 1] } else { 1.0 });
    if null_dim != deg {
        return Err(Error::NumericalRankFailure(format!(
            "model space has numerical dimension {null_dim}, expected {deg}"
        )));
    }
    let mut basis = Vec::with_capacity(deg);
    for j in 1..=deg {
        let v = vectors.column(j).into_owned();
        let mut v = normalize_phase(v);
        let nv = linalg::vec_norm(&v);
        v /= Complex::new(nv, T::zero());
        let mut coeffs = CMatrix::zeros(m, n);
        for k in 0..len {
            let slot = match side {
                ModelSide::Analytic => grid.slot(k as isize),
                ModelSide::CoAnalytic => grid.slot(-(k as isize) - 1),
            };
            for r in 0..m {
                coeffs[(r, slot)] = v[k * m + r];
            }
        }
        basis.push(grid.synthesize(&coeffs));
    }
    Ok(ModelSpaceBasis { side, basis, truncation: len, gap })
}

fn normalize_phase<T: Real>(v: CVector<T>) -> CVector<T> {
    let (mut best, mut idx) = (T::zero(), 0);
    for (i, z) in v.iter().enumerate() {
        if modulus(*z) > best {
            best = modulus(*z);
            idx = i;
        }
    }
    if best == T::zero() {
        return v;
    }
    let phase = v[idx] / Complex::new(best, T::zero());
    v * phase.conj()
}

/// `X_r[i][j] = ⟨s h_j, e_i⟩` with `h_j` spanning `H(b_r)` and `e_i` spanning `H_*(b_l)`.
pub fn build_xr<T: Real>(s_samples: &[CMatrix<T>], basis_r: &ModelSpaceBasis<T>, basis_l: &ModelSpaceBasis<T>) -> Result<CMatrix<T>> {
    check_dims(basis_r, basis_l)?;
    let k = basis_r.dim();
    let sh: Vec<BoundaryFunction<T>> = basis_r.basis.iter().map(|h| h.apply(s_samples)).collect();
    Ok(CMatrix::from_fn(k, k, |i, j| sh[j].inner(&basis_l.basis[i])))
}

/// `X_l[i][j] = ⟨s* e_j, h_i⟩`; equals `X_r*` for consistent data.
pub fn build_xl<T: Real>(s_samples: &[CMatrix<T>], basis_r: &ModelSpaceBasis<T>, basis_l: &ModelSpaceBasis<T>) -> Result<CMatrix<T>> {
    check_dims(basis_r, basis_l)?;
    let k = basis_r.dim();
    let se: Vec<BoundaryFunction<T>> = basis_l.basis.iter().map(|e| e.apply_adjoint(s_samples)).collect();
    Ok(CMatrix::from_fn(k, k, |i, j| se[j].inner(&basis_r.basis[i])))
}

fn check_dims<T: Real>(basis_r: &ModelSpaceBasis<T>, basis_l: &ModelSpaceBasis<T>) -> Result<()> {
    if basis_r.dim() != basis_l.dim() {
        return Err(Error::KlConsistency(format!(
            "left and right model spaces have dimensions {} and {}",
            basis_l.dim(),
            basis_r.dim()
        )));
    }
    Ok(())
}

/// `Γ_r g = X_r⁻¹ P_{H_*(b_l)} g` and `Γ_l f = X_l⁻¹ P_{H(b_r)} f`.
#[derive(Clone, Debug)]
pub struct GammaMap<T: Real> {
    pub xr: CMatrix<T>,
    xr_inv: CMatrix<T>,
    pub basis_r: ModelSpaceBasis<T>,
    pub basis_l: ModelSpaceBasis<T>,
    /// `σ_max/σ_min` of `X_r`.
    pub condition: f64,
    p: usize,
    q: usize,
}

impl<T: Real> GammaMap<T> {
    pub fn new(s_samples: &[CMatrix<T>], basis_r: ModelSpaceBasis<T>, basis_l: ModelSpaceBasis<T>) -> Result<Self> {
        let (p, q) = s_samples.first().map(|s| s.shape()).unwrap_or((0, 0));
        let xr = build_xr(s_samples, &basis_r, &basis_l)?;
        let sv = linalg::singular_values(&xr);
        let condition = match (sv.first(), sv.last()) {
            (Some(a), Some(b)) if *b > T::zero() => (*a / *b).to_f64_lossy(),
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        };
        if condition > 1e10 {
            return Err(Error::KlConsistency(format!("X_r is numerically singular (condition {condition:.3e})")));
        }
        let xr_inv = linalg::inverse(&xr).ok_or_else(|| Error::KlConsistency("X_r is singular".into()))?;
        Ok(Self { xr, xr_inv, basis_r, basis_l, condition, p, q })
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.xr_inv, T::tol(1e-10))
    }

    /// `Γ_r g` for `g ∈ L²_p`, a function in `H(b_r) ⊂ L²_q`.
    pub fn apply_r(&self, g: &BoundaryFunction<T>) -> BoundaryFunction<T> {
        let c = &self.xr_inv * self.basis_l.coordinates(g);
        self.basis_r.combine(&c, self.q, g.len())
    }

    /// `Γ_r* f` for `f ∈ L²_q`, a function in `H_*(b_l) ⊂ L²_p`.
    pub fn apply_r_adjoint(&self, f: &BoundaryFunction<T>) -> BoundaryFunction<T> {
        let c = self.xr_inv.adjoint() * self.basis_r.coordinates(f);
        self.basis_l.combine(&c, self.p, f.len())
    }

    /// `Γ_l f = X_l⁻¹ P_{H(b_r)} f` with `X_l = X_r*`.
    pub fn apply_l(&self, f: &BoundaryFunction<T>) -> BoundaryFunction<T> {
        let c = self.xr_inv.adjoint() * self.basis_r.coordinates(f);
        self.basis_l.combine(&c, self.p, f.len())
    }
}

/// Residuals of the three membership conditions for `D(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub ok: bool,
    /// `‖Π_−(b_l f_+)‖`, `‖Π_+(b_r* f_−)‖` and the largest distance of
    /// `f(t_k)` to `ran Δ_s(t_k)`, each relative to the size of `f`.
    pub residuals: [f64; 3],
}

/// The space `D(s)` discretized on a grid.
#[derive(Clone, Debug)]
pub struct DbrSpace<T: Real> {
    grid: CircleGrid<T>,
    p: usize,
    q: usize,
    s_samples: Vec<Option<CMatrix<T>>>,
    delta_pinv: Vec<Option<CMatrix<T>>>,
    range_proj: Vec<Option<CMatrix<T>>>,
    bl_samples: Vec<CMatrix<T>>,
    br_samples: Vec<CMatrix<T>>,
    gamma: Option<GammaMap<T>>,
    kappa: usize,
}

impl<T: Real> DbrSpace<T> {
    /// Builds the space from `s` and the Blaschke–Potapov parts of its left and
    /// right Kreĭn–Langer factorizations.
    pub fn new<F: MatrixFunction<T> + ?Sized>(
        s: &F,
        b_l: &BlaschkePotapovProduct<T>,
        b_r: &BlaschkePotapovProduct<T>,
        grid: &CircleGrid<T>,
        rank_tol: T,
    ) -> Result<Self> {
        let (p, q) = (s.out_dim(), s.in_dim());
        if b_l.dim() != p || b_r.dim() != q {
            return Err(Error::InvalidInput("Blaschke–Potapov parts have the wrong sizes".into()));
        }
        if b_l.degree() != b_r.degree() {
            return Err(Error::KlConsistency(format!(
                "left degree {} differs from right degree {}",
                b_l.degree(),
                b_r.degree()
            )));
        }
        let s_samples = grid.sample_partial(s);
        let mut delta_pinv = Vec::with_capacity(grid.len());
        let mut range_proj = Vec::with_capacity(grid.len());
        for sv in &s_samples {
            match sv {
                Some(v) if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    let d = delta_matrix(v);
                    let x = linalg::pinv(&d, rank_tol);
                    range_proj.push(Some(&d * &x));
                    delta_pinv.push(Some(x));
                }
                _ => {
                    delta_pinv.push(None);
                    range_proj.push(None);
                }
            }
        }
        let kappa = b_l.degree();
        let gamma = if kappa == 0 {
            None
        } else {
            let full: Vec<CMatrix<T>> = s_samples
                .iter()
                .map(|v| v.clone().ok_or_else(|| Error::Domain("s has a pole on the grid".into())))
                .collect::<Result<_>>()?;
            let basis_r = model_space_basis(grid, b_r, ModelSide::Analytic)?;
            let basis_l = model_space_basis(grid, b_l, ModelSide::CoAnalytic)?;
            Some(GammaMap::new(&full, basis_r, basis_l)?)
        };
        Ok(Self {
            grid: grid.clone(),
            p,
            q,
            s_samples,
            delta_pinv,
            range_proj,
            bl_samples: grid.sample(b_l)?,
            br_samples: grid.sample(b_r)?,
            gamma,
            kappa,
        })
    }

    /// Runs both Kreĭn–Langer factorizations of `s` first.
    pub fn from_rational(s: &RationalMatrixFunction<T>, grid: &CircleGrid<T>) -> Result<Self> {
        let left = krein_langer_left(s)?;
        let right = krein_langer_right(s)?;
        Self::new(s, &left.blaschke_part, &right.blaschke_part, grid, T::tol(DEFAULT_RANK_TOL))
    }

    pub fn grid(&self) -> &CircleGrid<T> {
        &self.grid
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn gamma(&self) -> Option<&GammaMap<T>> {
        self.gamma.as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    /// Nodes where `s` could not be evaluated; they are left out of every
    /// quadrature.
    pub fn skipped_nodes(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|k| self.delta_pinv[*k].is_none()).collect()
    }

    pub fn s_samples(&self) -> &[Option<CMatrix<T>>] {
        &self.s_samples
    }

    fn split(&self, f: &BoundaryFunction<T>) -> Result<(BoundaryFunction<T>, BoundaryFunction<T>)> {
        if f.dim() != self.p + self.q || f.len() != self.grid.len() {
            return Err(Error::InvalidInput("boundary function does not match the space".into()));
        }
        let f = f.clone().with_split(self.p);
        Ok((f.upper(), f.lower()))
    }

    /// `[f, g]_{D(s)} = (1/N) Σ g*Δ_s⁺f + ⟨Γ_r f_+, g_−⟩ + ⟨Γ_r* f_−, g_+⟩`.
    pub fn inner(&self, f: &BoundaryFunction<T>, g: &BoundaryFunction<T>) -> Result<Complex<T>> {
        let (fp, fm) = self.split(f)?;
        let (gp, gm) = self.split(g)?;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (k, x) in self.delta_pinv.iter().enumerate() {
            if let Some(x) = x {
                acc += (g.values().column(k).adjoint() * x * f.values().column(k))[(0, 0)];
            }
        }
        let mut val = acc * Complex::new(T::one() / T::lit(self.grid.len() as f64), T::zero());
        if let Some(gamma) = &self.gamma {
            val += gamma.apply_r(&fp).inner(&gm);
            val += gamma.apply_r_adjoint(&fm).inner(&gp);
        }
        Ok(val)
    }

    /// `G[i][j] = [f_j, f_i]_{D(s)}`.
    pub fn gram(&self, fs: &[BoundaryFunction<T>]) -> Result<CMatrix<T>> {
        let n = fs.len();
        let mut g = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = self.inner(&fs[j], &fs[i])?;
            }
        }
        Ok(g)
    }

    /// Residuals of the membership conditions; `ok` when all are `≤ tol`.
    pub fn membership(&self, f: &BoundaryFunction<T>, tol: T) -> Result<Membership> {
        let (fp, fm) = self.split(f)?;
        let scale = f.norm().max(T::lit(1e-300));
        let r1 = self.grid.project_minus(&fp.apply(&self.bl_samples)).norm() / scale;
        let r2 = self.grid.project_plus(&fm.apply_adjoint(&self.br_samples)).norm() / scale;
        let sup = f.sup_norm().max(T::lit(1e-300));
        let mut r3 = T::zero();
        for (k, pr) in self.range_proj.iter().enumerate() {
            if let Some(pr) = pr {
                let v = f.values().column(k);
                let d = &v - pr * &v;
                r3 = r3.max(linalg::vec_norm(&d.into_owned()) / sup);
            }
        }
        let residuals = [r1.to_f64_lossy(), r2.to_f64_lossy(), r3.to_f64_lossy()];
        Ok(Membership { ok: r1 <= tol && r2 <= tol && r3 <= tol, residuals })
    }
}

/// Kernel section `t ↦ D_s(μ, t)x` on the grid.
pub fn kernel_section<T: Real, F: MatrixFunction<T> + ?Sized>(
    grid: &CircleGrid<T>,
    s: &F,
    mu: Complex<T>,
    x: &CVector<T>,
) -> Result<BoundaryFunction<T>> {
    let p = s.out_dim();
    Ok(BoundaryFunction::from_fn(grid, s.out_dim() + s.in_dim(), |t| -> Result<CVector<T>> { Ok(ds_kernel(s, mu, t)? * x) })?.with_split(p))
}

/// Outcome of [`adaptive_quadrature`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub value: [f64; 2],
    pub grid: usize,
    pub relative_change: f64,
    pub converged: bool,
}

/// Doubles the grid from `start` until the value changes by less than
/// `rel_tol` relative, or `max` is reached.
pub fn adaptive_quadrature<T: Real>(
    start: usize,
    max: usize,
    rel_tol: f64,
    mut eval: impl FnMut(&CircleGrid<T>) -> Result<Complex<T>>,
) -> Result<AdaptiveResult> {
    let mut n = start;
    let mut prev = eval(&CircleGrid::new(n)?)?;
    loop {
        let next_n = n * 2;
        if next_n > max {
            return Ok(AdaptiveResult {
                value: [prev.re.to_f64_lossy(), prev.im.to_f64_lossy()],
                grid: n,
                relative_change: f64::NAN,
                converged: false,
            });
        }
        let next = eval(&CircleGrid::new(next_n)?)?;
        let change = (modulus(next - prev) / modulus(next).max(T::lit(1e-300))).to_f64_lossy();
        if change < rel_tol {
            return Ok(AdaptiveResult {
                value: [next.re.to_f64_lossy(), next.im.to_f64_lossy()],
                grid: next_n,
                relative_change: change,
                converged: true,
            });
        }
        prev = next;
        n = next_n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_disk_point, random_matrix};
    use crate::rational::BpFactor;
    use crate::scalar::cplx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type G = CircleGrid<f64>;

    fn scalar_fn(grid: &G, f: impl Fn(Complex<f64>) -> Complex<f64>) -> BoundaryFunction<f64> {
        BoundaryFunction::from_fn(grid, 1, |t| -> Result<CVector<f64>> { Ok(CVector::from_element(1, f(t))) }).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(G::new(100).is_err());
        assert!(G::new(4).is_err());
        assert_eq!(G::new(16).unwrap().frequency(15), -1);
    }

    #[test]
    fn projection_examples() {
        let g = G::new(256).unwrap();
        let inv = scalar_fn(&g, |t| 1.0 / t);
        assert!(g.project_plus(&inv).norm() < 1e-14);
        let sq = scalar_fn(&g, |t| t * t);
        assert!(g.project_plus(&sq).sub(&sq).norm() < 1e-14);
        let geo = scalar_fn(&g, |t| 1.0 / (1.0 - t / 2.0));
        assert!(g.project_plus(&geo).sub(&geo).norm() < 1e-14);
    }

    #[test]
    fn projections_are_complementary_idempotents() {
        let g = G::new(128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = BoundaryFunction::from_values(random_matrix::<f64, _>(&mut rng, 2, 128));
        let (pp, pm) = (g.project_plus(&f), g.project_minus(&f));
        assert!(pp.add(&pm).sub(&f).norm() < 1e-12);
        assert!(g.project_plus(&pp).sub(&pp).norm() < 1e-12);
        assert!(g.project_minus(&pm).sub(&pm).norm() < 1e-12);
        assert!(g.project_plus(&pm).norm() < 1e-12);
        // synthesis inverts analysis
        assert!(g.synthesize(&g.coefficients(&f)).sub(&f).norm() < 1e-12);
    }

    #[test]
    fn model_space_examples() {
        let g = G::new(256).unwrap();
        let id = BlaschkePotapovProduct::<f64>::identity(2);
        assert_eq!(model_space_basis(&g, &id, ModelSide::Analytic).unwrap().dim(), 0);

        let lam = BlaschkePotapovProduct::scalar(&[cplx(0.0, 0.0)]).unwrap();
        let h = model_space_basis(&g, &lam, ModelSide::Analytic).unwrap();
        assert_eq!(h.dim(), 1);
        assert!(h.basis[0].sub(&scalar_fn(&g, |_| cplx(1.0, 0.0))).norm() < 1e-12);
        let hs = model_space_basis(&g, &lam, ModelSide::CoAnalytic).unwrap();
        assert!(hs.basis[0].sub(&scalar_fn(&g, |t| 1.0 / t)).norm() < 1e-12);

        let lam2 = BlaschkePotapovProduct::new(
            1,
            vec![
                BpFactor { alpha: cplx(0.0, 0.0), projection: identity(1) },
                BpFactor { alpha: cplx(0.0, 0.0), projection: identity(1) },
            ],
        )
        .unwrap();
        assert!(matches!(model_space_basis(&g, &lam2, ModelSide::Analytic), Err(Error::UnsupportedPoleStructure(_))));
    }

    #[test]
    fn model_space_matches_kernels() {
        let g = G::new(512).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = BlaschkePotapovProduct::identity(2);
        for _ in 0..3 {
            let u = random_matrix(&mut rng, 2, 1);
            b.push(BpFactor::rank_one(random_disk_point(&mut rng, 0.7), &u)).unwrap();
        }
        let ws: Vec<Complex<f64>> = (0..4).map(|_| random_disk_point(&mut rng, 0.8)).collect();
        for side in [ModelSide::Analytic, ModelSide::CoAnalytic] {
            let basis = model_space_basis(&g, &b, side).unwrap();
            assert_eq!(basis.dim(), 3);
            assert!(basis.kernel_residual(&g, &b, &ws).unwrap() < 1e-9, "{side:?}");
            let bs = g.sample(&b).unwrap();
            for e in &basis.basis {
                match side {
                    ModelSide::Analytic => {
                        assert!(g.project_minus(e).norm() < 1e-12);
                        assert!(g.project_plus(&e.apply_adjoint(&bs)).norm() < 1e-9);
                    }
                    ModelSide::CoAnalytic => {
                        assert!(g.project_plus(e).norm() < 1e-12);
                        assert!(g.project_minus(&e.apply(&bs)).norm() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn reciprocal_lambda_operators() {
        let g = G::new(256).unwrap();
        let s = RationalMatrixFunction::<f64>::reciprocal_lambda(1);
        let space = DbrSpace::from_rational(&s, &g).unwrap();
        let gamma = space.gamma().unwrap();
        assert!((gamma.xr[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert_eq!(gamma.rank(), 1);
        let tinv = scalar_fn(&g, |t| 1.0 / t);
        let out = gamma.apply_r(&tinv);
        // Γ_r(t⁻¹) is a unimodular constant (1 up to the basis phase convention)
        let v = out.value(0)[0];
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(out.sub(&scalar_fn(&g, |_| v)).norm() < 1e-12);
    }

    #[test]
    fn xl_is_adjoint_of_xr() {
        let g = G::new(512).unwrap();
        let alpha = cplx(0.4, 0.2);
        let b = BlaschkePotapovProduct::scalar(&[alpha]).unwrap();
        let f = crate::rational::FnMatrixFunction::new(1, 1, |z: Complex<f64>| Ok(CMatrix::from_element(1, 1, (0.5 * z + 0.2) * (1.0 - alpha.conj() * z) / (z - alpha))));
        let samples = g.sample(&f).unwrap();
        let hr = model_space_basis(&g, &b, ModelSide::Analytic).unwrap();
        let hl = model_space_basis(&g, &b, ModelSide::CoAnalytic).unwrap();
        let xr = build_xr(&samples, &hr, &hl).unwrap();
        let xl = build_xl(&samples, &hr, &hl).unwrap();
        assert!(norm2(&(xl - xr.adjoint())) < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let g = G::new(256).unwrap();
        let zero = RationalMatrixFunction::<f64>::constant(CMatrix::from_element(1, 1, cplx(0.3, 0.0)));
        let space = DbrSpace::from_rational(&zero, &g).unwrap();
        let bad = BoundaryFunction::stack(&scalar_fn(&g, |t| 1.0 / t), &scalar_fn(&g, |_| cplx(0.0, 0.0)));
        let m = space.membership(&bad, 1e-8).unwrap();
        assert!(!m.ok && m.residuals[0] > 0.5);
        // a constant lower component violates the second condition when b_r = I
        let good = BoundaryFunction::stack(&scalar_fn(&g, |_| cplx(1.0, 0.0)), &scalar_fn(&g, |_| cplx(0.0, 0.0)));
        assert!(space.membership(&good, 1e-8).unwrap().ok);
        let lower = BoundaryFunction::stack(&scalar_fn(&g, |_| cplx(1.0, 0.0)), &scalar_fn(&g, |_| cplx(-2.0, 0.0)));
        assert!(!space.membership(&lower, 1e-8).unwrap().ok);
        let zf = BoundaryFunction::zeros(2, 256);
        assert_eq!(space.inner(&zf, &good).unwrap(), cplx(0.0, 0.0));
    }
}
