//! Indefinite inner products given by Hermitian Gram matrices, inertia, and
//! negative-squares estimation for Hermitian kernels.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, hermitian_eigen, hermiticity_defect, identity, inverse, min_singular, norm2};
use crate::scalar::Real;
use crate::{CMatrix, CVector, Error, Result};

/// Default relative threshold separating zero from nonzero eigenvalues.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Relative tolerance on `‖A − A*‖` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `ℂ^dim` with the inner product `[f, g] = g* G f`.
#[derive(Clone, Debug)]
pub struct GramSpace<T: Real> {
    gram: CMatrix<T>,
    gram_inv: CMatrix<T>,
}

impl<T: Real> GramSpace<T> {
    /// Wraps a Hermitian invertible Gram matrix. The Hermitian part is stored.
    pub fn new(gram: CMatrix<T>) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(Error::InvalidInput(format!(
                "Gram matrix must be square, got {}x{}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        let sc = linalg::scale(&gram);
        if hermiticity_defect(&gram) > T::tol(HERMITIAN_TOL) * sc {
            return Err(Error::InvalidInput("Gram matrix is not Hermitian".into()));
        }
        let gram = linalg::hermitian_part(&gram);
        if gram.nrows() > 0 && min_singular(&gram) <= T::tol(DEFAULT_ZERO_TOL) * sc {
            return Err(Error::InvalidInput("Gram matrix is singular".into()));
        }
        let gram_inv = inverse(&gram).ok_or_else(|| Error::InvalidInput("Gram matrix is singular".into()))?;
        Ok(Self { gram, gram_inv })
    }

    /// Euclidean space of dimension `n`.
    pub fn hilbert(n: usize) -> Self {
        Self { gram: identity(n), gram_inv: identity(n) }
    }

    /// `ℂ^{p+q}` with Gram `diag(I_p, −I_q)`.
    pub fn signature(p: usize, q: usize) -> Self {
        let j = linalg::signature(p, q);
        Self { gram: j.clone(), gram_inv: j }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &CMatrix<T> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &CMatrix<T> {
        &self.gram_inv
    }

    /// `[f, g] = g* G f`.
    pub fn inner(&self, f: &CVector<T>, g: &CVector<T>) -> Complex<T> {
        (g.adjoint() * &self.gram * f)[(0, 0)]
    }

    pub fn inertia(&self) -> Inertia {
        inertia(&self.gram, T::tol(DEFAULT_ZERO_TOL)).expect("Gram is Hermitian by construction")
    }

    /// Orthogonal direct sum with Gram `G ⊕ G'`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        Self {
            gram: linalg::direct_sum(&self.gram, &other.gram),
            gram_inv: linalg::direct_sum(&self.gram_inv, &other.gram_inv),
        }
    }
}

/// Numbers of positive, negative and zero eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inertia {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl Inertia {
    pub fn new(n_plus: usize, n_minus: usize, n_zero: usize) -> Self {
        Self { n_plus, n_minus, n_zero }
    }

    pub fn dim(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }
}

/// Inertia of a Hermitian matrix; eigenvalues with `|e| ≤ zero_tol·max(1, ‖A‖₂)`
/// count as zero.
pub fn inertia<T: Real>(a: &CMatrix<T>, zero_tol: T) -> Result<Inertia> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidInput("inertia needs a square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok(Inertia::new(0, 0, 0));
    }
    let sc = linalg::scale(a);
    if hermiticity_defect(a) > T::tol(HERMITIAN_TOL) * sc {
        return Err(Error::InvalidInput("inertia needs a Hermitian matrix".into()));
    }
    let (values, _) = hermitian_eigen(a);
    Ok(inertia_of_values(&values, zero_tol * sc))
}

fn inertia_of_values<T: Real>(values: &[T], threshold: T) -> Inertia {
    let mut out = Inertia::new(0, 0, 0);
    for &e in values {
        if e > threshold {
            out.n_plus += 1;
        } else if e < -threshold {
            out.n_minus += 1;
        } else {
            out.n_zero += 1;
        }
    }
    out
}

fn check_maps<T: Real>(a: &CMatrix<T>, in_space: &GramSpace<T>, out_space: &GramSpace<T>) -> Result<()> {
    if a.ncols() != in_space.dim() || a.nrows() != out_space.dim() {
        return Err(Error::InvalidInput(format!(
            "operator is {}x{} but spaces have dimensions {} -> {}",
            a.nrows(),
            a.ncols(),
            in_space.dim(),
            out_space.dim()
        )));
    }
    Ok(())
}

/// `A^[×] = G_in⁻¹ A* G_out`, the adjoint with respect to both Gram products.
pub fn indefinite_adjoint<T: Real>(
    a: &CMatrix<T>,
    in_space: &GramSpace<T>,
    out_space: &GramSpace<T>,
) -> Result<CMatrix<T>> {
    check_maps(a, in_space, out_space)?;
    Ok(in_space.gram_inv() * a.adjoint() * out_space.gram())
}

/// `‖A^[×]A − I‖₂`; zero iff `A` preserves the indefinite product.
pub fn isometry_residual<T: Real>(a: &CMatrix<T>, in_space: &GramSpace<T>, out_space: &GramSpace<T>) -> Result<T> {
    let adj = indefinite_adjoint(a, in_space, out_space)?;
    Ok(norm2(&(adj * a - identity::<T>(in_space.dim()))))
}

/// `max(‖A^[×]A − I‖, ‖AA^[×] − I‖)`.
pub fn unitarity_residual<T: Real>(a: &CMatrix<T>, in_space: &GramSpace<T>, out_space: &GramSpace<T>) -> Result<T> {
    if in_space.dim() != out_space.dim() {
        return Err(Error::InvalidInput("unitary operators need equal total dimensions".into()));
    }
    let adj = indefinite_adjoint(a, in_space, out_space)?;
    let left = norm2(&(&adj * a - identity::<T>(in_space.dim())));
    let right = norm2(&(a * &adj - identity::<T>(out_space.dim())));
    Ok(left.max(right))
}

/// A Hermitian kernel `K(λ, μ)` with `m×m` values on a subset of the disk.
///
/// The convention is `K(λ, μ) = K_μ(λ)`, e.g. `(I − s(λ)s(μ)*)/(1 − λμ̄)`.
pub trait KernelEvaluator<T: Real> {
    fn size(&self) -> usize;

    fn eval(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>>;

    /// Whether `z` lies in the kernel's domain.
    fn contains(&self, z: Complex<T>) -> bool {
        crate::scalar::modulus(z) < T::one()
    }
}

impl<T: Real, K: KernelEvaluator<T> + ?Sized> KernelEvaluator<T> for &K {
    fn size(&self) -> usize {
        (**self).size()
    }
    fn eval(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        (**self).eval(lambda, mu)
    }
    fn contains(&self, z: Complex<T>) -> bool {
        (**self).contains(z)
    }
}

/// Kernel given by a closure.
pub struct FnKernel<T: Real, F> {
    size: usize,
    f: F,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real, F> FnKernel<T, F>
where
    F: Fn(Complex<T>, Complex<T>) -> Result<CMatrix<T>>,
{
    pub fn new(size: usize, f: F) -> Self {
        Self { size, f, _marker: std::marker::PhantomData }
    }
}

impl<T: Real, F> KernelEvaluator<T> for FnKernel<T, F>
where
    F: Fn(Complex<T>, Complex<T>) -> Result<CMatrix<T>>,
{
    fn size(&self) -> usize {
        self.size
    }
    fn eval(&self, lambda: Complex<T>, mu: Complex<T>) -> Result<CMatrix<T>> {
        (self.f)(lambda, mu)
    }
}

/// Gram matrix with entries `u_k* K(λ_k, λ_j) u_j`.
pub fn kernel_gram<T: Real, K: KernelEvaluator<T> + ?Sized>(
    kernel: &K,
    points: &[Complex<T>],
    directions: &[CVector<T>],
) -> Result<CMatrix<T>> {
    if points.len() != directions.len() {
        return Err(Error::InvalidInput("points and directions differ in length".into()));
    }
    let m = kernel.size();
    if let Some(u) = directions.iter().find(|u| u.len() != m) {
        return Err(Error::InvalidInput(format!("direction of length {} for a {m}x{m} kernel", u.len())));
    }
    if let Some(z) = points.iter().find(|z| !kernel.contains(**z)) {
        return Err(Error::Domain(format!("sample point {z} lies outside the kernel domain")));
    }
    let n = points.len();
    let mut gram = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..=j {
            let kv = kernel.eval(points[k], points[j])?;
            let v = (directions[k].adjoint() * kv * &directions[j])[(0, 0)];
            gram[(k, j)] = v;
            if k != j {
                gram[(j, k)] = v.conj();
            }
        }
    }
    // the diagonal of a Hermitian kernel Gram is real
    for j in 0..n {
        gram[(j, j)].im = T::zero();
    }
    Ok(gram)
}

/// Outcome of a sampled negative-squares count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSquares {
    /// Negative inertia of the full sample.
    pub kappa: usize,
    /// The count agreed on the nested prefixes of sizes n/8, n/4, n/2 and n.
    pub stabilized: bool,
    /// Counts on the nested prefixes, smallest first.
    pub nested_counts: Vec<usize>,
    pub sample_size: usize,
}

/// Number of negative eigenvalues of the sampled kernel Gram matrix, together
/// with the counts on nested leading subsamples.
pub fn negative_squares_estimate<T: Real, K: KernelEvaluator<T> + ?Sized>(
    kernel: &K,
    points: &[Complex<T>],
    directions: &[CVector<T>],
    zero_tol: T,
) -> Result<NegativeSquares> {
    let gram = kernel_gram(kernel, points, directions)?;
    let n = points.len();
    let mut sizes: Vec<usize> = [8, 4, 2].iter().map(|d| n.div_ceil(*d).max(1)).collect();
    sizes.push(n);
    sizes.dedup();
    let mut counts = Vec::with_capacity(sizes.len());
    for &k in &sizes {
        if k == 0 {
            counts.push(0);
            continue;
        }
        let sub = gram.view((0, 0), (k, k)).into_owned();
        counts.push(inertia(&sub, zero_tol)?.n_minus);
    }
    let kappa = counts.last().copied().unwrap_or(0);
    let stabilized = n >= 8 && counts.iter().all(|c| *c == kappa);
    Ok(NegativeSquares { kappa, stabilized, nested_counts: counts, sample_size: n })
}

/// Sampling parameters for [`estimate_negative_squares`].
#[derive(Clone, Debug)]
pub struct SampleOptions {
    /// Initial number of points; doubled until stabilized.
    pub initial: usize,
    pub max_points: usize,
    /// Points are drawn uniformly from the disk of this radius.
    pub radius: f64,
    pub zero_tol: f64,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { initial: 16, max_points: 128, radius: 0.9, zero_tol: DEFAULT_ZERO_TOL, seed: 0 }
    }
}

/// Random points of the disk (skipping points outside the kernel domain) and
/// random unit directions.
pub fn sample_kernel_points<T: Real, K: KernelEvaluator<T> + ?Sized>(
    kernel: &K,
    count: usize,
    radius: f64,
    seed: u64,
) -> (Vec<Complex<T>>, Vec<CVector<T>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = kernel.size();
    let mut points = Vec::with_capacity(count);
    let mut directions = Vec::with_capacity(count);
    let mut attempts = 0;
    while points.len() < count && attempts < 100 * count + 100 {
        attempts += 1;
        let z: Complex<T> = linalg::random_disk_point(&mut rng, radius);
        let u: CVector<T> = linalg::random_vector(&mut rng, m);
        if !kernel.contains(z) {
            continue;
        }
        let nu = linalg::vec_norm(&u);
        if nu == T::zero() {
            continue;
        }
        points.push(z);
        directions.push(u / Complex::new(nu, T::zero()));
    }
    (points, directions)
}

/// Doubles the random sample until the nested counts agree or `max_points`
/// is reached. The same seed yields nested samples, so counts are monotone.
pub fn estimate_negative_squares<T: Real, K: KernelEvaluator<T> + ?Sized>(
    kernel: &K,
    options: &SampleOptions,
) -> Result<NegativeSquares> {
    let mut n = options.initial.max(8);
    loop {
        let (points, directions) = sample_kernel_points(kernel, n, options.radius, options.seed);
        let est = negative_squares_estimate(kernel, &points, &directions, T::lit(options.zero_tol))?;
        if est.stabilized || n >= options.max_points {
            return Ok(est);
        }
        n = (2 * n).min(options.max_points);
    }
}
