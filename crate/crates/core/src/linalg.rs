//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;

use crate::scalar::{modulus, unimodular, Real};
use crate::{CMatrix, CVector, Error, Result};

/// Relative pivot threshold below which a square system is treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-13;

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::identity(n, n)
}

pub fn zeros<T: Real>(rows: usize, cols: usize) -> CMatrix<T> {
    CMatrix::zeros(rows, cols)
}

/// Singular values in descending order. Empty matrices have none.
pub fn singular_values<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<T> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Spectral norm.
pub fn norm2<T: Real>(a: &CMatrix<T>) -> T {
    singular_values(a).first().copied().unwrap_or_else(T::zero)
}

pub fn vec_norm<T: Real>(v: &CVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.re * z.re + z.im * z.im).sqrt()
}

/// `max(1, ‖A‖₂)`.
pub fn scale<T: Real>(a: &CMatrix<T>) -> T {
    norm2(a).max(T::one())
}

/// Smallest singular value of a square matrix (zero for rank-deficient
/// rectangular input).
pub fn min_singular<T: Real>(a: &CMatrix<T>) -> T {
    let sv = singular_values(a);
    if sv.len() < a.nrows().max(a.ncols()) && a.nrows() != a.ncols() {
        return T::zero();
    }
    sv.last().copied().unwrap_or_else(T::zero)
}

/// Solves `A X = B` with partial-pivot LU; `None` when the pivots signal
/// numerical singularity.
pub fn solve<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Option<CMatrix<T>> {
    assert_eq!(a.nrows(), a.ncols(), "solve needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return Some(CMatrix::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let mut max_piv = T::zero();
    let mut min_piv = T::max_value().unwrap_or_else(|| T::lit(1e300));
    for i in 0..n {
        let m = modulus(u[(i, i)]);
        max_piv = max_piv.max(m);
        min_piv = min_piv.min(m);
    }
    let col_scale = a
        .column_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, z| acc.max(modulus(*z))))
        .fold(T::zero(), |acc, x| acc.max(x));
    if max_piv == T::zero() || min_piv <= T::tol(SINGULAR_PIVOT) * max_piv.max(col_scale) {
        return None;
    }
    lu.solve(b)
}

pub fn inverse<T: Real>(a: &CMatrix<T>) -> Option<CMatrix<T>> {
    solve(a, &identity(a.nrows()))
}

/// Right division `B A⁻¹`.
pub fn solve_right<T: Real>(b: &CMatrix<T>, a: &CMatrix<T>) -> Option<CMatrix<T>> {
    solve(&a.transpose(), &b.transpose()).map(|x| x.transpose())
}

/// Moore–Penrose pseudoinverse; singular values below `rel_tol · σ_max` are cut.
pub fn pinv<T: Real>(a: &CMatrix<T>, rel_tol: T) -> CMatrix<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return CMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = Svd::new(a);
    let cut = rel_tol * svd.values.first().copied().unwrap_or_else(T::zero);
    let mut out = CMatrix::zeros(a.ncols(), a.nrows());
    for (k, s) in svd.values.iter().enumerate() {
        if *s > cut && *s > T::zero() {
            let inv = Complex::new(T::one() / *s, T::zero());
            out += svd.v.column(k) * svd.u.column(k).adjoint() * inv;
        }
    }
    out
}

/// Numerical rank with relative cut `rel_tol · σ_max`.
pub fn rank<T: Real>(a: &CMatrix<T>, rel_tol: T) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        None => 0,
        Some(&smax) if smax == T::zero() => 0,
        Some(&smax) => sv.iter().filter(|s| **s > rel_tol * smax).count(),
    }
}

/// Full singular value decomposition `A = U diag(σ) V*` with `σ` descending
/// (length `cols`, zero-padded when `rows < cols`), `U` of size `rows × cols`
/// and `V` unitary. Columns of `U` that belong to zero singular values are not
/// meaningful.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub values: Vec<T>,
    pub u: CMatrix<T>,
    pub v: CMatrix<T>,
}

impl<T: Real> Svd<T> {
    /// Uses the LAPACK-style bidiagonal algorithm and falls back to one-sided
    /// Jacobi when its factors fail a reconstruction check; the bidiagonal
    /// path loses accuracy on some rank-deficient complex inputs.
    pub fn new(a: &CMatrix<T>) -> Self {
        let (m, n) = a.shape();
        let rows = m.max(n);
        let mut padded = CMatrix::zeros(rows, n);
        padded.view_mut((0, 0), (m, n)).copy_from(a);
        let (values, u, v) = bidiagonal_svd(&padded)
            .filter(|(s, u, v)| svd_defect(&padded, s, u, v) <= T::tol(1e-12) * T::lit((rows + 1) as f64).sqrt())
            .unwrap_or_else(|| jacobi_svd(&padded));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap_or(std::cmp::Ordering::Equal));
        Self {
            values: idx.iter().map(|&i| values[i]).collect(),
            u: CMatrix::from_fn(m, n, |r, c| u[(r, idx[c])]),
            v: CMatrix::from_fn(n, n, |r, c| v[(r, idx[c])]),
        }
    }
}

type SvdParts<T> = (Vec<T>, CMatrix<T>, CMatrix<T>);

fn bidiagonal_svd<T: Real>(a: &CMatrix<T>) -> Option<SvdParts<T>> {
    let svd = a.clone().try_svd(true, true, T::default_epsilon(), 500)?;
    let u = svd.u?;
    let v = svd.v_t?.adjoint();
    Some((svd.singular_values.iter().copied().collect(), u, v))
}

/// Relative defect of `A = U diag(σ) V*` together with the unitarity of `V`.
fn svd_defect<T: Real>(a: &CMatrix<T>, s: &[T], u: &CMatrix<T>, v: &CMatrix<T>) -> T {
    let n = a.ncols();
    let mut us = u.clone();
    for (k, sk) in s.iter().enumerate() {
        us.column_mut(k).scale_mut(*sk);
    }
    let recon = norm_fro(&(us * v.adjoint() - a)) / norm_fro(a).max(T::lit(1e-300));
    let orth = norm_fro(&(v.adjoint() * v - identity::<T>(n)));
    recon.max(orth)
}

fn norm_fro<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// One-sided Hestenes–Jacobi SVD of a matrix with `rows ≥ cols`.
fn jacobi_svd<T: Real>(a: &CMatrix<T>) -> SvdParts<T> {
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = identity::<T>(n);
    let eps = T::default_epsilon();
    for _ in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dotc(&w.column(j));
                let g = modulus(gamma);
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / Complex::new(g, T::zero());
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for (mat, rows) in [(&mut w, a.nrows()), (&mut v, n)] {
                    for r in 0..rows {
                        let xi = mat[(r, i)];
                        let xj = mat[(r, j)] * phase.conj();
                        mat[(r, i)] = xi * c - xj * s;
                        mat[(r, j)] = xi * s + xj * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values: Vec<T> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut u = w;
    for (k, sk) in values.iter().enumerate() {
        if *sk > T::zero() {
            u.column_mut(k).unscale_mut(*sk);
        }
    }
    (values, u, v)
}

/// Orthonormal basis (columns) of the numerical null space of `a`.
pub fn null_space<T: Real>(a: &CMatrix<T>, rel_tol: T) -> CMatrix<T> {
    let cols = a.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    let Svd { values, v: vectors, .. } = Svd::new(a);
    let smax = values.first().copied().unwrap_or_else(T::zero);
    let keep: Vec<usize> = (0..cols).filter(|&k| values[k] <= rel_tol * smax || smax == T::zero()).collect();
    CMatrix::from_fn(cols, keep.len(), |r, c| vectors[(r, keep[c])])
}

/// The `k` right singular vectors belonging to the smallest singular values,
/// together with all singular values (descending).
pub fn smallest_right_singular<T: Real>(a: &CMatrix<T>, k: usize) -> (Vec<T>, CMatrix<T>) {
    let cols = a.ncols();
    let Svd { values, v: vectors, .. } = Svd::new(a);
    let start = cols.saturating_sub(k);
    let basis = CMatrix::from_fn(cols, cols - start, |r, c| vectors[(r, start + c)]);
    (values, basis)
}

/// Orthonormal basis of the column space of `a`.
pub fn range_basis<T: Real>(a: &CMatrix<T>, rel_tol: T) -> CMatrix<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return CMatrix::zeros(a.nrows(), 0);
    }
    let svd = Svd::new(a);
    let smax = svd.values.first().copied().unwrap_or_else(T::zero);
    let keep: Vec<usize> = (0..svd.values.len().min(a.nrows())).filter(|&k| svd.values[k] > rel_tol * smax).collect();
    CMatrix::from_fn(a.nrows(), keep.len(), |r, c| svd.u[(r, keep[c])])
}

/// `‖A − A*‖₂`.
pub fn hermiticity_defect<T: Real>(a: &CMatrix<T>) -> T {
    if a.nrows() != a.ncols() {
        return T::max_value().unwrap_or_else(|| T::lit(1e300));
    }
    norm2(&(a - a.adjoint()))
}

pub fn hermitian_part<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    (a + a.adjoint()) * Complex::new(T::lit(0.5), T::zero())
}

/// Eigen-decomposition of the Hermitian part of `a`; eigenvalues ascending,
/// eigenvectors as matching columns.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

/// Eigenvalues of a general square complex matrix via the complex Schur form.
pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<Complex<T>>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(a.clone(), T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, tri) = schur.unpack();
    Ok((0..tri.nrows()).map(|i| tri[(i, i)]).collect())
}

pub fn hstack<T: Real>(blocks: &[&CMatrix<T>]) -> CMatrix<T> {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

pub fn vstack<T: Real>(blocks: &[&CMatrix<T>]) -> CMatrix<T> {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

/// `[[a, b], [c, d]]`.
pub fn block2<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, c: &CMatrix<T>, d: &CMatrix<T>) -> CMatrix<T> {
    vstack(&[&hstack(&[a, b]), &hstack(&[c, d])])
}

pub fn direct_sum<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

pub fn diagonal<T: Real>(entries: &[Complex<T>]) -> CMatrix<T> {
    CMatrix::from_diagonal(&DVector::from_column_slice(entries))
}

pub fn real_diagonal<T: Real>(entries: &[T]) -> CMatrix<T> {
    let c: Vec<Complex<T>> = entries.iter().map(|x| Complex::new(*x, T::zero())).collect();
    diagonal(&c)
}

/// `diag(I_p, -I_q)`.
pub fn signature<T: Real>(p: usize, q: usize) -> CMatrix<T> {
    direct_sum(&identity(p), &(-identity::<T>(q)))
}

pub fn scalar_matrix<T: Real>(n: usize, z: Complex<T>) -> CMatrix<T> {
    identity::<T>(n) * z
}

/// Matrix with independent uniform entries in the unit square `[-1,1]+i[-1,1]`.
pub fn random_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex::new(T::lit(rng.random_range(-1.0..1.0)), T::lit(rng.random_range(-1.0..1.0)))
    })
}

pub fn random_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector<T> {
    CVector::from_fn(len, |_, _| {
        Complex::new(T::lit(rng.random_range(-1.0..1.0)), T::lit(rng.random_range(-1.0..1.0)))
    })
}

/// Haar-like random unitary from the QR factorization of a random matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix<T> {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let a: CMatrix<T> = random_matrix(rng, n, n);
    let qr = a.qr();
    let q = qr.q();
    let r = qr.r();
    // fix column phases so the distribution does not depend on QR conventions
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let m = modulus(d);
        if m > T::zero() {
            let phase = d / Complex::new(m, T::zero());
            let mut col = out.column_mut(j);
            col *= phase;
        }
    }
    out
}

/// Uniformly distributed point of the disk `|z| < radius`.
pub fn random_disk_point<T: Real, R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Complex<T> {
    let r = radius * rng.random_range(0.0f64..1.0).sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    Complex::new(T::lit(r * theta.cos()), T::lit(r * theta.sin()))
}

pub fn random_circle_point<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    unimodular(T::lit(rng.random_range(0.0..std::f64::consts::TAU)))
}

/// Real matrix convenience constructor (row-major).
pub fn real_matrix<T: Real>(rows: usize, cols: usize, data: &[f64]) -> CMatrix<T> {
    assert_eq!(data.len(), rows * cols);
    DMatrix::from_fn(rows, cols, |r, c| Complex::new(T::lit(data[r * cols + c]), T::zero()))
}

pub fn max_abs<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(modulus(*z)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pinv_satisfies_penrose_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: CMatrix<f64> = random_matrix(&mut rng, 4, 2);
        let a = &b * b.adjoint(); // rank 2
        let x = pinv(&a, 1e-12);
        assert!(norm2(&(&a * &x * &a - &a)) < 1e-12);
        assert!(norm2(&(&x * &a * &x - &x)) < 1e-10);
        assert!(hermiticity_defect(&(&a * &x)) < 1e-12);
        assert!(hermiticity_defect(&(&x * &a)) < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a: CMatrix<f64> = real_matrix(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(norm2(&(&a * &ns)) < 1e-14);
    }

    #[test]
    fn solve_flags_singular() {
        let a: CMatrix<f64> = real_matrix(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve(&a, &identity(2)).is_none());
        let b: CMatrix<f64> = real_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let x = solve(&b, &identity(2)).unwrap();
        assert!(norm2(&(&b * x - identity::<f64>(2))) < 1e-14);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q: CMatrix<f64> = random_unitary(&mut rng, 5);
        assert!(norm2(&(q.adjoint() * &q - identity::<f64>(5))) < 1e-13);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let a: CMatrix<f64> = real_matrix(2, 2, &[2.0, 1.0, 0.0, -3.0]);
        let mut e: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((e[0] + 3.0).abs() < 1e-12 && (e[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svd_of_singular_unimodular_blocks() {
        for k in 0..400 {
            let th = 0.0157 * k as f64;
            let s = unimodular::<f64>(th);
            let a = CMatrix::from_row_slice(2, 2, &[Complex::new(1.0, 0.0), -s, -s.conj(), Complex::new(1.0, 0.0)]);
            let x = pinv(&a, 1e-8);
            assert!(norm2(&(&a * &x * &a - &a)) < 1e-12, "theta {th}");
            let svd = Svd::new(&a);
            assert!(svd_defect(&a, &svd.values, &svd.u, &svd.v) < 1e-12);
        }
    }
}
