use num_complex::Complex;

use super::AipData;
use crate::colligation::{krylov, Colligation, Simplicity};
use crate::linalg::{self, identity, norm2};
use crate::pontryagin::{inertia, Inertia, DEFAULT_ZERO_TOL};
use crate::scalar::Real;
use crate::{CMatrix, Error, Result};

/// Orthogonal complements of `dom V` in `H ⊕ L_2` and of `ran V` in `H ⊕ L_1`
/// with respect to `P ⊕ I`. Basis columns are normalized so that their Gram
/// matrices are `diag(±1)`, positive vectors first.
#[derive(Clone, Debug)]
pub struct DefectSpaces<T: Real> {
    pub domain: CMatrix<T>,
    pub domain_signs: Vec<T>,
    pub range: CMatrix<T>,
    pub range_signs: Vec<T>,
}

impl<T: Real> DefectSpaces<T> {
    pub fn domain_inertia(&self) -> Inertia {
        sign_inertia(&self.domain_signs)
    }

    pub fn range_inertia(&self) -> Inertia {
        sign_inertia(&self.range_signs)
    }
}

fn sign_inertia<T: Real>(signs: &[T]) -> Inertia {
    let plus = signs.iter().filter(|s| **s > T::zero()).count();
    Inertia::new(plus, signs.len() - plus, 0)
}

pub fn defect_spaces<T: Real>(data: &AipData<T>) -> Result<DefectSpaces<T>> {
    let (n, p, q) = (data.dim(), data.out_dim(), data.in_dim());
    let domain = linalg::vstack(&[&data.m, &data.c2]);
    let image = linalg::vstack(&[&data.n, &data.c1]);
    let g_in = linalg::direct_sum(&data.p, &identity(q));
    let g_out = linalg::direct_sum(&data.p, &identity(p));
    if linalg::rank(&domain, T::tol(1e-10)) < n {
        return Err(infeasible("[M; C_2] is not injective"));
    }
    let (d, ds) = complement(&domain, &g_in)?;
    let (r, rs) = complement(&image, &g_out)?;
    Ok(DefectSpaces { domain: d, domain_signs: ds, range: r, range_signs: rs })
}

/// `(P⊕I)`-orthogonal complement of `ran a`, with a signature-normalized basis.
fn complement<T: Real>(a: &CMatrix<T>, gram: &CMatrix<T>) -> Result<(CMatrix<T>, Vec<T>)> {
    let basis = linalg::null_space(&(a.adjoint() * gram), T::tol(1e-10));
    if basis.ncols() == 0 {
        return Ok((basis, Vec::new()));
    }
    let (vals, vecs) = linalg::hermitian_eigen(&linalg::hermitian_part(&(basis.adjoint() * gram * &basis)));
    let cut = T::tol(1e-9) * linalg::scale(gram);
    if vals.iter().any(|v| v.abs() <= cut) {
        return Err(infeasible("defect space is degenerate"));
    }
    // eigenvalues come in ascending order; emit positive directions first
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by_key(|&i| vals[i] < T::zero());
    let mut out = CMatrix::zeros(basis.nrows(), order.len());
    let mut signs = Vec::with_capacity(order.len());
    for (k, &i) in order.iter().enumerate() {
        let col = &basis * vecs.column(i) / Complex::new(vals[i].abs().sqrt(), T::zero());
        out.set_column(k, &col);
        signs.push(if vals[i] > T::zero() { T::one() } else { -T::one() });
    }
    Ok((out, signs))
}

fn infeasible(reason: &str) -> Error {
    Error::ExtensionInfeasible { reason: reason.into(), required_enlargement: None }
}

/// A unitary colligation extending `V`.
#[derive(Clone, Debug)]
pub struct Extension<T: Real> {
    pub colligation: Colligation<T>,
    /// `‖U[M; 0; C_2] − [N; 0; C_1]‖`.
    pub extension_residual: T,
    pub simplicity: Simplicity,
    /// Inertia of the Gram on the orthogonal complement of the controllable
    /// plus observable part of the state space.
    pub complement_inertia: Inertia,
    /// The complement is a Hilbert space (no negative directions).
    pub regular: bool,
}

/// Unitary colligation `U` on `(H ⊕ ℂ^e) ⊕ L_2 → (H ⊕ ℂ^e) ⊕ L_1` with
/// `U[Mf; 0; C_2 f] = [Nf; 0; C_1 f]`. The defect spaces (enlarged by `ℂ^e`)
/// are matched by `coupling`, a `J`-unitary matrix for `J` the common
/// signature of the two enlarged defect spaces (positive entries first);
/// `None` means the identity.
pub fn build_unitary_extension<T: Real>(data: &AipData<T>, coupling: Option<&CMatrix<T>>, enlargement: usize) -> Result<Extension<T>> {
    let (n, p, q) = (data.dim(), data.out_dim(), data.in_dim());
    if p != q {
        return Err(infeasible("channel dimensions differ"));
    }
    let defects = defect_spaces(data)?;
    let (di, ri) = (defects.domain_inertia(), defects.range_inertia());
    if di != ri {
        return Err(infeasible("defect spaces have different inertia"));
    }
    let e = enlargement;
    let (k_plus, k_minus) = (di.n_plus + e, di.n_minus);
    let k = k_plus + k_minus;
    let full = n + e + q;

    // coordinates are [H; ℂ^e; channel]
    let lift = |a: &CMatrix<T>, c: &CMatrix<T>| linalg::vstack(&[a, &CMatrix::zeros(e, n), c]);
    let enlarge_defect = |basis: &CMatrix<T>, plus: usize| {
        let mut out = CMatrix::zeros(full, k);
        for col in 0..basis.ncols() {
            let target = if col < plus { col } else { col + e };
            let v = basis.column(col);
            out.view_mut((0, target), (n, 1)).copy_from(&v.rows(0, n));
            out.view_mut((n + e, target), (q, 1)).copy_from(&v.rows(n, q));
        }
        for i in 0..e {
            out[(n + i, plus + i)] = Complex::new(T::one(), T::zero());
        }
        out
    };
    let din = enlarge_defect(&defects.domain, di.n_plus);
    let dout = enlarge_defect(&defects.range, ri.n_plus);
    let signs: Vec<T> = (0..k).map(|i| if i < k_plus { T::one() } else { -T::one() }).collect();
    let j = linalg::real_diagonal(&signs);
    let coupling = coupling.cloned().unwrap_or_else(|| identity(k));
    if coupling.shape() != (k, k) {
        return Err(Error::invalid(format!("coupling must be {k}x{k}")));
    }
    if norm2(&(coupling.adjoint() * &j * &coupling - &j)) > T::tol(1e-9) {
        return Err(Error::invalid("coupling is not J-unitary"));
    }
    let b_in = linalg::hstack(&[&lift(&data.m, &data.c2), &din]);
    let b_out = linalg::hstack(&[&lift(&data.n, &data.c1), &(dout * coupling)]);
    let u = linalg::solve_right(&b_out, &b_in).ok_or_else(|| infeasible("dom V and its defect do not span"))?;

    let d = n + e;
    let x = linalg::direct_sum(&data.p, &identity(e));
    let scale = linalg::scale(&u).max(T::one());
    let colligation = Colligation::with_tolerance(
        x.clone(),
        u.view((0, 0), (d, d)).into_owned(),
        u.view((0, d), (d, q)).into_owned(),
        u.view((d, 0), (p, d)).into_owned(),
        u.view((d, d), (p, q)).into_owned(),
        T::tol(1e-8) * scale * scale,
    )?;
    let extension_residual = norm2(&(&u * lift(&data.m, &data.c2) - lift(&data.n, &data.c1)));
    let simplicity = colligation.is_simple(T::tol(1e-9));

    let mut cols = krylov(colligation.t(), colligation.f());
    cols.extend(krylov(&colligation.t_adjoint(), &colligation.g_adjoint()));
    let refs: Vec<&CMatrix<T>> = cols.iter().collect();
    let span = if refs.is_empty() { CMatrix::zeros(d, 0) } else { linalg::range_basis(&linalg::hstack(&refs), T::tol(1e-9)) };
    let complement = if span.ncols() == 0 { identity(d) } else { linalg::null_space(&(span.adjoint() * &x), T::tol(1e-9)) };
    let complement_inertia = if complement.ncols() == 0 {
        Inertia::new(0, 0, 0)
    } else {
        inertia(&linalg::hermitian_part(&(complement.adjoint() * &x * &complement)), T::tol(DEFAULT_ZERO_TOL))?
    };
    Ok(Extension {
        colligation,
        extension_residual,
        simplicity,
        regular: complement_inertia.n_minus == 0,
        complement_inertia,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aip::{encode_nevanlinna_pick, verify_solution, VerifyOptions};
    use crate::colligation::random_j_unitary;
    use crate::linalg::real_matrix;
    fn cplx(re: f64, im: f64) -> num_complex::Complex64 {
        num_complex::Complex64::new(re, im)
    }
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_dim() -> AipData<f64> {
        let r = |x: f64| real_matrix(1, 1, &[x]);
        AipData::new(r(1.0), r(0.0), r(2f64.sqrt()), r(1.0), r(1.0)).unwrap()
    }

    #[test]
    fn one_dim_extension() {
        let d = one_dim();
        let ds = defect_spaces(&d).unwrap();
        assert_eq!((ds.domain.ncols(), ds.range.ncols()), (1, 1));
        let ext = build_unitary_extension(&d, None, 0).unwrap();
        assert!(ext.extension_residual < 1e-14);
        let h = ext.colligation.h()[(0, 0)];
        assert!((h - cplx(0.5f64.sqrt(), 0.0)).norm() < 1e-14, "{h}");
        assert!(ext.regular);
    }

    #[test]
    fn extensions_of_pick_data_solve_the_problem() {
        let z = [cplx(0.1, 0.2), cplx(-0.5, 0.3), cplx(0.4, -0.6)];
        let w = [cplx(0.3, 0.1), cplx(-0.2, 0.4), cplx(0.1, -0.5)];
        let data = encode_nevanlinna_pick(&z, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for e in [0, 1] {
            let k = 1 + e;
            let coupling = random_j_unitary(&vec![1.0; k], &mut rng).unwrap();
            let ext = build_unitary_extension(&data, Some(&coupling), e).unwrap();
            assert!(ext.extension_residual < 1e-12);
            let s = ext.colligation.characteristic_function();
            for (zj, wj) in z.iter().zip(&w) {
                assert!((s.evaluate(*zj).unwrap()[(0, 0)] - wj).norm() < 1e-10);
            }
            let report = verify_solution(&data, &s, &VerifyOptions::default()).unwrap();
            assert!(report.accepted, "{report:?}");
            if e == 0 {
                assert!(report.parseval_gap.unwrap() < 1e-5, "{report:?}");
            }
        }
    }

    #[test]
    fn rejects_mismatched_channels() {
        let r = |rows, cols, x: &[f64]| real_matrix::<f64>(rows, cols, x);
        let d = AipData::new(r(1, 1, &[1.0]), r(1, 1, &[0.0]), r(2, 1, &[1.0, 1.0]), r(1, 1, &[1.0]), r(1, 1, &[1.0])).unwrap();
        assert!(matches!(build_unitary_extension(&d, None, 0), Err(Error::ExtensionInfeasible { .. })));
    }
}
