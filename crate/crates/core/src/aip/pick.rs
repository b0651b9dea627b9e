use num_complex::Complex;

use super::AipData;
use crate::linalg::{self, identity};
use crate::scalar::{modulus, Real};
use crate::{CMatrix, Error, Result};

/// Scalar Nevanlinna–Pick data `s(z_j) = w_j` as problem data:
/// `M = I`, `N = diag(z̄_j)`, `C_1 = [1 … 1]`, `C_2 = [w̄_1 … w̄_n]` and the
/// Pick matrix `P_jk = (1 − w_j w̄_k)/(1 − z_j z̄_k)`.
pub fn encode_nevanlinna_pick<T: Real>(nodes: &[Complex<T>], values: &[Complex<T>]) -> Result<AipData<T>> {
    let n = nodes.len();
    if values.len() != n || n == 0 {
        return Err(Error::invalid("need as many values as nodes, and at least one node"));
    }
    for (i, z) in nodes.iter().enumerate() {
        if modulus(*z) >= T::one() {
            return Err(Error::invalid(format!("node {z} is not in the open disk")));
        }
        if nodes[..i].iter().any(|w| modulus(*w - *z) <= T::lit(1e-14)) {
            return Err(Error::invalid(format!("node {z} is repeated")));
        }
    }
    let one = Complex::new(T::one(), T::zero());
    let p = CMatrix::from_fn(n, n, |j, k| (one - values[j] * values[k].conj()) / (one - nodes[j] * nodes[k].conj()));
    if linalg::min_singular(&p) <= T::tol(1e-10) * linalg::scale(&p) {
        return Err(Error::DeterminateCase);
    }
    AipData::new(
        identity(n),
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, nodes.iter().map(|z| z.conj()))),
        CMatrix::from_element(1, n, one),
        CMatrix::from_fn(1, n, |_, k| values[k].conj()),
        p,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    fn cplx(re: f64, im: f64) -> num_complex::Complex64 {
        num_complex::Complex64::new(re, im)
    }

    #[test]
    fn pick_matrices() {
        let z = [cplx(0.0, 0.0), cplx(0.5, 0.0)];
        let d = encode_nevanlinna_pick(&z, &[cplx(0.0, 0.0), cplx(0.25, 0.0)]).unwrap();
        let expected = linalg::real_matrix(2, 2, &[1.0, 1.0, 1.0, 1.25]);
        assert!(norm2(&(&d.p - expected)) < 1e-15);
        assert!(d.lyapunov_residual() < 1e-15);
        let d = encode_nevanlinna_pick(&z, &[cplx(0.0, 0.0), cplx(2.0, 0.0)]).unwrap();
        let expected = linalg::real_matrix(2, 2, &[1.0, 1.0, 1.0, -4.0]);
        assert!(norm2(&(&d.p - expected)) < 1e-15);
        assert!(matches!(encode_nevanlinna_pick(&z, &[cplx(0.0, 0.0), cplx(0.5, 0.0)]), Err(Error::DeterminateCase)));
    }

    #[test]
    fn lyapunov_identity_holds_for_complex_data() {
        let z = [cplx(0.1, 0.3), cplx(-0.4, 0.2), cplx(0.6, -0.5)];
        let w = [cplx(0.9, 0.1), cplx(-0.3, 0.7), cplx(1.5, 0.2)];
        let d = encode_nevanlinna_pick(&z, &w).unwrap();
        assert!(d.lyapunov_residual() < 1e-13);
    }
}
