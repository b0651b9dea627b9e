use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::AipData;
use crate::linalg::{self, identity, norm2};
use crate::scalar::Real;
use crate::{CMatrix, Result};

/// `V: [Mf; C_2 f] ↦ [Nf; C_1 f]` from `dom V ⊂ H ⊕ L_2` into `H ⊕ L_1`,
/// stored as the two parametrizing matrices.
#[derive(Clone, Debug)]
pub struct IsometryV<T: Real> {
    /// `[M; C_2]`, spanning `dom V`.
    pub domain: CMatrix<T>,
    /// `[N; C_1]`, spanning `ran V`.
    pub image: CMatrix<T>,
    /// `‖image*(P⊕I)image − domain*(P⊕I)domain‖`.
    pub residual: T,
}

pub fn build_isometry_v<T: Real>(data: &AipData<T>) -> IsometryV<T> {
    let domain = linalg::vstack(&[&data.m, &data.c2]);
    let image = linalg::vstack(&[&data.n, &data.c1]);
    let g_in = linalg::direct_sum(&data.p, &identity(data.in_dim()));
    let g_out = linalg::direct_sum(&data.p, &identity(data.out_dim()));
    let residual = norm2(&(image.adjoint() * g_out * &image - domain.adjoint() * g_in * &domain));
    IsometryV { domain, image, residual }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilRegularity {
    /// `M − λN` is invertible to tolerance.
    pub regular: bool,
    /// `[(I − λP_H V)|dom V, [0; I_{L_2}]]` has full rank `n + q`.
    pub decomposition_full_rank: bool,
    pub sigma_min: f64,
    pub decomposition_rank: usize,
}

impl PencilRegularity {
    pub fn consistent(&self) -> bool {
        self.regular == self.decomposition_full_rank
    }
}

/// Regularity of `λ` for the pencil, checked directly and through the
/// decomposition `(I − λP_H V) dom V ∔ L_2 = H ⊕ L_2`.
pub fn pencil_regularity<T: Real>(data: &AipData<T>, lambda: Complex<T>) -> PencilRegularity {
    let (n, q) = (data.dim(), data.in_dim());
    let pencil = data.pencil(lambda);
    let sigma_min = linalg::min_singular(&pencil);
    let tol = T::tol(1e-10) * data.pencil_scale();
    // (I − λP_H V)[Mf; C_2 f] = [(M − λN)f; C_2 f]
    let left = linalg::vstack(&[&pencil, &data.c2]);
    let right = linalg::vstack(&[&CMatrix::zeros(n, q), &identity::<T>(q)]);
    let block = linalg::hstack(&[&left, &right]);
    let cut = T::tol(1e-10) * linalg::scale(&block);
    let rank = linalg::singular_values(&block).iter().filter(|s| **s > cut).count();
    PencilRegularity {
        regular: sigma_min > tol,
        decomposition_full_rank: rank == n + q,
        sigma_min: sigma_min.to_f64_lossy(),
        decomposition_rank: rank,
    }
}

/// `P(λ)[f; v] = v − C_2(M − λN)⁻¹f`, as a `q × (n+q)` matrix.
pub fn skew_projection<T: Real>(data: &AipData<T>, lambda: Complex<T>) -> Result<CMatrix<T>> {
    let r = data.pencil_inverse(lambda)?;
    Ok(linalg::hstack(&[&(-(&data.c2 * r)), &identity::<T>(data.in_dim())]))
}

/// `Q_{L_1}(λ)[f; v] = C_1(M − λN)⁻¹f`.
pub fn q_l1<T: Real>(data: &AipData<T>, lambda: Complex<T>) -> Result<CMatrix<T>> {
    let r = data.pencil_inverse(lambda)?;
    Ok(linalg::hstack(&[&(&data.c1 * r), &CMatrix::zeros(data.out_dim(), data.in_dim())]))
}

/// `G(λ) = [Q_{L_1}(λ); I − P(λ)]`, i.e. `[f; v] ↦ C(M − λN)⁻¹f`.
pub fn g_operator<T: Real>(data: &AipData<T>, lambda: Complex<T>) -> Result<CMatrix<T>> {
    let upper = q_l1(data, lambda)?;
    let channel = linalg::hstack(&[&CMatrix::zeros(data.in_dim(), data.dim()), &identity::<T>(data.in_dim())]);
    let lower = channel - skew_projection(data, lambda)?;
    Ok(linalg::vstack(&[&upper, &lower]))
}
