//! Problem data for the abstract interpolation problem and everything built
//! on it: the isometry `V`, the resolvent matrix `W`, the linear fractional
//! solution map and solution verification.
//!
//! A solution is a `p × q` function `s` of the class with `κ` negative
//! squares, `κ` the negative index of `P`, together with a map
//! `Φ: H → D(s)` such that
//!
//! * (i) `[Φf, Φf]_{D(s)} ≤ [Pf, f]` for all `f`,
//! * (ii) `Φ(t)M − tΦ(t)N = Δ_s(t)C` almost everywhere on the circle, where
//!   `Δ_s = [I, −s; −s*, I]` and `C = [C_1; C_2]`.

mod extension;
mod isometry;
mod pick;
mod random;
mod resolvent;
mod solve;

pub use extension::{build_unitary_extension, defect_spaces, DefectSpaces, Extension};
pub use isometry::{build_isometry_v, g_operator, pencil_regularity, q_l1, skew_projection, IsometryV, PencilRegularity};
pub use pick::encode_nevanlinna_pick;
pub use random::random_instance;
pub use resolvent::{check_j_inner, check_potapov_class, JInnerReport, PotapovReport, ResolventMatrix, WKernel};
pub use solve::{lft_solve, phi_map, verify_solution, LftSolution, SolutionReport, VerifyOptions};

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, norm2};
use crate::pontryagin::{inertia, Inertia, DEFAULT_ZERO_TOL};
use crate::scalar::{modulus, to_c64, unimodular, Real};
use crate::{CMatrix, Error, Result};

/// Number of equispaced circle points scanned for the anchor.
pub const ANCHOR_CANDIDATES: usize = 720;

/// `(M, N, C_1, C_2, P)` on `H = ℂⁿ`, `L_1 = ℂᵖ`, `L_2 = ℂ^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct AipData<T: Real> {
    pub m: CMatrix<T>,
    pub n: CMatrix<T>,
    pub c1: CMatrix<T>,
    pub c2: CMatrix<T>,
    pub p: CMatrix<T>,
    /// Requested index of the solution class; defaults to the negative index of `P`.
    pub kappa_target: Option<usize>,
    /// Fixed anchor on the circle; chosen by a scan when absent.
    pub anchor: Option<Complex<T>>,
}

impl<T: Real> AipData<T> {
    /// Checks only the block sizes; see [`validate`] for the assumptions.
    pub fn new(m: CMatrix<T>, n: CMatrix<T>, c1: CMatrix<T>, c2: CMatrix<T>, p: CMatrix<T>) -> Result<Self> {
        let dim = m.nrows();
        let ok = m.shape() == (dim, dim)
            && n.shape() == (dim, dim)
            && p.shape() == (dim, dim)
            && c1.ncols() == dim
            && c2.ncols() == dim;
        if !ok {
            return Err(Error::invalid(format!(
                "inconsistent sizes: M {:?}, N {:?}, C1 {:?}, C2 {:?}, P {:?}",
                m.shape(),
                n.shape(),
                c1.shape(),
                c2.shape(),
                p.shape()
            )));
        }
        Ok(Self { m, n, c1, c2, p, kappa_target: None, anchor: None })
    }

    pub fn with_kappa_target(mut self, kappa: usize) -> Self {
        self.kappa_target = Some(kappa);
        self
    }

    pub fn with_anchor(mut self, a: Complex<T>) -> Self {
        self.anchor = Some(a);
        self
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
    pub fn out_dim(&self) -> usize {
        self.c1.nrows()
    }
    pub fn in_dim(&self) -> usize {
        self.c2.nrows()
    }

    /// `C = [C_1; C_2]`.
    pub fn c(&self) -> CMatrix<T> {
        linalg::vstack(&[&self.c1, &self.c2])
    }

    /// `J = diag(I_p, −I_q)`.
    pub fn j(&self) -> CMatrix<T> {
        linalg::signature(self.out_dim(), self.in_dim())
    }

    /// `M − λN`.
    pub fn pencil(&self, lambda: Complex<T>) -> CMatrix<T> {
        &self.m - &self.n * lambda
    }

    /// `(M − λN)⁻¹`.
    pub fn pencil_inverse(&self, lambda: Complex<T>) -> Result<CMatrix<T>> {
        linalg::inverse(&self.pencil(lambda)).ok_or(Error::PencilSingular(to_c64(lambda)))
    }

    /// `‖M*PM − N*PN − C_1*C_1 + C_2*C_2‖`.
    pub fn lyapunov_residual(&self) -> T {
        let r = self.m.adjoint() * &self.p * &self.m - self.n.adjoint() * &self.p * &self.n - self.c1.adjoint() * &self.c1
            + self.c2.adjoint() * &self.c2;
        norm2(&r)
    }

    /// Scale used for the relative tolerance of the Lyapunov identity.
    pub fn data_scale(&self) -> T {
        let pn = norm2(&self.p);
        let mn = norm2(&self.m);
        let nn = norm2(&self.n);
        let c1 = norm2(&self.c1);
        let c2 = norm2(&self.c2);
        T::one().max(mn * mn * pn).max(nn * nn * pn).max(c1 * c1).max(c2 * c2)
    }

    /// Circle point maximizing `σ_min(M − aN)` among [`ANCHOR_CANDIDATES`]
    /// equispaced candidates, with that value.
    pub fn scan_anchor(&self) -> (Complex<T>, T) {
        let mut best = (unimodular(T::zero()), -T::one());
        for k in 0..ANCHOR_CANDIDATES {
            let a = unimodular(T::two_pi() * T::lit(k as f64) / T::lit(ANCHOR_CANDIDATES as f64));
            let s = linalg::min_singular(&self.pencil(a));
            if s > best.1 {
                best = (a, s);
            }
        }
        best
    }

    /// The fixed anchor if present, otherwise the scanned one.
    pub fn resolve_anchor(&self) -> Result<Complex<T>> {
        let tol = T::tol(1e-10) * self.pencil_scale();
        match self.anchor {
            Some(a) => {
                if (modulus(a) - T::one()).abs() > T::tol(1e-12) {
                    return Err(Error::invalid(format!("anchor {a} is not on the unit circle")));
                }
                if linalg::min_singular(&self.pencil(a)) <= tol {
                    return Err(Error::PencilSingular(to_c64(a)));
                }
                Ok(a)
            }
            None => {
                let (a, s) = self.scan_anchor();
                if s <= tol {
                    return Err(Error::Validation(vec!["A3".into()]));
                }
                Ok(a)
            }
        }
    }

    pub(crate) fn pencil_scale(&self) -> T {
        T::one().max(norm2(&self.m)).max(norm2(&self.n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

/// One finding of [`validate`]; codes `A1`…`A4` name the assumption checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: &str, severity: Severity, message: String) -> Self {
        Self { code: code.into(), severity, message }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
    pub inertia: Option<Inertia>,
    pub kappa: Option<usize>,
    pub kappa_target: Option<usize>,
    pub lyapunov_residual: f64,
    pub anchor: Option<Complex64>,
    pub anchor_sigma_min: f64,
    /// Generalized eigenvalues of `(M, N)` in the closed disk.
    pub pencil_singular_points: Vec<Complex64>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.diagnostics.iter().all(|d| d.severity != Severity::Error)
    }

    pub fn failed_codes(&self) -> Vec<String> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error).map(|d| d.code.clone()).collect()
    }

    /// `Ok(())` or [`Error::Validation`] with the failed codes.
    pub fn into_result(self) -> Result<Self> {
        if self.ok() {
            Ok(self)
        } else {
            Err(Error::Validation(self.failed_codes()))
        }
    }
}

/// Checks the assumptions on the data and locates the pencil singularities.
pub fn validate<T: Real>(data: &AipData<T>) -> Validation {
    let mut diags = Vec::new();
    let n = data.dim();
    let pscale = linalg::scale(&data.p);

    // A1
    let herm = linalg::hermiticity_defect(&data.p);
    let smin = linalg::min_singular(&data.p);
    let mut inert = None;
    if herm > T::tol(1e-10) * pscale {
        diags.push(Diagnostic::new("A1", Severity::Error, format!("P is not Hermitian (defect {herm:.3e})")));
    } else if n > 0 && smin <= T::tol(1e-10) * pscale {
        diags.push(Diagnostic::new("A1", Severity::Error, format!("P is singular (smallest singular value {smin:.3e})")));
    } else {
        inert = inertia(&data.p, T::tol(DEFAULT_ZERO_TOL)).ok();
        if let Some(i) = inert {
            diags.push(Diagnostic::new("A1", Severity::Info, format!("P has inertia (+{}, -{}, 0:{})", i.n_plus, i.n_minus, i.n_zero)));
        }
    }
    let kappa = inert.map(|i| i.n_minus);
    if let (Some(k), Some(t)) = (kappa, data.kappa_target) {
        if t < k {
            diags.push(Diagnostic::new("KAPPA", Severity::Error, format!("target index {t} is below the negative index {k} of P")));
        }
    }

    // A2
    let lst = data.lyapunov_residual();
    let lst_tol = T::tol(1e-10) * data.data_scale();
    if lst > lst_tol {
        diags.push(Diagnostic::new("A2", Severity::Error, format!("Lyapunov identity fails (residual {lst:.3e})")));
    }

    // A3
    let pencil_tol = T::tol(1e-10) * data.pencil_scale();
    let (anchor, sigma) = match data.anchor {
        Some(a) => (a, linalg::min_singular(&data.pencil(a))),
        None => data.scan_anchor(),
    };
    let anchor_ok = (modulus(anchor) - T::one()).abs() <= T::tol(1e-12) && sigma > pencil_tol;
    if !anchor_ok {
        diags.push(Diagnostic::new("A3", Severity::Error, "no point of the circle is regular for M - λN".into()));
    }

    // A4
    let mut singular = Vec::new();
    if anchor_ok {
        // det(M − λN) = 0 iff 1/(λ − a) is an eigenvalue of (M − aN)⁻¹N
        if let Some(k) = linalg::solve(&data.pencil(anchor), &data.n) {
            if let Ok(eig) = linalg::eigenvalues(&k) {
                let tiny = T::tol(1e-13) * linalg::scale(&k);
                for nu in eig {
                    if modulus(nu) > tiny {
                        let lambda = anchor + Complex::new(T::one(), T::zero()) / nu;
                        if modulus(lambda) <= T::one() + T::tol(1e-9) {
                            singular.push(to_c64(lambda));
                        }
                    }
                }
            }
        }
        singular.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal).then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal)));
        diags.push(Diagnostic::new("A4", Severity::Info, format!("{} pencil singular point(s) in the closed disk", singular.len())));
    } else {
        diags.push(Diagnostic::new("A4", Severity::Error, "the pencil M - λN is not regular".into()));
    }

    Validation {
        diagnostics: diags,
        inertia: inert,
        kappa,
        kappa_target: data.kappa_target.or(kappa),
        lyapunov_residual: lst.to_f64_lossy(),
        anchor: anchor_ok.then(|| to_c64(anchor)),
        anchor_sigma_min: sigma.to_f64_lossy(),
        pencil_singular_points: singular,
    }
}
