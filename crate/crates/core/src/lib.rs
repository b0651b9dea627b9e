//! Indefinite abstract interpolation in generalized Schur classes.
//!
//! The crate is organised bottom-up:
//!
//! * [`pontryagin`]: Gram inner products, indefinite adjoints, inertia and
//!   negative-squares estimation for Hermitian kernels.
//! * [`rational`]: matrix-valued rational functions in realization form,
//!   Blaschke–Potapov products, Schur-class tests and Kreĭn–Langer
//!   factorization.
//! * [`hardy`]: Riesz projections on a uniform circle grid, model spaces
//!   `H(b)` / `H_*(b)` and the de Branges–Rovnyak inner product.
//! * [`colligation`]: unitary colligations in Pontryagin spaces, the kernel
//!   `D_s`, the Fourier representation and the functional model.
//! * [`aip`]: problem data, the model isometry `V`, the resolvent matrix
//!   `W(λ)`, the linear fractional solution map and solution verification.
//! * [`io`]: serde schemas for instance, function and colligation files.
//!
//! All numerical code is generic over a real scalar `T: Real` (`f32` or
//! `f64`); the aliases at the crate root fix `T = f64`.

pub mod aip;
pub mod colligation;
pub mod error;
pub mod hardy;
pub mod io;
pub mod linalg;
pub mod pontryagin;
pub mod rational;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

/// Complex matrix over the real scalar `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Complex column vector over the real scalar `T`.
pub type CVector<T> = DVector<Complex<T>>;

pub type C64 = Complex<f64>;
pub type Mat64 = CMatrix<f64>;
pub type Vec64 = CVector<f64>;

pub type GramSpace64 = pontryagin::GramSpace<f64>;
pub type Rational64 = rational::RationalMatrixFunction<f64>;
pub type BlaschkePotapov64 = rational::BlaschkePotapovProduct<f64>;
pub type Colligation64 = colligation::Colligation<f64>;
pub type AipData64 = aip::AipData<f64>;
pub type Resolvent64 = aip::ResolventMatrix<f64>;
pub type CircleGrid64 = hardy::CircleGrid<f64>;
