use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{validate, AipData};
use crate::colligation::random_colligation;
use crate::linalg::{self, identity, random_matrix};
use crate::scalar::{unimodular, Real};
use crate::{CMatrix, Error, Result};

/// Random data satisfying the assumptions, with `P` of negative index `kappa`.
///
/// With `q ≤ p`, a random unitary colligation on `(ℂⁿ, P) ⊕ ℂᵖ` restricted to
/// the first `q` input channels maps `[M; C_2]` (random) to `[N; C_1]`; for
/// `q > p` the roles of the two sides are swapped. When `complex_anchor` is
/// set, a random regular non-real circle point is fixed as the anchor.
pub fn random_instance<T: Real>(n: usize, p: usize, q: usize, kappa: usize, complex_anchor: bool, seed: u64) -> Result<AipData<T>> {
    if n == 0 || p == 0 || q == 0 || kappa > n {
        return Err(Error::invalid("need n, p, q ≥ 1 and kappa ≤ n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..50 {
        let (wide, narrow) = (p.max(q), p.min(q));
        let Ok(col) = random_colligation::<T>(n, wide, kappa, rng.random()) else { continue };
        let u = linalg::vstack(&[&linalg::hstack(&[col.t(), col.f()]), &linalg::hstack(&[col.g(), col.h()])]);
        let restricted = u.columns(0, n + narrow).into_owned();
        let shift = identity::<T>(n) * Complex::new(T::lit(1.5), T::zero());
        let x: CMatrix<T> = random_matrix::<T, _>(&mut rng, n, n) + shift;
        let cx: CMatrix<T> = random_matrix(&mut rng, narrow, n);
        let image = restricted * linalg::vstack(&[&x, &cx]);
        let y = image.rows(0, n).into_owned();
        let cy = image.rows(n, wide).into_owned();
        let (m, nn, c1, c2) = if q <= p { (x, y, cy, cx) } else { (y, x, cx, cy) };
        let mut data = AipData::new(m, nn, c1, c2, col.gram().clone())?;
        if complex_anchor {
            let a = unimodular(T::lit(rng.random_range(0.1..3.0)) * if rng.random_bool(0.5) { T::one() } else { -T::one() });
            data = data.with_anchor(a);
        }
        if validate(&data).ok() {
            return Ok(data);
        }
    }
    Err(Error::Numerical("could not generate valid data".into()))
}
