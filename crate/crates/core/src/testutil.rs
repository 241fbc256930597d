//! Shared helpers for unit tests.

use num_complex::Complex64;

use crate::model::{HarmonicSurface, TwoStateSystem};

/// The reference parameter set: m = 2000, Omega_1 = 0.01, Omega_2 = 0.004,
/// q1_eq = 0, q2_eq = 1, e1 = 0, e2 = 0.1, hbar = 1 (atomic units).
pub fn reference_system() -> TwoStateSystem {
    TwoStateSystem::new(
        HarmonicSurface::new(2000.0, 0.01, 0.0, 0.0).unwrap(),
        HarmonicSurface::new(2000.0, 0.004, 1.0, 0.1).unwrap(),
        1.0,
    )
    .unwrap()
}

/// Relative error of `x` against `reference`, with a small absolute floor so
/// incidental zeros of the reference do not blow the ratio up.
pub fn rel_err(x: Complex64, reference: Complex64) -> f64 {
    (x - reference).norm() / reference.norm().max(1e-12)
}
