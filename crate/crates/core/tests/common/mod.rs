//! Helpers shared by the integration suites.

use num_complex::Complex64;
use vibcoh::gaussian::GaussianCoherence;
use vibcoh::grid::GridSpec;
use vibcoh::model::{HarmonicSurface, TwoStateSystem};
use vibcoh::oracle::{cross_wigner, propagate_thawed, ThawedGaussian};

/// The reference parameter set (atomic units): m = 2000, Omega_1 = 0.01,
/// Omega_2 = 0.004, q1_eq = 0, q2_eq = 1, e1 = 0, e2 = 0.1, hbar = 1.
pub fn reference_system() -> TwoStateSystem {
    TwoStateSystem::new(
        HarmonicSurface::new(2000.0, 0.01, 0.0, 0.0).unwrap(),
        HarmonicSurface::new(2000.0, 0.004, 1.0, 0.1).unwrap(),
        1.0,
    )
    .unwrap()
}

/// Relative error with a small absolute floor against incidental zeros.
pub fn rel_err(x: Complex64, reference: Complex64) -> f64 {
    (x - reference).norm() / reference.norm().max(1e-6)
}

/// Exact-quantum parameter set at time `t` for the ground-state
/// initialization displaced to `(q0, p0)`.
pub fn oracle_state(sys: &TwoStateSystem, q0: f64, p0: f64, t: f64) -> GaussianCoherence {
    let psi0 = ThawedGaussian::ground_at(&sys.surface1, sys.hbar, q0, p0);
    let psi1 = propagate_thawed(&sys.surface1, &psi0, t, sys.hbar);
    let psi2 = propagate_thawed(&sys.surface2, &psi0, t, sys.hbar);
    cross_wigner(&psi1, &psi2, sys.hbar)
}

/// Sample a coherence state on a lattice without the domain-adequacy check
/// (evolved states legitimately have larger boundary tails than fresh ones).
pub fn sample_field(g: &GaussianCoherence, spec: &GridSpec) -> Vec<Complex64> {
    let mut f = Vec::with_capacity(spec.nq * spec.np);
    for iq in 0..spec.nq {
        for ip in 0..spec.np {
            f.push(g.evaluate(spec.q_at(iq), spec.p_at(ip)));
        }
    }
    f
}

pub fn max_norm_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .fold(0.0, f64::max)
        .sqrt()
}
