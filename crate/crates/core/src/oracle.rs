//! Exact-quantum reference channel.
//!
//! Thawed Gaussian wavepackets are propagated analytically on each harmonic
//! surface; the coherence is their cross-Wigner transform and its trace is
//! the 1-D wavepacket overlap. Everything here is closed form, so this
//! module provides machine-precision oracles for the other channels.

use num_complex::Complex64;

use crate::gaussian::GaussianCoherence;
use crate::model::HarmonicSurface;

/// Heller-form Gaussian wavepacket
/// `psi(q) = exp[(i/hbar)(alpha (q-qc)^2 + pc (q-qc) + gamma)]`.
///
/// Square-integrability requires `Im(alpha) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThawedGaussian {
    /// Complex width parameter.
    pub alpha: Complex64,
    /// Position center (bohr).
    pub qc: f64,
    /// Momentum center.
    pub pc: f64,
    /// Complex action/phase (hartree * time).
    pub gamma: Complex64,
}

impl ThawedGaussian {
    /// Normalized ground vibrational state of a surface: `alpha = i m Omega/2`,
    /// centered at the minimum, with zero initial phase (`Re gamma = 0`).
    pub fn ground(s: &HarmonicSurface, hbar: f64) -> Self {
        Self::ground_at(s, hbar, s.q_eq, 0.0)
    }

    /// Ground-width packet displaced to `(qc, pc)`. Normalization does not
    /// depend on the center.
    pub fn ground_at(s: &HarmonicSurface, hbar: f64, qc: f64, pc: f64) -> Self {
        let im_alpha = 0.5 * s.mass * s.omega;
        ThawedGaussian {
            alpha: Complex64::new(0.0, im_alpha),
            qc,
            pc,
            // Im gamma = (hbar/4) ln(pi hbar / (2 Im alpha)) makes <psi|psi> = 1.
            gamma: Complex64::new(
                0.0,
                0.25 * hbar * (std::f64::consts::PI * hbar / (2.0 * im_alpha)).ln(),
            ),
        }
    }

    /// `<psi|psi>` from the closed-form Gaussian integral.
    pub fn norm(&self, hbar: f64) -> f64 {
        (std::f64::consts::PI * hbar / (2.0 * self.alpha.im)).sqrt()
            * (-2.0 * self.gamma.im / hbar).exp()
    }
}

/// Complex logarithm of `z(theta) = cos(theta) + beta sin(theta)` on the
/// branch that is continuous in `theta` with `Ln z(0) = 0`.
///
/// For `Im(beta) > 0` the argument of `z` increases strictly monotonically,
/// advancing by exactly pi per half period (`z(theta + pi) = -z(theta)`), so
/// the continuous branch is the principal value plus `pi * floor(theta/pi)`.
fn log_z_continuous(beta: Complex64, theta: f64) -> Complex64 {
    let n = (theta / std::f64::consts::PI).floor();
    let theta_r = theta - n * std::f64::consts::PI;
    let (sin, cos) = theta_r.sin_cos();
    let z = cos + beta * sin;
    Complex64::new(z.norm().ln(), z.arg() + n * std::f64::consts::PI)
}

/// Analytic propagation under one harmonic surface for a time `t`.
///
/// The center follows the classical trajectory; the width solves the Riccati
/// equation `alpha' = -2 alpha^2/m - m Omega^2 / 2` in closed form (periodic
/// with period pi/Omega); the phase accumulates the classical action plus
/// the width half-log. The norm is conserved exactly.
pub fn propagate_thawed(
    s: &HarmonicSurface,
    psi0: &ThawedGaussian,
    t: f64,
    hbar: f64,
) -> ThawedGaussian {
    let theta = s.omega * t;
    let center = s.trajectory(psi0.qc, psi0.pc, t);

    // alpha(t) = (m/2) z'/z with z'' = -Omega^2 z, z(0) = 1, z'(0) = 2 alpha0/m.
    let beta = 2.0 * psi0.alpha / (s.mass * s.omega);
    let (sin, cos) = theta.sin_cos();
    let z = cos + beta * sin;
    let alpha = 0.5 * s.mass * s.omega * (beta * cos - sin) / z;

    // Classical action for Q(t) = q_eq + A cos + B sin:
    // int_0^t L dt' = (m Omega/4)[(B^2 - A^2) sin(2 theta) + 2AB(cos(2 theta) - 1)] - e_eq t
    let a_amp = psi0.qc - s.q_eq;
    let b_amp = psi0.pc / (s.mass * s.omega);
    let (sin2, cos2) = (2.0 * theta).sin_cos();
    let action = 0.25
        * s.mass
        * s.omega
        * ((b_amp * b_amp - a_amp * a_amp) * sin2 + 2.0 * a_amp * b_amp * (cos2 - 1.0))
        - s.e_eq * t;

    let gamma =
        psi0.gamma + action + Complex64::new(0.0, 0.5 * hbar) * log_z_continuous(beta, theta);

    ThawedGaussian {
        alpha,
        qc: center.q,
        pc: center.p,
        gamma,
    }
}

/// `<bra|ket> = int bra*(q) ket(q) dq`, closed form.
pub fn overlap(bra: &ThawedGaussian, ket: &ThawedGaussian, hbar: f64) -> Complex64 {
    let i = Complex64::i();
    let ac = bra.alpha.conj();
    // exponent = (i/hbar)[(alpha_k - conj(alpha_b)) q^2 + (...) q + (...)]
    let lambda = -i / hbar * (ket.alpha - ac);
    let mu = i / hbar
        * (-2.0 * ket.alpha * ket.qc + 2.0 * ac * bra.qc + Complex64::new(ket.pc - bra.pc, 0.0));
    let nu = i / hbar
        * (ket.alpha * ket.qc * ket.qc - ac * bra.qc * bra.qc
            + Complex64::new(bra.pc * bra.qc - ket.pc * ket.qc, 0.0)
            + ket.gamma
            - bra.gamma.conj());
    // Re(lambda) = (Im alpha_k + Im alpha_b)/hbar > 0: principal root is fine.
    (std::f64::consts::PI / lambda).sqrt() * (mu * mu / (4.0 * lambda) + nu).exp()
}

/// Cross-Wigner transform of `|psi1><psi2|`,
///
/// `rho_12(q,p) = (1/2 pi hbar) int psi1(q + y/2) psi2*(q - y/2) e^(-i p y/hbar) dy`,
///
/// evaluated in closed form and re-expressed in the coherence-ansatz
/// parameterization. Its trace equals `overlap(psi2, psi1)` identically.
pub fn cross_wigner(psi1: &ThawedGaussian, psi2: &ThawedGaussian, hbar: f64) -> GaussianCoherence {
    let i = Complex64::i();
    let a2c = psi2.alpha.conj();
    let delta = psi1.alpha - a2c;
    let sum = psi1.alpha + a2c;

    let w = i / hbar
        * (Complex64::new(0.5 * (psi1.pc + psi2.pc) * (psi2.qc - psi1.qc), 0.0) + psi1.gamma
            - psi2.gamma.conj())
        - 0.5 * (std::f64::consts::PI * hbar).ln()
        // Re(-i delta) = Im(alpha1) + Im(alpha2) > 0: principal log is continuous.
        - 0.5 * (-i * delta).ln();

    GaussianCoherence {
        a: 4.0 * i * psi1.alpha * a2c / (hbar * delta),
        b: i / (hbar * delta),
        c: 2.0 * i * sum / (hbar * delta),
        q: 0.5 * (psi1.qc + psi2.qc),
        p: 0.5 * (psi1.pc + psi2.pc),
        u: i * (psi1.pc - psi2.pc) / hbar,
        v: -i * (psi1.qc - psi2.qc) / hbar,
        w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::reference_system;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_normalized(rng: &mut impl Rng, hbar: f64) -> ThawedGaussian {
        let im_alpha = rng.gen_range(0.5..30.0);
        let mut psi = ThawedGaussian {
            alpha: Complex64::new(rng.gen_range(-10.0..10.0), im_alpha),
            qc: rng.gen_range(-2.0..2.0),
            pc: rng.gen_range(-10.0..10.0),
            gamma: Complex64::new(
                rng.gen_range(-3.0..3.0),
                0.25 * hbar * (std::f64::consts::PI * hbar / (2.0 * im_alpha)).ln(),
            ),
        };
        debug_assert!((psi.norm(hbar) - 1.0).abs() < 1e-12);
        psi.gamma.re = psi.gamma.re.clamp(-3.0, 3.0);
        psi
    }

    #[test]
    fn ground_wavepacket_reference_width() {
        let sys = reference_system();
        let psi = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        assert_eq!(psi.alpha, Complex64::new(0.0, 10.0));
        assert_eq!((psi.qc, psi.pc), (0.0, 0.0));
        assert!((psi.norm(sys.hbar) - 1.0).abs() < 1e-14);
        assert!((overlap(&psi, &psi, sys.hbar) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn coherent_width_is_stationary() {
        let sys = reference_system();
        let psi0 = ThawedGaussian::ground(&sys.surface2, sys.hbar);
        for t in [0.0, 13.0, 400.0, 1234.5] {
            let psi = propagate_thawed(&sys.surface2, &psi0, t, sys.hbar);
            assert!(
                (psi.alpha - psi0.alpha).norm() < 1e-12,
                "eigen-width must not breathe, alpha({t}) = {}",
                psi.alpha
            );
        }
    }

    #[test]
    fn propagation_identity_at_t_zero() {
        let sys = reference_system();
        let psi0 = ThawedGaussian::ground_at(&sys.surface1, sys.hbar, 0.4, -1.5);
        let psi = propagate_thawed(&sys.surface2, &psi0, 0.0, sys.hbar);
        assert_eq!(psi, psi0);
    }

    #[test]
    fn full_period_recurrence_on_surface_two() {
        let sys = reference_system();
        // ground of surface 1, evolved under surface 2
        let psi0 = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        let t = sys.surface2.period();
        let psi = propagate_thawed(&sys.surface2, &psi0, t, sys.hbar);
        assert!(psi.qc.abs() < 1e-10);
        assert!(psi.pc.abs() < 1e-10);
        assert!((psi.alpha - Complex64::new(0.0, 10.0)).norm() < 1e-10);
    }

    #[test]
    fn norm_conserved_over_ten_periods() {
        let sys = reference_system();
        let psi0 = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        let period = sys.surface2.period();
        for k in 1..=50 {
            let t = 10.0 * period * k as f64 / 50.0;
            let psi = propagate_thawed(&sys.surface2, &psi0, t, sys.hbar);
            let n = overlap(&psi, &psi, sys.hbar);
            assert!(
                (n - Complex64::new(1.0, 0.0)).norm() < 1e-10,
                "norm drifted to {n} at t = {t}"
            );
        }
    }

    #[test]
    fn width_is_periodic_with_half_period() {
        let sys = reference_system();
        let psi0 = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        let s = sys.surface2;
        let half = std::f64::consts::PI / s.omega;
        for t in [10.0, 300.0, 777.0] {
            let a1 = propagate_thawed(&s, &psi0, t, sys.hbar).alpha;
            let a2 = propagate_thawed(&s, &psi0, t + half, sys.hbar).alpha;
            assert!(
                (a1 - a2).norm() < 1e-10,
                "alpha({t}) = {a1}, alpha(t + pi/Omega) = {a2}"
            );
        }
    }

    #[test]
    fn overlap_of_identical_packets_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let psi = random_normalized(&mut rng, 1.0);
            let n = psi.norm(1.0);
            let ov = overlap(&psi, &psi, 1.0);
            assert!((ov.re - n * n).abs() < 1e-10 * n * n);
            assert!(ov.im.abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_decays_monotonically_with_separation() {
        let sys = reference_system();
        let a = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        let mut prev = 1.0;
        // beyond the width scale sigma_q ~ 0.16 the magnitude falls off
        for k in 1..=20 {
            let sep = 0.5 * k as f64;
            let b = ThawedGaussian::ground_at(&sys.surface1, sys.hbar, sep, 0.0);
            let mag = overlap(&a, &b, sys.hbar).norm();
            assert!(
                mag < prev,
                "|overlap| must decay, got {mag} at separation {sep}"
            );
            prev = mag;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn recurrence_overlap_magnitude() {
        let sys = reference_system();
        let psi0 = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        let t = sys.surface2.period();
        let psi1 = propagate_thawed(&sys.surface1, &psi0, t, sys.hbar);
        let psi2 = propagate_thawed(&sys.surface2, &psi0, t, sys.hbar);
        let mag = overlap(&psi2, &psi1, sys.hbar).norm();
        assert!(
            (mag - 1.0).abs() < 1e-10,
            "|overlap| at full recurrence = {mag}"
        );
    }

    #[test]
    fn cross_wigner_of_ground_state_matches_coherence_init() {
        let sys = reference_system();
        let g1 = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        let w = cross_wigner(&g1, &g1, sys.hbar);
        let reference = GaussianCoherence::ground_state(&sys);
        assert!((w.a - reference.a).norm() < 1e-13);
        assert!((w.b - reference.b).norm() < 1e-16);
        assert!((w.c - reference.c).norm() < 1e-16);
        assert!((w.u - reference.u).norm() < 1e-16);
        assert!((w.v - reference.v).norm() < 1e-16);
        assert!((w.w - reference.w).norm() < 1e-13);
        assert_eq!((w.q, w.p), (0.0, 0.0));
    }

    #[test]
    fn diagonal_wigner_real_and_nonnegative_on_center_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let psi = random_normalized(&mut rng, 1.0);
            let w = cross_wigner(&psi, &psi, 1.0);
            for k in -20..=20 {
                let q = w.q + 0.15 * k as f64;
                let val = w.evaluate(q, w.p);
                assert!(val.im.abs() < 1e-12 * val.norm().max(1e-300));
                assert!(val.re >= 0.0, "diagonal Wigner negative at q = {q}: {val}");
            }
        }
    }

    #[test]
    fn trace_of_cross_wigner_equals_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for hbar in [1.0, 0.5, 2.0] {
            for _ in 0..40 {
                let psi1 = random_normalized(&mut rng, hbar);
                let psi2 = random_normalized(&mut rng, hbar);
                let tr = cross_wigner(&psi1, &psi2, hbar).trace().unwrap();
                let ov = overlap(&psi2, &psi1, hbar);
                assert!(
                    (tr - ov).norm() < 1e-12 * ov.norm().max(1e-12),
                    "trace {tr} vs overlap {ov} (hbar = {hbar})"
                );
            }
        }
    }
}
