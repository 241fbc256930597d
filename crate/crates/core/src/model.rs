//! Two-surface harmonic model: diabatic potentials, derived average/difference
//! quantities, and closed-form classical trajectories.
//!
//! Everything is in atomic units. The reduced Planck constant is kept as an
//! explicit field of [`TwoStateSystem`] (default 1.0) so the formulas retain
//! their hbar factors.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// One diabatic electronic state's nuclear Hamiltonian,
/// `H(q,p) = p^2/(2m) + (m Omega^2 / 2) (q - q_eq)^2 + e_eq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSurface {
    /// Nuclear mass (atomic units).
    pub mass: f64,
    /// Harmonic frequency (rad / atomic time).
    pub omega: f64,
    /// Equilibrium position (bohr).
    pub q_eq: f64,
    /// Vertical energy at the minimum (hartree).
    pub e_eq: f64,
}

impl HarmonicSurface {
    pub fn new(mass: f64, omega: f64, q_eq: f64, e_eq: f64) -> Result<Self, ModelError> {
        if !(mass.is_finite() && omega.is_finite() && q_eq.is_finite() && e_eq.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        if mass <= 0.0 {
            return Err(ModelError::NonPositive {
                what: "mass",
                value: mass,
            });
        }
        if omega <= 0.0 {
            return Err(ModelError::NonPositive {
                what: "omega",
                value: omega,
            });
        }
        Ok(Self {
            mass,
            omega,
            q_eq,
            e_eq,
        })
    }

    /// Potential `U(q) = (m Omega^2 / 2) (q - q_eq)^2 + e_eq`, exact quadratic.
    pub fn potential(&self, q: f64) -> f64 {
        0.5 * self.mass * self.omega * self.omega * (q - self.q_eq).powi(2) + self.e_eq
    }

    /// `U'(q) = m Omega^2 (q - q_eq)`.
    pub fn potential_gradient(&self, q: f64) -> f64 {
        self.mass * self.omega * self.omega * (q - self.q_eq)
    }

    /// `U'' = m Omega^2`, a constant.
    pub fn potential_curvature(&self) -> f64 {
        self.mass * self.omega * self.omega
    }

    /// Vibrational period `2 pi / Omega`.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    /// Total energy `H(q,p)` at a phase point.
    pub fn energy(&self, pt: PhasePoint) -> f64 {
        pt.p * pt.p / (2.0 * self.mass) + self.potential(pt.q)
    }

    /// Closed-form classical trajectory from `(q0, p0)`:
    ///
    /// `Q(t) = q_eq + (q0 - q_eq) cos(Omega t) + p0/(m Omega) sin(Omega t)`
    /// `P(t) = p0 cos(Omega t) - m Omega (q0 - q_eq) sin(Omega t)`
    pub fn trajectory(&self, q0: f64, p0: f64, t: f64) -> PhasePoint {
        let (sin, cos) = (self.omega * t).sin_cos();
        let dq = q0 - self.q_eq;
        PhasePoint {
            q: self.q_eq + dq * cos + p0 / (self.mass * self.omega) * sin,
            p: p0 * cos - self.mass * self.omega * dq * sin,
        }
    }
}

/// A point `(q, p)` in the nuclear phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }
}

/// Average potential `U_o = (U_1 + U_2)/2` evaluated at a point, with its
/// derivatives and the derived stationary data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragePotential {
    /// `U_o(q)`.
    pub value: f64,
    /// `U_o'(q)`.
    pub gradient: f64,
    /// `U_o'' = m Omega_o^2` (constant in q).
    pub curvature: f64,
    /// `Omega_o = sqrt((Omega_1^2 + Omega_2^2)/2)`.
    pub omega0: f64,
    /// Minimum of `U_o`.
    pub q0: f64,
}

/// Difference frequency `omega(q) = (U_1(q) - U_2(q))/hbar` at a point,
/// with its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceFrequency {
    /// `omega(q)`.
    pub value: f64,
    /// `omega'(q)`.
    pub gradient: f64,
    /// `omega'' = m (Omega_1^2 - Omega_2^2)/hbar` (constant in q).
    pub curvature: f64,
}

/// The pair of diabatic surfaces sharing one nuclear mass, plus hbar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStateSystem {
    pub surface1: HarmonicSurface,
    pub surface2: HarmonicSurface,
    pub hbar: f64,
}

impl TwoStateSystem {
    pub fn new(
        surface1: HarmonicSurface,
        surface2: HarmonicSurface,
        hbar: f64,
    ) -> Result<Self, ModelError> {
        if surface1.mass != surface2.mass {
            return Err(ModelError::UnequalMasses {
                m1: surface1.mass,
                m2: surface2.mass,
            });
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(ModelError::NonPositive {
                what: "hbar",
                value: hbar,
            });
        }
        Ok(Self {
            surface1,
            surface2,
            hbar,
        })
    }

    /// Shared nuclear mass.
    pub fn mass(&self) -> f64 {
        self.surface1.mass
    }

    /// `Omega_o = sqrt((Omega_1^2 + Omega_2^2)/2)`.
    pub fn omega0(&self) -> f64 {
        let (w1, w2) = (self.surface1.omega, self.surface2.omega);
        (0.5 * (w1 * w1 + w2 * w2)).sqrt()
    }

    /// Minimum of the average potential (stationary point of the summed
    /// quadratics): `Q_o = (Omega_1^2 q1_eq + Omega_2^2 q2_eq)/(Omega_1^2 + Omega_2^2)`.
    pub fn q0(&self) -> f64 {
        let w1sq = self.surface1.omega * self.surface1.omega;
        let w2sq = self.surface2.omega * self.surface2.omega;
        (w1sq * self.surface1.q_eq + w2sq * self.surface2.q_eq) / (w1sq + w2sq)
    }

    /// `U_o, U_o', U_o''` at `q`, plus `Omega_o` and `Q_o`.
    pub fn average_potential(&self, q: f64) -> AveragePotential {
        let omega0 = self.omega0();
        AveragePotential {
            value: 0.5 * (self.surface1.potential(q) + self.surface2.potential(q)),
            gradient: 0.5
                * (self.surface1.potential_gradient(q) + self.surface2.potential_gradient(q)),
            curvature: self.mass() * omega0 * omega0,
            omega0,
            q0: self.q0(),
        }
    }

    /// `omega, omega', omega''` at `q`.
    pub fn difference_frequency(&self, q: f64) -> DifferenceFrequency {
        DifferenceFrequency {
            value: (self.surface1.potential(q) - self.surface2.potential(q)) / self.hbar,
            gradient: (self.surface1.potential_gradient(q) - self.surface2.potential_gradient(q))
                / self.hbar,
            curvature: self.omega_curvature(),
        }
    }

    /// `omega'' = m (Omega_1^2 - Omega_2^2)/hbar`, a constant of the system.
    pub fn omega_curvature(&self) -> f64 {
        let (w1, w2) = (self.surface1.omega, self.surface2.omega);
        self.mass() * (w1 * w1 - w2 * w2) / self.hbar
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::reference_system;

    #[test]
    fn surface_potentials_at_reference_parameters() {
        let sys = reference_system();
        assert_eq!(sys.surface1.potential(0.0), 0.0);
        assert_eq!(sys.surface2.potential(1.0), 0.1);
        // 0.1 + 0.5 * 2000 * 0.004^2 * 1^2
        assert!((sys.surface2.potential(0.0) - 0.116).abs() < 1e-15);
    }

    #[test]
    fn average_potential_derived_quantities() {
        let sys = reference_system();
        let avg = sys.average_potential(0.3);
        assert!(
            (avg.omega0 - 0.0076).abs() < 1e-4,
            "Omega_o = {} should be ~0.0076",
            avg.omega0
        );
        assert!(
            (avg.omega0 - (0.5f64 * (0.01f64.powi(2) + 0.004f64.powi(2))).sqrt()).abs() < 1e-18
        );
        // stationary point of the summed quadratic: 4/29
        assert!((avg.q0 - 4.0 / 29.0).abs() < 1e-15, "Q_o = {}", avg.q0);

        // U_o'(Q_o) = 0 and U_o'' = m Omega_o^2
        let at_min = sys.average_potential(avg.q0);
        assert!(at_min.gradient.abs() < 1e-12);
        assert!((at_min.curvature - sys.mass() * avg.omega0 * avg.omega0).abs() < 1e-15);
    }

    #[test]
    fn average_potential_identical_surfaces() {
        let s = HarmonicSurface::new(2000.0, 0.005, 0.7, 0.0).unwrap();
        let sys = TwoStateSystem::new(s, s, 1.0).unwrap();
        let avg = sys.average_potential(0.0);
        assert_eq!(avg.q0, 0.7);
        assert_eq!(avg.omega0, 0.005);
    }

    #[test]
    fn difference_frequency_reference_values() {
        let sys = reference_system();
        let df = sys.difference_frequency(0.0);
        assert!(
            (df.value - (-0.116)).abs() < 1e-15,
            "omega(0) = {}",
            df.value
        );
        // 2000 * (0.01^2 - 0.004^2)
        assert!(
            (df.curvature - 0.168).abs() < 1e-12,
            "omega'' = {}",
            df.curvature
        );
    }

    #[test]
    fn difference_frequency_constant_offset() {
        let s1 = HarmonicSurface::new(1836.0, 0.02, -0.4, 0.0).unwrap();
        let s2 = HarmonicSurface::new(1836.0, 0.02, -0.4, 0.25).unwrap();
        let sys = TwoStateSystem::new(s1, s2, 2.0).unwrap();
        for q in [-3.0, 0.0, 1.7] {
            let df = sys.difference_frequency(q);
            assert!((df.value - (-0.25 / 2.0)).abs() < 1e-15);
            assert_eq!(df.gradient, 0.0);
            assert_eq!(df.curvature, 0.0);
        }
    }

    #[test]
    fn omega_curvature_independent_of_q() {
        let sys = reference_system();
        let reference = sys.difference_frequency(0.0).curvature;
        for q in [-1.0, 0.25, 0.5, 2.0, 3.0] {
            assert_eq!(sys.difference_frequency(q).curvature, reference);
        }
    }

    #[test]
    fn trajectory_half_and_quarter_period() {
        let sys = reference_system();
        let s2 = sys.surface2;

        let half = s2.trajectory(0.0, 0.0, std::f64::consts::PI / s2.omega);
        assert!(
            (half.q - 2.0).abs() < 1e-12,
            "half-period reflection about q_eq=1"
        );
        assert!(half.p.abs() < 1e-11);

        let quarter = s2.trajectory(0.0, 0.0, std::f64::consts::PI / (2.0 * s2.omega));
        assert!((quarter.q - 1.0).abs() < 1e-12);
        assert!(
            (quarter.p - 8.0).abs() < 1e-11,
            "P = m Omega_2 * 1 = 8, got {}",
            quarter.p
        );
    }

    #[test]
    fn trajectory_fixed_point() {
        let sys = reference_system();
        for t in [0.0, 13.7, 5000.0] {
            let pt = sys.surface1.trajectory(sys.surface1.q_eq, 0.0, t);
            assert_eq!(pt.q, sys.surface1.q_eq);
            assert_eq!(pt.p, 0.0);
        }
    }

    #[test]
    fn trajectory_conserves_energy() {
        let sys = reference_system();
        for s in [sys.surface1, sys.surface2] {
            let (q0, p0) = (-0.8, 3.0);
            let e0 = s.energy(PhasePoint::new(q0, p0));
            let tmax = 10.0 * s.period();
            for k in 1..=200 {
                let pt = s.trajectory(q0, p0, tmax * k as f64 / 200.0);
                let e = s.energy(pt);
                assert!(
                    (e - e0).abs() < 1e-12 * e0.abs(),
                    "energy drift {} at t={}",
                    (e - e0).abs(),
                    tmax * k as f64 / 200.0
                );
            }
        }
    }

    #[test]
    fn trajectory_periodicity() {
        let sys = reference_system();
        for s in [sys.surface1, sys.surface2] {
            for t in [0.0, 1.0, 333.3] {
                let a = s.trajectory(0.4, -2.0, t);
                let b = s.trajectory(0.4, -2.0, t + s.period());
                assert!((a.q - b.q).abs() < 1e-10);
                assert!((a.p - b.p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constructor_rejects_invalid_parameters() {
        assert!(HarmonicSurface::new(-1.0, 0.01, 0.0, 0.0).is_err());
        assert!(HarmonicSurface::new(2000.0, 0.0, 0.0, 0.0).is_err());
        assert!(HarmonicSurface::new(2000.0, f64::NAN, 0.0, 0.0).is_err());

        let s1 = HarmonicSurface::new(2000.0, 0.01, 0.0, 0.0).unwrap();
        let s2 = HarmonicSurface::new(1800.0, 0.004, 1.0, 0.1).unwrap();
        assert!(
            TwoStateSystem::new(s1, s2, 1.0).is_err(),
            "unequal masses must be rejected"
        );
        assert!(TwoStateSystem::new(s1, s1, 0.0).is_err());
    }
}
