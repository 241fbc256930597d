//! Parameter ODEs for the coherence ansatz and their fixed-step RK4
//! integration, plus the closed-form solutions of the linear sector.
//!
//! Substituting the ansatz into the phase-space equation of motion and
//! matching powers of `(q-Q)^m (p-P)^n` for `m + n <= 2` gives, for the
//! exact (Moyal) dynamics with `D = i hbar^2 omega''/8`:
//!
//! ```text
//! Q' = P/m                    P' = -Uo'(Q) - (i hbar^2 omega''/4) v
//! u' = -i omega'(Q) + Uo'' v  v' = -u/m
//! a' = -Uo'' c + i omega''/2 - D c^2
//! b' = c/m - 4 D b^2
//! c' = 2a/m - 2 Uo'' b - 4 D b c
//! w' = -i omega(Q) - D (v^2 + 2b)
//! ```
//!
//! The `hbar^2 * partial^2/partial p^2` term maps the Gaussian onto a
//! (quadratic) x Gaussian, which is what couples `(b, c, v, w)` through `D`.
//! The semiclassical limit drops every `D` term; the linearized variant
//! additionally replaces the difference frequency by its tangent at the
//! initial center, so `omega''` vanishes from the remaining equations.
//!
//! The center stays real: the Moyal force `-(i hbar^2 omega''/4) v` is real
//! for purely imaginary `v`, which initial data of the form used here
//! preserve. Its imaginary residual is dropped.

use std::fmt;
use std::io::Write as IoWrite;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::gaussian::{self, GaussianCoherence, FLAT_RECORD_COLUMNS};
use crate::model::{PhasePoint, TwoStateSystem};

/// Which equation of motion to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Exact Wigner-Moyal dynamics (the series terminates for harmonic
    /// surfaces, so this is exact quantum evolution).
    #[serde(rename = "moyal")]
    MoyalExact,
    /// Bare semiclassical limit: all `hbar^2` Moyal terms dropped.
    #[serde(rename = "sc")]
    Semiclassical,
    /// Semiclassical limit with the difference potential linearized around
    /// the initial center (removes the secular driving).
    #[serde(rename = "sc-linearized")]
    SemiclassicalLinearized,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::MoyalExact,
        Method::Semiclassical,
        Method::SemiclassicalLinearized,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::MoyalExact => "moyal",
            Method::Semiclassical => "sc",
            Method::SemiclassicalLinearized => "sc-linearized",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "moyal" | "exact" => Some(Method::MoyalExact),
            "sc" | "semiclassical" => Some(Method::Semiclassical),
            "sc-linearized" | "sc-lin" => Some(Method::SemiclassicalLinearized),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Time derivatives of the eight ansatz parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDerivs {
    pub da: Complex64,
    pub db: Complex64,
    pub dc: Complex64,
    pub dq: f64,
    pub dp: f64,
    pub du: Complex64,
    pub dv: Complex64,
    pub dw: Complex64,
}

fn rhs(
    g: &GaussianCoherence,
    sys: &TwoStateSystem,
    method: Method,
    lin_q_ref: Option<f64>,
) -> ParamDerivs {
    let i = Complex64::i();
    let m = sys.mass();
    let hbar = sys.hbar;
    let avg = sys.average_potential(g.q);
    let k = avg.curvature; // Uo''

    // Difference frequency, possibly replaced by its tangent at the
    // reference center.
    let (omega, omega_prime, omega_dd) = match (method, lin_q_ref) {
        (Method::SemiclassicalLinearized, Some(q_ref)) => {
            let df = sys.difference_frequency(q_ref);
            (df.value + df.gradient * (g.q - q_ref), df.gradient, 0.0)
        }
        (Method::SemiclassicalLinearized, None) => {
            // No reference recorded: linearize about the current center.
            let df = sys.difference_frequency(g.q);
            (df.value, df.gradient, 0.0)
        }
        _ => {
            let df = sys.difference_frequency(g.q);
            (df.value, df.gradient, df.curvature)
        }
    };

    let moyal = method == Method::MoyalExact;
    // D = i hbar^2 omega'' / 8, zero in both semiclassical variants
    let d = if moyal {
        i * (hbar * hbar * omega_dd / 8.0)
    } else {
        Complex64::new(0.0, 0.0)
    };

    let dp_moyal = if moyal {
        // real part of -(i hbar^2 omega''/4) v; exact for purely imaginary v
        hbar * hbar * omega_dd / 4.0 * g.v.im
    } else {
        0.0
    };

    ParamDerivs {
        dq: g.p / m,
        dp: -avg.gradient + dp_moyal,
        du: -i * omega_prime + k * g.v,
        dv: -g.u / m,
        da: -k * g.c + i * (0.5 * omega_dd) - d * g.c * g.c,
        db: g.c / m - 4.0 * d * g.b * g.b,
        dc: 2.0 * g.a / m - 2.0 * k * g.b - 4.0 * d * g.b * g.c,
        dw: -i * omega - d * (g.v * g.v + 2.0 * g.b),
    }
}

/// Derivatives under the exact Moyal equation.
pub fn exact_rhs(g: &GaussianCoherence, sys: &TwoStateSystem) -> ParamDerivs {
    rhs(g, sys, Method::MoyalExact, None)
}

/// Derivatives under the semiclassical equation. `linearized` carries the
/// reference center `Q(0)` recorded at propagation start; when present, the
/// difference frequency is replaced by its tangent there (equivalently,
/// `omega'' = 0` in the driven-oscillator form of the `(u, v)` sector).
pub fn semiclassical_rhs(
    g: &GaussianCoherence,
    sys: &TwoStateSystem,
    linearized: Option<f64>,
) -> ParamDerivs {
    match linearized {
        Some(q_ref) => rhs(g, sys, Method::SemiclassicalLinearized, Some(q_ref)),
        None => rhs(g, sys, Method::Semiclassical, None),
    }
}

fn advanced(g: &GaussianCoherence, d: &ParamDerivs, s: f64) -> GaussianCoherence {
    GaussianCoherence {
        a: g.a + s * d.da,
        b: g.b + s * d.db,
        c: g.c + s * d.dc,
        q: g.q + s * d.dq,
        p: g.p + s * d.dp,
        u: g.u + s * d.du,
        v: g.v + s * d.dv,
        w: g.w + s * d.dw,
    }
}

/// One classical RK4 step of an arbitrary right-hand side. Deterministic.
pub(crate) fn rk4_step_with<F>(g: &GaussianCoherence, f: F, dt: f64) -> GaussianCoherence
where
    F: Fn(&GaussianCoherence) -> ParamDerivs,
{
    let k1 = f(g);
    let k2 = f(&advanced(g, &k1, 0.5 * dt));
    let k3 = f(&advanced(g, &k2, 0.5 * dt));
    let k4 = f(&advanced(g, &k3, dt));
    let sixth = dt / 6.0;
    GaussianCoherence {
        a: g.a + sixth * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da),
        b: g.b + sixth * (k1.db + 2.0 * k2.db + 2.0 * k3.db + k4.db),
        c: g.c + sixth * (k1.dc + 2.0 * k2.dc + 2.0 * k3.dc + k4.dc),
        q: g.q + sixth * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
        p: g.p + sixth * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp),
        u: g.u + sixth * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du),
        v: g.v + sixth * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
        w: g.w + sixth * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw),
    }
}

/// One RK4 step of the selected method.
///
/// `dt` may be negative (reverse stepping) but not zero. A step that leaves
/// the normalizable set returns [`DynamicsError::DegenerateState`] carrying
/// the state, so callers can flag it and keep going.
pub fn step_rk4(
    g: &GaussianCoherence,
    sys: &TwoStateSystem,
    dt: f64,
    method: Method,
    lin_q_ref: Option<f64>,
) -> Result<GaussianCoherence, DynamicsError> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(DynamicsError::InvalidStep { dt });
    }
    let next = rk4_step_with(g, |state| rhs(state, sys, method, lin_q_ref), dt);
    if next.is_normalizable() {
        Ok(next)
    } else {
        Err(DynamicsError::DegenerateState(Box::new(next)))
    }
}

/// Uniformly sampled parameter history of one propagation.
#[derive(Debug, Clone)]
pub struct ParameterTrajectory {
    pub dt: f64,
    pub method: Method,
    pub states: Vec<GaussianCoherence>,
    /// Per-state flag: true where the state violates normalizability.
    pub degenerate: Vec<bool>,
    /// Reference center recorded at start for the linearized variant.
    pub lin_q_ref: Option<f64>,
}

impl ParameterTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| self.time(k))
    }

    /// Trace at every stored state, with the square-root branch tracked
    /// continuously from the initial state.
    pub fn trace_series(&self) -> Vec<Complex64> {
        gaussian::trace_continuous(self.states.iter())
    }

    /// CSV export: `t` plus the 14-column flat record, 17 significant digits.
    pub fn write_csv<W: IoWrite>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for col in FLAT_RECORD_COLUMNS {
            write!(w, ",{col}")?;
        }
        writeln!(w)?;
        for (k, g) in self.states.iter().enumerate() {
            write!(w, "{:.16e}", self.time(k))?;
            for x in g.flat_record() {
                write!(w, ",{x:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// JSON export with the same schema as the CSV.
    pub fn to_json(&self) -> serde_json::Value {
        let mut columns = vec!["t"];
        columns.extend(FLAT_RECORD_COLUMNS);
        let rows: Vec<Vec<f64>> = self
            .states
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let mut row = Vec::with_capacity(15);
                row.push(self.time(k));
                row.extend(g.flat_record());
                row
            })
            .collect();
        serde_json::json!({
            "dt": self.dt,
            "method": self.method.as_str(),
            "linearization_q_ref": self.lin_q_ref,
            "columns": columns,
            "rows": rows,
            "degenerate_steps": self
                .degenerate
                .iter()
                .enumerate()
                .filter(|(_, &d)| d)
                .map(|(k, _)| k)
                .collect::<Vec<_>>(),
        })
    }
}

/// Propagate `nsteps` uniform RK4 steps, producing `nsteps + 1` states.
///
/// Degenerate states are flagged, not fatal: the semiclassical branch is
/// expected to misbehave eventually and exhibiting that is the point.
pub fn propagate(
    g0: &GaussianCoherence,
    sys: &TwoStateSystem,
    dt: f64,
    nsteps: usize,
    method: Method,
) -> Result<ParameterTrajectory, DynamicsError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(DynamicsError::InvalidStep { dt });
    }
    let lin_q_ref = match method {
        Method::SemiclassicalLinearized => Some(g0.q),
        _ => None,
    };
    let mut states = Vec::with_capacity(nsteps + 1);
    let mut degenerate = Vec::with_capacity(nsteps + 1);
    states.push(*g0);
    degenerate.push(!g0.is_normalizable());
    for _ in 0..nsteps {
        let current = *states.last().unwrap();
        match step_rk4(&current, sys, dt, method, lin_q_ref) {
            Ok(next) => {
                states.push(next);
                degenerate.push(false);
            }
            Err(DynamicsError::DegenerateState(next)) => {
                states.push(*next);
                degenerate.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ParameterTrajectory {
        dt,
        method,
        states,
        degenerate,
        lin_q_ref,
    })
}

/// Closed-form exact solution of the linear sector for initial `u = v = 0`:
/// the center is the arithmetic mean of the two state-specific classical
/// trajectories launched from the common `(q0, p0)`, and `(u, v)` are the
/// (purely imaginary) scaled differences:
///
/// `Q = (Q1 + Q2)/2`, `P = (P1 + P2)/2`,
/// `u = i (P1 - P2)/hbar`, `v = -i (Q1 - Q2)/hbar`.
pub fn analytic_exact_params(
    sys: &TwoStateSystem,
    q0: f64,
    p0: f64,
    t: f64,
) -> (f64, f64, Complex64, Complex64) {
    let t1 = sys.surface1.trajectory(q0, p0, t);
    let t2 = sys.surface2.trajectory(q0, p0, t);
    (
        0.5 * (t1.q + t2.q),
        0.5 * (t1.p + t2.p),
        Complex64::new(0.0, (t1.p - t2.p) / sys.hbar),
        Complex64::new(0.0, -(t1.q - t2.q) / sys.hbar),
    )
}

/// Semiclassical center motion: a single harmonic trajectory on the average
/// potential, frequency `Omega_o` about `Q_o`.
pub fn analytic_semiclassical_center(sys: &TwoStateSystem, q0: f64, p0: f64, t: f64) -> PhasePoint {
    let omega0 = sys.omega0();
    let center = sys.q0();
    let m = sys.mass();
    let (sin, cos) = (omega0 * t).sin_cos();
    PhasePoint {
        q: center + (q0 - center) * cos + p0 / (m * omega0) * sin,
        p: p0 * cos - m * omega0 * (q0 - center) * sin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{cross_wigner, propagate_thawed, ThawedGaussian};
    use crate::testutil::{reference_system, rel_err};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn identical_system() -> TwoStateSystem {
        TwoStateSystem::new(
            crate::model::HarmonicSurface::new(2000.0, 0.01, 0.3, 0.0).unwrap(),
            crate::model::HarmonicSurface::new(2000.0, 0.01, 0.3, 0.1).unwrap(),
            1.0,
        )
        .unwrap()
    }

    /// Oracle parameter set at time t for the default initialization.
    fn oracle_params(sys: &TwoStateSystem, t: f64) -> GaussianCoherence {
        let psi0 = ThawedGaussian::ground(&sys.surface1, sys.hbar);
        let psi1 = propagate_thawed(&sys.surface1, &psi0, t, sys.hbar);
        let psi2 = propagate_thawed(&sys.surface2, &psi0, t, sys.hbar);
        cross_wigner(&psi1, &psi2, sys.hbar)
    }

    #[test]
    fn exact_rhs_at_initial_state() {
        let sys = reference_system();
        let g = GaussianCoherence::ground_state(&sys);
        let d = exact_rhs(&g, &sys);
        assert_eq!(d.dq, 0.0, "P = 0 at t = 0");
        assert_eq!(d.dv, c64(0.0, 0.0), "u = 0 at t = 0");
        let omega_prime_0 = sys.difference_frequency(0.0).gradient;
        assert!((d.du - c64(0.0, -omega_prime_0)).norm() < 1e-15);
        assert!((d.dp - (-sys.average_potential(0.0).gradient)).abs() < 1e-15);
    }

    #[test]
    fn identical_surfaces_stationary_up_to_phase() {
        let sys = identical_system();
        let g = GaussianCoherence::ground_state(&sys);
        for d in [exact_rhs(&g, &sys), semiclassical_rhs(&g, &sys, None)] {
            assert!(d.da.norm() < 1e-15);
            assert!(d.db.norm() < 1e-18);
            assert!(d.dc.norm() < 1e-15);
            assert_eq!(d.dq, 0.0);
            assert_eq!(d.dp, 0.0);
            assert!(d.du.norm() < 1e-15);
            assert!(d.dv.norm() < 1e-18);
            // w' = -i omega, omega = (E1 - E2)/hbar = -0.1
            assert!((d.dw - c64(0.0, 0.1)).norm() < 1e-15);
        }
    }

    #[test]
    fn identical_surfaces_make_semiclassical_exact() {
        let sys = identical_system();
        let mut g = GaussianCoherence::ground_state(&sys);
        g.q = 0.9;
        g.p = -3.0;
        g.u = c64(0.0, 0.4);
        g.v = c64(0.0, -0.1);
        let ex = exact_rhs(&g, &sys);
        let sc = semiclassical_rhs(&g, &sys, None);
        assert_eq!(ex, sc, "omega'' = 0 kills every Moyal correction");
    }

    #[test]
    fn exact_rhs_matches_oracle_finite_differences_at_t500() {
        let sys = reference_system();
        let t = 500.0;
        let h = 1e-3;
        let g = oracle_params(&sys, t);
        let plus = oracle_params(&sys, t + h);
        let minus = oracle_params(&sys, t - h);
        let d = exact_rhs(&g, &sys);

        let fd = |x_p: Complex64, x_m: Complex64| (x_p - x_m) / (2.0 * h);
        let checks: [(&str, Complex64, Complex64); 8] = [
            ("a", d.da, fd(plus.a, minus.a)),
            ("b", d.db, fd(plus.b, minus.b)),
            ("c", d.dc, fd(plus.c, minus.c)),
            ("q", c64(d.dq, 0.0), fd(c64(plus.q, 0.0), c64(minus.q, 0.0))),
            ("p", c64(d.dp, 0.0), fd(c64(plus.p, 0.0), c64(minus.p, 0.0))),
            ("u", d.du, fd(plus.u, minus.u)),
            ("v", d.dv, fd(plus.v, minus.v)),
            ("w", d.dw, fd(plus.w, minus.w)),
        ];
        for (name, ours, reference) in checks {
            assert!(
                rel_err(ours, reference) < 1e-6,
                "d{name}/dt: rhs {ours} vs oracle finite difference {reference}"
            );
        }
    }

    #[test]
    fn semiclassical_rhs_drops_moyal_force() {
        let sys = reference_system();
        let g = GaussianCoherence::ground_state(&sys);
        let d = semiclassical_rhs(&g, &sys, None);
        assert!((d.dp - (-sys.average_potential(0.0).gradient)).abs() < 1e-15);

        // with nonzero v the exact force picks up the Moyal correction
        let mut gv = g;
        gv.v = c64(0.0, -0.5);
        let de = exact_rhs(&gv, &sys);
        let dsc = semiclassical_rhs(&gv, &sys, None);
        let expected = sys.hbar.powi(2) * sys.omega_curvature() / 4.0 * gv.v.im;
        assert!((de.dp - dsc.dp - expected).abs() < 1e-15);
    }

    #[test]
    fn semiclassical_center_matches_closed_form() {
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        let period0 = std::f64::consts::TAU / sys.omega0();
        let nsteps = 8000;
        let dt = period0 / nsteps as f64;
        let traj = propagate(&g0, &sys, dt, nsteps, Method::Semiclassical).unwrap();
        for k in (0..=nsteps).step_by(500) {
            let reference = analytic_semiclassical_center(&sys, 0.0, 0.0, traj.time(k));
            let g = &traj.states[k];
            assert!(
                (g.q - reference.q).abs() < 1e-8 && (g.p - reference.p).abs() < 1e-8,
                "center ({}, {}) vs closed form ({}, {}) at t = {}",
                g.q,
                g.p,
                reference.q,
                reference.p,
                traj.time(k)
            );
        }
    }

    #[test]
    fn step_rejects_zero_dt() {
        let sys = reference_system();
        let g = GaussianCoherence::ground_state(&sys);
        assert!(matches!(
            step_rk4(&g, &sys, 0.0, Method::MoyalExact, None),
            Err(DynamicsError::InvalidStep { .. })
        ));
        assert!(matches!(
            step_rk4(&g, &sys, f64::NAN, Method::MoyalExact, None),
            Err(DynamicsError::InvalidStep { .. })
        ));
    }

    #[test]
    fn forward_backward_step_is_reversible_to_truncation_order() {
        let sys = reference_system();
        let g = GaussianCoherence::ground_state(&sys);
        for dt in [2.0, 1.0, 0.5] {
            let there = step_rk4(&g, &sys, dt, Method::MoyalExact, None).unwrap();
            let back = step_rk4(&there, &sys, -dt, Method::MoyalExact, None).unwrap();
            let mut err: f64 = 0.0;
            for (x, y) in g.flat_record().iter().zip(back.flat_record()) {
                err = err.max((x - y).abs());
            }
            // local O(dt^5); generous constant
            assert!(
                err < 1e-2 * dt.powi(5),
                "round trip error {err} at dt = {dt}"
            );
        }
    }

    #[test]
    fn halving_dt_gains_fourth_order() {
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        let t_final = sys.surface1.period();

        let endpoint_err = |dt: f64| -> f64 {
            let nsteps = (t_final / dt).round() as usize;
            let traj = propagate(
                &g0,
                &sys,
                t_final / nsteps as f64,
                nsteps,
                Method::MoyalExact,
            )
            .unwrap();
            let g = traj.states.last().unwrap();
            let (q, p, u, v) = analytic_exact_params(&sys, 0.0, 0.0, t_final);
            ((g.q - q).powi(2) + (g.p - p).powi(2) + (g.u - u).norm_sqr() + (g.v - v).norm_sqr())
                .sqrt()
        };

        let e1 = endpoint_err(4.0);
        let e2 = endpoint_err(2.0);
        let ratio = e1 / e2;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "RK4 Richardson ratio {ratio} (errors {e1:.3e} -> {e2:.3e})"
        );
    }

    #[test]
    fn propagate_zero_steps_is_identity() {
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        let traj = propagate(&g0, &sys, 0.1, 0, Method::MoyalExact).unwrap();
        assert_eq!(traj.states, vec![g0]);
        assert_eq!(traj.degenerate, vec![false]);
    }

    #[test]
    fn exact_trace_recurs_after_upper_period() {
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        let t_final = sys.surface2.period();
        let nsteps = 15708;
        let traj = propagate(
            &g0,
            &sys,
            t_final / nsteps as f64,
            nsteps,
            Method::MoyalExact,
        )
        .unwrap();
        let c = traj.trace_series();
        assert!((c[0].norm() - 1.0).abs() < 1e-12);
        let recurrence = c.last().unwrap().norm();
        assert!(
            (recurrence - 1.0).abs() < 1e-6,
            "|trace| at full recurrence = {recurrence}"
        );
    }

    #[test]
    fn semiclassical_u_grows_between_periods() {
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        let period0 = std::f64::consts::TAU / sys.omega0();
        let steps_per_period = 4200usize;
        let dt = period0 / steps_per_period as f64;
        let traj = propagate(&g0, &sys, dt, 2 * steps_per_period, Method::Semiclassical).unwrap();
        let max_u = |range: std::ops::Range<usize>| {
            range.map(|k| traj.states[k].u.norm()).fold(0.0, f64::max)
        };
        let first = max_u(0..steps_per_period);
        let second = max_u(steps_per_period..2 * steps_per_period + 1);
        assert!(
            second > first,
            "secular growth: max|u| per period {first} -> {second}"
        );
    }

    #[test]
    fn analytic_exact_params_edge_cases() {
        let sys = reference_system();
        let (q, p, u, v) = analytic_exact_params(&sys, 0.0, 0.0, 0.0);
        assert_eq!((q, p), (0.0, 0.0));
        assert_eq!(u, c64(0.0, 0.0));
        assert_eq!(v, c64(0.0, 0.0));

        // at t = pi/Omega_2 the surface-2 branch sits at (2, 0)
        let t = std::f64::consts::PI / sys.surface2.omega;
        let q1 = sys.surface1.trajectory(0.0, 0.0, t);
        let (q, _p, _u, v) = analytic_exact_params(&sys, 0.0, 0.0, t);
        assert!((q - 0.5 * (q1.q + 2.0)).abs() < 1e-12);
        assert!((v - c64(0.0, -(q1.q - 2.0))).norm() < 1e-12);
    }

    #[test]
    fn analytic_exact_params_identical_surfaces() {
        let sys = identical_system();
        for t in [0.0, 55.5, 700.0] {
            let (_, _, u, v) = analytic_exact_params(&sys, -0.2, 4.0, t);
            assert!(u.norm() < 1e-12);
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn semiclassical_center_edge_cases() {
        let sys = reference_system();
        let q0 = sys.q0();
        for t in [0.0, 100.0, 4000.0] {
            let pt = analytic_semiclassical_center(&sys, q0, 0.0, t);
            assert!((pt.q - q0).abs() < 1e-12 && pt.p.abs() < 1e-9);
        }
        let period = std::f64::consts::TAU / sys.omega0();
        let pt = analytic_semiclassical_center(&sys, -0.4, 2.0, period);
        assert!((pt.q - (-0.4)).abs() < 1e-10);
        assert!((pt.p - 2.0).abs() < 1e-9);
        // half-period reflection about Q_o from the default initial center
        let half = analytic_semiclassical_center(&sys, 0.0, 0.0, 0.5 * period);
        assert!((half.q - 2.0 * q0).abs() < 1e-12, "Q(T/2) = {}", half.q);
    }

    #[test]
    fn reality_structure_is_preserved() {
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        for method in [Method::MoyalExact, Method::Semiclassical] {
            let traj = propagate(&g0, &sys, 0.25, 8000, method).unwrap();
            for g in traj.states.iter().step_by(400) {
                assert!(g.u.re.abs() < 1e-10, "{method}: Re u = {}", g.u.re);
                assert!(g.v.re.abs() < 1e-10, "{method}: Re v = {}", g.v.re);
            }
        }
    }

    #[test]
    fn flipped_moyal_sign_breaks_recurrence() {
        // Deliberate-fault check: integrating with the sign of every hbar^2
        // term flipped (rhs = 2 * semiclassical - exact) must destroy the
        // full-period recurrence that the exact dynamics guarantees.
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        let t_final = sys.surface2.period();
        let nsteps = 16000usize;
        let dt = t_final / nsteps as f64;

        let mut state = g0;
        let mut states = vec![g0];
        for _ in 0..nsteps {
            state = rk4_step_with(
                &state,
                |g| {
                    let ex = exact_rhs(g, &sys);
                    let sc = semiclassical_rhs(g, &sys, None);
                    ParamDerivs {
                        da: 2.0 * sc.da - ex.da,
                        db: 2.0 * sc.db - ex.db,
                        dc: 2.0 * sc.dc - ex.dc,
                        dq: 2.0 * sc.dq - ex.dq,
                        dp: 2.0 * sc.dp - ex.dp,
                        du: 2.0 * sc.du - ex.du,
                        dv: 2.0 * sc.dv - ex.dv,
                        dw: 2.0 * sc.dw - ex.dw,
                    }
                },
                dt,
            );
            states.push(state);
        }
        let c = gaussian::trace_continuous(states.iter());
        let recurrence = c.last().unwrap().norm();
        assert!(
            (recurrence - 1.0).abs() > 1e-2,
            "sign mutation went undetected: |c(T)| = {recurrence}"
        );
    }

    #[test]
    fn csv_export_shape() {
        let sys = reference_system();
        let g0 = GaussianCoherence::ground_state(&sys);
        let traj = propagate(&g0, &sys, 0.5, 4, Method::MoyalExact).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,Re a,Im a,Re b,Im b,Re c,Im c,Re u,Im u,Re v,Im v,Re w,Im w,Q,P"
        );
        assert_eq!(lines.count(), 5);
        let json = traj.to_json();
        assert_eq!(json["rows"].as_array().unwrap().len(), 5);
        assert_eq!(json["method"], "moyal");
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.as_str()), Some(m));
        }
        assert_eq!(Method::parse("semiclassical"), Some(Method::Semiclassical));
        assert_eq!(Method::parse("nope"), None);
    }
}
