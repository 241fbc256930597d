//! Complex Gaussian ansatz for the coherence Wigner function,
//!
//! `rho_12(q,p) = exp[-a(q-Q)^2 - b(p-P)^2 + c(q-Q)(p-P) + u(q-Q) + v(p-P) + w]`,
//!
//! with evaluation, the closed-form phase-space trace, and the ground-state
//! initialization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::GaussianError;
use crate::model::TwoStateSystem;

/// Exponents with real part below this evaluate to exactly zero; the
/// semiclassical branch drives exponents far past f64 range by design.
const EXPONENT_UNDERFLOW: f64 = -700.0;

/// The eight time-dependent ansatz parameters. `q`/`p` are the (real) center;
/// `a`, `b`, `c` the complex quadratic form; `u`, `v` the linear phase
/// gradients; `w` the complex log-amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCoherence {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub q: f64,
    pub p: f64,
    pub u: Complex64,
    pub v: Complex64,
    pub w: Complex64,
}

/// Column names of the flat record, also the trajectory CSV header
/// (prefixed by `t`).
pub const FLAT_RECORD_COLUMNS: [&str; 14] = [
    "Re a", "Im a", "Re b", "Im b", "Re c", "Im c", "Re u", "Im u", "Re v", "Im v", "Re w", "Im w",
    "Q", "P",
];

impl GaussianCoherence {
    /// Wigner transform of `|g1><g1|` for the ground vibrational state of
    /// surface 1: `a = m Omega_1 / hbar`, `b = 1/(m Omega_1 hbar)`, `c = 0`,
    /// centered at the surface-1 minimum, `w = -ln(pi hbar)`. Trace is 1.
    pub fn ground_state(sys: &TwoStateSystem) -> Self {
        let s = sys.surface1;
        Self {
            a: Complex64::new(s.mass * s.omega / sys.hbar, 0.0),
            b: Complex64::new(1.0 / (s.mass * s.omega * sys.hbar), 0.0),
            c: Complex64::new(0.0, 0.0),
            q: s.q_eq,
            p: 0.0,
            u: Complex64::new(0.0, 0.0),
            v: Complex64::new(0.0, 0.0),
            w: Complex64::new(-(std::f64::consts::PI * sys.hbar).ln(), 0.0),
        }
    }

    /// Ground-width coherence displaced to center `(q0, p0)`.
    pub fn displaced_ground_state(sys: &TwoStateSystem, q0: f64, p0: f64) -> Self {
        let mut g = Self::ground_state(sys);
        g.q = q0;
        g.p = p0;
        g
    }

    /// Trace convergence: Re a > 0, Re b > 0 and 4 Re a Re b > (Re c)^2.
    pub fn is_normalizable(&self) -> bool {
        self.q.is_finite()
            && self.p.is_finite()
            && self.a.re > 0.0
            && self.b.re > 0.0
            && 4.0 * self.a.re * self.b.re - self.c.re * self.c.re > 0.0
    }

    /// Evaluate the ansatz at `(q, p)`. Underflowing exponents clamp to 0.
    pub fn evaluate(&self, q: f64, p: f64) -> Complex64 {
        let x = q - self.q;
        let y = p - self.p;
        let exponent =
            -self.a * x * x - self.b * y * y + self.c * x * y + self.u * x + self.v * y + self.w;
        if exponent.re < EXPONENT_UNDERFLOW {
            Complex64::new(0.0, 0.0)
        } else {
            exponent.exp()
        }
    }

    /// Determinant-like quantity `4ab - c^2` controlling the trace prefactor.
    /// Nonzero on the whole normalizable set.
    pub fn quadratic_det(&self) -> Complex64 {
        4.0 * self.a * self.b - self.c * self.c
    }

    /// Closed-form phase-space trace,
    ///
    /// `Tr = 2 pi (4ab - c^2)^(-1/2) exp[w + (b u^2 + a v^2 + c u v)/(4ab - c^2)]`.
    ///
    /// The square root uses the positive-real-part branch; on the
    /// normalizable set `4ab - c^2` never touches the negative real axis,
    /// so this branch is continuous along any admissible parameter path
    /// (see [`trace_continuous`] for the explicitly tracked version).
    pub fn trace(&self) -> Result<Complex64, GaussianError> {
        if !self.is_normalizable() {
            return Err(GaussianError::NonNormalizable);
        }
        Ok(trace_formula(self, self.quadratic_det().sqrt()))
    }
}

fn trace_formula(g: &GaussianCoherence, sqrt_det: Complex64) -> Complex64 {
    let det = 4.0 * g.a * g.b - g.c * g.c;
    let shift = (g.b * g.u * g.u + g.a * g.v * g.v + g.c * g.u * g.v) / det;
    std::f64::consts::TAU / sqrt_det * (g.w + shift).exp()
}

/// Trace along a parameter path, with the square-root branch of `4ab - c^2`
/// unwrapped continuously from the first state instead of taken pointwise.
///
/// States are assumed densely sampled (the argument of `4ab - c^2` must move
/// by less than pi between neighbors). No normalizability check is made:
/// values for degenerate states are formal and it is the caller's job to
/// filter them by the propagation flags.
pub fn trace_continuous<'a, I>(states: I) -> Vec<Complex64>
where
    I: IntoIterator<Item = &'a GaussianCoherence>,
{
    let mut out = Vec::new();
    let mut prev_det = Complex64::new(1.0, 0.0);
    let mut angle = 0.0;
    for (k, g) in states.into_iter().enumerate() {
        let det = g.quadratic_det();
        if k == 0 {
            angle = det.arg();
        } else {
            angle += (det / prev_det).arg();
        }
        prev_det = det;
        let sqrt_det = Complex64::from_polar(det.norm().sqrt(), 0.5 * angle);
        out.push(trace_formula(g, sqrt_det));
    }
    out
}

/// Flat 14-real serialization: Re/Im of (a, b, c, u, v, w), then Q, P.
impl GaussianCoherence {
    pub fn flat_record(&self) -> [f64; 14] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.u.re, self.u.im,
            self.v.re, self.v.im, self.w.re, self.w.im, self.q, self.p,
        ]
    }

    pub fn from_flat_record(r: [f64; 14]) -> Self {
        Self {
            a: Complex64::new(r[0], r[1]),
            b: Complex64::new(r[2], r[3]),
            c: Complex64::new(r[4], r[5]),
            u: Complex64::new(r[6], r[7]),
            v: Complex64::new(r[8], r[9]),
            w: Complex64::new(r[10], r[11]),
            q: r[12],
            p: r[13],
        }
    }
}
