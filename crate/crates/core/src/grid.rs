//! Method-of-lines finite-difference propagation of the coherence field on a
//! rectangular phase-space lattice.
//!
//! The integrated equation is `d rho/dt = {Ho, rho} - i omega(q) rho +
//! (i hbar^2 omega''/8) d^2 rho/dp^2` (exact) or the same without the last
//! term (semiclassical). Advection derivatives use 4th-order 5-point central
//! stencils, the dispersive `d^2/dp^2` a 2nd-order central stencil, with the
//! field taken as zero outside the domain. The zero-padded central closure
//! keeps the advection operator exactly skew-symmetric, so the method of
//! lines is neutrally stable under the CFL bound (one-sided closures of the
//! same order were measured to grow an unstable boundary mode at ~e^(0.14 t)
//! on the default domain, destroying multi-period runs). No absorbing
//! layer: the harmonic dynamics keeps the support interior on the
//! timescales of interest, and the boundary magnitude is monitored instead.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Method;
use crate::error::GridError;
use crate::gaussian::GaussianCoherence;
use crate::model::TwoStateSystem;

/// Required boundary-to-peak ratio of the initial field (domain adequacy).
pub const BOUNDARY_ADEQUACY: f64 = 1e-8;
/// Boundary-to-peak ratio above which a running field is considered to be
/// feeling the domain edge. Recorded as a diagnostic, not an abort.
pub const BOUNDARY_VALIDITY: f64 = 1e-6;
/// Growth factor of `max |rho|` over its initial value that aborts a run.
pub const INSTABILITY_FACTOR: f64 = 1e3;

/// Rectangular lattice geometry. `nq`/`np` are even and at least 64.
/// Defaults to [`GridSpec::default_domain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::default_domain()
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        let finite = [self.q_min, self.q_max, self.p_min, self.p_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.q_min >= self.q_max || self.p_min >= self.p_max {
            return Err(GridError::BadBounds);
        }
        if self.nq < 64 || self.np < 64 || self.nq % 2 != 0 || self.np % 2 != 0 {
            return Err(GridError::BadResolution {
                nq: self.nq,
                np: self.np,
            });
        }
        Ok(())
    }

    /// Default domain for the reference system: covers both classical
    /// turning ranges (max classical |P| = m Omega_1 * 1 = 20) plus several
    /// momentum widths (sigma_p = sqrt(m Omega_1 hbar / 2) ~ 3.2).
    pub fn default_domain() -> Self {
        GridSpec {
            q_min: -1.0,
            q_max: 3.0,
            p_min: -40.0,
            p_max: 40.0,
            nq: 512,
            np: 512,
        }
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.nq - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn q_at(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p_at(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }
}

/// Complex coherence field sampled on a lattice, row-major in `q`
/// (index `iq * np + ip`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub spec: GridSpec,
    pub time: f64,
    pub field: Vec<Complex64>,
}

impl PhaseSpaceGrid {
    #[inline]
    pub fn idx(&self, iq: usize, ip: usize) -> usize {
        iq * self.spec.np + ip
    }

    pub fn max_abs(&self) -> f64 {
        self.field
            .iter()
            .map(|z| z.norm_sqr())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Largest magnitude on the outermost ring of lattice points.
    pub fn boundary_max_abs(&self) -> f64 {
        let (nq, np) = (self.spec.nq, self.spec.np);
        let mut m: f64 = 0.0;
        for ip in 0..np {
            m = m.max(self.field[ip].norm_sqr());
            m = m.max(self.field[(nq - 1) * np + ip].norm_sqr());
        }
        for iq in 0..nq {
            m = m.max(self.field[iq * np].norm_sqr());
            m = m.max(self.field[iq * np + np - 1].norm_sqr());
        }
        m.sqrt()
    }
}

/// Serial vs row-parallel right-hand-side evaluation. Serial mode is
/// bit-reproducible run to run; rows are independent, so the parallel mode
/// performs the identical per-row arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Serial,
    Rows,
}

/// Sample a Gaussian coherence onto the lattice. Fails with
/// [`GridError::DomainTooSmall`] when the initial boundary-to-peak ratio
/// exceeds [`BOUNDARY_ADEQUACY`].
pub fn discretize(g: &GaussianCoherence, spec: &GridSpec) -> Result<PhaseSpaceGrid, GridError> {
    spec.validate()?;
    let mut field = Vec::with_capacity(spec.nq * spec.np);
    for iq in 0..spec.nq {
        let q = spec.q_at(iq);
        for ip in 0..spec.np {
            field.push(g.evaluate(q, spec.p_at(ip)));
        }
    }
    let grid = PhaseSpaceGrid {
        spec: *spec,
        time: 0.0,
        field,
    };
    let ratio = grid.boundary_max_abs() / grid.max_abs();
    if ratio > BOUNDARY_ADEQUACY {
        return Err(GridError::DomainTooSmall {
            ratio,
            limit: BOUNDARY_ADEQUACY,
        });
    }
    Ok(grid)
}

/// Stability bound for the RK4 method of lines: half the minimum of the two
/// advective CFL times and the dispersive limit of the `hbar^2 d^2/dp^2`
/// term.
pub fn cfl_dt(spec: &GridSpec, sys: &TwoStateSystem) -> f64 {
    let p_max = spec.p_min.abs().max(spec.p_max.abs());
    let advect_q = spec.dq() * sys.mass() / p_max;
    let grad_max = sys
        .average_potential(spec.q_min)
        .gradient
        .abs()
        .max(sys.average_potential(spec.q_max).gradient.abs());
    let advect_p = spec.dp() / grad_max;
    let omega_dd = sys.omega_curvature().abs();
    let dispersive = if omega_dd > 0.0 {
        4.0 * spec.dp() * spec.dp() / (sys.hbar * sys.hbar * omega_dd)
    } else {
        f64::INFINITY
    };
    0.5 * advect_q.min(advect_p).min(dispersive)
}

/// 4th-order central first-derivative coefficients (x 1/(12 h)) at offsets
/// -2..=2; out-of-domain neighbors contribute zero.
const FD1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

struct RhsContext {
    nq: usize,
    np: usize,
    inv_12dq: f64,
    inv_12dp: f64,
    inv_dp2: f64,
    /// -p/m per column.
    neg_p_over_m: Vec<f64>,
    /// Uo'(q) per row.
    u0_gradient: Vec<f64>,
    /// -i omega(q) per row.
    neg_i_omega: Vec<Complex64>,
    /// i hbar^2 omega''/8, or zero in the semiclassical case.
    dispersion: Complex64,
}

impl RhsContext {
    fn new(spec: &GridSpec, sys: &TwoStateSystem, method: Method) -> Result<Self, GridError> {
        let dispersion = match method {
            Method::MoyalExact => {
                Complex64::new(0.0, sys.hbar * sys.hbar * sys.omega_curvature() / 8.0)
            }
            Method::Semiclassical => Complex64::new(0.0, 0.0),
            Method::SemiclassicalLinearized => return Err(GridError::UnsupportedMethod),
        };
        Ok(RhsContext {
            nq: spec.nq,
            np: spec.np,
            inv_12dq: 1.0 / (12.0 * spec.dq()),
            inv_12dp: 1.0 / (12.0 * spec.dp()),
            inv_dp2: 1.0 / (spec.dp() * spec.dp()),
            neg_p_over_m: (0..spec.np).map(|ip| -spec.p_at(ip) / sys.mass()).collect(),
            u0_gradient: (0..spec.nq)
                .map(|iq| sys.average_potential(spec.q_at(iq)).gradient)
                .collect(),
            neg_i_omega: (0..spec.nq)
                .map(|iq| Complex64::new(0.0, -sys.difference_frequency(spec.q_at(iq)).value))
                .collect(),
            dispersion,
        })
    }

    /// d rho/dt for one output row.
    fn row(&self, field: &[Complex64], iq: usize, out: &mut [Complex64]) {
        let np = self.np;
        let zero_row = || None::<&[Complex64]>;
        let fetch = |j: isize| -> Option<&[Complex64]> {
            if j < 0 || j >= self.nq as isize {
                zero_row()
            } else {
                let j = j as usize;
                Some(&field[j * np..(j + 1) * np])
            }
        };
        let iqs = iq as isize;
        let rm2 = fetch(iqs - 2);
        let rm1 = fetch(iqs - 1);
        let rp1 = fetch(iqs + 1);
        let rp2 = fetch(iqs + 2);
        let row = &field[iq * np..(iq + 1) * np];

        let u0p = self.u0_gradient[iq];
        let miw = self.neg_i_omega[iq];
        let disp = self.dispersion;
        let zero = Complex64::new(0.0, 0.0);

        let at = |r: Option<&[Complex64]>, ip: usize| r.map_or(zero, |r| r[ip]);
        let ddq = |ip: usize| {
            (FD1[0] * at(rm2, ip)
                + FD1[1] * at(rm1, ip)
                + FD1[3] * at(rp1, ip)
                + FD1[4] * at(rp2, ip))
                * self.inv_12dq
        };

        // edge columns: out-of-domain p neighbors are zero
        let mut edge = |ip: usize| {
            let get = |j: isize| {
                if j < 0 || j >= np as isize {
                    zero
                } else {
                    row[j as usize]
                }
            };
            let ips = ip as isize;
            let ddp = (FD1[0] * get(ips - 2)
                + FD1[1] * get(ips - 1)
                + FD1[3] * get(ips + 1)
                + FD1[4] * get(ips + 2))
                * self.inv_12dp;
            let d2p = (get(ips - 1) - 2.0 * row[ip] + get(ips + 1)) * self.inv_dp2;
            out[ip] = self.neg_p_over_m[ip] * ddq(ip) + u0p * ddp + miw * row[ip] + disp * d2p;
        };
        edge(0);
        edge(1);
        edge(np - 2);
        edge(np - 1);

        // interior: branch-free central stencils
        for ip in 2..np - 2 {
            let ddp =
                (row[ip - 2] - 8.0 * row[ip - 1] + 8.0 * row[ip + 1] - row[ip + 2]) * self.inv_12dp;
            let d2p = (row[ip - 1] - 2.0 * row[ip] + row[ip + 1]) * self.inv_dp2;
            out[ip] = self.neg_p_over_m[ip] * ddq(ip) + u0p * ddp + miw * row[ip] + disp * d2p;
        }
    }

    fn apply(&self, field: &[Complex64], out: &mut [Complex64], par: Parallelism) {
        match par {
            Parallelism::Serial => {
                for (iq, chunk) in out.chunks_mut(self.np).enumerate() {
                    self.row(field, iq, chunk);
                }
            }
            Parallelism::Rows => {
                out.par_chunks_mut(self.np)
                    .enumerate()
                    .for_each(|(iq, chunk)| self.row(field, iq, chunk));
            }
        }
    }
}

/// Grid-valued time derivative of the field under the selected method.
pub fn pde_rhs(
    grid: &PhaseSpaceGrid,
    sys: &TwoStateSystem,
    method: Method,
    par: Parallelism,
) -> Result<Vec<Complex64>, GridError> {
    let ctx = RhsContext::new(&grid.spec, sys, method)?;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.field.len()];
    ctx.apply(&grid.field, &mut out, par);
    Ok(out)
}

/// Result of a grid propagation: trace samples at a fixed cadence, optional
/// decimated field snapshots, and the worst boundary-to-peak ratio seen.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub method: Method,
    pub dt: f64,
    pub trace_every: usize,
    pub traces: Vec<Complex64>,
    pub snapshots: Vec<PhaseSpaceGrid>,
    pub final_grid: PhaseSpaceGrid,
    pub max_boundary_ratio: f64,
}

impl GridRun {
    /// Time spacing of the trace samples.
    pub fn trace_dt(&self) -> f64 {
        self.dt * self.trace_every as f64
    }
}

/// RK4 time stepping. Traces are recorded every `trace_every` steps
/// (including step 0), field snapshots every `snapshot_every` steps when
/// nonzero. Aborts with [`GridError::Unstable`] if `max |rho|` grows past
/// [`INSTABILITY_FACTOR`] times its initial value.
pub fn propagate_grid(
    grid0: &PhaseSpaceGrid,
    sys: &TwoStateSystem,
    dt: f64,
    nsteps: usize,
    method: Method,
    trace_every: usize,
    snapshot_every: usize,
    par: Parallelism,
) -> Result<GridRun, GridError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(GridError::InvalidStep { dt });
    }
    let ctx = RhsContext::new(&grid0.spec, sys, method)?;
    let trace_every = trace_every.max(1);
    let n = grid0.field.len();
    let initial_max = grid0.max_abs();

    let mut y = grid0.field.clone();
    let mut k1 = vec![Complex64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();

    let mut traces = Vec::with_capacity(nsteps / trace_every + 2);
    let mut snapshots = Vec::new();
    let mut max_boundary_ratio: f64 = 0.0;

    let record = |step: usize,
                  y: &Vec<Complex64>,
                  traces: &mut Vec<Complex64>,
                  snapshots: &mut Vec<PhaseSpaceGrid>,
                  max_boundary_ratio: &mut f64|
     -> Result<(), GridError> {
        let snap = PhaseSpaceGrid {
            spec: grid0.spec,
            time: grid0.time + step as f64 * dt,
            field: y.clone(),
        };
        if step % trace_every == 0 {
            traces.push(grid_trace(&snap));
            let max = snap.max_abs();
            *max_boundary_ratio = max_boundary_ratio.max(snap.boundary_max_abs() / max);
            if max > INSTABILITY_FACTOR * initial_max {
                return Err(GridError::Unstable {
                    step,
                    t: snap.time,
                    max_abs: max,
                    initial: initial_max,
                });
            }
        }
        if snapshot_every != 0 && step % snapshot_every == 0 {
            snapshots.push(snap);
        }
        Ok(())
    };

    record(0, &y, &mut traces, &mut snapshots, &mut max_boundary_ratio)?;

    let axpy = |out: &mut [Complex64], base: &[Complex64], k: &[Complex64], s: f64| {
        for ((o, b), kk) in out.iter_mut().zip(base).zip(k) {
            *o = b + s * kk;
        }
    };

    for step in 1..=nsteps {
        ctx.apply(&y, &mut k1, par);
        axpy(&mut stage, &y, &k1, 0.5 * dt);
        ctx.apply(&stage, &mut k2, par);
        axpy(&mut stage, &y, &k2, 0.5 * dt);
        ctx.apply(&stage, &mut k3, par);
        axpy(&mut stage, &y, &k3, dt);
        ctx.apply(&stage, &mut k4, par);
        let sixth = dt / 6.0;
        for i in 0..n {
            y[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        record(
            step,
            &y,
            &mut traces,
            &mut snapshots,
            &mut max_boundary_ratio,
        )?;
    }

    let final_grid = PhaseSpaceGrid {
        spec: grid0.spec,
        time: grid0.time + nsteps as f64 * dt,
        field: y,
    };
    Ok(GridRun {
        method,
        dt,
        trace_every,
        traces,
        snapshots,
        final_grid,
        max_boundary_ratio,
    })
}

/// 2-D trapezoid quadrature of the field.
pub fn grid_trace(grid: &PhaseSpaceGrid) -> Complex64 {
    let (nq, np) = (grid.spec.nq, grid.spec.np);
    let mut sum = Complex64::new(0.0, 0.0);
    for iq in 0..nq {
        let wq = if iq == 0 || iq == nq - 1 { 0.5 } else { 1.0 };
        let row = &grid.field[iq * np..(iq + 1) * np];
        let mut acc = 0.5 * (row[0] + row[np - 1]);
        for &z in &row[1..np - 1] {
            acc += z;
        }
        sum += wq * acc;
    }
    sum * grid.spec.dq() * grid.spec.dp()
}

/// Snapshot export: one `(q, p, Re rho, Im rho)` row per lattice point.
pub fn write_snapshot_csv<W: std::io::Write>(
    grid: &PhaseSpaceGrid,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "q,p,Re rho,Im rho")?;
    for iq in 0..grid.spec.nq {
        let q = grid.spec.q_at(iq);
        for ip in 0..grid.spec.np {
            let z = grid.field[grid.idx(iq, ip)];
            writeln!(
                w,
                "{q:.16e},{:.16e},{:.16e},{:.16e}",
                grid.spec.p_at(ip),
                z.re,
                z.im
            )?;
        }
    }
    Ok(())
}

/// JSON sidecar with the grid geometry, time stamp, method, and system.
pub fn snapshot_metadata(
    grid: &PhaseSpaceGrid,
    sys: &TwoStateSystem,
    method: Method,
) -> serde_json::Value {
    serde_json::json!({
        "q_min": grid.spec.q_min,
        "q_max": grid.spec.q_max,
        "p_min": grid.spec.p_min,
        "p_max": grid.spec.p_max,
        "nq": grid.spec.nq,
        "np": grid.spec.np,
        "t": grid.time,
        "method": method.as_str(),
        "system": sys,
    })
}
