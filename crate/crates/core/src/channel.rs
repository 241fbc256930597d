//! The three computation routes behind one trait, registered by name and
//! selected at runtime.
//!
//! Every channel answers the same question — the coherence trace `c(t)` on a
//! uniform sample grid for one system, method, and initial center — but gets
//! there differently: parameter ODEs, lattice PDE, or analytic wavepackets.

use crate::dynamics::{self, Method, ParameterTrajectory};
use crate::error::ChannelError;
use crate::gaussian::GaussianCoherence;
use crate::grid::{self, GridSpec, Parallelism, PhaseSpaceGrid};
use crate::model::{PhasePoint, TwoStateSystem};
use crate::observables::CorrelationSeries;
use crate::oracle::{cross_wigner, propagate_thawed, ThawedGaussian};

/// One requested propagation. All channels start from the ground-width
/// coherence displaced to `initial` and sample the trace every `sample_dt`
/// for `nsamples` intervals.
#[derive(Debug, Clone)]
pub struct ChannelRequest<'a> {
    pub sys: &'a TwoStateSystem,
    pub method: Method,
    pub initial: PhasePoint,
    pub sample_dt: f64,
    pub nsamples: usize,
    /// Internal ODE substeps per sample interval (Gaussian channel).
    pub ode_substeps: usize,
    /// Lattice geometry (grid channel only).
    pub grid: Option<GridSpec>,
    /// Field snapshots every this many samples (grid channel; 0 = none).
    pub snapshot_every: usize,
    /// Row-parallel grid right-hand sides.
    pub parallel: bool,
}

impl<'a> ChannelRequest<'a> {
    pub fn new(sys: &'a TwoStateSystem, method: Method, sample_dt: f64, nsamples: usize) -> Self {
        ChannelRequest {
            sys,
            method,
            initial: PhasePoint::new(sys.surface1.q_eq, 0.0),
            sample_dt,
            nsamples,
            ode_substeps: 1,
            grid: None,
            snapshot_every: 0,
            parallel: false,
        }
    }

    fn initial_state(&self) -> GaussianCoherence {
        GaussianCoherence::displaced_ground_state(self.sys, self.initial.q, self.initial.p)
    }
}

/// What a channel produces: the trace series, plus whatever artifacts the
/// route naturally has (parameter history, field snapshots).
#[derive(Debug)]
pub struct ChannelOutput {
    pub series: CorrelationSeries,
    /// Parameter history at the sample cadence (ODE and oracle routes).
    pub trajectory: Option<ParameterTrajectory>,
    /// Decimated field snapshots (grid route, when requested).
    pub snapshots: Vec<PhaseSpaceGrid>,
    /// Worst boundary-to-peak ratio seen (grid route).
    pub max_boundary_ratio: Option<f64>,
}

/// A named strategy that produces `c(t)` for a request.
pub trait CoherenceChannel: Sync + Send {
    fn name(&self) -> &'static str;
    fn supports(&self, method: Method) -> bool;
    fn run(&self, req: &ChannelRequest) -> Result<ChannelOutput, ChannelError>;

    fn check_method(&self, method: Method) -> Result<(), ChannelError> {
        if self.supports(method) {
            Ok(())
        } else {
            Err(ChannelError::UnsupportedMethod {
                channel: self.name(),
                method,
            })
        }
    }
}

/// Parameter-ODE route: RK4 on the eight ansatz parameters, closed-form
/// trace with the branch tracked along the trajectory.
pub struct GaussianChannel;

impl CoherenceChannel for GaussianChannel {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn supports(&self, _method: Method) -> bool {
        true
    }

    fn run(&self, req: &ChannelRequest) -> Result<ChannelOutput, ChannelError> {
        self.check_method(req.method)?;
        let substeps = req.ode_substeps.max(1);
        let dt = req.sample_dt / substeps as f64;
        let traj = dynamics::propagate(
            &req.initial_state(),
            req.sys,
            dt,
            req.nsamples * substeps,
            req.method,
        )?;
        let series = CorrelationSeries::from_trajectory(&traj, substeps)?;
        let decimated = ParameterTrajectory {
            dt: req.sample_dt,
            method: traj.method,
            states: traj.states.iter().copied().step_by(substeps).collect(),
            degenerate: traj.degenerate.iter().copied().step_by(substeps).collect(),
            lin_q_ref: traj.lin_q_ref,
        };
        Ok(ChannelOutput {
            series,
            trajectory: Some(decimated),
            snapshots: Vec::new(),
            max_boundary_ratio: None,
        })
    }
}

/// Lattice route: finite-difference method of lines. Integrates only the
/// exact and bare semiclassical equations; the linearized variant is an
/// ansatz-level construct and lives in the ODE channel only.
pub struct GridChannel;

impl CoherenceChannel for GridChannel {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn supports(&self, method: Method) -> bool {
        matches!(method, Method::MoyalExact | Method::Semiclassical)
    }

    fn run(&self, req: &ChannelRequest) -> Result<ChannelOutput, ChannelError> {
        self.check_method(req.method)?;
        let spec = req.grid.ok_or(ChannelError::MissingGridSpec {
            channel: self.name(),
        })?;
        let stable = grid::cfl_dt(&spec, req.sys);
        let substeps = (req.sample_dt / stable).ceil().max(1.0) as usize;
        let dt = req.sample_dt / substeps as f64;
        let grid0 = grid::discretize(&req.initial_state(), &spec)?;
        let par = if req.parallel {
            Parallelism::Rows
        } else {
            Parallelism::Serial
        };
        let run = grid::propagate_grid(
            &grid0,
            req.sys,
            dt,
            req.nsamples * substeps,
            req.method,
            substeps,
            req.snapshot_every * substeps,
            par,
        )?;
        let series = CorrelationSeries::from_grid_run(&run)?;
        Ok(ChannelOutput {
            series,
            trajectory: None,
            snapshots: run.snapshots,
            max_boundary_ratio: Some(run.max_boundary_ratio),
        })
    }
}

/// Analytic wavepacket route. Exact quantum only: this channel *is* the
/// exact solution, so it has no semiclassical limit to integrate.
pub struct OracleChannel;

impl CoherenceChannel for OracleChannel {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn supports(&self, method: Method) -> bool {
        method == Method::MoyalExact
    }

    fn run(&self, req: &ChannelRequest) -> Result<ChannelOutput, ChannelError> {
        self.check_method(req.method)?;
        let series = CorrelationSeries::from_oracle(
            req.sys,
            req.initial.q,
            req.initial.p,
            req.sample_dt,
            req.nsamples,
        )?;
        // cross-Wigner parameter history at the sample cadence
        let psi0 = ThawedGaussian::ground_at(
            &req.sys.surface1,
            req.sys.hbar,
            req.initial.q,
            req.initial.p,
        );
        let states: Vec<GaussianCoherence> = (0..=req.nsamples)
            .map(|k| {
                let t = k as f64 * req.sample_dt;
                let psi1 = propagate_thawed(&req.sys.surface1, &psi0, t, req.sys.hbar);
                let psi2 = propagate_thawed(&req.sys.surface2, &psi0, t, req.sys.hbar);
                cross_wigner(&psi1, &psi2, req.sys.hbar)
            })
            .collect();
        let degenerate = vec![false; states.len()];
        Ok(ChannelOutput {
            series,
            trajectory: Some(ParameterTrajectory {
                dt: req.sample_dt,
                method: Method::MoyalExact,
                states,
                degenerate,
                lin_q_ref: None,
            }),
            snapshots: Vec::new(),
            max_boundary_ratio: None,
        })
    }
}

/// All registered channels.
pub fn registry() -> Vec<Box<dyn CoherenceChannel>> {
    vec![
        Box::new(GaussianChannel),
        Box::new(GridChannel),
        Box::new(OracleChannel),
    ]
}

/// Look a channel up by its registered name.
pub fn by_name(name: &str) -> Option<Box<dyn CoherenceChannel>> {
    registry().into_iter().find(|ch| ch.name() == name)
}

/// Names of all registered channels, in registry order.
pub fn names() -> Vec<&'static str> {
    registry().iter().map(|ch| ch.name()).collect()
}
