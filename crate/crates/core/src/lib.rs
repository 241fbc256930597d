//! Phase-space dynamics of the electronic coherence of a two-state molecule
//! with displaced harmonic potentials.
//!
//! The coherence Wigner function is propagated three independent ways:
//!
//! * [`dynamics`] — the complex Gaussian ansatz with its parameter ODEs,
//!   under the exact (Moyal) equation or its semiclassical limits;
//! * [`grid`] — finite-difference integration of the same equations on a
//!   rectangular phase-space lattice;
//! * [`oracle`] — analytic thawed-Gaussian wavepackets, giving a
//!   machine-precision quantum reference.
//!
//! [`observables`] turns any channel's trace series into correlation
//! functions and absorption spectra; [`channel`] puts the three routes
//! behind one trait, registered by name for runtime selection.

pub mod channel;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod model;
pub mod observables;
pub mod oracle;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{
    ChannelError, DynamicsError, GaussianError, GridError, ModelError, ObservablesError,
};
pub use gaussian::GaussianCoherence;
pub use model::{HarmonicSurface, PhasePoint, TwoStateSystem};
