//! Spectral Galerkin solver for incompressible viscous MHD on the channel
//! `T^2 x (0,1)` with Navier-slip velocity and insulating magnetic boundary
//! conditions, plus the diagnostics that track its energy identities, boundary
//! identities and vanishing-dissipation convergence.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod modes;
pub mod scalar;
pub mod transforms;
pub mod verify;

pub use diagnostics::{
    convergence_study, energy_law_residual, fit_loglog, Diagnostics, DiagnosticsRecord,
    LemmaResiduals, StudyResult, StudyRow,
};
pub use dynamics::{simulate, Dynamics, SimFailure, SimState, SolverConfig, Trajectory};
pub use error::{Error, Result};
pub use fields::SpectralField;
pub use modes::{FieldParity, ModeIndex, Truncation, ZBasis};
pub use scalar::Real;
pub use transforms::{GridSpec, PhysicalField, Transformer};

/// Double-precision field, the default for simulations and checkpoints.
pub type Field = SpectralField<f64>;
pub type Field32 = SpectralField<f32>;
pub type State = SimState<f64>;
pub type State32 = SimState<f32>;
pub type Physical = PhysicalField<f64>;
