//! Partitioned averaged vector field integrators for Hamiltonian systems
//! `z' = S grad H(z)`.
//!
//! Generic steppers work on any [`HamiltonianSystem`]; the [`models`] module
//! adds hand-coded linearly implicit schemes for the Hénon–Heiles system and
//! the Klein–Gordon–Schrödinger equation.

pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod integrators;
pub mod models;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};
pub use hamiltonian::{FnSystem, Grouping, HamiltonianSystem, SkewStructure, State};
pub use integrators::{
    integrate, relative_drift, trajectory, EnergyMonitor, GenericStepper, Method, Observer, Step, StepRecord, Stepper, StepperConfig,
    Trajectory,
};
pub use models::henon_heiles::{HhInit, HhScheme, HhState};
pub use models::kgs::{Grid1D, KgsScheme, KgsState, SolitonParams};
pub use numerics::{NonlinearSolveConfig, SolveMode};
