//! Finite-volume simulation of the one-dimensional quasilinear Keller–Segel
//! system
//!
//! ```text
//! ∂t u = ∂x( a(u) ∂x u - u ∂x v ),    ∂t v = ∂x² v - v + u    (or 0 = ∂x² v - v + u)
//! ```
//!
//! on `(0, 1)` with zero-flux walls, instrumented with the classical Lyapunov
//! functional `L`, the second-order functional `𝓕` and the a-priori
//! inequalities that together bound `u` uniformly in time for the critical
//! law `a(u) = 1/(1 + u)`.

pub mod error;
pub mod functionals;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod report;
pub mod spatial;
pub mod sweep;
pub mod timestep;
pub mod verify;

pub use error::{Error, Result};
pub use model::{check_assumptions, AdvectionScheme, Law, Nonlinearity, Profile, Scenario, StepperKind, Variant};
pub use functionals::FunctionalSample;
pub use report::{PropertySummary, Verdict};
pub use spatial::{Grid, State};
pub use sweep::{run_sweep, PhaseRow, SweepConfig, SweepReport};
pub use timestep::{run, run_with, RunOptions, RunReport, StepControl, TerminationStatus};
