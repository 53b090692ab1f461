//! Diffusion laws, assumption checks and the scenario data model.

pub mod assumptions;
pub mod nonlinearity;
pub mod scenario;

pub use assumptions::{check_assumptions, AssumptionReport};
pub use nonlinearity::{Law, Nonlinearity};
pub use scenario::{AdvectionScheme, Profile, Scenario, StepperKind, Variant};
