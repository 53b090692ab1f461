//! Time integration with adaptive step control.
//!
//! Every stepper is written in conservative flux form, so the dx-weighted
//! mass of `u` is preserved by each accepted step up to roundoff. Positivity
//! is never enforced by clipping: a step that would leave `u` below the
//! scenario's floor is rejected and retried with half the step.

mod explicit;
mod imex;
mod implicit;
mod run;

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::model::{AdvectionScheme, Nonlinearity, Scenario, StepperKind, Variant};
use crate::spatial::{advective_flux, diffusive_flux, discrete_laplacian, divergence, interface_gradient, Grid, State};

pub use run::{run, run_with, MonitorLevel, RunOptions, RunReport, StepRecord};

/// Adaptive step state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepControl {
    /// Step to attempt next, before stability and output clipping.
    pub dt: f64,
    pub rejected_in_a_row: u32,
    pub accepted_in_a_row: u32,
    pub cfl_safety: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

/// Consecutive accepted steps before the step grows.
pub const GROW_AFTER: u32 = 5;
pub const GROW_FACTOR: f64 = 1.2;

impl StepControl {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            rejected_in_a_row: 0,
            accepted_in_a_row: 0,
            cfl_safety: 0.5,
            newton_tol: 1e-10,
            newton_max_iter: 30,
        }
    }

    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self::new(scenario.dt_initial)
    }

    pub fn on_accept(&mut self, dt_max: f64) {
        self.rejected_in_a_row = 0;
        self.accepted_in_a_row += 1;
        if self.accepted_in_a_row >= GROW_AFTER {
            self.dt = (self.dt * GROW_FACTOR).min(dt_max);
            self.accepted_in_a_row = 0;
        }
    }

    /// Halves the attempted step.
    pub fn on_reject(&mut self, attempted: f64) {
        self.dt = 0.5 * attempted;
        self.rejected_in_a_row += 1;
        self.accepted_in_a_row = 0;
    }
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum TerminationStatus {
    Completed,
    BlowupSuspected { t_stop: f64, sup_u: f64 },
    StepFailure { t_stop: f64, reason: String },
}

impl TerminationStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TerminationStatus::Completed => "Completed",
            TerminationStatus::BlowupSuspected { .. } => "BlowupSuspected",
            TerminationStatus::StepFailure { .. } => "StepFailure",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, TerminationStatus::Completed)
    }
}

impl fmt::Display for TerminationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminationStatus::Completed => write!(f, "Completed"),
            TerminationStatus::BlowupSuspected { t_stop, sup_u } => {
                write!(f, "BlowupSuspected(t_stop = {t_stop}, sup_u = {sup_u:e})")
            }
            TerminationStatus::StepFailure { t_stop, reason } => write!(f, "StepFailure(t_stop = {t_stop}: {reason})"),
        }
    }
}

/// Why a single step attempt was refused.
#[derive(Clone, Debug, PartialEq)]
pub enum Rejection {
    Positivity { cell: usize, value: f64 },
    Newton { iterations: usize, update: f64 },
    Singular { column: usize },
    NonFinite(String),
}

impl Rejection {
    /// Failures that signal a collapsing solution rather than a solver defect.
    pub fn suggests_blowup(&self) -> bool {
        matches!(self, Rejection::Positivity { .. } | Rejection::Newton { .. })
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Positivity { cell, value } => write!(f, "u[{cell}] = {value:e} below the positivity floor"),
            Rejection::Newton { iterations, update } => {
                write!(f, "Newton did not converge in {iterations} iterations (last update {update:e})")
            }
            Rejection::Singular { column } => write!(f, "singular Newton matrix at column {column}"),
            Rejection::NonFinite(what) => write!(f, "non-finite value: {what}"),
        }
    }
}

impl From<crate::Error> for Rejection {
    fn from(e: crate::Error) -> Self {
        Rejection::NonFinite(e.to_string())
    }
}

/// Extra cell rates added to both equations, used by manufactured-solution
/// runs.
pub trait Forcing: Send + Sync {
    /// `(S_u, S_v)` at time `t` on the cell centers.
    fn rates(&self, grid: &Grid, t: f64) -> (Vec<f64>, Vec<f64>);
}

/// `div( a(u) ∂x u - u ∂x v )` per cell.
pub fn rhs_u(grid: &Grid, state: &State, nl: &Nonlinearity, scheme: AdvectionScheme) -> Result<Vec<f64>> {
    let diff = diffusive_flux(grid, &state.u, nl)?;
    let adv = advective_flux(grid, &state.u, &state.v, scheme);
    let net: Vec<f64> = diff.iter().zip(&adv).map(|(d, a)| d - a).collect();
    Ok(divergence(grid, &net))
}

/// `Lap_h v - v + u` per cell.
pub fn rhs_v(grid: &Grid, state: &State) -> Vec<f64> {
    let lap = discrete_laplacian(grid, &state.v);
    (0..state.u.len()).map(|i| lap[i] - state.v[i] + state.u[i]).collect()
}

/// Largest step the chosen stepper may take from `state`.
pub fn stable_dt(grid: &Grid, state: &State, scenario: &Scenario, control: &StepControl) -> f64 {
    let dx = grid.dx();
    let drift = interface_gradient(grid, &state.v).iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let advective = if drift > 0.0 { dx / drift } else { f64::INFINITY };
    let limit = match scenario.stepper {
        StepperKind::ExplicitRk => {
            let a_max = state.u.iter().map(|&u| scenario.nonlinearity.a(u)).fold(0.0, f64::max);
            let diffusive = dx * dx / (2.0 * a_max);
            diffusive.min(advective).min(0.5 * dx * dx)
        }
        StepperKind::Imex1 => advective,
        StepperKind::FullyImplicit => f64::INFINITY,
    };
    control.cfl_safety * limit
}

/// One attempt to advance `state` by `control.dt`.
pub fn step(grid: &Grid, state: &State, scenario: &Scenario, control: &StepControl) -> Result<State, Rejection> {
    step_forced(grid, state, scenario, control, None)
}

pub fn step_forced(
    grid: &Grid,
    state: &State,
    scenario: &Scenario,
    control: &StepControl,
    forcing: Option<&dyn Forcing>,
) -> Result<State, Rejection> {
    let h = control.dt;
    let next = match scenario.stepper {
        StepperKind::ExplicitRk => explicit::heun(grid, state, scenario, h, forcing)?,
        StepperKind::Imex1 => imex::imex1(grid, state, scenario, control, h, forcing)?,
        StepperKind::FullyImplicit => implicit::backward_euler(grid, state, scenario, control, h, forcing)?,
    };
    check_state(&next, scenario.positivity_floor)?;
    Ok(next)
}

pub(crate) fn check_state(state: &State, floor: f64) -> Result<(), Rejection> {
    if let Some(i) = state.v.iter().position(|x| !x.is_finite()) {
        return Err(Rejection::NonFinite(format!("v[{i}]")));
    }
    check_positive(&state.u, floor)
}

pub(crate) fn check_positive(u: &[f64], floor: f64) -> Result<(), Rejection> {
    for (i, &x) in u.iter().enumerate() {
        if x.is_nan() {
            return Err(Rejection::NonFinite(format!("u[{i}]")));
        }
        if !(x >= floor) || x.is_infinite() {
            return Err(Rejection::Positivity { cell: i, value: x });
        }
    }
    Ok(())
}

/// `v` after a `u` update in the parabolic-elliptic variant.
pub(crate) fn elliptic_v(grid: &Grid, u: &[f64], source: Option<&[f64]>) -> Vec<f64> {
    match source {
        Some(s) => {
            let rhs: Vec<f64> = u.iter().zip(s).map(|(u, s)| u + s).collect();
            crate::spatial::helmholtz_solve(grid, &rhs)
        }
        None => crate::spatial::helmholtz_solve(grid, u),
    }
}

pub(crate) fn sources(forcing: Option<&dyn Forcing>, grid: &Grid, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    forcing.map(|f| f.rates(grid, t))
}

/// Initial state of a scenario; `v` solves the elliptic equation in the
/// parabolic-elliptic variant.
pub fn initial_state(grid: &Grid, scenario: &Scenario) -> State {
    let u = scenario.initial_u.sample(grid.centers());
    let v = match scenario.variant {
        Variant::ParabolicParabolic => scenario.initial_v.as_ref().unwrap_or(&scenario.initial_u).sample(grid.centers()),
        Variant::ParabolicElliptic => crate::spatial::helmholtz_solve(grid, &u),
    };
    State::new(0.0, u, v)
}

#[cfg(test)]
mod tests;
