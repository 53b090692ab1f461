//! The time loop: step control, output cadence, termination and
//! monitoring.

use std::time::Instant;

use serde::Serialize;

use super::{initial_state, stable_dt, step_forced, Forcing, Rejection, StepControl, TerminationStatus};
use crate::error::{Error, Result};
use crate::functionals::{self, FunctionalSample, IdentityPieces, ResidualStencil};
use crate::model::Scenario;
use crate::report::{summarize, PropertySummary};
use crate::spatial::{Grid, State};

/// A sudden-collapse cascade counts as suspected blow-up once `sup u` has
/// grown by this factor over its initial value.
pub const CASCADE_GROWTH: f64 = 10.0;

/// How much is recorded besides the samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MonitorLevel {
    /// Functionals at output times only.
    #[default]
    Samples,
    /// Additionally a [`StepRecord`] for every accepted step.
    Steps,
}

/// Optional run settings beyond the scenario.
#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub monitor: MonitorLevel,
    pub forcing: Option<&'a dyn Forcing>,
    pub stencil: ResidualStencil,
    /// Replaces the scenario's initial profiles.
    pub initial: Option<&'a State>,
    /// Keep the full state at every sample in [`RunReport::sample_states`].
    pub keep_states: bool,
}

/// Monitors evaluated across one accepted step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub l_prev: f64,
    pub l_next: f64,
    /// `d1 + d2` at the start of the step.
    pub dissipation: f64,
    pub f_value: f64,
    pub identity_residual: f64,
    pub cross_term_residual: f64,
    pub cross_term_scale: f64,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str =
        "t,dt,mass,L,L_increase,lyapunov_dissipation,F,identity_residual,cross_term_residual,cross_term_scale";

    /// `L(next) - L(prev)`.
    pub fn l_increase(&self) -> f64 {
        self.l_next - self.l_prev
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.dt,
            self.mass,
            self.l_next,
            self.l_increase(),
            self.dissipation,
            self.f_value,
            self.identity_residual,
            self.cross_term_residual,
            self.cross_term_scale
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub samples: Vec<FunctionalSample>,
    pub status: TerminationStatus,
    pub property_summary: PropertySummary,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Largest `|mass - M₀|/M₀` after any accepted step.
    pub max_mass_drift: f64,
    /// Smallest `u` in any accepted state.
    pub min_u_seen: f64,
    pub steps: Vec<StepRecord>,
    #[serde(skip)]
    pub sample_states: Vec<State>,
    #[serde(skip)]
    pub final_state: State,
    pub wall_time: f64,
}

impl RunReport {
    pub fn samples_csv(&self) -> String {
        let mut out = functionals::csv_header();
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn steps_csv(&self) -> String {
        let mut out = String::from(StepRecord::CSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            out.push_str(&s.csv_row());
            out.push('\n');
        }
        out
    }
}

pub fn run(scenario: &Scenario) -> Result<RunReport> {
    run_with(scenario, &RunOptions::default())
}

struct DenseEnds {
    t: f64,
    l: f64,
    dissipation: f64,
    pieces: IdentityPieces,
}

fn dense_ends(grid: &Grid, state: &State, scenario: &Scenario) -> Result<DenseEnds> {
    let nl = &scenario.nonlinearity;
    let (d1, d2) = functionals::lyapunov_dissipation(grid, state, nl, scenario.variant)?;
    Ok(DenseEnds {
        t: state.t,
        l: functionals::lyapunov_l(grid, state, nl)?,
        dissipation: d1 + d2,
        pieces: IdentityPieces::at(grid, state, nl, scenario.variant)?,
    })
}

/// Integrates a scenario to `t_end` or termination.
///
/// Fails only on an invalid scenario; numerical trouble ends up in the
/// returned status.
pub fn run_with(scenario: &Scenario, options: &RunOptions<'_>) -> Result<RunReport> {
    scenario.validate()?;
    let started = Instant::now();
    let grid = Grid::new(scenario.cells)?;
    let nl = &scenario.nonlinearity;
    let variant = scenario.variant;
    let mut state = match options.initial {
        Some(s) => {
            grid.check_len("initial u", &s.u)?;
            grid.check_len("initial v", &s.v)?;
            let mut s = s.clone();
            s.t = 0.0;
            s
        }
        None => initial_state(&grid, scenario),
    };
    if let Some(i) = state.u.iter().position(|&u| !(u >= scenario.positivity_floor)) {
        return Err(Error::Config(format!(
            "initial u[{i}] = {:e} is below the positivity floor",
            state.u[i]
        )));
    }
    let mass0 = grid.integrate(&state.u);
    let sup0 = state.max_u();
    let interval = scenario.output_interval();

    let mut control = StepControl::for_scenario(scenario);
    let mut samples = vec![functionals::sample(&grid, &state, nl, variant, mass0, 0.0)?];
    let mut sample_states = Vec::new();
    if options.keep_states {
        sample_states.push(state.clone());
    }
    let mut first_residual_pending = true;
    let mut steps = Vec::new();
    let mut dense_prev = None;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut max_drift = 0.0f64;
    let mut min_u_seen = state.min_u();
    let mut next_output = 1usize;
    let mut status = TerminationStatus::Completed;

    let fail = |state: &State, reason: String| TerminationStatus::StepFailure { t_stop: state.t, reason };

    while state.t < scenario.t_end {
        let target = (next_output as f64 * interval).min(scenario.t_end);
        let remaining = target - state.t;
        let limit = control.dt.min(stable_dt(&grid, &state, scenario, &control));
        if limit < scenario.dt_min {
            status = if state.max_u() >= CASCADE_GROWTH * sup0 {
                TerminationStatus::BlowupSuspected { t_stop: state.t, sup_u: state.max_u() }
            } else {
                fail(&state, format!("stability limit {limit:e} below dt_min"))
            };
            break;
        }
        let (h, lands) = if remaining <= limit {
            (remaining, true)
        } else if remaining < 2.0 * limit {
            (0.5 * remaining, false)
        } else {
            (limit, false)
        };
        let mut attempt = control.clone();
        attempt.dt = h;
        let mut next = match step_forced(&grid, &state, scenario, &attempt, options.forcing) {
            Ok(next) => next,
            Err(rejection) => {
                rejected += 1;
                control.on_reject(h);
                if control.dt < scenario.dt_min {
                    status = cascade_status(&state, &rejection, sup0);
                    break;
                }
                continue;
            }
        };
        if lands {
            next.t = target;
        }
        accepted += 1;
        control.on_accept(scenario.dt_max);

        let mass = grid.integrate(&next.u);
        max_drift = max_drift.max((mass - mass0).abs() / mass0.abs().max(f64::MIN_POSITIVE));
        min_u_seen = min_u_seen.min(next.min_u());
        let blowup = next.max_u() >= scenario.blowup_threshold;
        let record_sample = lands || blowup;

        if options.monitor == MonitorLevel::Steps {
            let prev_ends = match dense_prev.take() {
                Some(p) => p,
                None => dense_ends(&grid, &state, scenario)?,
            };
            let next_ends = match dense_ends(&grid, &next, scenario) {
                Ok(e) => e,
                Err(e) => {
                    status = fail(&next, format!("monitor evaluation failed: {e}"));
                    break;
                }
            };
            let cross = functionals::cross_term_residual(&grid, &next, nl, variant)?;
            steps.push(StepRecord {
                t: next.t,
                dt: next.t - prev_ends.t,
                mass,
                l_prev: prev_ends.l,
                l_next: next_ends.l,
                dissipation: prev_ends.dissipation,
                f_value: next_ends.pieces.f,
                identity_residual: prev_ends.pieces.residual(&next_ends.pieces, options.stencil)?,
                cross_term_residual: cross.residual,
                cross_term_scale: cross.scale,
            });
            dense_prev = Some(next_ends);
        }

        if record_sample || first_residual_pending {
            let residual = match step_residual(&grid, &state, &next, scenario, options.stencil) {
                Ok(r) => r,
                Err(e) => {
                    status = fail(&next, format!("monitor evaluation failed: {e}"));
                    break;
                }
            };
            if first_residual_pending {
                samples[0].identity_residual = residual;
                first_residual_pending = false;
            }
            if record_sample {
                let mut s = match functionals::sample(&grid, &next, nl, variant, mass0, next.t - state.t) {
                    Ok(s) => s,
                    Err(e) => {
                        status = fail(&next, format!("monitor evaluation failed: {e}"));
                        break;
                    }
                };
                s.identity_residual = residual;
                samples.push(s);
                if options.keep_states {
                    sample_states.push(next.clone());
                }
                if lands {
                    next_output += 1;
                }
            }
        }
        state = next;
        if blowup {
            status = TerminationStatus::BlowupSuspected { t_stop: state.t, sup_u: state.max_u() };
            break;
        }
    }

    let property_summary = summarize(scenario, &samples, &steps, &status, max_drift, min_u_seen);
    Ok(RunReport {
        scenario: scenario.clone(),
        samples,
        status,
        property_summary,
        steps_accepted: accepted,
        steps_rejected: rejected,
        max_mass_drift: max_drift,
        min_u_seen,
        steps,
        sample_states,
        final_state: state,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

fn step_residual(grid: &Grid, prev: &State, next: &State, scenario: &Scenario, stencil: ResidualStencil) -> Result<f64> {
    let nl = &scenario.nonlinearity;
    let a = IdentityPieces::at(grid, prev, nl, scenario.variant)?;
    let b = IdentityPieces::at(grid, next, nl, scenario.variant)?;
    a.residual(&b, stencil)
}

fn cascade_status(state: &State, rejection: &Rejection, sup0: f64) -> TerminationStatus {
    if rejection.suggests_blowup() && state.max_u() >= CASCADE_GROWTH * sup0 {
        TerminationStatus::BlowupSuspected { t_stop: state.t, sup_u: state.max_u() }
    } else {
        TerminationStatus::StepFailure {
            t_stop: state.t,
            reason: format!("step fell below dt_min: {rejection}"),
        }
    }
}
