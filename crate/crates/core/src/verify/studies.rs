//! Refinement studies on unforced runs.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::mms::OrderEstimate;
use crate::error::Result;
use crate::functionals::ResidualStencil;
use crate::model::{AdvectionScheme, Profile, Scenario, StepperKind, Variant};
use crate::timestep::{run_with, MonitorLevel, RunOptions, RunReport};

/// Smooth, slowly evolving data for the identity studies: critical law,
/// `u0 = v0 = 2(1 + cos 2πx / 2)`, explicit steps.
pub fn smooth_bump(variant: Variant, scheme: AdvectionScheme) -> Scenario {
    let mut s = Scenario::critical_bump(2.0, 64, 0.05);
    s.initial_u = Profile::Cosine { mass: 2.0, amplitude: 0.5 };
    s.variant = variant;
    s.advection_scheme = scheme;
    s.stepper = StepperKind::ExplicitRk;
    s.output_interval = Some(0.005);
    s.t0_monitor = 0.025;
    s
}

/// `template` at `cells` with the step pinned to `dt`.
pub fn pinned(template: &Scenario, cells: usize, dt: f64) -> Scenario {
    let mut s = template.clone();
    s.cells = cells;
    s.dt_initial = dt;
    s.dt_max = dt;
    s.dt_min = (dt * 1e-6).min(s.dt_min);
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementRow {
    pub cells: usize,
    pub dt: f64,
    pub value: f64,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementReport {
    pub quantity: &'static str,
    pub rows: Vec<RefinementRow>,
    pub order: OrderEstimate,
}

impl RefinementReport {
    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}:", self.quantity);
        for r in &self.rows {
            let _ = writeln!(out, "  N = {:>5}  dt = {:<11.4e} value = {:<14.6e} {}", r.cells, r.dt, r.value, r.status);
        }
        let _ = writeln!(out, "  observed order: {}", self.order);
        out
    }

    fn from_rows(quantity: &'static str, rows: Vec<RefinementRow>) -> Self {
        let h: Vec<f64> = rows.iter().map(|r| 1.0 / r.cells as f64).collect();
        let v: Vec<f64> = rows.iter().map(|r| r.value).collect();
        Self {
            quantity,
            order: OrderEstimate::from_errors(&h, &v),
            rows,
        }
    }
}

fn run_all(scenarios: &[Scenario], options: &RunOptions<'_>) -> Result<Vec<RunReport>> {
    scenarios.par_iter().map(|s| run_with(s, options)).collect()
}

/// Largest `|identity_residual|` over the samples of each run, with
/// `dt = dt_coeff·dx²`.
pub fn identity_refinement(
    template: &Scenario,
    resolutions: &[usize],
    dt_coeff: f64,
    stencil: ResidualStencil,
) -> Result<RefinementReport> {
    let scenarios: Vec<Scenario> = resolutions
        .iter()
        .map(|&n| pinned(template, n, dt_coeff / (n * n) as f64))
        .collect();
    let reports = run_all(
        &scenarios,
        &RunOptions {
            stencil,
            ..Default::default()
        },
    )?;
    let rows = scenarios
        .iter()
        .zip(&reports)
        .map(|(s, r)| RefinementRow {
            cells: s.cells,
            dt: s.dt_max,
            value: r.samples.iter().map(|x| x.identity_residual.abs()).fold(0.0, f64::max),
            status: r.status.label().into(),
        })
        .collect();
    Ok(RefinementReport::from_rows("max |identity residual|", rows))
}

/// Per-step behaviour of `L` on one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovRow {
    pub cells: usize,
    pub dt_max: f64,
    pub steps: usize,
    /// Largest `L(next) - L(prev)`, floored at zero.
    pub max_increase: f64,
    /// Largest `L(next) - L(prev) - 10·dt·(d1 + d2)`.
    pub max_excess: f64,
    pub status: String,
}

/// Dense runs at each `(cells, dt_max)`; the step may still be cut by the
/// stability limit.
pub fn lyapunov_study(template: &Scenario, levels: &[(usize, f64)]) -> Result<Vec<LyapunovRow>> {
    let scenarios: Vec<Scenario> = levels.iter().map(|&(n, dt)| pinned(template, n, dt)).collect();
    let reports = run_all(
        &scenarios,
        &RunOptions {
            monitor: MonitorLevel::Steps,
            ..Default::default()
        },
    )?;
    Ok(scenarios
        .iter()
        .zip(&reports)
        .map(|(s, r)| {
            let mut max_increase = 0.0f64;
            let mut max_excess = f64::NEG_INFINITY;
            for st in &r.steps {
                max_increase = max_increase.max(st.l_increase());
                max_excess = max_excess.max(st.l_increase() - crate::report::LYAPUNOV_ALLOWANCE * st.dt * st.dissipation);
            }
            LyapunovRow {
                cells: s.cells,
                dt_max: s.dt_max,
                steps: r.steps.len(),
                max_increase,
                max_excess,
                status: r.status.label().into(),
            }
        })
        .collect())
}

/// Largest scaled cross-term residual over the samples of a run.
pub fn max_cross_term(report: &RunReport) -> f64 {
    report
        .samples
        .iter()
        .map(|s| s.cross_term_residual / s.cross_term_scale)
        .fold(0.0, f64::max)
}
