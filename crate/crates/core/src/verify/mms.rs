//! Manufactured solutions and convergence orders.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Law, Nonlinearity, Scenario, Variant};
use crate::spatial::{Grid, State};
use crate::timestep::{run_with, Forcing, RunOptions, TerminationStatus};

/// `u* = A + B e^{-t} cos πx`, `v* = C + D e^{-t} cos πx`.
///
/// Both satisfy the zero-flux conditions at `x ∈ {0, 1}` for every `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ManufacturedCase {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ManufacturedCase {
    /// Decaying case used by the convergence suites.
    pub fn smooth() -> Self {
        Self { a: 2.0, b: 0.5, c: 1.0, d: 0.5 }
    }

    /// The exact steady pair `(m, m)`.
    pub fn steady(m: f64) -> Self {
        Self { a: m, b: 0.0, c: m, d: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a - self.b.abs() > 0.0) {
            return Err(Error::Config(format!(
                "manufactured u* must stay positive: A = {}, B = {}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn u(&self, t: f64, x: f64) -> f64 {
        self.a + self.b * (-t).exp() * (PI * x).cos()
    }

    pub fn v(&self, t: f64, x: f64) -> f64 {
        self.c + self.d * (-t).exp() * (PI * x).cos()
    }

    pub fn state(&self, grid: &Grid, t: f64) -> State {
        let u = grid.centers().iter().map(|&x| self.u(t, x)).collect();
        let v = grid.centers().iter().map(|&x| self.v(t, x)).collect();
        State::new(t, u, v)
    }
}

/// `(S_u, S_v)` at `(t, x)`: the residual of the exact pair in both
/// equations, moved to the source side.
pub fn mms_sources(case: &ManufacturedCase, nl: &Nonlinearity, t: f64, x: f64) -> (f64, f64) {
    let e = (-t).exp();
    let (cos, sin) = ((PI * x).cos(), (PI * x).sin());
    let u = case.u(t, x);
    let v = case.v(t, x);
    let u_t = -case.b * e * cos;
    let u_x = -PI * case.b * e * sin;
    let u_xx = -PI * PI * case.b * e * cos;
    let v_t = -case.d * e * cos;
    let v_x = -PI * case.d * e * sin;
    let v_xx = -PI * PI * case.d * e * cos;

    let diffusion = match nl.law() {
        Law::Tabulated { .. } => {
            let h = 1e-4;
            let lam = |y: f64| nl.lambda(case.u(t, y));
            (lam(x + h) - 2.0 * lam(x) + lam(x - h)) / (h * h)
        }
        _ => nl.a_prime(u) * u_x * u_x + nl.a(u) * u_xx,
    };
    let s_u = u_t - (diffusion - u_x * v_x - u * v_xx);
    let s_v = v_t - v_xx + v - u;
    (s_u, s_v)
}

/// Point sources on the cell centers.
pub struct ManufacturedForcing<'a> {
    pub case: ManufacturedCase,
    pub nl: &'a Nonlinearity,
    pub variant: Variant,
}

impl Forcing for ManufacturedForcing<'_> {
    fn rates(&self, grid: &Grid, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut su = Vec::with_capacity(grid.cells());
        let mut sv = Vec::with_capacity(grid.cells());
        for &x in grid.centers() {
            let (a, b) = mms_sources(&self.case, self.nl, t, x);
            su.push(a);
            // the elliptic equation has no ∂t v: its source is -(v_xx - v + u)
            sv.push(match self.variant {
                Variant::ParabolicParabolic => b,
                Variant::ParabolicElliptic => b - self.case_v_t(t, x),
            });
        }
        (su, sv)
    }
}

impl ManufacturedForcing<'_> {
    fn case_v_t(&self, t: f64, x: f64) -> f64 {
        -self.case.d * (-t).exp() * (PI * x).cos()
    }
}

/// Least-squares slope of `ln err` against `ln h`.
pub fn observed_order(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|x| x.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Errors below this are treated as exact.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "order", rename_all = "snake_case")]
pub enum OrderEstimate {
    /// Every error is at roundoff level.
    Exact,
    Observed(f64),
    /// Errors did not decrease monotonically; the fitted slope is kept.
    Inconclusive(f64),
}

impl OrderEstimate {
    pub fn from_errors(h: &[f64], err: &[f64]) -> Self {
        if err.iter().all(|&e| e <= EXACT_TOL) {
            return OrderEstimate::Exact;
        }
        let order = observed_order(h, err);
        if err.windows(2).all(|p| p[1] < p[0]) {
            OrderEstimate::Observed(order)
        } else {
            OrderEstimate::Inconclusive(order)
        }
    }

    /// True when the estimate is exact or an observed order `>= min`.
    pub fn at_least(&self, min: f64) -> bool {
        match *self {
            OrderEstimate::Exact => true,
            OrderEstimate::Observed(p) => p >= min,
            OrderEstimate::Inconclusive(_) => false,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            OrderEstimate::Exact => f64::INFINITY,
            OrderEstimate::Observed(p) | OrderEstimate::Inconclusive(p) => p,
        }
    }
}

impl std::fmt::Display for OrderEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderEstimate::Exact => write!(f, "exact"),
            OrderEstimate::Observed(p) => write!(f, "{p:.3}"),
            OrderEstimate::Inconclusive(p) => write!(f, "inconclusive ({p:.3})"),
        }
    }
}

/// Which discretization parameter is refined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Study {
    /// Cells from `resolutions`, `dt = dt_coeff·dx²`, errors against the exact
    /// solution.
    Spatial { resolutions: Vec<usize>, dt_coeff: f64 },
    /// Fixed cells, steps from `dts`, errors against a run at `reference_dt`.
    Temporal { cells: usize, dts: Vec<f64>, reference_dt: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderRow {
    pub cells: usize,
    pub dt: f64,
    pub error_u: f64,
    pub error_v: f64,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderReport {
    pub rows: Vec<OrderRow>,
    pub order_u: OrderEstimate,
    pub order_v: OrderEstimate,
}

impl OrderReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("N,dt,error_u,error_v\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e},{:e},{:e}", r.cells, r.dt, r.error_u, r.error_v);
        }
        out
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>6} {:>12} {:>14} {:>14}  status", "N", "dt", "error_u", "error_v");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>6} {:>12.4e} {:>14.6e} {:>14.6e}  {}",
                r.cells, r.dt, r.error_u, r.error_v, r.status
            );
        }
        let _ = writeln!(out, "observed order: u {}, v {}", self.order_u, self.order_v);
        out
    }
}

/// L² distance of two cell vectors with weight `dx`.
pub fn l2_distance(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.integrate(&a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect::<Vec<_>>()).sqrt()
}

/// Runs the sourced system from the exact initial data to `template.t_end`
/// with a fixed step.
pub fn mms_run(case: &ManufacturedCase, template: &Scenario, cells: usize, dt: f64) -> Result<(State, TerminationStatus)> {
    let mut s = template.clone();
    s.cells = cells;
    s.dt_initial = dt;
    s.dt_max = dt;
    s.dt_min = dt * 1e-6;
    s.t0_monitor = 0.5 * s.t_end;
    s.output_interval = Some(s.t_end);
    let grid = Grid::new(cells)?;
    let initial = case.state(&grid, 0.0);
    let forcing = ManufacturedForcing {
        case: *case,
        nl: &s.nonlinearity,
        variant: s.variant,
    };
    let report = run_with(
        &s,
        &RunOptions {
            forcing: Some(&forcing),
            initial: Some(&initial),
            ..Default::default()
        },
    )?;
    Ok((report.final_state, report.status))
}

pub fn mms_convergence(case: &ManufacturedCase, template: &Scenario, study: &Study) -> Result<OrderReport> {
    case.validate()?;
    let jobs: Vec<(usize, f64)> = match study {
        Study::Spatial { resolutions, dt_coeff } => {
            if resolutions.len() < 3 || resolutions.windows(2).any(|p| p[1] != 2 * p[0]) {
                return Err(Error::Config("a spatial study needs at least three doubling resolutions".into()));
            }
            resolutions
                .iter()
                .map(|&n| (n, dt_coeff / (n * n) as f64))
                .collect()
        }
        Study::Temporal { cells, dts, .. } => {
            if dts.len() < 3 {
                return Err(Error::Config("a temporal study needs at least three steps".into()));
            }
            dts.iter().map(|&dt| (*cells, dt)).collect()
        }
    };
    let reference = match study {
        Study::Temporal { cells, reference_dt, .. } => Some(mms_run(case, template, *cells, *reference_dt)?.0),
        Study::Spatial { .. } => None,
    };

    let runs: Vec<Result<(State, TerminationStatus)>> =
        jobs.par_iter().map(|&(n, dt)| mms_run(case, template, n, dt)).collect();
    let mut rows = Vec::with_capacity(jobs.len());
    for (&(n, dt), outcome) in jobs.iter().zip(runs) {
        let (state, status) = outcome?;
        let grid = Grid::new(n)?;
        let exact = match &reference {
            Some(r) => r.clone(),
            None => case.state(&grid, template.t_end),
        };
        rows.push(OrderRow {
            cells: n,
            dt,
            error_u: l2_distance(&grid, &state.u, &exact.u),
            error_v: l2_distance(&grid, &state.v, &exact.v),
            status: status.label().to_string(),
        });
    }
    let h: Vec<f64> = match study {
        Study::Spatial { .. } => rows.iter().map(|r| 1.0 / r.cells as f64).collect(),
        Study::Temporal { .. } => rows.iter().map(|r| r.dt).collect(),
    };
    let eu: Vec<f64> = rows.iter().map(|r| r.error_u).collect();
    let ev: Vec<f64> = rows.iter().map(|r| r.error_v).collect();
    Ok(OrderReport {
        order_u: OrderEstimate::from_errors(&h, &eu),
        order_v: OrderEstimate::from_errors(&h, &ev),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AdvectionScheme, StepperKind};

    #[test]
    fn sources_vanish_on_steady_pairs() {
        for nl in [Nonlinearity::critical(), Nonlinearity::power(2.0), Nonlinearity::constant(1.0)] {
            let case = ManufacturedCase::steady(3.0);
            for k in 0..=10 {
                let (su, sv) = mms_sources(&case, &nl, 0.3, k as f64 / 10.0);
                assert_eq!((su, sv), (0.0, 0.0));
            }
        }
    }

    // Hand differentiation with a ≡ 1, u* = 2 + e^{-t}cos πx,
    // v* = 2 + e^{-t}cos πx/(1+π²):
    //   S_u = -E c + π²E c + π²E²/(1+π²) s² - (2 + E c)·π²E c/(1+π²)
    //   S_v = -E c/(1+π²) + π²E c/(1+π²) + E c/(1+π²) - E c
    // with E = e^{-t}, c = cos πx, s = sin πx.
    #[test]
    fn constant_diffusion_sources_match_hand_derivation() {
        let k = 1.0 / (1.0 + PI * PI);
        let case = ManufacturedCase { a: 2.0, b: 1.0, c: 2.0, d: k };
        let nl = Nonlinearity::constant(1.0);
        for &(t, x) in &[(0.0, 0.1), (0.7, 0.45), (2.0, 0.9)] {
            let e = f64::exp(-t);
            let (c, s) = ((PI * x).cos(), (PI * x).sin());
            let su = -e * c + PI * PI * e * c + PI * PI * e * e * k * s * s - (2.0 + e * c) * PI * PI * e * c * k;
            let sv = -e * c * k + PI * PI * e * c * k + e * c * k - e * c;
            let (a, b) = mms_sources(&case, &nl, t, x);
            assert!((a - su).abs() < 1e-12, "{a} vs {su}");
            assert!((b - sv).abs() < 1e-12, "{b} vs {sv}");
        }
    }

    #[test]
    fn sources_are_finite_at_the_walls() {
        let case = ManufacturedCase::smooth();
        let nl = Nonlinearity::critical();
        for x in [0.0, 1.0] {
            let (su, sv) = mms_sources(&case, &nl, 0.2, x);
            assert!(su.is_finite() && sv.is_finite());
            // sin πx = 0: both fluxes a(u)u_x and u v_x vanish
            assert!((PI * x).sin().abs() < 1e-15);
        }
    }

    // The numerically differentiated table source agrees with the analytic
    // one for the law it samples.
    #[test]
    fn tabulated_sources_follow_the_analytic_law() {
        let s: Vec<f64> = std::iter::once(0.0).chain((0..60).map(|k| 10f64.powf(-2.0 + 0.1 * k as f64))).collect();
        let a = s.iter().map(|s| 1.0 / (1.0 + s)).collect();
        let table = Nonlinearity::tabulated(s, a).unwrap();
        let crit = Nonlinearity::critical();
        let case = ManufacturedCase::smooth();
        for k in 1..10 {
            let x = k as f64 / 10.0;
            let (a, _) = mms_sources(&case, &table, 0.1, x);
            let (b, _) = mms_sources(&case, &crit, 0.1, x);
            assert!((a - b).abs() < 1e-3 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn order_estimator_on_exact_ratios() {
        let h = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let err = [1.0, 0.25, 0.0625, 0.015625];
        let p = observed_order(&h, &err);
        assert!((p - 2.0).abs() < 0.01);
        assert_eq!(OrderEstimate::from_errors(&h, &err), OrderEstimate::Observed(p));
        assert!(matches!(
            OrderEstimate::from_errors(&h, &[1.0, 0.5, 0.7, 0.1]),
            OrderEstimate::Inconclusive(_)
        ));
        assert_eq!(OrderEstimate::from_errors(&h, &[0.0, 1e-15, 0.0, 0.0]), OrderEstimate::Exact);
    }

    #[test]
    fn steady_manufactured_case_is_exact() {
        let mut template = Scenario::steady(2.0, 16, 0.05);
        template.stepper = StepperKind::ExplicitRk;
        let study = Study::Spatial {
            resolutions: vec![8, 16, 32],
            dt_coeff: 0.2,
        };
        let r = mms_convergence(&ManufacturedCase::steady(2.0), &template, &study).unwrap();
        assert_eq!(r.order_u, OrderEstimate::Exact);
        assert_eq!(r.order_v, OrderEstimate::Exact);
        assert!(r.csv().starts_with("N,dt,error_u,error_v\n"));
    }

    #[test]
    fn bad_studies_are_rejected() {
        let template = Scenario::steady(2.0, 16, 0.05);
        let case = ManufacturedCase::smooth();
        let two = Study::Spatial {
            resolutions: vec![8, 16],
            dt_coeff: 0.2,
        };
        assert!(mms_convergence(&case, &template, &two).is_err());
        let gap = Study::Spatial {
            resolutions: vec![8, 16, 64],
            dt_coeff: 0.2,
        };
        assert!(mms_convergence(&case, &template, &gap).is_err());
        let negative = ManufacturedCase { a: 1.0, b: 2.0, c: 1.0, d: 0.0 };
        assert!(negative.validate().is_err());
    }

    #[test]
    fn central_spatial_order_on_a_small_study() {
        let mut template = Scenario::steady(2.0, 16, 0.05);
        template.stepper = StepperKind::ExplicitRk;
        template.advection_scheme = AdvectionScheme::Central;
        let study = Study::Spatial {
            resolutions: vec![8, 16, 32],
            dt_coeff: 0.2,
        };
        let r = mms_convergence(&ManufacturedCase::smooth(), &template, &study).unwrap();
        assert!(r.order_u.at_least(1.8), "{}", r.text());
        assert!(r.order_v.at_least(1.8), "{}", r.text());
    }
}
