//! Built-in suites behind the `verify` command.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::compare::reference_compare;
use super::mms::{mms_convergence, ManufacturedCase, OrderEstimate, OrderReport, Study};
use super::studies::{identity_refinement, max_cross_term, smooth_bump};
use crate::error::{Error, Result};
use crate::functionals::{dissipation_d, ResidualStencil};
use crate::model::{AdvectionScheme, Scenario, StepperKind, Variant};
use crate::spatial::Grid;
use crate::timestep::run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Mms,
    Identities,
    Steady,
    Compare,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mms" => Ok(Suite::Mms),
            "identities" => Ok(Suite::Identities),
            "steady" => Ok(Suite::Steady),
            "compare" => Ok(Suite::Compare),
            other => Err(Error::Config(format!(
                "unknown suite `{other}` (expected mms, identities, steady or compare)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub metric: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            bound: Bound::AtMost,
            threshold,
            passed: value <= threshold,
        }
    }

    pub fn at_least(metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            bound: Bound::AtLeast,
            threshold,
            passed: value >= threshold,
        }
    }

    /// An order requirement; inconclusive estimates fail.
    pub fn order(metric: impl Into<String>, estimate: OrderEstimate, min: f64) -> Self {
        Self {
            passed: estimate.at_least(min),
            ..Self::at_least(metric, estimate.value(), min)
        }
    }

    pub fn line(&self) -> String {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        format!(
            "{} {}: {:.6e} (required {op} {:e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.metric,
            self.value,
            self.threshold
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub details: String,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn text(&self) -> String {
        let mut out = self.details.clone();
        for c in &self.checks {
            let _ = writeln!(out, "{}", c.line());
        }
        out
    }
}

pub fn run_suite(suite: Suite) -> Result<SuiteOutcome> {
    let mut details = String::new();
    let checks = match suite {
        Suite::Steady => steady(&mut details)?,
        Suite::Identities => identities(&mut details)?,
        Suite::Mms => mms(&mut details)?,
        Suite::Compare => compare(&mut details)?,
    };
    Ok(SuiteOutcome { suite, checks, details })
}

fn steady(details: &mut String) -> Result<Vec<Check>> {
    let mut drift = 0.0f64;
    let mut d_err = 0.0f64;
    let mut resid = 0.0f64;
    let mut mass = 0.0f64;
    for stepper in [StepperKind::ExplicitRk, StepperKind::Imex1, StepperKind::FullyImplicit] {
        for variant in [Variant::ParabolicParabolic, Variant::ParabolicElliptic] {
            let mut s = Scenario::steady(1.0, 64, 1.0);
            s.stepper = stepper;
            s.variant = variant;
            let r = run(&s)?;
            let grid = Grid::new(64)?;
            let st = &r.final_state;
            drift = drift
                .max(st.u.iter().map(|u| (u - 1.0).abs()).fold(0.0, f64::max))
                .max(st.v.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
            // w = v/2 in both variants
            d_err = d_err.max((dissipation_d(&grid, st, &s.nonlinearity, variant)? - 0.125).abs());
            resid = resid.max(r.samples.iter().map(|x| x.identity_residual.abs()).fold(0.0, f64::max));
            mass = mass.max(r.max_mass_drift);
            let _ = writeln!(details, "{stepper:?}/{variant:?}: {} after {} steps", r.status, r.steps_accepted);
        }
    }
    Ok(vec![
        Check::at_most("steady state drift", drift, 1e-12),
        Check::at_most("|D - 0.125|", d_err, 1e-12),
        Check::at_most("steady identity residual", resid, 1e-12),
        Check::at_most("relative mass drift", mass, 1e-10),
    ])
}

pub const IDENTITY_RESOLUTIONS: [usize; 4] = [64, 128, 256, 512];
pub const IDENTITY_DT_COEFF: f64 = 0.2;

fn identities(details: &mut String) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let bump = Scenario::critical_bump(20.0, 256, 5.0);
    let r = run(&bump)?;
    let _ = writeln!(details, "standard bump N = 256: {}", r.status);
    checks.push(Check::at_most("cross-term residual (scaled), bump N=256", max_cross_term(&r), 1e-10));
    for (variant, scheme, min) in [
        (Variant::ParabolicParabolic, AdvectionScheme::Central, 1.8),
        (Variant::ParabolicElliptic, AdvectionScheme::Central, 1.8),
        (Variant::ParabolicParabolic, AdvectionScheme::Upwind, 0.9),
    ] {
        let study = identity_refinement(
            &smooth_bump(variant, scheme),
            &IDENTITY_RESOLUTIONS,
            IDENTITY_DT_COEFF,
            ResidualStencil::Forward,
        )?;
        let _ = write!(details, "{variant:?}, {scheme:?}\n{}", study.text());
        checks.push(Check::order(format!("identity residual order, {variant:?}/{scheme:?}"), study.order, min));
    }
    Ok(checks)
}

/// Template for the manufactured-solution studies.
pub fn mms_template(scheme: AdvectionScheme, stepper: StepperKind, t_end: f64) -> Scenario {
    let mut s = Scenario::steady(2.0, 16, t_end);
    s.advection_scheme = scheme;
    s.stepper = stepper;
    s
}

pub const MMS_RESOLUTIONS: [usize; 4] = [16, 32, 64, 128];
pub const MMS_T_END: f64 = 0.1;
pub const MMS_UPWIND_RESOLUTIONS: [usize; 4] = [32, 64, 128, 256];
pub const MMS_UPWIND_T_END: f64 = 0.5;
pub const MMS_DT_COEFF: f64 = 0.2;
pub const MMS_TEMPORAL_CELLS: usize = 64;
pub const MMS_TEMPORAL_DTS: [f64; 4] = [4e-3, 2e-3, 1e-3, 5e-4];
pub const MMS_REFERENCE_DT: f64 = 1e-6;

pub fn spatial_study(scheme: AdvectionScheme) -> Result<OrderReport> {
    let (resolutions, t_end) = match scheme {
        AdvectionScheme::Central => (MMS_RESOLUTIONS, MMS_T_END),
        AdvectionScheme::Upwind => (MMS_UPWIND_RESOLUTIONS, MMS_UPWIND_T_END),
    };
    mms_convergence(
        &ManufacturedCase::smooth(),
        &mms_template(scheme, StepperKind::ExplicitRk, t_end),
        &Study::Spatial {
            resolutions: resolutions.to_vec(),
            dt_coeff: MMS_DT_COEFF,
        },
    )
}

pub fn temporal_study(stepper: StepperKind) -> Result<OrderReport> {
    mms_convergence(
        &ManufacturedCase::smooth(),
        &mms_template(AdvectionScheme::Upwind, stepper, MMS_T_END),
        &Study::Temporal {
            cells: MMS_TEMPORAL_CELLS,
            dts: MMS_TEMPORAL_DTS.to_vec(),
            reference_dt: MMS_REFERENCE_DT,
        },
    )
}

fn mms(details: &mut String) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (scheme, min) in [(AdvectionScheme::Central, 1.9), (AdvectionScheme::Upwind, 0.9)] {
        let r = spatial_study(scheme)?;
        let _ = write!(details, "spatial, {scheme:?}\n{}", r.text());
        checks.push(Check::order(format!("spatial order u, {scheme:?}"), r.order_u, min));
        checks.push(Check::order(format!("spatial order v, {scheme:?}"), r.order_v, min));
    }
    let r = temporal_study(StepperKind::Imex1)?;
    let _ = write!(details, "temporal, Imex1\n{}", r.text());
    checks.push(Check::order("temporal order u, Imex1", r.order_u, 0.9));
    checks.push(Check::order("temporal order v, Imex1", r.order_v, 0.9));
    Ok(checks)
}

fn compare(details: &mut String) -> Result<Vec<Check>> {
    let steady = reference_compare(&Scenario::steady(1.0, 64, 1.0), 64, 256, 1.0)?;
    let _ = write!(details, "steady\n{}", steady.text());
    let bump = reference_compare(&Scenario::critical_bump(20.0, 256, 5.0), 256, 1024, 1.0)?;
    let _ = write!(details, "critical bump M = 20\n{}", bump.text());
    Ok(vec![
        Check::at_most("steady L2 gap", steady.u_gap.max(steady.v_gap), 1e-10),
        Check::at_most("sup u relative gap after t0, bump 256 vs 1024", bump.sup_u_rel_gap_after_t0, 0.05),
    ])
}
