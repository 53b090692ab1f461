//! Per-monitor verdicts and empirical constants for a finished run.

use std::fmt::Write as _;

use serde::Serialize;

use crate::functionals::{FunctionalSample, WeightedDissipation};
use crate::model::Scenario;
use crate::timestep::{StepRecord, TerminationStatus};

/// Tolerance for the exactly conserved quantities.
pub const MASS_TOL: f64 = 1e-10;
pub const CROSS_TERM_TOL: f64 = 1e-10;
/// Allowed per-step increase of `L` in units of `dt·(d1 + d2)`.
pub const LYAPUNOV_ALLOWANCE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Held,
    Violated,
    Inconclusive,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Held
        } else {
            Verdict::Violated
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Held => "held",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One monitored property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorVerdict {
    pub name: &'static str,
    pub verdict: Verdict,
    /// Worst value of the monitored quantity.
    pub worst: f64,
    /// Time at which the worst value occurred.
    pub at_t: f64,
    pub note: String,
}

/// An empirical supremum (or infimum) standing in for an existential
/// constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalConstant {
    pub name: &'static str,
    pub value: f64,
    pub at_t: f64,
    pub meaning: &'static str,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PropertySummary {
    pub monitors: Vec<MonitorVerdict>,
    pub constants: Vec<EmpiricalConstant>,
}

impl PropertySummary {
    pub fn get(&self, name: &str) -> Option<&MonitorVerdict> {
        self.monitors.iter().find(|m| m.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&EmpiricalConstant> {
        self.constants.iter().find(|c| c.name == name)
    }
}

// (value, time) of the extreme of `f` over `samples`, larger-is-worse.
fn worst<'a>(samples: impl Iterator<Item = &'a FunctionalSample>, f: impl Fn(&FunctionalSample) -> f64) -> (f64, f64) {
    samples.fold((f64::NEG_INFINITY, f64::NAN), |(w, t), s| {
        let x = f(s);
        if x > w || x.is_nan() && !w.is_nan() {
            (x, s.t)
        } else {
            (w, t)
        }
    })
}

pub fn summarize(
    scenario: &Scenario,
    samples: &[FunctionalSample],
    steps: &[StepRecord],
    status: &TerminationStatus,
    max_mass_drift: f64,
    min_u_seen: f64,
) -> PropertySummary {
    let mut monitors = Vec::new();
    let mut constants = Vec::new();
    let Some(first) = samples.first() else {
        return PropertySummary::default();
    };
    let mass0 = first.mass;
    let nl = &scenario.nonlinearity;

    let (drift, drift_t) = worst(samples.iter(), |s| (s.mass - mass0).abs() / mass0);
    let drift = drift.max(max_mass_drift);
    monitors.push(MonitorVerdict {
        name: "mass_conservation",
        verdict: Verdict::from_bool(drift <= MASS_TOL),
        worst: drift,
        at_t: drift_t,
        note: format!("relative drift over all accepted steps, tolerance {MASS_TOL:e}"),
    });

    let (neg_min, min_t) = worst(samples.iter(), |s| -s.min_u);
    monitors.push(MonitorVerdict {
        name: "positivity",
        verdict: Verdict::from_bool(min_u_seen >= scenario.positivity_floor),
        worst: -neg_min,
        at_t: min_t,
        note: format!("min u over all accepted steps {min_u_seen:e}"),
    });

    let (cross, cross_t) = worst(samples.iter(), |s| s.cross_term_residual / s.cross_term_scale);
    monitors.push(MonitorVerdict {
        name: "cross_term_identity",
        verdict: Verdict::from_bool(cross <= CROSS_TERM_TOL),
        worst: cross,
        at_t: cross_t,
        note: format!("scaled residual, tolerance {CROSS_TERM_TOL:e}"),
    });

    let (resid, resid_t) = worst(samples.iter(), |s| s.identity_residual.abs());
    monitors.push(MonitorVerdict {
        name: "second_energy_balance",
        verdict: Verdict::Inconclusive,
        worst: resid,
        at_t: resid_t,
        note: "discretization residual; judged only by refinement studies".into(),
    });

    let (slack, slack_t) = worst(samples.iter(), |s| -s.sobolev_slack);
    monitors.push(MonitorVerdict {
        name: "sup_lambda_by_w11",
        verdict: Verdict::from_bool(-slack >= 0.0),
        worst: -slack,
        at_t: slack_t,
        note: "max|Λ(u)| <= L1 + total variation, exact slack".into(),
    });

    if samples.iter().all(|s| s.ineq.pointwise_violations.is_some()) {
        let (viol, viol_t) = worst(samples.iter(), |s| s.ineq.pointwise_violations.unwrap_or(0) as f64);
        let (neg_slack, _) = worst(samples.iter(), |s| -s.ineq.pointwise_min_slack.unwrap_or(f64::INFINITY));
        monitors.push(MonitorVerdict {
            name: "lambda_sq_pointwise_bound",
            verdict: Verdict::from_bool(viol == 0.0),
            worst: viol,
            at_t: viol_t,
            note: format!(
                "cells with Λ(u)² > max Λ² on [0,1] + (4α²/e²)u; smallest slack {:e}",
                -neg_slack
            ),
        });
        let alpha = nl.alpha().unwrap_or(f64::NAN);
        let bound = nl.lambda_sq_max_on_unit() + 4.0 * alpha * alpha / (std::f64::consts::E * std::f64::consts::E);
        let (lambda_l2_ratio, l2_ratio_t) = worst(samples.iter(), |s| s.ineq.lambda_l2_ratio);
        monitors.push(MonitorVerdict {
            name: "lambda_l2_ratio_bound",
            verdict: Verdict::from_bool(lambda_l2_ratio <= bound),
            worst: lambda_l2_ratio,
            at_t: l2_ratio_t,
            note: format!("∫Λ(u)²/(M+1) against the explicit constant {bound:.6}"),
        });
    }

    if let Some(m) = lyapunov_monitor(samples, steps) {
        monitors.push(m);
    }

    let window = || samples.iter().filter(|s| s.t >= scenario.t0_monitor);
    let has_window = window().next().is_some();
    if has_window {
        let (sup_f, sup_f_t) = worst(window(), |s| s.f_value);
        let f0 = window().next().map(|s| s.f_value).unwrap_or(f64::NAN);
        monitors.push(MonitorVerdict {
            name: "second_energy_bounded_after_t0",
            verdict: if !sup_f.is_finite() {
                Verdict::Violated
            } else if status.is_completed() {
                Verdict::Held
            } else {
                Verdict::Inconclusive
            },
            worst: sup_f,
            at_t: sup_f_t,
            note: format!("sup 𝓕 over t >= {}; 𝓕(t0) = {f0:e}", scenario.t0_monitor),
        });
        constants.push(EmpiricalConstant {
            name: "C1",
            value: sup_f - f0,
            at_t: sup_f_t,
            meaning: "sup over t >= t0 of 𝓕(t) - 𝓕(t0)",
        });
        let (g, g_t) = worst(window(), |s| s.grad_term);
        constants.push(EmpiricalConstant {
            name: "grad_bound",
            value: g,
            at_t: g_t,
            meaning: "sup over t >= t0 of ∫ a(u)²|∂x u|²/u",
        });
    }

    let (sup_u, sup_u_t) = worst(samples.iter(), |s| s.sup_u);
    monitors.push(MonitorVerdict {
        name: "boundedness",
        verdict: match status {
            TerminationStatus::Completed => Verdict::Held,
            TerminationStatus::BlowupSuspected { .. } => Verdict::Violated,
            TerminationStatus::StepFailure { .. } => Verdict::Inconclusive,
        },
        worst: sup_u,
        at_t: sup_u_t,
        note: format!("sup u over the run; status {}", status.label()),
    });

    let (lambda_l2_ratio, l2_ratio_t) = worst(samples.iter(), |s| s.ineq.lambda_l2_ratio);
    constants.push(EmpiricalConstant {
        name: "C_lambda_l2",
        value: lambda_l2_ratio,
        at_t: l2_ratio_t,
        meaning: "sup ∫Λ(u)² / (M + 1)",
    });
    let (u_lambda_excess, u_lambda_t) = worst(samples.iter(), |s| s.ineq.u_lambda_excess);
    constants.push(EmpiricalConstant {
        name: "c_u_lambda",
        value: u_lambda_excess / (mass0 * (mass0 + 1.0)),
        at_t: u_lambda_t,
        meaning: "sup (∫uΛ(u) - M^{3/2}(∫a(u)²|∂x u|²/u)^{1/2}) / (M(M+1))",
    });
    let (neg_f_excess, f_excess_t) = worst(samples.iter(), |s| -s.ineq.f_excess);
    constants.push(EmpiricalConstant {
        name: "C2",
        value: neg_f_excess,
        at_t: f_excess_t,
        meaning: "sup (∫a(u)²|∂x u|²/(4u) - 𝓕)",
    });
    let (w11, w11_t) = worst(samples.iter(), |s| s.lambda_w11);
    constants.push(EmpiricalConstant {
        name: "lambda_w11",
        value: w11,
        at_t: w11_t,
        meaning: "sup ‖Λ(u)‖ in W^{1,1}",
    });
    let (sl, sl_t) = worst(samples.iter(), |s| s.sup_abs_lambda);
    constants.push(EmpiricalConstant {
        name: "sup_abs_lambda",
        value: sl,
        at_t: sl_t,
        meaning: "sup max|Λ(u)|",
    });
    let mut acc = WeightedDissipation::new();
    let mut acc_t = 0.0;
    let mut acc_best = f64::NEG_INFINITY;
    for s in samples {
        if let Ok(v) = acc.push_sample(s) {
            if v > acc_best {
                acc_best = v;
                acc_t = s.t;
            }
        }
    }
    constants.push(EmpiricalConstant {
        name: "weighted_dissipation",
        value: acc.sup(),
        at_t: acc_t,
        meaning: "sup ∫₀ᵗ e^{s-t} ∫(a(u)²|∂x u|²/u + u|∂x v|²) ds",
    });
    for (name, meaning, f) in [
        ("v_l1", "sup ‖v‖_1", (|s: &FunctionalSample| s.v_l1) as fn(&FunctionalSample) -> f64),
        ("v_l2", "sup ‖v‖_2", |s: &FunctionalSample| s.v_l2),
        ("v_linf", "sup max v", |s: &FunctionalSample| s.sup_v),
    ] {
        let (value, at_t) = worst(samples.iter(), f);
        constants.push(EmpiricalConstant { name, value, at_t, meaning });
    }

    PropertySummary { monitors, constants }
}

// Per step when dense records exist, otherwise between consecutive samples
// with the dissipation taken at the earlier sample.
fn lyapunov_monitor(samples: &[FunctionalSample], steps: &[StepRecord]) -> Option<MonitorVerdict> {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut at_t = f64::NAN;
    let mut check = |increase: f64, allowance: f64, t: f64| {
        let excess = increase - allowance;
        if excess > worst_excess {
            worst_excess = excess;
            at_t = t;
        }
    };
    let note;
    if !steps.is_empty() {
        for r in steps {
            check(r.l_increase(), LYAPUNOV_ALLOWANCE * r.dt * r.dissipation, r.t);
        }
        note = "per accepted step: L(next) - L(prev) - 10·dt·(d1 + d2)";
    } else if samples.len() >= 2 {
        for p in samples.windows(2) {
            let dt = p[1].t - p[0].t;
            check(p[1].l_value - p[0].l_value, LYAPUNOV_ALLOWANCE * dt * (p[0].d1 + p[0].d2), p[1].t);
        }
        note = "between samples: L(next) - L(prev) - 10·Δt·(d1 + d2)";
    } else {
        return None;
    }
    Some(MonitorVerdict {
        name: "lyapunov_decay",
        verdict: Verdict::from_bool(worst_excess <= 0.0),
        worst: worst_excess,
        at_t,
        note: note.into(),
    })
}

/// Plain-text rendering used for `report.txt`.
pub fn render(summary: &PropertySummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "monitors:");
    for m in &summary.monitors {
        let _ = writeln!(
            out,
            "  {:<32} {:<12} worst = {:<14.6e} at t = {:<10.4} {}",
            m.name,
            m.verdict.label(),
            m.worst,
            m.at_t,
            m.note
        );
    }
    let _ = writeln!(out, "empirical constants:");
    for c in &summary.constants {
        let _ = writeln!(
            out,
            "  {:<22} = {:<14.6e} at t = {:<10.4} {}",
            c.name, c.value, c.at_t, c.meaning
        );
    }
    out
}
