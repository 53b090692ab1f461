//! Sampled checks of the structural assumptions on `a`.
//!
//! Continuity and positivity, `s·a(s) <= α`, and `a ∉ L¹(1, ∞)` (so `Λ` is
//! unbounded).
//! The last two are statements about `s → ∞` and cannot be decided in finite
//! arithmetic, so the report carries advisory verdicts computed on a
//! log-spaced grid reaching `S_CAP = 1e12`.

use serde::Serialize;

use super::nonlinearity::{Law, Nonlinearity};

/// Upper end of the sampling grid.
pub const S_CAP: f64 = 1e12;

/// `Λ` is deemed unbounded when `Λ(S_CAP)` exceeds this value.
pub const LAMBDA_UNBOUNDED_FLOOR: f64 = 10.0;

// s·a(s) counts as still growing if its log-log slope at the cap exceeds this.
const SA_SLOPE_TOL: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Positivity and finiteness of `a` on the sample grid.
    pub positive_and_finite: bool,
    /// Largest sampled `s·a(s)`.
    pub alpha_estimate: f64,
    /// False when `s·a(s)` is still growing at the end of the grid.
    pub sa_bounded: bool,
    pub lambda_at_cap: f64,
    /// `d ln Λ / d ln s` at the cap.
    pub lambda_log_slope: f64,
    pub lambda_unbounded: bool,
}

fn sample_grid() -> impl Iterator<Item = f64> {
    // 0, then 1e-6 ..= 1e12 at twenty points per decade
    std::iter::once(0.0).chain((0..=360).map(|k| 10f64.powf(-6.0 + k as f64 / 20.0)))
}

pub(crate) fn sampled_alpha(nl: &Nonlinearity) -> f64 {
    sample_grid().map(|s| s * nl.a(s)).fold(0.0, f64::max)
}

pub fn check_assumptions(nl: &Nonlinearity) -> AssumptionReport {
    let positive_and_finite = match nl.law() {
        Law::Power { .. } | Law::Constant { .. } => true,
        Law::Tabulated { .. } => sample_grid().all(|s| {
            let a = nl.a(s);
            a.is_finite() && a > 0.0
        }),
    };

    let below = S_CAP / 10.0;
    let sa_hi = S_CAP * nl.a(S_CAP);
    let sa_lo = below * nl.a(below);
    let sa_slope = (sa_hi / sa_lo).ln() / 10f64.ln();

    let lambda_at_cap = nl.lambda(S_CAP);
    let lambda_below = nl.lambda(below);
    let lambda_log_slope = if lambda_at_cap > 0.0 && lambda_below > 0.0 {
        (lambda_at_cap / lambda_below).ln() / 10f64.ln()
    } else {
        f64::NAN
    };

    AssumptionReport {
        positive_and_finite,
        alpha_estimate: nl.alpha_estimate(),
        sa_bounded: sa_slope <= SA_SLOPE_TOL,
        lambda_at_cap,
        lambda_log_slope,
        lambda_unbounded: lambda_log_slope >= 0.0 && lambda_at_cap > LAMBDA_UNBOUNDED_FLOOR,
    }
}
