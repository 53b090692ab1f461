//! Discrete Lyapunov functionals, dissipation identities and inequality
//! monitors.
//!
//! All integrals are dx-weighted sums. Interface quantities use the
//! arithmetic mean `ū = (u_i + u_{i+1})/2`, and `a(u) ∂x u` is always taken as
//! the interface difference of `Λ(u)`, so that
//!
//! * `grad_term  = Σ (ΔΛ/dx)² / ū · dx       ≈ ∫ a(u)² |∂x u|² / u`,
//! * `𝓕          = grad_term/2 - Σ u Λ(u) dx`,
//! * `∂t v` is the semi-discrete right side `Lap_h v - v + u`, never a
//!   difference quotient in time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Nonlinearity, Variant};
use crate::spatial::{discrete_laplacian, divergence, interface_gradient, with_walls, Grid, State};

/// Column order of the samples CSV.
pub const CSV_HEADER: [&str; 18] = [
    "t",
    "mass",
    "sup_u",
    "min_u",
    "sup_v",
    "L",
    "F",
    "D",
    "rhs_lemma",
    "identity_residual",
    "cross_term_residual",
    "lambda_L1",
    "lambda_L2_sq",
    "lambda_W11",
    "grad_term",
    "uLambda_term",
    "sobolev_slack",
    "dt_used",
];

/// Everything recorded at one output time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalSample {
    pub t: f64,
    pub mass: f64,
    pub sup_u: f64,
    pub min_u: f64,
    pub sup_v: f64,
    pub l_value: f64,
    pub f_value: f64,
    /// `𝓓`, or `𝓓₁` for the parabolic-elliptic variant.
    pub d_value: f64,
    pub rhs_lemma: f64,
    pub identity_residual: f64,
    pub cross_term_residual: f64,
    pub lambda_l1: f64,
    pub lambda_l2_sq: f64,
    pub lambda_w11: f64,
    pub grad_term: f64,
    pub u_lambda_term: f64,
    pub sobolev_slack: f64,
    pub dt_used: f64,

    // Not part of the CSV row.
    pub cross_term_scale: f64,
    pub d1: f64,
    pub d2: f64,
    pub u_grad_v_sq: f64,
    pub sup_abs_lambda: f64,
    pub v_l1: f64,
    pub v_l2: f64,
    pub ineq: InequalitySlacks,
}

impl FunctionalSample {
    /// Values in [`CSV_HEADER`] order.
    pub fn csv_values(&self) -> [f64; 18] {
        [
            self.t,
            self.mass,
            self.sup_u,
            self.min_u,
            self.sup_v,
            self.l_value,
            self.f_value,
            self.d_value,
            self.rhs_lemma,
            self.identity_residual,
            self.cross_term_residual,
            self.lambda_l1,
            self.lambda_l2_sq,
            self.lambda_w11,
            self.grad_term,
            self.u_lambda_term,
            self.sobolev_slack,
            self.dt_used,
        ]
    }

    pub fn csv_row(&self) -> String {
        let cells: Vec<String> = self.csv_values().iter().map(|v| format!("{v:e}")).collect();
        cells.join(",")
    }
}

pub fn csv_header() -> String {
    CSV_HEADER.join(",")
}

/// Per-cell and per-interface quantities shared by several functionals.
struct Fields<'a> {
    grid: &'a Grid,
    u: &'a [f64],
    v: &'a [f64],
    lambda: Vec<f64>,
    a: Vec<f64>,
    // ΔΛ/dx and Δv/dx on interior interfaces
    grad_lambda: Vec<f64>,
    grad_v: Vec<f64>,
    u_bar: Vec<f64>,
    lap_v: Vec<f64>,
    // ∂t v for the parabolic-parabolic variant, zero otherwise
    v_rate: Vec<f64>,
}

impl<'a> Fields<'a> {
    fn new(grid: &'a Grid, state: &'a State, nl: &Nonlinearity, variant: Variant) -> Result<Self> {
        grid.check_len("u", &state.u)?;
        grid.check_len("v", &state.v)?;
        if let Some(i) = state.u.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::Domain(format!(
                "functionals need strictly positive u, got u[{i}] = {}",
                state.u[i]
            )));
        }
        let u = &state.u[..];
        let v = &state.v[..];
        let lambda = crate::spatial::lambda_values(u, nl)?;
        let a = u.iter().map(|&x| nl.a(x)).collect();
        let grad_lambda = interface_gradient(grid, &lambda);
        let grad_v = interface_gradient(grid, v);
        let u_bar = u.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        let lap_v = discrete_laplacian(grid, v);
        let v_rate = match variant {
            Variant::ParabolicParabolic => (0..u.len()).map(|i| lap_v[i] - v[i] + u[i]).collect(),
            Variant::ParabolicElliptic => vec![0.0; u.len()],
        };
        Ok(Self {
            grid,
            u,
            v,
            lambda,
            a,
            grad_lambda,
            grad_v,
            u_bar,
            lap_v,
            v_rate,
        })
    }

    fn dx(&self) -> f64 {
        self.grid.dx()
    }

    fn grad_term(&self) -> f64 {
        self.grad_lambda
            .iter()
            .zip(&self.u_bar)
            .map(|(g, ub)| g * g / ub)
            .sum::<f64>()
            * self.dx()
    }

    fn u_lambda_term(&self) -> f64 {
        self.u.iter().zip(&self.lambda).map(|(u, l)| u * l).sum::<f64>() * self.dx()
    }

    fn lyapunov(&self, nl: &Nonlinearity) -> Result<f64> {
        let dx = self.dx();
        let mut entropy = 0.0;
        for &x in self.u {
            entropy += nl.b_of(x)?;
        }
        let coupling: f64 = self.u.iter().zip(self.v).map(|(u, v)| u * v).sum();
        let v_sq: f64 = self.v.iter().map(|v| v * v).sum();
        let grad_sq: f64 = self.grad_v.iter().map(|g| g * g).sum();
        Ok(entropy * dx - coupling * dx + 0.5 * (v_sq * dx + grad_sq * dx))
    }

    fn lyapunov_dissipation(&self) -> (f64, f64) {
        let dx = self.dx();
        let d1 = self.v_rate.iter().map(|r| r * r).sum::<f64>() * dx;
        let d2 = self
            .grad_lambda
            .iter()
            .zip(&self.grad_v)
            .zip(&self.u_bar)
            .map(|((gl, gv), ub)| {
                let w = gl / ub - gv;
                w * w * ub
            })
            .sum::<f64>()
            * dx;
        (d1, d2)
    }

    fn dissipation(&self) -> f64 {
        let q: Vec<f64> = self.grad_lambda.iter().zip(&self.u_bar).map(|(g, ub)| g / ub).collect();
        let div_q = divergence(self.grid, &with_walls(&q));
        (0..self.u.len())
            .map(|i| {
                let w = div_q[i] - self.lap_v[i] + 0.5 * (self.v[i] + self.v_rate[i]);
                self.u[i] * self.a[i] * w * w
            })
            .sum::<f64>()
            * self.dx()
    }

    fn lemma_rhs(&self) -> f64 {
        (0..self.u.len())
            .map(|i| {
                let s = self.v[i] + self.v_rate[i];
                0.25 * self.a[i] * self.u[i] * s * s
            })
            .sum::<f64>()
            * self.dx()
    }

    fn cross_term(&self) -> CrossTerm {
        let dx = self.dx();
        let mut left = 0.0;
        let mut scale = 0.0;
        for (gl, gv) in self.grad_lambda.iter().zip(&self.grad_v) {
            left += gl * gv;
            scale += (gl * gv).abs();
        }
        let mut right = 0.0;
        for i in 0..self.u.len() {
            // ∂t v + v - u, with the ∂t v term absent for the elliptic variant
            let term = self.lambda[i] * (self.v_rate[i] + self.v[i] - self.u[i]);
            right += term;
            scale += term.abs();
        }
        CrossTerm {
            residual: (left * dx + right * dx).abs(),
            scale: 1.0 + scale * dx,
        }
    }

    fn u_grad_v_sq(&self) -> f64 {
        self.grad_v
            .iter()
            .zip(&self.u_bar)
            .map(|(g, ub)| ub * g * g)
            .sum::<f64>()
            * self.dx()
    }

    fn lambda_norms(&self) -> LambdaNorms {
        let dx = self.dx();
        let abs: Vec<f64> = self.lambda.iter().map(|l| l.abs()).collect();
        let max = abs.iter().copied().fold(0.0, f64::max);
        let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
        let l1 = abs.iter().sum::<f64>() * dx;
        let l2_sq = self.lambda.iter().map(|l| l * l).sum::<f64>() * dx;
        let tv: f64 = self.lambda.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
        // max|Λ| <= min|Λ| + TV <= mean|Λ| + TV, split so each piece is
        // non-negative in floating point as well
        let mean_excess = abs.iter().map(|x| x - min).sum::<f64>() * dx;
        let tv_excess = tv - (max - min);
        LambdaNorms {
            l1,
            l2_sq,
            w11: l1 + tv,
            sup_abs: max,
            sobolev_slack: mean_excess + tv_excess,
        }
    }
}

struct LambdaNorms {
    l1: f64,
    l2_sq: f64,
    w11: f64,
    sup_abs: f64,
    sobolev_slack: f64,
}

/// Result of the cross-term identity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossTerm {
    /// `|Σ ΔΛ/dx·Δv/dx dx + Σ Λ(u)(∂t v + v - u) dx|`
    pub residual: f64,
    /// `1 +` the sum of magnitudes of all terms entering the residual.
    pub scale: f64,
}

impl CrossTerm {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

/// Parts of `𝓕`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalF {
    pub value: f64,
    pub grad_term: f64,
    pub u_lambda_term: f64,
}

/// Slacks and ratios of the a-priori inequalities at one time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct InequalitySlacks {
    /// `∫ Λ(u)² / (M + 1)`
    pub lambda_l2_ratio: f64,
    /// `∫ u Λ(u) - M^{3/2} (grad_term)^{1/2}`; its supremum is the empirical `c M (M+1)`.
    pub u_lambda_excess: f64,
    /// `𝓕 - grad_term/4`; its infimum is the empirical `-C₂`.
    pub f_excess: f64,
    pub sobolev_slack: f64,
    pub lambda_w11: f64,
    pub sup_abs_lambda: f64,
    /// Cells violating `Λ(u)² <= max_{[0,1]} Λ² + (4α²/e²) u`, when `α` is
    /// known.
    pub pointwise_violations: Option<usize>,
    /// Smallest pointwise slack of the same bound.
    pub pointwise_min_slack: Option<f64>,
}

pub fn mass(grid: &Grid, state: &State) -> f64 {
    grid.integrate(&state.u)
}

pub fn lyapunov_l(grid: &Grid, state: &State, nl: &Nonlinearity) -> Result<f64> {
    Fields::new(grid, state, nl, Variant::ParabolicParabolic)?.lyapunov(nl)
}

/// `(∫ |∂t v|², ∫ u |a(u)/u ∂x u - ∂x v|²)`; the first entry vanishes for the
/// parabolic-elliptic variant.
pub fn lyapunov_dissipation(grid: &Grid, state: &State, nl: &Nonlinearity, variant: Variant) -> Result<(f64, f64)> {
    Ok(Fields::new(grid, state, nl, variant)?.lyapunov_dissipation())
}

pub fn functional_f(grid: &Grid, state: &State, nl: &Nonlinearity) -> Result<FunctionalF> {
    let f = Fields::new(grid, state, nl, Variant::ParabolicParabolic)?;
    let grad_term = f.grad_term();
    let u_lambda_term = f.u_lambda_term();
    Ok(FunctionalF {
        value: 0.5 * grad_term - u_lambda_term,
        grad_term,
        u_lambda_term,
    })
}

/// `𝓓` (parabolic-parabolic) or `𝓓₁` (parabolic-elliptic).
pub fn dissipation_d(grid: &Grid, state: &State, nl: &Nonlinearity, variant: Variant) -> Result<f64> {
    Ok(Fields::new(grid, state, nl, variant)?.dissipation())
}

/// Right side of the `𝓕` balance: `∫ a(u) u (v + ∂t v)²/4`, or `∫ a(u) u v²/4`.
pub fn lemma_rhs(grid: &Grid, state: &State, nl: &Nonlinearity, variant: Variant) -> Result<f64> {
    Ok(Fields::new(grid, state, nl, variant)?.lemma_rhs())
}

pub fn cross_term_residual(grid: &Grid, state: &State, nl: &Nonlinearity, variant: Variant) -> Result<CrossTerm> {
    Ok(Fields::new(grid, state, nl, variant)?.cross_term())
}

/// How the dissipation and right side are placed in time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResidualStencil {
    /// Evaluated at the earlier state: first order in `dt`.
    #[default]
    Forward,
    /// Averaged over both states: second order in `dt`.
    Centered,
}

/// `𝓕`, `𝓓` and the right side at one state: what the identity residual
/// needs from each end of a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityPieces {
    pub t: f64,
    pub f: f64,
    pub d: f64,
    pub rhs: f64,
}

impl IdentityPieces {
    pub fn at(grid: &Grid, state: &State, nl: &Nonlinearity, variant: Variant) -> Result<Self> {
        if variant == Variant::ParabolicElliptic {
            check_elliptic(grid, state)?;
        }
        let f = Fields::new(grid, state, nl, variant)?;
        Ok(Self {
            t: state.t,
            f: 0.5 * f.grad_term() - f.u_lambda_term(),
            d: f.dissipation(),
            rhs: f.lemma_rhs(),
        })
    }

    /// `d𝓕/dt + 𝓓 - rhs` across the step from `self` to `next`.
    pub fn residual(&self, next: &IdentityPieces, stencil: ResidualStencil) -> Result<f64> {
        let dt = next.t - self.t;
        if !(dt > 0.0) {
            return Err(Error::NonMonotoneTime(format!("step from t = {} to t = {}", self.t, next.t)));
        }
        let (d, rhs) = match stencil {
            ResidualStencil::Forward => (self.d, self.rhs),
            ResidualStencil::Centered => (0.5 * (self.d + next.d), 0.5 * (self.rhs + next.rhs)),
        };
        Ok((next.f - self.f) / dt + d - rhs)
    }
}

/// Residual of the `𝓕` balance across one accepted step.
pub fn identity_residual(
    grid: &Grid,
    prev: &State,
    next: &State,
    nl: &Nonlinearity,
    variant: Variant,
    stencil: ResidualStencil,
) -> Result<f64> {
    if prev.cells() != next.cells() {
        return Err(Error::GridMismatch(format!(
            "states with {} and {} cells",
            prev.cells(),
            next.cells()
        )));
    }
    let a = IdentityPieces::at(grid, prev, nl, variant)?;
    let b = IdentityPieces::at(grid, next, nl, variant)?;
    a.residual(&b, stencil)
}

// For the elliptic variant the identity only holds once v solves (I - Lap)v = u.
fn check_elliptic(grid: &Grid, state: &State) -> Result<()> {
    grid.check_len("v", &state.v)?;
    let lap = discrete_laplacian(grid, &state.v);
    let umax = state.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let vmax = state.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = 1.0 + umax + vmax * (1.0 + 4.0 / (grid.dx() * grid.dx()));
    let resid = (0..state.u.len())
        .map(|i| (state.v[i] - lap[i] - state.u[i]).abs())
        .fold(0.0, f64::max);
    if resid > 1e-10 * scale {
        return Err(Error::Domain(format!(
            "v does not solve the elliptic equation (residual {resid:e})"
        )));
    }
    Ok(())
}

pub fn inequality_monitors(grid: &Grid, state: &State, nl: &Nonlinearity, mass: f64) -> Result<InequalitySlacks> {
    let f = Fields::new(grid, state, nl, Variant::ParabolicParabolic)?;
    Ok(slacks(&f, nl, mass))
}

fn slacks(f: &Fields<'_>, nl: &Nonlinearity, mass: f64) -> InequalitySlacks {
    let grad = f.grad_term();
    let ul = f.u_lambda_term();
    let norms = f.lambda_norms();
    let (violations, min_slack) = match nl.alpha() {
        Some(alpha) => {
            let base = nl.lambda_sq_max_on_unit();
            let k = 4.0 * alpha * alpha / (std::f64::consts::E * std::f64::consts::E);
            let mut count = 0;
            let mut min_slack = f64::INFINITY;
            for (l, u) in f.lambda.iter().zip(f.u) {
                let slack = base + k * u - l * l;
                if slack < 0.0 {
                    count += 1;
                }
                min_slack = min_slack.min(slack);
            }
            (Some(count), Some(min_slack))
        }
        None => (None, None),
    };
    InequalitySlacks {
        lambda_l2_ratio: norms.l2_sq / (mass + 1.0),
        u_lambda_excess: ul - mass.powf(1.5) * grad.sqrt(),
        f_excess: (0.5 * grad - ul) - 0.25 * grad,
        sobolev_slack: norms.sobolev_slack,
        lambda_w11: norms.w11,
        sup_abs_lambda: norms.sup_abs,
        pointwise_violations: violations,
        pointwise_min_slack: min_slack,
    }
}

/// Evaluates every monitored quantity at one state.
///
/// `identity_residual` is left at zero; it needs two states and is filled in
/// by the driver.
pub fn sample(
    grid: &Grid,
    state: &State,
    nl: &Nonlinearity,
    variant: Variant,
    mass0: f64,
    dt_used: f64,
) -> Result<FunctionalSample> {
    let f = Fields::new(grid, state, nl, variant)?;
    let grad_term = f.grad_term();
    let u_lambda_term = f.u_lambda_term();
    let (d1, d2) = f.lyapunov_dissipation();
    let cross = f.cross_term();
    let norms = f.lambda_norms();
    let ineq = slacks(&f, nl, mass0);
    Ok(FunctionalSample {
        t: state.t,
        mass: grid.integrate(&state.u),
        sup_u: state.max_u(),
        min_u: state.min_u(),
        sup_v: state.v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        l_value: f.lyapunov(nl)?,
        f_value: 0.5 * grad_term - u_lambda_term,
        d_value: f.dissipation(),
        rhs_lemma: f.lemma_rhs(),
        identity_residual: 0.0,
        cross_term_residual: cross.residual,
        lambda_l1: norms.l1,
        lambda_l2_sq: norms.l2_sq,
        lambda_w11: norms.w11,
        grad_term,
        u_lambda_term,
        sobolev_slack: norms.sobolev_slack,
        dt_used,
        cross_term_scale: cross.scale,
        d1,
        d2,
        u_grad_v_sq: f.u_grad_v_sq(),
        sup_abs_lambda: norms.sup_abs,
        v_l1: grid.integrate(&state.v.iter().map(|v| v.abs()).collect::<Vec<_>>()),
        v_l2: grid.integrate(&state.v.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt(),
        ineq,
    })
}

/// Running value of `∫₀ᵗ e^{s-t} g(s) ds` by the trapezoidal rule, with the
/// weight renormalized at every new sample.
#[derive(Clone, Debug, Default)]
pub struct WeightedDissipation {
    last: Option<(f64, f64)>,
    value: f64,
    sup: f64,
}

impl WeightedDissipation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the integrand value `g` at time `t`.
    pub fn push(&mut self, t: f64, g: f64) -> Result<f64> {
        if let Some((t_prev, g_prev)) = self.last {
            let dt = t - t_prev;
            if !(dt >= 0.0) {
                return Err(Error::NonMonotoneTime(format!("sample at t = {t} after t = {t_prev}")));
            }
            let decay = (-dt).exp();
            self.value = self.value * decay + 0.5 * dt * (g_prev * decay + g);
        }
        self.last = Some((t, g));
        self.sup = self.sup.max(self.value);
        Ok(self.value)
    }

    /// Convenience for [`FunctionalSample`]s: `g = grad_term + Σ ū |Δv/dx|² dx`.
    pub fn push_sample(&mut self, s: &FunctionalSample) -> Result<f64> {
        self.push(s.t, s.grad_term + s.u_grad_v_sq)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }
}
