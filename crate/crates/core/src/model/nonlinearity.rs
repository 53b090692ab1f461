//! Diffusion laws `a(s)` and their potentials.
//!
//! Every law carries two derived functions, both normalized at `r = 1`:
//!
//! * the diffusion potential `Λ(r) = ∫₁ʳ a(s) ds`, so that `∂x Λ(u) = a(u) ∂x u`;
//! * the entropy density `b` with `b''(r) = a(r)/r` and `b(1) = b'(1) = 0`.
//!
//! Closed forms are used where they exist. Everything else goes through
//! adaptive quadrature, after a logarithmic change of variables that keeps the
//! integrands smooth on `[0, 1e12]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

const LAMBDA_REL_TOL: f64 = 1e-10;
const B_REL_TOL: f64 = 1e-10;
const TABULATED_B_REL_TOL: f64 = 1e-8;
const QUAD_ABS_TOL: f64 = 1e-15;

/// Serializable description of a diffusion law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law {
    /// `a(s) = (1 + s)^(-p)`; `p = 1` is the critical law.
    Power { p: f64 },
    /// `a(s) = c`.
    Constant { c: f64 },
    /// Samples `(s_k, a_k)`, interpolated piecewise linearly in
    /// `(ln(1 + s), ln a)` and extrapolated with the end slopes.
    Tabulated { s: Vec<f64>, a: Vec<f64> },
}

#[derive(Clone, Debug)]
struct Table {
    // ln(1 + s_k) and ln(a_k)
    x: Vec<f64>,
    y: Vec<f64>,
    // interior breakpoints in s, used to split quadrature ranges
    s: Vec<f64>,
}

impl Table {
    fn new(s: &[f64], a: &[f64]) -> Result<Self> {
        if s.len() != a.len() {
            return Err(Error::Config(format!(
                "tabulated law: {} abscissae but {} values",
                s.len(),
                a.len()
            )));
        }
        if s.len() < 2 {
            return Err(Error::Config("tabulated law needs at least two samples".into()));
        }
        if s.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Config("tabulated law: abscissae must be finite and >= 0".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("tabulated law: abscissae must increase strictly".into()));
        }
        if a.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::Config("tabulated law: values must be finite and positive".into()));
        }
        Ok(Self {
            x: s.iter().map(|v| v.ln_1p()).collect(),
            y: a.iter().map(|v| v.ln()).collect(),
            s: s.to_vec(),
        })
    }

    fn eval(&self, s: f64) -> f64 {
        let x = s.ln_1p();
        let n = self.x.len();
        let k = self.x.partition_point(|&xk| xk <= x).clamp(1, n - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let (y0, y1) = (self.y[k - 1], self.y[k]);
        let slope = (y1 - y0) / (x1 - x0);
        (y0 + slope * (x - x0)).exp()
    }

    // Breakpoints strictly inside (lo, hi), in increasing order.
    fn breakpoints(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        self.s.iter().copied().filter(move |&s| s > lo && s < hi)
    }
}

/// A diffusion law together with its sampled constant `sup s·a(s)`.
///
/// Immutable after construction; cheap to clone and safe to share between
/// threads.
#[derive(Clone, Debug)]
pub struct Nonlinearity {
    law: Law,
    table: Option<Table>,
    alpha_estimate: f64,
}

impl PartialEq for Nonlinearity {
    fn eq(&self, other: &Self) -> bool {
        self.law == other.law
    }
}

impl TryFrom<Law> for Nonlinearity {
    type Error = Error;

    fn try_from(law: Law) -> Result<Self> {
        Self::new(law)
    }
}

impl From<Nonlinearity> for Law {
    fn from(nl: Nonlinearity) -> Self {
        nl.law
    }
}

impl Serialize for Nonlinearity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.law.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Nonlinearity {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let law = Law::deserialize(deserializer)?;
        Nonlinearity::new(law).map_err(serde::de::Error::custom)
    }
}

impl Nonlinearity {
    pub fn new(law: Law) -> Result<Self> {
        let table = match &law {
            Law::Power { p } => {
                if !p.is_finite() || *p < 0.0 {
                    return Err(Error::Config(format!("power law exponent must be >= 0, got {p}")));
                }
                None
            }
            Law::Constant { c } => {
                if !c.is_finite() || *c <= 0.0 {
                    return Err(Error::Config(format!("constant law needs c > 0, got {c}")));
                }
                None
            }
            Law::Tabulated { s, a } => Some(Table::new(s, a)?),
        };
        let mut nl = Self {
            law,
            table,
            alpha_estimate: 0.0,
        };
        nl.alpha_estimate = crate::model::assumptions::sampled_alpha(&nl);
        Ok(nl)
    }

    /// `(1 + s)^(-p)`.
    pub fn power(p: f64) -> Self {
        Self::new(Law::Power { p }).expect("exponent must be finite and non-negative")
    }

    /// The critical law `a(s) = 1/(1 + s)`.
    pub fn critical() -> Self {
        Self::power(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Law::Constant { c }).expect("constant must be positive")
    }

    pub fn tabulated(s: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        Self::new(Law::Tabulated { s, a })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    /// Empirical supremum of `s·a(s)` over the log-spaced assumption grid.
    pub fn alpha_estimate(&self) -> f64 {
        self.alpha_estimate
    }

    /// The constant `α = sup s·a(s)` when it is known to be finite: exact for
    /// the power family with `p >= 1`, sampled for tables whose `s·a(s)` has
    /// flattened out, `None` otherwise.
    pub fn alpha(&self) -> Option<f64> {
        match self.law {
            Law::Power { p: 1.0 } => Some(1.0),
            Law::Power { p } if p > 1.0 => {
                let s = 1.0 / (p - 1.0);
                Some(s * (1.0 + s).powf(-p))
            }
            Law::Power { .. } | Law::Constant { .. } => None,
            Law::Tabulated { .. } => {
                let report = crate::model::assumptions::check_assumptions(self);
                report.sa_bounded.then_some(report.alpha_estimate)
            }
        }
    }

    /// `a(s)` without domain checking; `s >= 0` is the caller's contract.
    #[inline]
    pub fn a(&self, s: f64) -> f64 {
        match &self.law {
            Law::Power { p } => {
                if *p == 1.0 {
                    1.0 / (1.0 + s)
                } else {
                    (1.0 + s).powf(-p)
                }
            }
            Law::Constant { c } => *c,
            Law::Tabulated { .. } => self.table.as_ref().map_or(f64::NAN, |t| t.eval(s)),
        }
    }

    /// `a'(s)`; numerical for tabulated laws.
    pub fn a_prime(&self, s: f64) -> f64 {
        match &self.law {
            Law::Power { p } => -p * (1.0 + s).powf(-p - 1.0),
            Law::Constant { .. } => 0.0,
            Law::Tabulated { .. } => {
                let h = 1e-5 * (1.0 + s);
                let lo = (s - h).max(0.0);
                (self.a(s + h) - self.a(lo)) / (s + h - lo)
            }
        }
    }

    /// Checked `a(s)`.
    pub fn a_of(&self, s: f64) -> Result<f64> {
        check_nonneg("a", s)?;
        Ok(self.a(s))
    }

    /// `Λ(r)` without domain checking.
    #[inline]
    pub fn lambda(&self, r: f64) -> f64 {
        match &self.law {
            Law::Power { p } => {
                let q = 1.0 - p;
                let log_half = ((1.0 + r) * 0.5).ln();
                if q == 0.0 {
                    log_half
                } else {
                    // 2^q ((1+r)/2)^q - 2^q, written to stay accurate as p -> 1
                    2f64.powf(q) * (q * log_half).exp_m1() / q
                }
            }
            Law::Constant { c } => c * (r - 1.0),
            Law::Tabulated { .. } => self.lambda_quadrature(r),
        }
    }

    /// Checked `Λ(r)`.
    pub fn lambda_of(&self, r: f64) -> Result<f64> {
        check_nonneg("lambda", r)?;
        Ok(self.lambda(r))
    }

    /// `Λ(r)` by adaptive quadrature, for any law.
    ///
    /// Substitutes `s = e^τ - 1`, so power-type tails become exponentials in τ.
    pub fn lambda_quadrature(&self, r: f64) -> f64 {
        if r == 1.0 {
            return 0.0;
        }
        let integrand = |tau: f64| {
            let e = tau.exp();
            self.a(e - 1.0) * e
        };
        let (lo, hi, sign) = if r > 1.0 { (1.0, r, 1.0) } else { (r, 1.0, -1.0) };
        let mut cuts = vec![lo];
        if let Some(t) = &self.table {
            cuts.extend(t.breakpoints(lo, hi));
        }
        cuts.push(hi);
        let total: f64 = cuts
            .windows(2)
            .map(|w| {
                quadrature::integrate(
                    integrand,
                    w[0].ln_1p(),
                    w[1].ln_1p(),
                    LAMBDA_REL_TOL,
                    QUAD_ABS_TOL,
                )
            })
            .sum();
        sign * total
    }

    /// `b(r)` without domain checking (`r > 0`).
    pub fn b(&self, r: f64) -> f64 {
        match &self.law {
            Law::Power { p } if *p == 1.0 => r * r.ln() - (1.0 + r) * ((1.0 + r) * 0.5).ln(),
            Law::Power { p } if *p == 0.0 => r * r.ln() - r + 1.0,
            Law::Constant { c } => c * (r * r.ln() - r + 1.0),
            _ => self.b_quadrature(r),
        }
    }

    /// Checked `b(r)`; `b` has a logarithmic singularity in `b'` at zero, so
    /// non-positive arguments are rejected rather than clamped.
    pub fn b_of(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("b(r) needs r > 0, got {r}")));
        }
        Ok(self.b(r))
    }

    /// `b(r)` by quadrature, for any law.
    ///
    /// The doubly normalized antiderivative collapses to the single integral
    /// `b(r) = ∫₁ʳ (r - s) a(s)/s ds`; with `s = e^σ` this is
    /// `∫₀^{ln r} (r - e^σ) a(e^σ) dσ`.
    pub fn b_quadrature(&self, r: f64) -> f64 {
        if r == 1.0 {
            return 0.0;
        }
        let integrand = |sigma: f64| {
            let s = sigma.exp();
            (r - s) * self.a(s)
        };
        let (lo, hi, sign) = if r > 1.0 { (1.0, r, 1.0) } else { (r, 1.0, -1.0) };
        let tol = if self.table.is_some() {
            TABULATED_B_REL_TOL
        } else {
            B_REL_TOL
        };
        let mut cuts = vec![lo];
        if let Some(t) = &self.table {
            cuts.extend(t.breakpoints(lo, hi));
        }
        cuts.push(hi);
        let total: f64 = cuts
            .windows(2)
            .map(|w| quadrature::integrate(integrand, w[0].ln(), w[1].ln(), tol, QUAD_ABS_TOL))
            .sum();
        sign * total
    }

    /// `max_{r ∈ [0,1]} Λ(r)²`, which is `Λ(0)²` because `Λ` is increasing and
    /// vanishes at one.
    pub fn lambda_sq_max_on_unit(&self) -> f64 {
        let l0 = self.lambda(0.0);
        l0 * l0
    }
}

fn check_nonneg(name: &str, s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        Err(Error::Domain(format!("{name}(s) needs s >= 0, got {s}")))
    } else {
        Ok(())
    }
}
