use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::nonlinearity::Nonlinearity;
use crate::error::{Error, Result};

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;
pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-13;

/// Which equation governs the chemoattractant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `∂t v = ∂x² v - v + u`
    ParabolicParabolic,
    /// `0 = ∂x² v - v + u`
    ParabolicElliptic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepperKind {
    /// Heun's method on `(u, v)` jointly.
    ExplicitRk,
    /// Backward-Euler Λ-diffusion, explicit advection, linear implicit `v`.
    #[default]
    Imex1,
    /// Backward Euler on the coupled system, solved by Newton.
    FullyImplicit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvectionScheme {
    #[default]
    Upwind,
    Central,
}

/// Analytic initial profiles. All of them have zero slope at both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `u ≡ mass`.
    Constant { mass: f64 },
    /// `mass·(1 + amplitude·cos 2πx)`.
    Cosine {
        mass: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `1 + amplitude·g(x)` rescaled to the given mass, where `g` is a
    /// Gaussian bump at `center` mirrored across both walls.
    Gaussian {
        mass: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "half")]
        center: f64,
        #[serde(default = "tenth")]
        width: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn tenth() -> f64 {
    0.1
}
fn default_blowup() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}
fn default_floor() -> f64 {
    DEFAULT_POSITIVITY_FLOOR
}

impl Profile {
    pub fn mass(&self) -> f64 {
        match *self {
            Profile::Constant { mass } | Profile::Cosine { mass, .. } | Profile::Gaussian { mass, .. } => mass,
        }
    }

    /// The same profile shape carrying a different mass.
    pub fn with_mass(&self, mass: f64) -> Self {
        let mut p = self.clone();
        match &mut p {
            Profile::Constant { mass: m } | Profile::Cosine { mass: m, .. } | Profile::Gaussian { mass: m, .. } => {
                *m = mass
            }
        }
        p
    }

    fn validate(&self, what: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{what}: {msg}")));
        let mass = self.mass();
        if !(mass.is_finite() && mass > 0.0) {
            return bad(format!("mass must be positive, got {mass}"));
        }
        match *self {
            Profile::Constant { .. } => Ok(()),
            Profile::Cosine { amplitude, .. } => {
                if !(amplitude.abs() <= 1.0) {
                    return bad(format!("cosine amplitude must lie in [-1, 1], got {amplitude}"));
                }
                Ok(())
            }
            Profile::Gaussian {
                amplitude,
                center,
                width,
                ..
            } => {
                if !(amplitude >= 0.0 && amplitude.is_finite()) {
                    return bad(format!("gaussian amplitude must be >= 0, got {amplitude}"));
                }
                if !(0.0..=1.0).contains(&center) {
                    return bad(format!("gaussian center must lie in [0, 1], got {center}"));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return bad(format!("gaussian width must be positive, got {width}"));
                }
                Ok(())
            }
        }
    }

    /// Point values at the given cell centers.
    pub fn sample(&self, centers: &[f64]) -> Vec<f64> {
        match *self {
            Profile::Constant { mass } => vec![mass; centers.len()],
            Profile::Cosine { mass, amplitude } => centers
                .iter()
                .map(|&x| mass * (1.0 + amplitude * (2.0 * PI * x).cos()))
                .collect(),
            Profile::Gaussian {
                mass,
                amplitude,
                center,
                width,
            } => {
                // Period-2 even extension: derivative vanishes at x = 0 and x = 1.
                let k = 1.0 / (PI * PI * width * width);
                let bump = |x: f64| {
                    (-(1.0 - (PI * (x - center)).cos()) * k).exp()
                        + (-(1.0 - (PI * (x + center)).cos()) * k).exp()
                };
                let raw: Vec<f64> = centers.iter().map(|&x| 1.0 + amplitude * bump(x)).collect();
                let mean = raw.iter().sum::<f64>() / raw.len() as f64;
                raw.into_iter().map(|r| mass * r / mean).collect()
            }
        }
    }
}

/// A complete simulation setup.
///
/// Deserialized from JSON with unknown keys rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub variant: Variant,
    pub nonlinearity: Nonlinearity,
    pub initial_u: Profile,
    /// Ignored by the parabolic-elliptic variant; defaults to `initial_u`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_v: Option<Profile>,
    pub cells: usize,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Start of the window in which boundedness of `𝓕` is monitored.
    pub t0_monitor: f64,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    #[serde(default = "default_floor")]
    pub positivity_floor: f64,
    #[serde(default)]
    pub stepper: StepperKind,
    #[serde(default)]
    pub advection_scheme: AdvectionScheme,
    /// Sample cadence; defaults to `max(t_end/500, 10·dt_initial)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
}

impl Scenario {
    /// A template with the critical law and the cosine bump of the given mass.
    pub fn critical_bump(mass: f64, cells: usize, t_end: f64) -> Self {
        Self {
            variant: Variant::ParabolicParabolic,
            nonlinearity: Nonlinearity::critical(),
            initial_u: Profile::Cosine { mass, amplitude: 1.0 },
            initial_v: None,
            cells,
            dt_initial: 1e-4,
            dt_min: 1e-12,
            dt_max: 1e-2,
            t_end,
            t0_monitor: (0.1f64).min(0.5 * t_end),
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            positivity_floor: DEFAULT_POSITIVITY_FLOOR,
            stepper: StepperKind::Imex1,
            advection_scheme: AdvectionScheme::Upwind,
            output_interval: None,
        }
    }

    /// The homogeneous steady pair `(u, v) ≡ (mass, mass)`.
    pub fn steady(mass: f64, cells: usize, t_end: f64) -> Self {
        Self {
            initial_u: Profile::Constant { mass },
            ..Self::critical_bump(mass, cells, t_end)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.cells < 4 {
            return bad(format!("cells must be >= 4, got {}", self.cells));
        }
        let positive = [
            ("dt_initial", self.dt_initial),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("blowup_threshold", self.blowup_threshold),
            ("positivity_floor", self.positivity_floor),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return bad(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if !(self.dt_min <= self.dt_initial && self.dt_initial <= self.dt_max) {
            return bad(format!(
                "need dt_min <= dt_initial <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_initial, self.dt_max
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if self.t_end > 0.0 && !(self.t0_monitor > 0.0 && self.t0_monitor < self.t_end) {
            return bad(format!(
                "need 0 < t0_monitor < t_end, got t0_monitor = {} with t_end = {}",
                self.t0_monitor, self.t_end
            ));
        }
        if let Some(dt) = self.output_interval {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(format!("output_interval must be positive, got {dt}"));
            }
        }
        self.initial_u.validate("initial_u")?;
        if let Some(v) = &self.initial_v {
            v.validate("initial_v")?;
        }
        Ok(())
    }

    pub fn output_interval(&self) -> f64 {
        self.output_interval
            .unwrap_or_else(|| (self.t_end / 500.0).max(10.0 * self.dt_initial))
    }

    pub fn initial_mass(&self) -> f64 {
        self.initial_u.mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "variant": "parabolic_parabolic",
        "nonlinearity": {"kind": "power", "p": 1.0},
        "initial_u": {"profile": "cosine", "mass": 20.0, "amplitude": 1.0},
        "cells": 512,
        "dt_initial": 1e-4,
        "dt_min": 1e-12,
        "dt_max": 1e-2,
        "t_end": 50.0,
        "t0_monitor": 0.5,
        "blowup_threshold": 1e6,
        "stepper": "imex1",
        "advection_scheme": "upwind"
    }"#;

    #[test]
    fn parses_reference_config() {
        let s = Scenario::from_json(CONFIG).unwrap();
        assert_eq!(s.cells, 512);
        assert_eq!(s.stepper, StepperKind::Imex1);
        assert_eq!(s.nonlinearity, Nonlinearity::critical());
        assert_eq!(s.positivity_floor, DEFAULT_POSITIVITY_FLOOR);
        assert_eq!(s.output_interval(), 0.1);
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn rejects_unknown_keys_with_location() {
        let text = CONFIG.replace("\"cells\": 512,", "\"cells\": 512,\n        \"cellz\": 3,");
        let err = Scenario::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("cellz"), "{err}");
        let line = text.lines().position(|l| l.contains("cellz")).unwrap() + 1;
        assert!(err.contains(&format!("line {line}")), "{err}");
    }

    #[test]
    fn rejects_inconsistent_steps() {
        let mut s = Scenario::from_json(CONFIG).unwrap();
        s.dt_min = 1.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::from_json(CONFIG).unwrap();
        s.t0_monitor = 60.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::from_json(CONFIG).unwrap();
        s.cells = 3;
        assert!(s.validate().is_err());
        let mut s = Scenario::from_json(CONFIG).unwrap();
        s.initial_u = Profile::Cosine { mass: 1.0, amplitude: 1.5 };
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_horizon_is_allowed() {
        let mut s = Scenario::steady(1.0, 16, 0.0);
        s.t0_monitor = 0.0;
        s.validate().unwrap();
    }

    #[test]
    fn cosine_profile_has_requested_mass() {
        let n = 64;
        let centers: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let u = Profile::Cosine { mass: 20.0, amplitude: 1.0 }.sample(&centers);
        let mass: f64 = u.iter().sum::<f64>() / n as f64;
        assert!((mass - 20.0).abs() < 1e-12);
        assert!(u.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn gaussian_profile_is_neumann_compatible() {
        let p = Profile::Gaussian { mass: 3.0, amplitude: 5.0, center: 0.3, width: 0.1 };
        let h = 1e-6;
        for x0 in [0.0, 1.0] {
            let v = p.sample(&[x0 - h, x0 + h]);
            // one-sided slopes straddling the wall cancel for an even extension
            assert!((v[1] - v[0]).abs() / (2.0 * h) < 1e-4, "slope at {x0}");
        }
        let n = 200;
        let centers: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let u = p.sample(&centers);
        assert!((u.iter().sum::<f64>() / n as f64 - 3.0).abs() < 1e-12);
    }
}
