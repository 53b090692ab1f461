//! Parameter sweeps over the exponent `p` of `a(s) = (1 + s)^(-p)` and the
//! initial mass.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Nonlinearity, Scenario};
use crate::timestep::{run, RunReport, TerminationStatus};

pub const PHASE_CSV_HEADER: &str = "p,M,status,sup_u_final,t_stop";

/// A base scenario and the `(p, M)` grid spanned around it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: Scenario,
    pub p: Vec<f64>,
    pub mass: Vec<f64>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.mass.is_empty() {
            return Err(Error::Config("sweep needs at least one p and one mass".into()));
        }
        for (name, values) in [("p", &self.p), ("mass", &self.mass)] {
            if values.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("sweep {name} values must be finite")));
            }
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    /// Cell scenarios in sorted `(p, M)` order, duplicates removed.
    pub fn cells(&self) -> Vec<Scenario> {
        let sorted = |xs: &[f64]| {
            let mut v = xs.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let masses = sorted(&self.mass);
        sorted(&self.p)
            .into_iter()
            .flat_map(|p| masses.iter().map(move |&m| (p, m)))
            .map(|(p, m)| self.cell(p, m))
            .collect()
    }

    pub fn cell(&self, p: f64, mass: f64) -> Scenario {
        let mut s = self.base.clone();
        s.nonlinearity = Nonlinearity::power(p);
        s.initial_u = s.initial_u.with_mass(mass);
        s.initial_v = s.initial_v.map(|v| v.with_mass(mass));
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub p: f64,
    pub mass: f64,
    pub status: TerminationStatus,
    pub sup_u_final: f64,
    pub t_stop: f64,
}

impl PhaseRow {
    pub fn from_report(p: f64, mass: f64, report: &RunReport) -> Self {
        let last = report.samples.last();
        let t_stop = match &report.status {
            TerminationStatus::Completed => last.map_or(0.0, |s| s.t),
            TerminationStatus::BlowupSuspected { t_stop, .. } | TerminationStatus::StepFailure { t_stop, .. } => *t_stop,
        };
        let sup_u_final = match &report.status {
            TerminationStatus::BlowupSuspected { sup_u, .. } => *sup_u,
            _ => report.final_state.max_u(),
        };
        Self {
            p,
            mass,
            status: report.status.clone(),
            sup_u_final,
            t_stop,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.17e},{:.17e}",
            self.p,
            self.mass,
            self.status.label(),
            self.sup_u_final,
            self.t_stop
        )
    }
}

pub struct SweepReport {
    pub rows: Vec<PhaseRow>,
    /// One report per row, in the same order.
    pub reports: Vec<RunReport>,
}

impl SweepReport {
    pub fn phase_csv(&self) -> String {
        let mut out = String::from(PHASE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    /// Status table with one line per `p` and one column per mass.
    pub fn summary_grid(&self) -> String {
        let mut ps: Vec<f64> = self.rows.iter().map(|r| r.p).collect();
        ps.dedup();
        let mut ms: Vec<f64> = self.rows.iter().map(|r| r.mass).collect();
        ms.sort_by(f64::total_cmp);
        ms.dedup();
        let mut out = format!("{:>8}", "p \\ M");
        for m in &ms {
            let _ = write!(out, " {:>16}", m);
        }
        out.push('\n');
        for p in &ps {
            let _ = write!(out, "{:>8}", p);
            for m in &ms {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.p == *p && r.mass == *m)
                    .map_or("-", |r| r.status.label());
                let _ = write!(out, " {:>16}", cell);
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every cell on a pool of at most `workers` threads. Rows come back in
/// sorted grid order whatever the completion order.
pub fn run_sweep(config: &SweepConfig, workers: usize) -> Result<SweepReport> {
    config.validate()?;
    let cells = config.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let reports = pool.install(|| cells.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    let rows = cells
        .iter()
        .zip(&reports)
        .map(|(s, r)| {
            let p = match s.nonlinearity.law() {
                crate::model::Law::Power { p } => *p,
                _ => unreachable!("sweep cells use the power law"),
            };
            PhaseRow::from_report(p, s.initial_mass(), r)
        })
        .collect();
    Ok(SweepReport { rows, reports })
}
