//! Coarse against restricted fine runs.

use std::fmt::Write as _;

use serde::Serialize;

use super::mms::l2_distance;
use crate::error::{Error, Result};
use crate::functionals::FunctionalSample;
use crate::model::Scenario;
use crate::spatial::Grid;
use crate::timestep::{run_with, RunOptions, RunReport, TerminationStatus};

/// Cell averages of `fine` over groups of `fine.len() / coarse_cells` cells.
pub fn restrict(fine: &[f64], coarse_cells: usize) -> Result<Vec<f64>> {
    if coarse_cells == 0 || !fine.len().is_multiple_of(coarse_cells) {
        return Err(Error::GridMismatch(format!(
            "{} fine cells do not nest in {coarse_cells} coarse cells",
            fine.len()
        )));
    }
    let r = fine.len() / coarse_cells;
    Ok(fine.chunks(r).map(|c| c.iter().sum::<f64>() / r as f64).collect())
}

/// Largest gap between two runs in one sampled quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalGap {
    pub name: &'static str,
    pub max_abs: f64,
    /// `max |a - b| / max(|a|, |b|)`.
    pub max_rel: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub coarse_cells: usize,
    pub fine_cells: usize,
    pub coarse_status: TerminationStatus,
    pub fine_status: TerminationStatus,
    /// Sample times present in both runs.
    pub common_samples: usize,
    /// `max_t ‖u_coarse - R u_fine‖₂`.
    pub u_gap: f64,
    pub v_gap: f64,
    pub functional_gaps: Vec<FunctionalGap>,
    /// Relative gap of `sup u` restricted to `t >= t0_monitor`.
    pub sup_u_rel_gap_after_t0: f64,
    /// `|t_c - t_f| / t_f` of the termination times when both runs stopped
    /// early.
    pub stop_time_shift: Option<f64>,
}

impl CompareReport {
    pub fn gap(&self, name: &str) -> Option<&FunctionalGap> {
        self.functional_gaps.iter().find(|g| g.name == name)
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "coarse N = {}: {}", self.coarse_cells, self.coarse_status);
        let _ = writeln!(out, "fine   N = {}: {}", self.fine_cells, self.fine_status);
        let _ = writeln!(out, "common samples: {}", self.common_samples);
        let _ = writeln!(out, "max L2 gap u: {:e}, v: {:e}", self.u_gap, self.v_gap);
        let _ = writeln!(out, "sup u relative gap after t0: {:e}", self.sup_u_rel_gap_after_t0);
        if let Some(shift) = self.stop_time_shift {
            let _ = writeln!(out, "termination time shift: {shift:e}");
        }
        for g in &self.functional_gaps {
            let _ = writeln!(out, "  {:<16} abs {:<14.6e} rel {:.6e}", g.name, g.max_abs, g.max_rel);
        }
        out
    }
}

type Pick = fn(&FunctionalSample) -> f64;

const COMPARED: [(&str, Pick); 8] = [
    ("sup_u", |s| s.sup_u),
    ("L", |s| s.l_value),
    ("F", |s| s.f_value),
    ("D", |s| s.d_value),
    ("grad_term", |s| s.grad_term),
    ("uLambda_term", |s| s.u_lambda_term),
    ("lambda_W11", |s| s.lambda_w11),
    ("sup_abs_lambda", |s| s.sup_abs_lambda),
];

/// Symmetric relative difference.
fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn keep_states(scenario: &Scenario) -> Result<RunReport> {
    run_with(
        scenario,
        &RunOptions {
            keep_states: true,
            ..Default::default()
        },
    )
}

/// Runs `scenario` at `n_coarse` and `n_fine` cells (the fine run with its
/// step bounds scaled by `dt_fine_factor`) and compares them on common
/// sample times.
pub fn reference_compare(scenario: &Scenario, n_coarse: usize, n_fine: usize, dt_fine_factor: f64) -> Result<CompareReport> {
    if n_fine < 4 * n_coarse || !n_fine.is_multiple_of(n_coarse) {
        return Err(Error::Config(format!(
            "fine resolution {n_fine} must be a multiple of at least 4 x {n_coarse}"
        )));
    }
    if !(dt_fine_factor > 0.0 && dt_fine_factor <= 1.0) {
        return Err(Error::Config(format!("dt_fine_factor {dt_fine_factor} outside (0, 1]")));
    }
    let mut coarse = scenario.clone();
    coarse.cells = n_coarse;
    coarse.output_interval = Some(scenario.output_interval());
    let mut fine = coarse.clone();
    fine.cells = n_fine;
    fine.dt_initial *= dt_fine_factor;
    fine.dt_max *= dt_fine_factor;
    fine.dt_min *= dt_fine_factor;
    let (c, f) = rayon::join(|| keep_states(&coarse), || keep_states(&fine));
    let (c, f) = (c?, f?);
    compare_reports(&c, &f, scenario.t0_monitor)
}

/// The comparison itself; symmetric in the two runs up to the restriction
/// applied to the finer one.
pub fn compare_reports(a: &RunReport, b: &RunReport, t0: f64) -> Result<CompareReport> {
    let (coarse, fine) = if a.scenario.cells <= b.scenario.cells { (a, b) } else { (b, a) };
    let nc = coarse.scenario.cells;
    let grid = Grid::new(nc)?;
    let mut u_gap = 0.0f64;
    let mut v_gap = 0.0f64;
    let mut gaps: Vec<FunctionalGap> = COMPARED
        .iter()
        .map(|(name, _)| FunctionalGap {
            name,
            max_abs: 0.0,
            max_rel: 0.0,
        })
        .collect();
    let mut sup_gap = 0.0f64;
    let mut common = 0;
    let mut j = 0;
    for (i, sc) in coarse.samples.iter().enumerate() {
        while j < fine.samples.len() && fine.samples[j].t < sc.t {
            j += 1;
        }
        if j == fine.samples.len() {
            break;
        }
        let sf = &fine.samples[j];
        if sf.t != sc.t {
            continue;
        }
        common += 1;
        if let (Some(xc), Some(xf)) = (coarse.sample_states.get(i), fine.sample_states.get(j)) {
            u_gap = u_gap.max(l2_distance(&grid, &xc.u, &restrict(&xf.u, nc)?));
            v_gap = v_gap.max(l2_distance(&grid, &xc.v, &restrict(&xf.v, nc)?));
        }
        for (g, (_, pick)) in gaps.iter_mut().zip(COMPARED.iter()) {
            let (x, y) = (pick(sc), pick(sf));
            g.max_abs = g.max_abs.max((x - y).abs());
            g.max_rel = g.max_rel.max(rel(x, y));
        }
        if sc.t >= t0 {
            sup_gap = sup_gap.max(rel(sc.sup_u, sf.sup_u));
        }
    }
    let stop = |r: &RunReport| match r.status {
        TerminationStatus::Completed => None,
        _ => r.samples.last().map(|s| s.t),
    };
    let stop_time_shift = match (stop(coarse), stop(fine)) {
        (Some(tc), Some(tf)) => Some((tc - tf).abs() / tf.abs().max(tc.abs())),
        _ => None,
    };
    Ok(CompareReport {
        coarse_cells: nc,
        fine_cells: fine.scenario.cells,
        coarse_status: coarse.status.clone(),
        fine_status: fine.status.clone(),
        common_samples: common,
        u_gap,
        v_gap,
        functional_gaps: gaps,
        sup_u_rel_gap_after_t0: sup_gap,
        stop_time_shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restriction_averages_blocks() {
        assert_eq!(restrict(&[1.0, 3.0, 5.0, 7.0], 2).unwrap(), vec![2.0, 6.0]);
        assert!(restrict(&[1.0, 2.0, 3.0], 2).is_err());
        // mass is preserved
        let fine: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin() + 2.0).collect();
        let coarse = restrict(&fine, 16).unwrap();
        let mf: f64 = fine.iter().sum::<f64>() / 64.0;
        let mc: f64 = coarse.iter().sum::<f64>() / 16.0;
        assert!((mf - mc).abs() < 1e-14);
    }

    #[test]
    fn steady_scenario_has_no_gap() {
        let s = Scenario::steady(1.0, 16, 0.5);
        let r = reference_compare(&s, 16, 64, 0.5).unwrap();
        assert!(r.u_gap <= 1e-10 && r.v_gap <= 1e-10, "{}", r.text());
        assert!(r.functional_gaps.iter().all(|g| g.max_abs <= 1e-10), "{}", r.text());
        assert!(r.common_samples > 10);
    }

    #[test]
    fn comparison_is_symmetric() {
        let mut s = Scenario::critical_bump(2.0, 16, 0.2);
        s.output_interval = Some(0.02);
        let a = keep_states(&s).unwrap();
        s.cells = 64;
        let b = keep_states(&s).unwrap();
        let ab = compare_reports(&a, &b, 0.1).unwrap();
        let ba = compare_reports(&b, &a, 0.1).unwrap();
        assert_eq!(ab, ba);
        assert!(ab.u_gap > 0.0);
    }

    #[test]
    fn resolution_contract() {
        let s = Scenario::steady(1.0, 16, 0.1);
        assert!(reference_compare(&s, 16, 32, 1.0).is_err());
        assert!(reference_compare(&s, 16, 72, 1.0).is_err());
        assert!(reference_compare(&s, 16, 64, 0.0).is_err());
    }
}
