//! Heun's method on `(u, v)` jointly.

use super::{check_positive, elliptic_v, rhs_u, rhs_v, sources, Forcing, Rejection};
use crate::model::{Scenario, Variant};
use crate::spatial::{Grid, State};

fn rates(grid: &Grid, s: &State, scenario: &Scenario, src: Option<&(Vec<f64>, Vec<f64>)>) -> Result<(Vec<f64>, Vec<f64>), Rejection> {
    let mut ru = rhs_u(grid, s, &scenario.nonlinearity, scenario.advection_scheme)?;
    let mut rv = match scenario.variant {
        Variant::ParabolicParabolic => rhs_v(grid, s),
        Variant::ParabolicElliptic => Vec::new(),
    };
    if let Some((su, sv)) = src {
        ru.iter_mut().zip(su).for_each(|(r, s)| *r += s);
        rv.iter_mut().zip(sv).for_each(|(r, s)| *r += s);
    }
    Ok((ru, rv))
}

fn finish_v(grid: &Grid, scenario: &Scenario, u: &[f64], v: Vec<f64>, src: Option<&(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    match scenario.variant {
        Variant::ParabolicParabolic => v,
        Variant::ParabolicElliptic => elliptic_v(grid, u, src.map(|s| s.1.as_slice())),
    }
}

pub(super) fn heun(
    grid: &Grid,
    state: &State,
    scenario: &Scenario,
    h: f64,
    forcing: Option<&dyn Forcing>,
) -> Result<State, Rejection> {
    let pp = scenario.variant == Variant::ParabolicParabolic;
    let src0 = sources(forcing, grid, state.t);
    let (k1u, k1v) = rates(grid, state, scenario, src0.as_ref())?;

    let t1 = state.t + h;
    let src1 = sources(forcing, grid, t1);
    let u1: Vec<f64> = state.u.iter().zip(&k1u).map(|(u, k)| u + h * k).collect();
    check_positive(&u1, scenario.positivity_floor)?;
    let v1 = if pp {
        state.v.iter().zip(&k1v).map(|(v, k)| v + h * k).collect()
    } else {
        Vec::new()
    };
    let v1 = finish_v(grid, scenario, &u1, v1, src1.as_ref());
    let stage = State::new(t1, u1, v1);
    let (k2u, k2v) = rates(grid, &stage, scenario, src1.as_ref())?;

    let u: Vec<f64> = (0..state.u.len()).map(|i| state.u[i] + 0.5 * h * (k1u[i] + k2u[i])).collect();
    let v = if pp {
        (0..state.v.len()).map(|i| state.v[i] + 0.5 * h * (k1v[i] + k2v[i])).collect()
    } else {
        Vec::new()
    };
    let v = finish_v(grid, scenario, &u, v, src1.as_ref());
    Ok(State::new(t1, u, v))
}
