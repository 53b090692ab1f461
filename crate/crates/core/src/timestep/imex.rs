//! Backward-Euler `Λ`-diffusion with explicit advection, then a linear
//! backward-Euler solve for `v`.

use super::{check_positive, elliptic_v, sources, Forcing, Rejection, StepControl};
use crate::linalg::solve_tridiagonal;
use crate::model::{Nonlinearity, Scenario, Variant};
use crate::spatial::{
    advective_flux, diffusive_flux, discrete_laplacian, divergence, solve_shifted_laplacian, Grid, State,
};

// Newton iterates keep at least this fraction of their previous value.
const BOUNDARY_FRACTION: f64 = 0.1;

/// Solves `U - h·Lap_h Λ(U) = w` by damped Newton starting from `guess`.
pub(crate) fn solve_lambda_diffusion(
    grid: &Grid,
    nl: &Nonlinearity,
    w: &[f64],
    h: f64,
    guess: &[f64],
    control: &StepControl,
) -> Result<Vec<f64>, Rejection> {
    let n = w.len();
    let c = h / (grid.dx() * grid.dx());
    let mut u = guess.to_vec();
    let mut lower = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut last_update = f64::INFINITY;
    for _ in 0..control.newton_max_iter {
        let lambda: Vec<f64> = u.iter().map(|&x| nl.lambda(x)).collect();
        let lap = discrete_laplacian(grid, &lambda);
        let mut delta: Vec<f64> = (0..n).map(|i| -(u[i] - h * lap[i] - w[i])).collect();
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Rejection::NonFinite("Newton residual".into()));
        }
        let a: Vec<f64> = u.iter().map(|&x| nl.a(x)).collect();
        for i in 0..n {
            let neighbours = (i > 0) as usize + (i + 1 < n) as usize;
            diag[i] = 1.0 + c * neighbours as f64 * a[i];
        }
        for i in 0..n - 1 {
            upper[i] = -c * a[i + 1];
            lower[i] = -c * a[i];
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut delta);

        let mut alpha = 1.0f64;
        for (x, d) in u.iter().zip(&delta) {
            if *d < 0.0 {
                alpha = alpha.min((1.0 - BOUNDARY_FRACTION) * x / -d);
            }
        }
        let mut size = 0.0f64;
        let mut scale = 0.0f64;
        for (x, d) in u.iter_mut().zip(&delta) {
            *x += alpha * d;
            size = size.max(d.abs());
            scale = scale.max(x.abs());
        }
        if !size.is_finite() {
            return Err(Rejection::NonFinite("Newton update".into()));
        }
        last_update = size;
        if alpha == 1.0 && size <= control.newton_tol * (1.0 + scale) {
            return Ok(u);
        }
    }
    Err(Rejection::Newton {
        iterations: control.newton_max_iter,
        update: last_update,
    })
}

pub(super) fn imex1(
    grid: &Grid,
    state: &State,
    scenario: &Scenario,
    control: &StepControl,
    h: f64,
    forcing: Option<&dyn Forcing>,
) -> Result<State, Rejection> {
    let nl = &scenario.nonlinearity;
    let t1 = state.t + h;
    let src = sources(forcing, grid, state.t);

    let adv = divergence(grid, &advective_flux(grid, &state.u, &state.v, scenario.advection_scheme));
    let mut w: Vec<f64> = state.u.iter().zip(&adv).map(|(u, a)| u - h * a).collect();
    if let Some((su, _)) = &src {
        w.iter_mut().zip(su).for_each(|(w, s)| *w += h * s);
    }
    let guess: Vec<f64> = state.u.clone();
    let implicit = solve_lambda_diffusion(grid, nl, &w, h, &guess, control)?;

    // Rebuild u^{n+1} from the fluxes so the update is exactly conservative.
    let flux = diffusive_flux(grid, &implicit, nl)?;
    let diff = divergence(grid, &flux);
    let u: Vec<f64> = w.iter().zip(&diff).map(|(w, d)| w + h * d).collect();
    check_positive(&u, scenario.positivity_floor)?;

    let v = match scenario.variant {
        Variant::ParabolicParabolic => {
            // increment form: an exact steady state gives a zero right side
            let lap = discrete_laplacian(grid, &state.v);
            let mut rhs: Vec<f64> = (0..u.len()).map(|i| h * (lap[i] - state.v[i] + u[i])).collect();
            if let Some((_, sv)) = &src {
                rhs.iter_mut().zip(sv).for_each(|(r, s)| *r += h * s);
            }
            let dv = solve_shifted_laplacian(grid, 1.0 + h, h, &rhs);
            state.v.iter().zip(&dv).map(|(v, d)| v + d).collect()
        }
        Variant::ParabolicElliptic => {
            let src1 = sources(forcing, grid, t1);
            elliptic_v(grid, &u, src1.as_ref().map(|s| s.1.as_slice()))
        }
    };
    Ok(State::new(t1, u, v))
}
