//! Backward Euler on the coupled system, Newton on interleaved unknowns
//! `(u_0, v_0, u_1, v_1, …)` with a banded Jacobian.

use super::{sources, Forcing, Rejection, StepControl};
use crate::linalg::BandMatrix;
use crate::model::{AdvectionScheme, Scenario, Variant};
use crate::spatial::{advective_flux, diffusive_flux, discrete_laplacian, divergence, Grid, State};

const BOUNDARY_FRACTION: f64 = 0.1;

fn iu(i: usize) -> usize {
    2 * i
}

fn iv(i: usize) -> usize {
    2 * i + 1
}

pub(super) fn backward_euler(
    grid: &Grid,
    state: &State,
    scenario: &Scenario,
    control: &StepControl,
    h: f64,
    forcing: Option<&dyn Forcing>,
) -> Result<State, Rejection> {
    let n = grid.cells();
    let dx = grid.dx();
    let nl = &scenario.nonlinearity;
    let pp = scenario.variant == Variant::ParabolicParabolic;
    let t1 = state.t + h;
    let src = sources(forcing, grid, t1);
    let mut u = state.u.clone();
    let mut v = state.v.clone();
    let mut jac = BandMatrix::new(2 * n, 2, 3);
    let mut last_update = f64::INFINITY;
    let mut converged = false;

    for _ in 0..control.newton_max_iter {
        let net = net_flux(grid, &u, &v, scenario)?;
        let div = divergence(grid, &net);
        let lap = discrete_laplacian(grid, &v);
        let mut rhs = vec![0.0; 2 * n];
        for i in 0..n {
            let su = src.as_ref().map_or(0.0, |s| s.0[i]);
            let sv = src.as_ref().map_or(0.0, |s| s.1[i]);
            rhs[iu(i)] = -(u[i] - state.u[i] - h * (div[i] + su));
            rhs[iv(i)] = if pp {
                -(v[i] - state.v[i] - h * (lap[i] - v[i] + u[i] + sv))
            } else {
                -(v[i] - lap[i] - u[i] - sv)
            };
        }
        if rhs.iter().any(|r| !r.is_finite()) {
            return Err(Rejection::NonFinite("Newton residual".into()));
        }

        jac.clear();
        let c = h / dx;
        for f in 0..n - 1 {
            // d(Fd - Fa)/dz on the face between cells f and f + 1
            let g = (v[f + 1] - v[f]) / dx;
            let mut d = [(iu(f), -nl.a(u[f]) / dx), (iu(f + 1), nl.a(u[f + 1]) / dx), (iv(f), 0.0), (iv(f + 1), 0.0)];
            let carried = match scenario.advection_scheme {
                AdvectionScheme::Upwind => {
                    if g > 0.0 {
                        d[0].1 -= g;
                        u[f]
                    } else {
                        d[1].1 -= g;
                        u[f + 1]
                    }
                }
                AdvectionScheme::Central => {
                    d[0].1 -= 0.5 * g;
                    d[1].1 -= 0.5 * g;
                    0.5 * (u[f] + u[f + 1])
                }
            };
            d[2].1 += carried / dx;
            d[3].1 -= carried / dx;
            for (col, val) in d {
                jac.add(iu(f), col, -c * val);
                jac.add(iu(f + 1), col, c * val);
            }
        }
        let k = 1.0 / (dx * dx);
        let (shift, diffusion, coupling) = if pp { (1.0 + h, h, -h) } else { (1.0, 1.0, -1.0) };
        for i in 0..n {
            jac.add(iu(i), iu(i), 1.0);
            jac.add(iv(i), iu(i), coupling);
            jac.add(iv(i), iv(i), shift);
            if i > 0 {
                jac.add(iv(i), iv(i), diffusion * k);
                jac.add(iv(i), iv(i - 1), -diffusion * k);
            }
            if i + 1 < n {
                jac.add(iv(i), iv(i), diffusion * k);
                jac.add(iv(i), iv(i + 1), -diffusion * k);
            }
        }
        jac.solve_in_place(&mut rhs).map_err(|e| Rejection::Singular { column: e.column })?;

        let mut alpha = 1.0f64;
        for i in 0..n {
            let d = rhs[iu(i)];
            if d < 0.0 {
                alpha = alpha.min((1.0 - BOUNDARY_FRACTION) * u[i] / -d);
            }
        }
        let mut size = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            u[i] += alpha * rhs[iu(i)];
            v[i] += alpha * rhs[iv(i)];
            size = size.max(rhs[iu(i)].abs()).max(rhs[iv(i)].abs());
            scale = scale.max(u[i].abs()).max(v[i].abs());
        }
        if !size.is_finite() {
            return Err(Rejection::NonFinite("Newton update".into()));
        }
        last_update = size;
        if alpha == 1.0 && size <= control.newton_tol * (1.0 + scale) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Rejection::Newton {
            iterations: control.newton_max_iter,
            update: last_update,
        });
    }

    // Rebuild u^{n+1} from the converged fluxes: exactly conservative.
    let div = divergence(grid, &net_flux(grid, &u, &v, scenario)?);
    let u_new: Vec<f64> = (0..n)
        .map(|i| state.u[i] + h * (div[i] + src.as_ref().map_or(0.0, |s| s.0[i])))
        .collect();
    Ok(State::new(t1, u_new, v))
}

fn net_flux(grid: &Grid, u: &[f64], v: &[f64], scenario: &Scenario) -> Result<Vec<f64>, Rejection> {
    if let Some(i) = u.iter().position(|&x| !(x > 0.0)) {
        return Err(Rejection::Positivity { cell: i, value: u[i] });
    }
    let diff = diffusive_flux(grid, u, &scenario.nonlinearity)?;
    let adv = advective_flux(grid, u, v, scenario.advection_scheme);
    Ok(diff.iter().zip(&adv).map(|(d, a)| d - a).collect())
}
