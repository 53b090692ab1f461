//! Cell-centered finite volumes on `(0, 1)` with homogeneous Neumann walls.
//!
//! Fluxes live on the `N + 1` interfaces `x_{i-1/2}`; the two wall fluxes are
//! identically zero, so every divergence telescopes and the dx-weighted sum of
//! cell rates vanishes up to roundoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::model::{AdvectionScheme, Nonlinearity};

/// Uniform mesh of `cells` cells on the unit interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    cells: usize,
    dx: f64,
    centers: Vec<f64>,
}

impl Grid {
    pub fn new(cells: usize) -> Result<Self> {
        if cells < 4 {
            return Err(Error::Config(format!("a grid needs at least 4 cells, got {cells}")));
        }
        Ok(Self::new_unchecked(cells))
    }

    // Small grids are handy for hand-checked stencils.
    pub(crate) fn new_unchecked(cells: usize) -> Self {
        let dx = 1.0 / cells as f64;
        Self {
            cells,
            dx,
            centers: (0..cells).map(|i| (i as f64 + 0.5) * dx).collect(),
        }
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// `Σ w_i dx`
    pub fn integrate(&self, w: &[f64]) -> f64 {
        w.iter().sum::<f64>() * self.dx
    }

    pub fn check_len(&self, name: &str, w: &[f64]) -> Result<()> {
        if w.len() == self.cells {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{name} has {} entries on a {}-cell grid",
                w.len(),
                self.cells
            )))
        }
    }
}

/// Cell averages of density and chemoattractant at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>) -> Self {
        debug_assert_eq!(u.len(), v.len());
        Self { t, u, v }
    }

    pub fn cells(&self) -> usize {
        self.u.len()
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Interface differences `(w_{i+1} - w_i)/dx` on the `N - 1` interior faces.
pub fn interface_gradient(grid: &Grid, w: &[f64]) -> Vec<f64> {
    let inv = 1.0 / grid.dx();
    w.windows(2).map(|p| (p[1] - p[0]) * inv).collect()
}

/// Pads interior interface values with the two zero wall fluxes.
pub fn with_walls(interior: &[f64]) -> Vec<f64> {
    let mut f = Vec::with_capacity(interior.len() + 2);
    f.push(0.0);
    f.extend_from_slice(interior);
    f.push(0.0);
    f
}

/// Diffusive fluxes `(Λ(u_{i+1}) - Λ(u_i))/dx`, the discrete form of
/// `a(u) ∂x u = ∂x Λ(u)`.
pub fn diffusive_flux(grid: &Grid, u: &[f64], nl: &Nonlinearity) -> Result<Vec<f64>> {
    grid.check_len("u", u)?;
    let lambda = lambda_values(u, nl)?;
    Ok(with_walls(&interface_gradient(grid, &lambda)))
}

/// `Λ(u_i)` for every cell, failing on non-finite results.
pub fn lambda_values(u: &[f64], nl: &Nonlinearity) -> Result<Vec<f64>> {
    let lambda: Vec<f64> = u.iter().map(|&x| nl.lambda(x)).collect();
    if let Some(i) = lambda.iter().position(|l| !l.is_finite()) {
        return Err(Error::NonFinite(format!("Λ(u[{i}] = {})", u[i])));
    }
    Ok(lambda)
}

/// Chemotactic fluxes `u ∂x v` with drift `g = (v_{i+1} - v_i)/dx`.
pub fn advective_flux(grid: &Grid, u: &[f64], v: &[f64], scheme: AdvectionScheme) -> Vec<f64> {
    let drift = interface_gradient(grid, v);
    let interior: Vec<f64> = drift
        .iter()
        .enumerate()
        .map(|(i, &g)| match scheme {
            AdvectionScheme::Upwind => {
                if g > 0.0 {
                    g * u[i]
                } else {
                    g * u[i + 1]
                }
            }
            AdvectionScheme::Central => 0.5 * g * (u[i] + u[i + 1]),
        })
        .collect();
    with_walls(&interior)
}

/// Conservative difference `(f_{i+1/2} - f_{i-1/2})/dx`.
pub fn divergence(grid: &Grid, fluxes: &[f64]) -> Vec<f64> {
    debug_assert_eq!(fluxes.len(), grid.cells() + 1);
    let inv = 1.0 / grid.dx();
    fluxes.windows(2).map(|f| (f[1] - f[0]) * inv).collect()
}

/// Neumann discrete Laplacian (zero-flux closure in the wall cells).
pub fn discrete_laplacian(grid: &Grid, w: &[f64]) -> Vec<f64> {
    divergence(grid, &with_walls(&interface_gradient(grid, w)))
}

/// Solves `(shift·I - diffusion·Lap_h) v = rhs` with the Thomas algorithm.
pub fn solve_shifted_laplacian(grid: &Grid, shift: f64, diffusion: f64, rhs: &[f64]) -> Vec<f64> {
    let guess: Vec<f64> = rhs.iter().map(|r| r / shift).collect();
    solve_shifted_laplacian_from(grid, shift, diffusion, rhs, guess)
}

/// As [`solve_shifted_laplacian`], correcting an initial guess with two
/// defect-correction sweeps. An exact guess is returned unchanged.
pub fn solve_shifted_laplacian_from(grid: &Grid, shift: f64, diffusion: f64, rhs: &[f64], guess: Vec<f64>) -> Vec<f64> {
    let n = grid.cells();
    let k = diffusion / (grid.dx() * grid.dx());
    let off = vec![-k; n - 1];
    let mut diag = vec![shift + 2.0 * k; n];
    diag[0] = shift + k;
    diag[n - 1] = shift + k;
    let mut x = guess;
    for _ in 0..2 {
        let lap = discrete_laplacian(grid, &x);
        let mut defect: Vec<f64> = (0..n).map(|i| rhs[i] - (shift * x[i] - diffusion * lap[i])).collect();
        if defect.iter().all(|&d| d == 0.0) {
            break;
        }
        solve_tridiagonal(&off, &diag, &off, &mut defect);
        for (xi, d) in x.iter_mut().zip(&defect) {
            *xi += d;
        }
    }
    x
}

/// The parabolic-elliptic chemoattractant: `(I - Lap_h) v = u`.
pub fn helmholtz_solve(grid: &Grid, u: &[f64]) -> Vec<f64> {
    solve_shifted_laplacian_from(grid, 1.0, 1.0, u, u.to_vec())
}
