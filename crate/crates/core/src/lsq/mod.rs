//! The least-squares formulation: pointwise residuals, the functional, its
//! Gauss-Newton linearization, normal-equation assembly and element-local
//! indicators.
//!
//! With `w = u - v_o` the residuals are
//!
//! ```text
//! r1 = β^{-1/2}(u - u_old) + β^{1/2}(τ_o(u) - div σ - g)
//! r2 = (2η)^{-1/2} σ - (2η)^{1/2} ε(u)
//! ```
//!
//! and the functional is `Σ_T ∫_T |r1|² + |r2|²`. The stationary mode drops
//! the `u - u_old` term.

mod discretization;
mod problem;

pub use discretization::{Discretization, LocalField, DEFAULT_QUADRATURE_DEGREE, N_LOCAL, N_RT, N_U};
pub use problem::{GaussNewtonSystem, Problem};

use crate::model::{ocean_drag, ocean_drag_derivative, PhysicalParams, PointCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    TimeDependent,
    Stationary,
}

/// Discrete velocity and stress plus the previous-step velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    pub u_old: Vec<f64>,
}

impl State {
    pub fn zeros(disc: &Discretization) -> Self {
        State {
            u: vec![0.0; disc.n_velocity()],
            sigma: vec![0.0; disc.n_stress()],
            u_old: vec![0.0; disc.n_velocity()],
        }
    }

    /// `(u, σ)` concatenated in the global unknown order.
    pub fn unknowns(&self) -> Vec<f64> {
        let mut x = self.u.clone();
        x.extend_from_slice(&self.sigma);
        x
    }

    /// Adds `scale * dx` to `(u, σ)`.
    pub fn add_scaled(&mut self, dx: &[f64], scale: f64) {
        let nu = self.u.len();
        assert_eq!(dx.len(), nu + self.sigma.len());
        for (u, d) in self.u.iter_mut().zip(&dx[..nu]) {
            *u += scale * d;
        }
        for (s, d) in self.sigma.iter_mut().zip(&dx[nu..]) {
            *s += scale * d;
        }
    }
}

/// Momentum residual `r1` and constitutive residual `r2` at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualSample {
    pub r1: [f64; 2],
    pub r2: [[f64; 2]; 2],
}

impl ResidualSample {
    pub fn norm_sq(&self) -> f64 {
        self.components().iter().map(|v| v * v).sum()
    }

    /// `(r1_x, r1_y, r2_xx, r2_xy, r2_yx, r2_yy)`.
    pub fn components(&self) -> [f64; 6] {
        [self.r1[0], self.r1[1], self.r2[0][0], self.r2[0][1], self.r2[1][0], self.r2[1][1]]
    }
}

/// Residual at a point from field values and coefficients.
pub fn residual(
    params: &PhysicalParams,
    mode: Mode,
    coef: &PointCoefficients,
    f: &LocalField,
    u_old: [f64; 2],
) -> ResidualSample {
    let sb = coef.beta.sqrt();
    let se = (2.0 * coef.eta).sqrt();
    let drag = ocean_drag(f.u, coef.v_o, params);
    let mut r1 = [0.0; 2];
    for i in 0..2 {
        r1[i] = sb * (drag[i] - f.div_sigma[i] - coef.g[i]);
        if mode == Mode::TimeDependent {
            r1[i] += (f.u[i] - u_old[i]) / sb;
        }
    }
    let eps = f.strain();
    let mut r2 = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r2[i][j] = f.sigma[i][j] / se - se * eps[i][j];
        }
    }
    ResidualSample { r1, r2 }
}

/// Gateaux derivative of [`residual`] at `f` in direction `d`.
pub fn residual_derivative(
    params: &PhysicalParams,
    mode: Mode,
    coef: &PointCoefficients,
    f: &LocalField,
    d: &LocalField,
) -> ResidualSample {
    let sb = coef.beta.sqrt();
    let se = (2.0 * coef.eta).sqrt();
    let ddrag = ocean_drag_derivative(f.u, coef.v_o, d.u, params);
    let mut r1 = [0.0; 2];
    for i in 0..2 {
        r1[i] = sb * (ddrag[i] - d.div_sigma[i]);
        if mode == Mode::TimeDependent {
            r1[i] += d.u[i] / sb;
        }
    }
    let eps = d.strain();
    let mut r2 = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r2[i][j] = d.sigma[i][j] / se - se * eps[i][j];
        }
    }
    ResidualSample { r1, r2 }
}

#[cfg(test)]
mod tests;
