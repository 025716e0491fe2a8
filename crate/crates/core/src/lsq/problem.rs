use crate::lsq::discretization::{CellFrame, Discretization, LocalField, PointBasis, N_LOCAL, N_RT, N_U};
use crate::lsq::{residual, residual_derivative, Mode, ResidualSample, State};
use crate::mesh::Point;
use crate::model::{Model, ModelError, PointCoefficients};
use crate::par;
use crate::solver::CsrMatrix;

/// Normal equations of one Gauss-Newton step. Rows and columns of
/// constrained unknowns are identity with zero right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// The functional on a discretization for fixed model data and time, with
/// the coefficients cached at every quadrature point.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    disc: &'a Discretization,
    model: &'a Model,
    mode: Mode,
    time: f64,
    coefs: Vec<PointCoefficients>,
}

/// Cells whose local systems are computed together before scattering.
const ASSEMBLY_BATCH: usize = 256;

struct LocalSystem {
    matrix: [[f64; N_LOCAL]; N_LOCAL],
    rhs: [f64; N_LOCAL],
}

impl<'a> Problem<'a> {
    pub fn new(disc: &'a Discretization, model: &'a Model, mode: Mode, time: f64) -> Result<Self, ModelError> {
        let nq = disc.quadrature().len();
        let per_cell = par::map_range(disc.execution(), disc.mesh().n_cells(), |c| {
            disc.quadrature_points(c)
                .into_iter()
                .map(|x| model.coefficients_at(x, time))
                .collect::<Result<Vec<_>, _>>()
        });
        let mut coefs = Vec::with_capacity(nq * disc.mesh().n_cells());
        for cell in per_cell {
            coefs.extend(cell?);
        }
        Ok(Problem {
            disc,
            model,
            mode,
            time,
            coefs,
        })
    }

    pub fn discretization(&self) -> &Discretization {
        self.disc
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Cached coefficients at quadrature point `q` of `cell`.
    pub fn coefficients(&self, cell: usize, q: usize) -> &PointCoefficients {
        &self.coefs[cell * self.disc.quadrature().len() + q]
    }

    /// Calls `f(q, weight, basis, field, u_old, coefficients)` for every
    /// quadrature point of a cell.
    fn for_each_point<F>(&self, cell: usize, u: &[f64], sigma: &[f64], u_old: &[f64], mut f: F)
    where
        F: FnMut(usize, f64, &PointBasis, &LocalField, [f64; 2], &PointCoefficients),
    {
        let frame: CellFrame = self.disc.frame(cell);
        let (lu, ls) = self.disc.gather(cell, u, sigma);
        let lo = self.disc.gather_velocity(cell, u_old);
        let det = frame.amap.det.abs();
        let weights = &self.disc.quadrature().weights;
        for (q, r) in self.disc.ref_points().iter().enumerate() {
            let b = frame.push(r);
            let field = LocalField::from_local(&b, &lu, &ls);
            let mut old = [0.0; 2];
            for a in 0..6 {
                old[0] += lo[2 * a] * b.phi[a];
                old[1] += lo[2 * a + 1] * b.phi[a];
            }
            f(q, weights[q] * det, &b, &field, old, self.coefficients(cell, q));
        }
    }

    fn cell_indicator(&self, state: &State, cell: usize) -> f64 {
        let params = &self.model.params;
        let mut acc = 0.0;
        self.for_each_point(cell, &state.u, &state.sigma, &state.u_old, |_, w, _, f, old, coef| {
            acc += w * residual(params, self.mode, coef, f, old).norm_sq();
        });
        acc
    }

    /// Per-cell contributions `∫_T |r1|² + |r2|²`.
    pub fn local_indicators(&self, state: &State) -> Vec<f64> {
        par::map_range(self.disc.execution(), self.disc.mesh().n_cells(), |c| self.cell_indicator(state, c))
    }

    /// The functional; equals the in-order sum of [`Self::local_indicators`].
    pub fn functional(&self, state: &State) -> f64 {
        self.local_indicators(state).iter().sum()
    }

    /// Residual components at every quadrature point, weighted so that the
    /// squared Euclidean norm equals the functional.
    pub fn residual_vector(&self, state: &State) -> Vec<f64> {
        let params = &self.model.params;
        let cells = par::map_range(self.disc.execution(), self.disc.mesh().n_cells(), |c| {
            let mut out = Vec::with_capacity(6 * self.disc.quadrature().len());
            self.for_each_point(c, &state.u, &state.sigma, &state.u_old, |_, w, _, f, old, coef| {
                let s = w.sqrt();
                out.extend(residual(params, self.mode, coef, f, old).components().map(|v| s * v));
            });
            out
        });
        cells.concat()
    }

    /// Derivative of [`Self::residual_vector`] at `state` in direction `dx`
    /// (global unknown order).
    pub fn residual_derivative_vector(&self, state: &State, dx: &[f64]) -> Vec<f64> {
        let params = &self.model.params;
        let nu = self.disc.n_velocity();
        let (du, ds) = dx.split_at(nu);
        let cells = par::map_range(self.disc.execution(), self.disc.mesh().n_cells(), |c| {
            let (lu, ls) = self.disc.gather(c, du, ds);
            let mut out = Vec::with_capacity(6 * self.disc.quadrature().len());
            self.for_each_point(c, &state.u, &state.sigma, &state.u_old, |_, w, b, f, _, coef| {
                let d = LocalField::from_local(b, &lu, &ls);
                let s = w.sqrt();
                out.extend(residual_derivative(params, self.mode, coef, f, &d).components().map(|v| s * v));
            });
            out
        });
        cells.concat()
    }

    /// Residual at an arbitrary reference point of a cell; coefficients are
    /// sampled directly from the model.
    pub fn residual_at(&self, state: &State, cell: usize, xi: Point) -> Result<ResidualSample, ModelError> {
        let (coef, f) = self.sample(state, cell, xi)?;
        let old = self.disc.evaluate_velocity(&state.u_old, cell, xi);
        Ok(residual(&self.model.params, self.mode, &coef, &f, old))
    }

    /// Derivative of [`Self::residual_at`] in direction `dx`.
    pub fn residual_derivative_at(
        &self,
        state: &State,
        cell: usize,
        xi: Point,
        dx: &[f64],
    ) -> Result<ResidualSample, ModelError> {
        let (coef, f) = self.sample(state, cell, xi)?;
        let (du, ds) = dx.split_at(self.disc.n_velocity());
        let d = self.disc.evaluate(du, ds, cell, xi);
        Ok(residual_derivative(&self.model.params, self.mode, &coef, &f, &d))
    }

    fn sample(&self, state: &State, cell: usize, xi: Point) -> Result<(PointCoefficients, LocalField), ModelError> {
        let x = self.disc.mesh().affine_map(cell).map(xi);
        let coef = self.model.coefficients_at(x, self.time)?;
        Ok((coef, self.disc.evaluate(&state.u, &state.sigma, cell, xi)))
    }

    /// Sum of the squared L2 norms of the individual terms of both
    /// residuals. The functional cannot be resolved much below
    /// `f64::EPSILON²` times this value.
    pub fn term_scale(&self, state: &State) -> f64 {
        let params = &self.model.params;
        let parts = par::map_range(self.disc.execution(), self.disc.mesh().n_cells(), |c| {
            let mut acc = 0.0;
            self.for_each_point(c, &state.u, &state.sigma, &state.u_old, |_, w, _, f, old, coef| {
                let sb = coef.beta.sqrt();
                let se = (2.0 * coef.eta).sqrt();
                let drag = crate::model::ocean_drag(f.u, coef.v_o, params);
                let eps = f.strain();
                let mut s = 0.0;
                for i in 0..2 {
                    if self.mode == Mode::TimeDependent {
                        s += ((f.u[i] - old[i]) / sb).powi(2);
                    }
                    s += (sb * drag[i]).powi(2) + (sb * f.div_sigma[i]).powi(2) + (sb * coef.g[i]).powi(2);
                    for j in 0..2 {
                        s += (f.sigma[i][j] / se).powi(2) + (se * eps[i][j]).powi(2);
                    }
                }
                acc += w * s;
            });
            acc
        });
        parts.iter().sum()
    }

    /// `‖u - v_o‖` in L2.
    pub fn velocity_misfit(&self, state: &State) -> f64 {
        let parts = par::map_range(self.disc.execution(), self.disc.mesh().n_cells(), |c| {
            let mut acc = 0.0;
            self.for_each_point(c, &state.u, &state.sigma, &state.u_old, |_, w, _, f, _, coef| {
                acc += w * ((f.u[0] - coef.v_o[0]).powi(2) + (f.u[1] - coef.v_o[1]).powi(2));
            });
            acc
        });
        parts.iter().sum::<f64>().sqrt()
    }

    fn local_system(&self, state: &State, cell: usize) -> LocalSystem {
        let params = &self.model.params;
        let mut sys = LocalSystem {
            matrix: [[0.0; N_LOCAL]; N_LOCAL],
            rhs: [0.0; N_LOCAL],
        };
        let mut jac = [[0.0; 6]; N_LOCAL];
        self.for_each_point(cell, &state.u, &state.sigma, &state.u_old, |_, w, b, f, old, coef| {
            let r = residual(params, self.mode, coef, f, old).components();
            for (j, col) in jac.iter_mut().enumerate() {
                let d = unit_direction(b, j);
                *col = residual_derivative(params, self.mode, coef, f, &d).components();
            }
            for i in 0..N_LOCAL {
                let ji = &jac[i];
                sys.rhs[i] -= w * (0..6).map(|k| ji[k] * r[k]).sum::<f64>();
                for j in i..N_LOCAL {
                    let jj = &jac[j];
                    sys.matrix[i][j] += w * (0..6).map(|k| ji[k] * jj[k]).sum::<f64>();
                }
            }
        });
        for i in 0..N_LOCAL {
            for j in 0..i {
                sys.matrix[i][j] = sys.matrix[j][i];
            }
        }
        sys
    }

    /// Normal equations `(DR[φ_i], DR[φ_j]) x = -(R, DR[φ_i])` at `state`.
    pub fn assemble(&self, state: &State) -> GaussNewtonSystem {
        let disc = self.disc;
        let mut matrix = disc.empty_matrix();
        let mut rhs = vec![0.0; disc.n_dofs()];
        let n_cells = disc.mesh().n_cells();
        let mut start = 0;
        while start < n_cells {
            let end = (start + ASSEMBLY_BATCH).min(n_cells);
            let locals = par::map_range(disc.execution(), end - start, |k| self.local_system(state, start + k));
            for (k, local) in locals.iter().enumerate() {
                let dofs = disc.cell_dofs(start + k);
                for i in 0..N_LOCAL {
                    if disc.is_constrained(dofs[i]) {
                        continue;
                    }
                    rhs[dofs[i]] += local.rhs[i];
                    for j in 0..N_LOCAL {
                        if !disc.is_constrained(dofs[j]) {
                            matrix.add_at(dofs[i], dofs[j], local.matrix[i][j]);
                        }
                    }
                }
            }
            start = end;
        }
        for d in 0..disc.n_dofs() {
            if disc.is_constrained(d) {
                matrix.set(d, d, 1.0);
            }
        }
        GaussNewtonSystem { matrix, rhs }
    }
}

/// Field of local basis function `j` (velocity first, then stress rows).
fn unit_direction(b: &PointBasis, j: usize) -> LocalField {
    let mut d = LocalField::default();
    if j < N_U {
        let (a, c) = (j / 2, j % 2);
        d.u[c] = b.phi[a];
        d.grad_u[c] = b.grad[a];
    } else {
        let (r, m) = ((j - N_U) / N_RT, (j - N_U) % N_RT);
        d.sigma[r] = b.psi[m];
        d.div_sigma[r] = b.div[m];
    }
    d
}
