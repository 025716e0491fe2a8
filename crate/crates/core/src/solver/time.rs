//! Backward-Euler time marching on the active subdomain.

use std::collections::HashMap;

use crate::lsq::{Discretization, Mode, Problem, State, DEFAULT_QUADRATURE_DEGREE};
use crate::mesh::{Point, SubMesh, Triangulation};
use crate::model::{Model, ModelError};
use crate::par::Execution;
use crate::solver::gauss_newton::{gauss_newton, GaussNewtonConfig, GnRecord, StopReason};
use crate::solver::SolverError;

/// Stress used to start from a given velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaInit {
    /// Moment interpolation of `2η ε(u)`.
    #[default]
    Interpolate,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeLoopConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub t0: f64,
    pub sigma_init: SigmaInit,
    pub quadrature_degree: usize,
    pub exec: Execution,
}

impl Default for TimeLoopConfig {
    fn default() -> Self {
        TimeLoopConfig {
            dt: 600.0,
            n_steps: 1,
            t0: 0.0,
            sigma_init: SigmaInit::Interpolate,
            quadrature_degree: DEFAULT_QUADRATURE_DEGREE,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    /// 1-based step number.
    pub step: usize,
    pub time: f64,
    pub gn: Vec<GnRecord>,
    pub reason: StopReason,
    pub functional: f64,
    pub u_minus_vo_norm: f64,
    pub n_active_cells: usize,
}

impl StepLog {
    pub fn gn_iterations(&self) -> usize {
        self.gn.len() - 1
    }
}

/// What an observer sees after each completed step.
pub struct StepView<'a> {
    pub step: usize,
    pub time: f64,
    pub problem: &'a Problem<'a>,
    pub state: &'a State,
    pub active: &'a SubMesh,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub active: SubMesh,
    pub disc: Discretization,
    pub state: State,
    pub steps: Vec<StepLog>,
}

/// Stress coefficients for `u` according to `init`.
pub fn initial_stress(disc: &Discretization, model: &Model, u: &[f64], t: f64, init: SigmaInit) -> Result<Vec<f64>, ModelError> {
    if init == SigmaInit::Zero {
        return Ok(vec![0.0; disc.n_stress()]);
    }
    let mesh = disc.mesh();
    let zero = vec![0.0; disc.n_stress()];
    let mut failure = None;
    let f = disc.stress().interpolate_rows(mesh, |cell, x| {
        let eta = match model.coefficients_at(x, t) {
            Ok(c) => c.eta,
            Err(e) => {
                failure.get_or_insert(e);
                return [[0.0; 2]; 2];
            }
        };
        let xi = mesh.affine_map(cell).inverse_map(x);
        let eps = disc.evaluate(u, &zero, cell, xi).strain();
        [
            [2.0 * eta * eps[0][0], 2.0 * eta * eps[0][1]],
            [2.0 * eta * eps[1][0], 2.0 * eta * eps[1][1]],
        ]
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(f.coeffs),
    }
}

/// Active part of `mesh` at time `t`, selected by cell-averaged thickness.
pub fn active_mesh(mesh: &Triangulation, model: &Model, t: f64) -> Result<SubMesh, SolverError> {
    let mut failure = None;
    let h = mesh.cell_averages(|x| match model.fields.thickness.eval(x, t) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(mesh.active_subdomain(&h, model.params.h_min)?)
}

fn inverse_map(parent: &[usize]) -> HashMap<usize, usize> {
    parent.iter().enumerate().map(|(i, &p)| (p, i)).collect()
}

/// Moves velocity and stress between two active subdomains of the same
/// parent. Newly active velocity nodes take the ocean velocity, newly
/// active stress dofs are zero; constraints of the new spaces are applied.
fn transfer(
    from: (&SubMesh, &Discretization, &State),
    to: (&SubMesh, &Discretization),
    model: &Model,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let (old_sub, old_disc, old) = from;
    let (new_sub, new_disc) = to;
    let old_vertex = inverse_map(&old_sub.parent_vertex);
    let old_edge = inverse_map(&old_sub.parent_edge);
    let old_cell = inverse_map(&old_sub.parent_cell);
    let (nv_old, nv_new) = (old_sub.mesh.n_points(), new_sub.mesh.n_points());
    let new_mesh = &new_sub.mesh;

    let mut u = vec![0.0; new_disc.n_velocity()];
    let n_nodes = nv_new + new_mesh.n_edges();
    for node in 0..n_nodes {
        let source = if node < nv_new {
            old_vertex.get(&new_sub.parent_vertex[node]).copied()
        } else {
            old_edge.get(&new_sub.parent_edge[node - nv_new]).map(|&e| nv_old + e)
        };
        let value = match source {
            Some(s) => [old.u[2 * s], old.u[2 * s + 1]],
            None => {
                let x: Point = if node < nv_new {
                    new_mesh.points()[node]
                } else {
                    let [a, b] = new_mesh.edges()[node - nv_new];
                    let (p, q) = (new_mesh.points()[a], new_mesh.points()[b]);
                    [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
                };
                model.coefficients_at(x, t)?.v_o
            }
        };
        u[2 * node] = value[0];
        u[2 * node + 1] = value[1];
    }
    new_disc.velocity().dofmap.apply_constraints(&mut u);

    let (row_old, row_new) = (old_disc.n_stress() / 2, new_disc.n_stress() / 2);
    let (ne_old, ne_new) = (old_sub.mesh.n_edges(), new_mesh.n_edges());
    let mut sigma = vec![0.0; new_disc.n_stress()];
    for r in 0..2 {
        for e in 0..ne_new {
            if let Some(&oe) = old_edge.get(&new_sub.parent_edge[e]) {
                for m in 0..2 {
                    sigma[r * row_new + 2 * e + m] = old.sigma[r * row_old + 2 * oe + m];
                }
            }
        }
        for c in 0..new_mesh.n_cells() {
            if let Some(&oc) = old_cell.get(&new_sub.parent_cell[c]) {
                for k in 0..2 {
                    sigma[r * row_new + 2 * ne_new + 2 * c + k] = old.sigma[r * row_old + 2 * ne_old + 2 * oc + k];
                }
            }
        }
    }
    new_disc.stress().dofmap.apply_constraints(&mut sigma);
    Ok((u, sigma))
}

pub fn time_march(
    mesh: &Triangulation,
    model: &Model,
    u0: &dyn Fn(Point) -> [f64; 2],
    cfg: &TimeLoopConfig,
    gn: &GaussNewtonConfig,
) -> Result<Trajectory, SolverError> {
    time_march_with(mesh, model, u0, cfg, gn, |_| {})
}

/// Runs `cfg.n_steps` backward-Euler steps, calling `observer` after each.
/// The model's time step is replaced by `cfg.dt`.
pub fn time_march_with<F>(
    mesh: &Triangulation,
    model: &Model,
    u0: &dyn Fn(Point) -> [f64; 2],
    cfg: &TimeLoopConfig,
    gn: &GaussNewtonConfig,
    mut observer: F,
) -> Result<Trajectory, SolverError>
where
    F: FnMut(&StepView),
{
    let mut model = model.clone();
    model.params.dt = cfg.dt;
    model.params.validate()?;

    let mut active = active_mesh(mesh, &model, cfg.t0)?;
    let mut disc = Discretization::with_quadrature(active.mesh.clone(), cfg.quadrature_degree)?.with_execution(cfg.exec);
    let u = disc.velocity().interpolate_vector(disc.mesh(), u0).coeffs;
    let sigma = initial_stress(&disc, &model, &u, cfg.t0, cfg.sigma_init)?;
    let mut state = State {
        u_old: u.clone(),
        u,
        sigma,
    };
    let mut steps = Vec::with_capacity(cfg.n_steps);
    for step in 1..=cfg.n_steps {
        let t = cfg.t0 + step as f64 * cfg.dt;
        let next = active_mesh(mesh, &model, t)?;
        if next.parent_cell != active.parent_cell {
            let next_disc = Discretization::with_quadrature(next.mesh.clone(), cfg.quadrature_degree)?.with_execution(cfg.exec);
            let (u, sigma) = transfer((&active, &disc, &state), (&next, &next_disc), &model, t)?;
            state = State {
                u_old: u.clone(),
                u,
                sigma,
            };
            active = next;
            disc = next_disc;
        }
        state.u_old.clone_from(&state.u);
        let problem = Problem::new(&disc, &model, Mode::TimeDependent, t)?;
        let out = gauss_newton(&problem, state, gn).map_err(|e| SolverError::TimeStep {
            step,
            source: Box::new(e),
        })?;
        state = out.state;
        let last = *out.log.last().expect("log holds the initial iterate");
        let log = StepLog {
            step,
            time: t,
            functional: last.functional,
            gn: out.log,
            reason: out.reason,
            u_minus_vo_norm: last.u_minus_vo_norm,
            n_active_cells: disc.mesh().n_cells(),
        };
        observer(&StepView {
            step,
            time: t,
            problem: &problem,
            state: &state,
            active: &active,
        });
        steps.push(log);
    }
    Ok(Trajectory {
        active,
        disc,
        state,
        steps,
    })
}
