//! Experiment driver, convergence study and mesh summary.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::lsq::{Discretization, Mode, Problem, State};
use crate::mesh::{read_mesh_file, square_grid, BoundaryTag, MeshError, Point, SubMesh, Triangulation};
use crate::model::Model;
use crate::solver::{
    active_mesh, gauss_newton, initial_stress, time_march_with, StepLog, StepView, StopReason, TimeLoopConfig,
};

use super::config::{MeshSource, RunConfig, SquareBoundary, VtkOutput};
use super::export::{indicators_csv, log_csv, vtk_string, write_file};
use super::AppError;

/// Final state of a run together with its per-step logs.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub active: SubMesh,
    pub disc: Discretization,
    pub state: State,
    pub steps: Vec<StepLog>,
    /// Model with the configured time step.
    pub model: Model,
    pub time: f64,
}

impl Simulation {
    fn problem(&self, mode: Mode) -> Result<Problem<'_>, AppError> {
        Problem::new(&self.disc, &self.model, mode, self.time).map_err(|e| AppError::Solver(e.into()))
    }

    pub fn final_functional(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.functional)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: Vec<StepLog>,
    pub n_cells: usize,
    pub n_dofs: usize,
    pub final_functional: f64,
    pub indicator_sum: f64,
}

fn mesh_error(path: &Path, e: MeshError) -> AppError {
    match e {
        MeshError::Io(io) => AppError::Io(format!("{}: {io}", path.display())),
        other => AppError::Config(super::ConfigError::new(None, format!("mesh file {}: {other}", path.display()))),
    }
}

pub fn build_mesh(cfg: &RunConfig) -> Result<Triangulation, AppError> {
    match &cfg.mesh {
        MeshSource::File(path) => read_mesh_file(path).map_err(|e| mesh_error(path, e)),
        &MeshSource::Square { n, length, boundary } => {
            let tol = 1e-9 * length;
            Ok(square_grid(n, length, move |p: Point, q: Point| match boundary {
                SquareBoundary::Dirichlet => BoundaryTag::Dirichlet,
                SquareBoundary::Neumann => BoundaryTag::Neumann,
                SquareBoundary::DirichletX => {
                    let at = |v: f64| (p[0] - v).abs() < tol && (q[0] - v).abs() < tol;
                    if at(0.0) || at(length) {
                        BoundaryTag::Dirichlet
                    } else {
                        BoundaryTag::Neumann
                    }
                }
            }))
        }
    }
}

fn check_converged(steps: &[StepLog]) -> Result<(), AppError> {
    match steps.iter().find(|s| s.reason == StopReason::MaxIterations) {
        Some(s) => Err(AppError::NotConverged {
            step: s.step,
            iterations: s.gn_iterations(),
        }),
        None => Ok(()),
    }
}

/// Runs the configured experiment on `mesh` without writing files.
/// `observer` sees every completed step.
pub fn simulate<F>(cfg: &RunConfig, mesh: &Triangulation, mut observer: F) -> Result<Simulation, AppError>
where
    F: FnMut(&StepView),
{
    let mut model = cfg.model();
    model.params.dt = cfg.params.dt;
    let failure = RefCell::new(None);
    let u0 = |x: Point| -> [f64; 2] {
        let Some(exprs) = &cfg.fields.initial_velocity else {
            return [0.0; 2];
        };
        let mut v = [0.0; 2];
        for (k, e) in exprs.iter().enumerate() {
            match e.expr.eval(x[0], x[1], cfg.t0) {
                Ok(value) if value.is_finite() => v[k] = value,
                Ok(value) => {
                    failure.borrow_mut().get_or_insert(format!("initial velocity is {value} at ({}, {})", x[0], x[1]));
                }
                Err(err) => {
                    failure.borrow_mut().get_or_insert(format!("initial velocity: {err}"));
                }
            }
        }
        v
    };

    let sim = match cfg.mode {
        Mode::TimeDependent => {
            let tc = TimeLoopConfig {
                dt: cfg.params.dt,
                n_steps: cfg.n_steps,
                t0: cfg.t0,
                sigma_init: cfg.sigma_init,
                quadrature_degree: cfg.quadrature_degree,
                exec: cfg.execution,
            };
            let traj = time_march_with(mesh, &model, &u0, &tc, &cfg.gn, &mut observer)?;
            let time = traj.steps.last().map_or(cfg.t0, |s| s.time);
            Simulation {
                active: traj.active,
                disc: traj.disc,
                state: traj.state,
                steps: traj.steps,
                model,
                time,
            }
        }
        Mode::Stationary => {
            let t = cfg.t0;
            let active = active_mesh(mesh, &model, t)?;
            let disc = Discretization::with_quadrature(active.mesh.clone(), cfg.quadrature_degree)
                .map_err(|e| AppError::Solver(e.into()))?
                .with_execution(cfg.execution);
            let u = disc.velocity().interpolate_vector(disc.mesh(), u0).coeffs;
            let sigma = initial_stress(&disc, &model, &u, t, cfg.sigma_init).map_err(|e| AppError::Solver(e.into()))?;
            let state = State {
                u_old: u.clone(),
                u,
                sigma,
            };
            let problem = Problem::new(&disc, &model, Mode::Stationary, t).map_err(|e| AppError::Solver(e.into()))?;
            let out = gauss_newton(&problem, state, &cfg.gn)?;
            let last = *out.log.last().expect("log holds the initial iterate");
            observer(&StepView {
                step: 1,
                time: t,
                problem: &problem,
                state: &out.state,
                active: &active,
            });
            let step = StepLog {
                step: 1,
                time: t,
                functional: last.functional,
                gn: out.log,
                reason: out.reason,
                u_minus_vo_norm: last.u_minus_vo_norm,
                n_active_cells: disc.mesh().n_cells(),
            };
            drop(problem);
            Simulation {
                active,
                disc,
                state: out.state,
                steps: vec![step],
                model,
                time: t,
            }
        }
    };
    if let Some(message) = failure.into_inner() {
        return Err(AppError::Config(super::ConfigError::new(None, message)));
    }
    Ok(sim)
}

/// Runs the experiment and writes `log.csv`, `indicators.csv` and the
/// requested `state_<step>.vtk` files into the output directory.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary, AppError> {
    let mesh = build_mesh(cfg)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| AppError::Io(format!("{}: {e}", dir.display())))?;
    let last_step = if cfg.mode == Mode::Stationary { 1 } else { cfg.n_steps };
    let mut write_error = None;
    let sim = simulate(cfg, &mesh, |view| {
        let wanted = match cfg.vtk {
            VtkOutput::None => false,
            VtkOutput::Final => view.step == last_step,
            VtkOutput::Every => true,
        };
        if wanted && write_error.is_none() {
            let eta = view.problem.local_indicators(view.state);
            let text = vtk_string(view.problem.discretization(), view.state, Some(&eta));
            if let Err(e) = write_file(&dir.join(format!("state_{}.vtk", view.step)), &text) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    write_file(&dir.join("log.csv"), &log_csv(&sim.steps))?;
    let eta = sim.problem(cfg.mode)?.local_indicators(&sim.state);
    write_file(&dir.join("indicators.csv"), &indicators_csv(&sim.active.parent_cell, &eta))?;
    check_converged(&sim.steps)?;
    Ok(RunSummary {
        n_cells: sim.disc.mesh().n_cells(),
        n_dofs: sim.disc.n_dofs(),
        final_functional: sim.final_functional(),
        indicator_sum: eta.iter().sum(),
        steps: sim.steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyLevel {
    pub level: usize,
    pub h_max: f64,
    pub n_cells: usize,
    pub n_dofs: usize,
    /// Functional at the end of the run.
    pub functional: f64,
    /// Summed squared residual terms, the scale of the rounding floor.
    pub term_scale: f64,
    pub gn_iterations: Vec<usize>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub levels: Vec<StudyLevel>,
    /// Least-squares slope of `log H` against `log h_max`; `None` when some
    /// level is exact up to rounding.
    pub slope: Option<f64>,
}

/// Functionals at or below this fraction of the term scale count as exact.
pub const EXACT_FLOOR: f64 = 1e-20;

impl StudyReport {
    /// Two-point rates between consecutive levels.
    pub fn rates(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| (w[1].functional / w[0].functional).ln() / (w[1].h_max / w[0].h_max).ln())
            .collect()
    }

    /// CSV without timing columns, so identical runs give identical files.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h_max,n_cells,n_dofs,functional,rate,gn_iterations\n");
        let rates = self.rates();
        for (i, l) in self.levels.iter().enumerate() {
            let rate = if i == 0 { String::new() } else { format!("{:e}", rates[i - 1]) };
            let its: Vec<String> = l.gn_iterations.iter().map(usize::to_string).collect();
            let _ = writeln!(
                s,
                "{},{:e},{},{},{:e},{},{}",
                l.level,
                l.h_max,
                l.n_cells,
                l.n_dofs,
                l.functional,
                rate,
                its.join(";")
            );
        }
        match self.slope {
            Some(v) => {
                let _ = writeln!(s, "# fitted_slope = {v:e}");
            }
            None => s.push_str("# fitted_slope = undefined\n"),
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "slope needs two points");
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the experiment on `levels` uniformly refined meshes without writing files.
pub fn convergence_study(cfg: &RunConfig, levels: usize) -> Result<StudyReport, AppError> {
    if levels < 3 {
        let message = format!("a convergence study needs at least 3 levels, got {levels}");
        return Err(AppError::Config(super::ConfigError::new(None, message)));
    }
    let mut mesh = build_mesh(cfg)?;
    let mut records = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.uniform_refine();
        }
        let start = Instant::now();
        let sim = simulate(cfg, &mesh, |_| {})?;
        check_converged(&sim.steps)?;
        let term_scale = sim.problem(cfg.mode)?.term_scale(&sim.state);
        records.push(StudyLevel {
            level,
            h_max: sim.disc.mesh().max_edge_length(),
            n_cells: sim.disc.mesh().n_cells(),
            n_dofs: sim.disc.n_dofs(),
            functional: sim.final_functional(),
            term_scale,
            gn_iterations: sim.steps.iter().map(StepLog::gn_iterations).collect(),
            wall_time: start.elapsed(),
        });
    }
    let exact = records.iter().any(|l| l.functional <= EXACT_FLOOR * l.term_scale);
    let slope = (!exact).then(|| {
        let h: Vec<f64> = records.iter().map(|l| l.h_max).collect();
        let f: Vec<f64> = records.iter().map(|l| l.functional).collect();
        fit_slope(&h, &f)
    });
    Ok(StudyReport { levels: records, slope })
}

/// [`convergence_study`] followed by writing `study.csv`.
pub fn run_convergence_study(cfg: &RunConfig, levels: usize) -> Result<StudyReport, AppError> {
    let report = convergence_study(cfg, levels)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| AppError::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join("study.csv"), &report.to_csv())?;
    Ok(report)
}

/// Human-readable summary of a mesh file.
pub fn mesh_info(path: &Path) -> Result<String, AppError> {
    let mesh = read_mesh_file(path).map_err(|e| mesh_error(path, e))?;
    let count = |tag| mesh.boundary_edges().filter(|&(_, t)| t == tag).count();
    let min_area = (0..mesh.n_cells()).map(|c| mesh.cell_area(c)).fold(f64::INFINITY, f64::min);
    let mut s = String::new();
    let _ = writeln!(s, "points: {}", mesh.n_points());
    let _ = writeln!(s, "cells: {}", mesh.n_cells());
    let _ = writeln!(s, "edges: {}", mesh.n_edges());
    let _ = writeln!(s, "boundary edges: {} (dirichlet {}, neumann {})", mesh.n_boundary_edges(), count(BoundaryTag::Dirichlet), count(BoundaryTag::Neumann));
    let _ = writeln!(s, "area: {:e}", mesh.total_area());
    let _ = writeln!(s, "h_max: {:e}", mesh.max_edge_length());
    let _ = writeln!(s, "min cell area: {min_area:e}");
    Ok(s)
}
