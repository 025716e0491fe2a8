//! Gauss-Newton iteration for the least-squares functional.

use crate::lsq::{Problem, State};
use crate::par;
use crate::solver::cg::{solve_spd_with_patches, CgConfig};
use crate::solver::SolverError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonConfig {
    /// Stop when the relative decrease `1 - H_k / H_{k-1}` lies in `[0, tol]`.
    pub tol: f64,
    pub max_iter: usize,
    /// Halve a step that increases the functional.
    pub damping: bool,
    pub max_halvings: usize,
    /// Optional stop when `‖rhs‖` of the normal equations falls below
    /// this fraction of its value at the first iterate.
    pub gradient_tol: Option<f64>,
    /// An iterate whose functional is at most this fraction of the summed
    /// squared residual terms is treated as exact.
    pub floor: f64,
    pub cg: CgConfig,
}

impl Default for GaussNewtonConfig {
    fn default() -> Self {
        GaussNewtonConfig {
            tol: 1e-4,
            max_iter: 50,
            damping: true,
            max_halvings: 10,
            gradient_tol: None,
            floor: 1e-20,
            cg: CgConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative decrease within tolerance.
    Converged,
    /// The functional is zero up to rounding of its terms.
    ExactSolution,
    /// The gradient criterion was met.
    GradientTolerance,
    /// No damped step decreased the functional; the iterate was kept.
    Stagnated,
    MaxIterations,
}

impl StopReason {
    pub fn is_converged(self) -> bool {
        self != StopReason::MaxIterations
    }
}

/// One entry of the iteration log. Entry 0 is the initial iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnRecord {
    pub iteration: usize,
    pub functional: f64,
    /// `1 - H_k / H_{k-1}`; NaN for the initial iterate.
    pub tau_stop: f64,
    /// Accepted step length (1 for a full step, 0 when no step was taken).
    pub step_scale: f64,
    pub cg_iterations: usize,
    /// `‖u - v_o‖` in L2 at this iterate.
    pub u_minus_vo_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonOutcome {
    pub state: State,
    pub log: Vec<GnRecord>,
    pub reason: StopReason,
}

impl GaussNewtonOutcome {
    /// Number of Gauss-Newton steps computed.
    pub fn iterations(&self) -> usize {
        self.log.len() - 1
    }

    pub fn functional(&self) -> f64 {
        self.log.last().expect("log holds the initial iterate").functional
    }
}

fn relative_decrease(h: f64, h_prev: f64) -> f64 {
    if h_prev == 0.0 {
        0.0
    } else {
        1.0 - h / h_prev
    }
}

/// Minimizes the functional of `problem` starting from `state`.
pub fn gauss_newton(problem: &Problem, mut state: State, cfg: &GaussNewtonConfig) -> Result<GaussNewtonOutcome, SolverError> {
    let exec = problem.discretization().execution();
    let mut h_prev = problem.functional(&state);
    let mut log = vec![GnRecord {
        iteration: 0,
        functional: h_prev,
        tau_stop: f64::NAN,
        step_scale: 0.0,
        cg_iterations: 0,
        u_minus_vo_norm: problem.velocity_misfit(&state),
    }];
    let at_floor = |h: f64, s: &State| h == 0.0 || h <= cfg.floor * problem.term_scale(s);
    if at_floor(h_prev, &state) {
        return Ok(GaussNewtonOutcome {
            state,
            log,
            reason: StopReason::ExactSolution,
        });
    }
    let mut grad0 = None;
    for k in 1..=cfg.max_iter {
        let system = problem.assemble(&state);
        let grad = par::dot(exec, &system.rhs, &system.rhs).sqrt();
        let g0 = *grad0.get_or_insert(grad);
        if let Some(gtol) = cfg.gradient_tol {
            if k > 1 && grad <= gtol * g0 {
                return Ok(GaussNewtonOutcome {
                    state,
                    log,
                    reason: StopReason::GradientTolerance,
                });
            }
        }
        let patches = problem.discretization().vertex_patches();
        let step = solve_spd_with_patches(&system.matrix, &system.rhs, &cfg.cg, Some(patches)).map_err(|e| SolverError::GaussNewton {
            iteration: k,
            source: Box::new(e),
        })?;

        let mut scale = 1.0;
        let mut candidate = state.clone();
        candidate.add_scaled(&step.x, scale);
        let mut h = problem.functional(&candidate);
        if cfg.damping {
            let mut halvings = 0;
            while !(h <= h_prev) && halvings < cfg.max_halvings {
                scale *= 0.5;
                halvings += 1;
                candidate = state.clone();
                candidate.add_scaled(&step.x, scale);
                h = problem.functional(&candidate);
            }
            if !(h <= h_prev) {
                log.push(GnRecord {
                    iteration: k,
                    functional: h_prev,
                    tau_stop: 0.0,
                    step_scale: 0.0,
                    cg_iterations: step.iterations,
                    u_minus_vo_norm: problem.velocity_misfit(&state),
                });
                return Ok(GaussNewtonOutcome {
                    state,
                    log,
                    reason: StopReason::Stagnated,
                });
            }
        }
        let tau = relative_decrease(h, h_prev);
        state = candidate;
        log.push(GnRecord {
            iteration: k,
            functional: h,
            tau_stop: tau,
            step_scale: scale,
            cg_iterations: step.iterations,
            u_minus_vo_norm: problem.velocity_misfit(&state),
        });
        h_prev = h;
        if at_floor(h, &state) {
            return Ok(GaussNewtonOutcome {
                state,
                log,
                reason: StopReason::ExactSolution,
            });
        }
        if (0.0..=cfg.tol).contains(&tau) {
            return Ok(GaussNewtonOutcome {
                state,
                log,
                reason: StopReason::Converged,
            });
        }
    }
    Ok(GaussNewtonOutcome {
        state,
        log,
        reason: StopReason::MaxIterations,
    })
}
