//! Sparse linear algebra, the Gauss-Newton iteration and time marching.

pub mod cg;
pub mod gauss_newton;
pub mod precond;
pub mod sparse;
pub mod time;

pub use cg::{solve_spd, solve_spd_with_patches, CgConfig, CgOutcome};
pub use precond::Preconditioner;
pub use gauss_newton::{gauss_newton, GaussNewtonConfig, GaussNewtonOutcome, GnRecord, StopReason};
pub use sparse::CsrMatrix;
pub use time::{active_mesh, initial_stress, time_march, time_march_with, SigmaInit, StepLog, StepView, TimeLoopConfig, Trajectory};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("conjugate gradients did not converge: relative residual {rel_residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, rel_residual: f64 },
    #[error("conjugate gradients broke down at iteration {iteration} (pᵀAp = {curvature:e}); matrix not positive definite")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("non-positive diagonal entry {value:e} in row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },
    #[error("Gauss-Newton iteration {iteration}: {source}")]
    GaussNewton {
        iteration: usize,
        #[source]
        source: Box<SolverError>,
    },
    #[error("time step {step}: {source}")]
    TimeStep {
        step: usize,
        #[source]
        source: Box<SolverError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Quadrature(#[from] crate::fem::UnsupportedDegree),
}
