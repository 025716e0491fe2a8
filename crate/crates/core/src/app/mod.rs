//! Configuration files, experiment drivers and result export behind the
//! `icefem` command line.

pub mod config;
pub mod export;
pub mod run;

pub use config::{ConfigError, FieldExpr, FieldExprs, MeshSource, RunConfig, SquareBoundary, VtkOutput};
pub use export::{export_vtk, indicators_csv, log_csv, vtk_string};
pub use run::{
    build_mesh, convergence_study, fit_slope, mesh_info, run_convergence_study, run_experiment, simulate, RunSummary,
    Simulation, StudyLevel, StudyReport, EXACT_FLOOR,
};

use std::path::Path;

use thiserror::Error;

use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("solver failure: Gauss-Newton did not converge in step {step} after {iterations} iterations")]
    NotConverged { step: usize, iterations: usize },
    #[error("I/O error: {0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            AppError::Solver(_) | AppError::NotConverged { .. } => 2,
            AppError::Io(_) => 3,
        }
    }
}

/// Reads and validates a configuration file. Relative paths inside it are
/// resolved against the file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, AppError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    RunConfig::parse(&text, base).map_err(|mut e| {
        e.file = Some(path.to_path_buf());
        AppError::Config(e)
    })
}
