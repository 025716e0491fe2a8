//! CSV and legacy VTK writers. Floats use `{:e}`, which round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::lsq::{Discretization, State};
use crate::solver::StepLog;

use super::AppError;

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::write(path, text).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

/// One row per Gauss-Newton iterate; `tau_stop` is empty for the initial iterate.
pub fn log_csv(steps: &[StepLog]) -> String {
    let mut s = String::from("step,gn_iter,functional,tau_stop,u_minus_vo_norm\n");
    for log in steps {
        for r in &log.gn {
            let tau = if r.iteration == 0 { String::new() } else { format!("{:e}", r.tau_stop) };
            let _ = writeln!(s, "{},{},{:e},{},{:e}", log.step, r.iteration, r.functional, tau, r.u_minus_vo_norm);
        }
    }
    s
}

/// `cell_index` refers to the cell numbering of the input mesh.
pub fn indicators_csv(parent_cell: &[usize], eta_sq: &[f64]) -> String {
    let mut s = String::from("cell_index,eta_sq\n");
    for (c, e) in parent_cell.iter().zip(eta_sq) {
        let _ = writeln!(s, "{c},{e:e}");
    }
    s
}

/// Cell averages of the four stress components, ordered xx, xy, yx, yy.
pub fn cell_average_stress(disc: &Discretization, sigma: &[f64]) -> Vec<[f64; 4]> {
    let zero = vec![0.0; disc.n_velocity()];
    let quad = disc.quadrature();
    let total: f64 = quad.weights.iter().sum();
    (0..disc.mesh().n_cells())
        .map(|c| {
            let mut m = [0.0; 4];
            for (xi, w) in quad.points.iter().zip(&quad.weights) {
                let s = disc.evaluate(&zero, sigma, c, *xi).sigma;
                m[0] += w * s[0][0];
                m[1] += w * s[0][1];
                m[2] += w * s[1][0];
                m[3] += w * s[1][1];
            }
            m.map(|v| v / total)
        })
        .collect()
}

/// Legacy ASCII VTK: triangle grid, vertex velocity, cell-average stress and
/// the cell indicator when given.
pub fn vtk_string(disc: &Discretization, state: &State, indicators: Option<&[f64]>) -> String {
    let mesh = disc.mesh();
    let (np, nc) = (mesh.n_points(), mesh.n_cells());
    let mut s = String::from("# vtk DataFile Version 3.0\nicefem state\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {np} double");
    for p in mesh.points() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for c in mesh.cells() {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }
    // vertex nodes come first in the P2 numbering
    let _ = writeln!(s, "POINT_DATA {np}\nVECTORS velocity double");
    for v in 0..np {
        let _ = writeln!(s, "{:e} {:e} 0", state.u[2 * v], state.u[2 * v + 1]);
    }
    let _ = writeln!(s, "CELL_DATA {nc}");
    let avg = cell_average_stress(disc, &state.sigma);
    for (k, name) in ["sigma_xx", "sigma_xy", "sigma_yx", "sigma_yy"].iter().enumerate() {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for a in &avg {
            let _ = writeln!(s, "{:e}", a[k]);
        }
    }
    if let Some(eta) = indicators {
        s.push_str("SCALARS indicator double 1\nLOOKUP_TABLE default\n");
        for e in eta {
            let _ = writeln!(s, "{e:e}");
        }
    }
    s
}

pub fn export_vtk(disc: &Discretization, state: &State, indicators: Option<&[f64]>, path: &Path) -> Result<(), AppError> {
    write_file(path, &vtk_string(disc, state, indicators))
}
