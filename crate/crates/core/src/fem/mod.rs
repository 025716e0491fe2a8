//! Reference elements, quadrature, Piola mapping, degree-of-freedom
//! management, interpolation and evaluation of finite element functions.

pub mod basis;
pub mod dense;
mod dofmap;
pub mod quadrature;

pub use dofmap::{lagrange_node, DofMap, SpaceDescriptor, SpaceKind};
pub use quadrature::{gauss_legendre, make_quadrature, QuadratureRule, UnsupportedDegree};

use crate::mesh::{AffineMap, Point, Triangulation};
use basis::{lagrange_basis, lagrange_nodes, n_lagrange, rt_basis};

/// Contravariant Piola transform of reference RT values and divergences.
pub fn piola_push(amap: &AffineMap, ref_values: &[[f64; 2]], ref_divs: &[f64]) -> (Vec<[f64; 2]>, Vec<f64>) {
    let j = &amap.jacobian;
    let inv_det = 1.0 / amap.det;
    let values = ref_values
        .iter()
        .map(|v| {
            [
                inv_det * (j[0][0] * v[0] + j[0][1] * v[1]),
                inv_det * (j[1][0] * v[0] + j[1][1] * v[1]),
            ]
        })
        .collect();
    let divs = ref_divs.iter().map(|d| d * inv_det).collect();
    (values, divs)
}

/// Maps reference gradients to physical ones, `J^{-T} ∇̂`.
pub fn push_gradients(amap: &AffineMap, ref_grads: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let k = amap.inverse_transpose();
    ref_grads
        .iter()
        .map(|g| [k[0][0] * g[0] + k[0][1] * g[1], k[1][0] * g[0] + k[1][1] * g[1]])
        .collect()
}

/// Point value of a finite element function together with its natural derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue {
    /// `gradient[i][j] = ∂u_i/∂x_j`.
    Vector { value: [f64; 2], gradient: [[f64; 2]; 2] },
    Flux { value: [f64; 2], divergence: f64 },
    /// Rows are the stacked flux fields.
    Tensor { value: [[f64; 2]; 2], divergence: [f64; 2] },
}

/// A space on a given mesh: descriptor plus numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    pub descriptor: SpaceDescriptor,
    pub dofmap: DofMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    pub space: SpaceDescriptor,
    pub coeffs: Vec<f64>,
}

impl FeSpace {
    pub fn new(descriptor: SpaceDescriptor, mesh: &Triangulation) -> Self {
        FeSpace {
            descriptor,
            dofmap: DofMap::build(&descriptor, mesh),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs()
    }

    pub fn zero(&self) -> FeFunction {
        FeFunction {
            space: self.descriptor,
            coeffs: vec![0.0; self.n_dofs()],
        }
    }

    pub fn evaluate(&self, mesh: &Triangulation, coeffs: &[f64], cell: usize, xi: Point) -> FieldValue {
        let amap = mesh.affine_map(cell);
        let dofs = self.dofmap.cell_dofs(cell);
        let signs = self.dofmap.cell_signs(cell);
        match self.descriptor.kind {
            SpaceKind::VectorLagrange(k) => {
                let (v, g) = lagrange_basis(k, xi);
                let g = push_gradients(&amap, &g);
                let mut value = [0.0; 2];
                let mut gradient = [[0.0; 2]; 2];
                for a in 0..n_lagrange(k) {
                    for c in 0..2 {
                        let coef = coeffs[dofs[2 * a + c]];
                        value[c] += coef * v[a];
                        gradient[c][0] += coef * g[a][0];
                        gradient[c][1] += coef * g[a][1];
                    }
                }
                FieldValue::Vector { value, gradient }
            }
            SpaceKind::RaviartThomas(l) => {
                let (v, d) = rt_basis(l, xi);
                let (v, d) = piola_push(&amap, &v, &d);
                let mut value = [0.0; 2];
                let mut divergence = 0.0;
                for j in 0..v.len() {
                    let coef = signs[j] * coeffs[dofs[j]];
                    value[0] += coef * v[j][0];
                    value[1] += coef * v[j][1];
                    divergence += coef * d[j];
                }
                FieldValue::Flux { value, divergence }
            }
            SpaceKind::RowwiseRaviartThomas(l) => {
                let (v, d) = rt_basis(l, xi);
                let (v, d) = piola_push(&amap, &v, &d);
                let n = v.len();
                let mut value = [[0.0; 2]; 2];
                let mut divergence = [0.0; 2];
                for r in 0..2 {
                    for j in 0..n {
                        let coef = signs[r * n + j] * coeffs[dofs[r * n + j]];
                        value[r][0] += coef * v[j][0];
                        value[r][1] += coef * v[j][1];
                        divergence[r] += coef * d[j];
                    }
                }
                FieldValue::Tensor { value, divergence }
            }
        }
    }

    /// Nodal interpolation of a vector field into a Lagrange space.
    pub fn interpolate_vector<F: Fn(Point) -> [f64; 2]>(&self, mesh: &Triangulation, f: F) -> FeFunction {
        let SpaceKind::VectorLagrange(k) = self.descriptor.kind else {
            panic!("interpolate_vector needs a Lagrange space");
        };
        let mut coeffs = vec![0.0; self.n_dofs()];
        let nodes = lagrange_nodes(k);
        for c in 0..mesh.n_cells() {
            let amap = mesh.affine_map(c);
            let dofs = self.dofmap.cell_dofs(c);
            for (a, xi) in nodes.iter().enumerate() {
                let v = f(amap.map(*xi));
                coeffs[dofs[2 * a]] = v[0];
                coeffs[dofs[2 * a + 1]] = v[1];
            }
        }
        self.dofmap.apply_constraints(&mut coeffs);
        FeFunction {
            space: self.descriptor,
            coeffs,
        }
    }

    /// Moment interpolation of a (piecewise) flux or tensor field into a
    /// Raviart-Thomas space. `f(cell, x)` returns the tensor rows; for a
    /// single flux space only row 0 is used. Edge moments average the traces
    /// seen from the adjacent cells, which for a continuous field is exact.
    pub fn interpolate_rows<F>(&self, mesh: &Triangulation, mut f: F) -> FeFunction
    where
        F: FnMut(usize, Point) -> [[f64; 2]; 2],
    {
        let (order, n_rows) = match self.descriptor.kind {
            SpaceKind::RaviartThomas(l) => (l, 1),
            SpaceKind::RowwiseRaviartThomas(l) => (l, 2),
            SpaceKind::VectorLagrange(_) => panic!("interpolate_rows needs a Raviart-Thomas space"),
        };
        let per_edge = order + 1;
        let row_dofs = self.n_dofs() / n_rows;
        let n_edge_dofs = per_edge * mesh.n_edges();
        let mut coeffs = vec![0.0; self.n_dofs()];
        let (gs, gw) = gauss_legendre(5);
        for e in 0..mesh.n_edges() {
            let [a, b] = mesh.edges()[e];
            let (p, q) = (mesh.points()[a], mesh.points()[b]);
            let len = mesh.edge_length(e);
            let n = mesh.edge_normal(e);
            let cells: Vec<usize> = mesh.edge_cells(e).iter().flatten().copied().collect();
            for r in 0..n_rows {
                let mut m = [0.0; 2];
                for &c in &cells {
                    for (&s, &w) in gs.iter().zip(&gw) {
                        let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                        let row = f(c, x)[r];
                        let flux = row[0] * n[0] + row[1] * n[1];
                        m[0] += w * len * flux;
                        m[1] += w * len * flux * (2.0 * s - 1.0);
                    }
                }
                for k in 0..per_edge {
                    coeffs[r * row_dofs + per_edge * e + k] = m[k] / cells.len() as f64;
                }
            }
        }
        if order == 1 {
            let quad = make_quadrature(8).expect("degree 8 rule");
            for c in 0..mesh.n_cells() {
                let amap = mesh.affine_map(c);
                let inv = amap.inverse();
                for r in 0..n_rows {
                    let mut m = [0.0; 2];
                    for (xi, w) in quad.points.iter().zip(&quad.weights) {
                        let row = f(c, amap.map(*xi))[r];
                        m[0] += w * amap.det * row[0];
                        m[1] += w * amap.det * row[1];
                    }
                    for k in 0..2 {
                        coeffs[r * row_dofs + n_edge_dofs + 2 * c + k] = inv[k][0] * m[0] + inv[k][1] * m[1];
                    }
                }
            }
        }
        self.dofmap.apply_constraints(&mut coeffs);
        FeFunction {
            space: self.descriptor,
            coeffs,
        }
    }

    pub fn interpolate_flux<F: Fn(Point) -> [f64; 2]>(&self, mesh: &Triangulation, f: F) -> FeFunction {
        self.interpolate_rows(mesh, |_, x| [f(x), [0.0; 2]])
    }

    pub fn interpolate_tensor<F: Fn(Point) -> [[f64; 2]; 2]>(&self, mesh: &Triangulation, f: F) -> FeFunction {
        self.interpolate_rows(mesh, |_, x| f(x))
    }
}

impl FeFunction {
    pub fn evaluate(&self, space: &FeSpace, mesh: &Triangulation, cell: usize, xi: Point) -> FieldValue {
        debug_assert_eq!(self.space, space.descriptor);
        space.evaluate(mesh, &self.coeffs, cell, xi)
    }
}

#[cfg(test)]
mod tests;
