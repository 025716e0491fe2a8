use crate::fem::basis::{lagrange_basis, rt_basis};
use crate::fem::{make_quadrature, FeSpace, QuadratureRule, SpaceDescriptor, UnsupportedDegree};
use crate::mesh::{AffineMap, Point, Triangulation};
use crate::par::{self, Execution};
use crate::solver::CsrMatrix;

/// Local velocity dofs per cell (P2, two components).
pub const N_U: usize = 12;
/// Local dofs of one stress row (RT1).
pub const N_RT: usize = 8;
/// Local dofs per cell of the coupled system.
pub const N_LOCAL: usize = N_U + 2 * N_RT;

pub const DEFAULT_QUADRATURE_DEGREE: usize = 6;

/// Reference basis values at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RefPoint {
    phi: [f64; 6],
    grad: [[f64; 2]; 6],
    psi: [[f64; 2]; N_RT],
    div: [f64; N_RT],
}

impl RefPoint {
    pub(crate) fn at(xi: Point) -> Self {
        let (v, g) = lagrange_basis(2, xi);
        let (pv, pd) = rt_basis(1, xi);
        let mut r = RefPoint {
            phi: [0.0; 6],
            grad: [[0.0; 2]; 6],
            psi: [[0.0; 2]; N_RT],
            div: [0.0; N_RT],
        };
        r.phi.copy_from_slice(&v);
        r.grad.copy_from_slice(&g);
        r.psi.copy_from_slice(&pv);
        r.div.copy_from_slice(&pd);
        r
    }
}

/// Physical basis values at one point of one cell. Stress functions carry
/// the cell's orientation signs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointBasis {
    pub phi: [f64; 6],
    pub grad: [[f64; 2]; 6],
    pub psi: [[f64; 2]; N_RT],
    pub div: [f64; N_RT],
}

/// Per-cell data needed to push reference values forward.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellFrame {
    pub amap: AffineMap,
    inv_t: [[f64; 2]; 2],
    signs: [f64; N_RT],
}

impl CellFrame {
    pub fn push(&self, r: &RefPoint) -> PointBasis {
        let k = &self.inv_t;
        let j = &self.amap.jacobian;
        let inv_det = 1.0 / self.amap.det;
        let mut b = PointBasis {
            phi: r.phi,
            grad: [[0.0; 2]; 6],
            psi: [[0.0; 2]; N_RT],
            div: [0.0; N_RT],
        };
        for a in 0..6 {
            let g = r.grad[a];
            b.grad[a] = [k[0][0] * g[0] + k[0][1] * g[1], k[1][0] * g[0] + k[1][1] * g[1]];
        }
        for m in 0..N_RT {
            let s = self.signs[m] * inv_det;
            let v = r.psi[m];
            b.psi[m] = [s * (j[0][0] * v[0] + j[0][1] * v[1]), s * (j[1][0] * v[0] + j[1][1] * v[1])];
            b.div[m] = s * r.div[m];
        }
        b
    }
}

/// Velocity, its gradient, stress and stress divergence at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LocalField {
    pub u: [f64; 2],
    /// `grad_u[i][j] = ∂u_i/∂x_j`.
    pub grad_u: [[f64; 2]; 2],
    pub sigma: [[f64; 2]; 2],
    pub div_sigma: [f64; 2],
}

impl LocalField {
    pub(crate) fn from_local(b: &PointBasis, u: &[f64; N_U], s: &[f64; 2 * N_RT]) -> Self {
        let mut f = LocalField::default();
        for a in 0..6 {
            for c in 0..2 {
                let coef = u[2 * a + c];
                f.u[c] += coef * b.phi[a];
                f.grad_u[c][0] += coef * b.grad[a][0];
                f.grad_u[c][1] += coef * b.grad[a][1];
            }
        }
        for r in 0..2 {
            for m in 0..N_RT {
                let coef = s[r * N_RT + m];
                f.sigma[r][0] += coef * b.psi[m][0];
                f.sigma[r][1] += coef * b.psi[m][1];
                f.div_sigma[r] += coef * b.div[m];
            }
        }
        f
    }

    pub fn strain(&self) -> [[f64; 2]; 2] {
        let g = &self.grad_u;
        let off = 0.5 * (g[0][1] + g[1][0]);
        [[g[0][0], off], [off, g[1][1]]]
    }
}

/// Mesh, the velocity/stress pair, quadrature tables and the sparsity
/// pattern of the normal equations.
///
/// Global unknowns are ordered velocity, then the stress space (row 1, row 2).
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Triangulation,
    velocity: FeSpace,
    stress: FeSpace,
    quad: QuadratureRule,
    ref_points: Vec<RefPoint>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    patches: Vec<Vec<usize>>,
    exec: Execution,
}

impl Discretization {
    pub fn new(mesh: Triangulation) -> Self {
        Self::with_quadrature(mesh, DEFAULT_QUADRATURE_DEGREE).expect("default quadrature degree is supported")
    }

    pub fn with_quadrature(mesh: Triangulation, degree: usize) -> Result<Self, UnsupportedDegree> {
        let quad = make_quadrature(degree)?;
        let velocity = FeSpace::new(SpaceDescriptor::velocity(), &mesh);
        let stress = FeSpace::new(SpaceDescriptor::stress(), &mesh);
        let ref_points = quad.points.iter().map(|&xi| RefPoint::at(xi)).collect();
        let mut d = Discretization {
            mesh,
            velocity,
            stress,
            quad,
            ref_points,
            row_ptr: Vec::new(),
            col_idx: Vec::new(),
            patches: Vec::new(),
            exec: Execution::default(),
        };
        d.build_pattern();
        d.build_patches();
        Ok(d)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn set_execution(&mut self, exec: Execution) {
        self.exec = exec;
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn mesh(&self) -> &Triangulation {
        &self.mesh
    }

    pub fn velocity(&self) -> &FeSpace {
        &self.velocity
    }

    pub fn stress(&self) -> &FeSpace {
        &self.stress
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity.n_dofs()
    }

    pub fn n_stress(&self) -> usize {
        self.stress.n_dofs()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_velocity() + self.n_stress()
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        let nu = self.n_velocity();
        if dof < nu {
            self.velocity.dofmap.is_constrained(dof)
        } else {
            self.stress.dofmap.is_constrained(dof - nu)
        }
    }

    /// Global indices of a cell's unknowns: 12 velocity, then 8 per stress row.
    pub fn cell_dofs(&self, cell: usize) -> [usize; N_LOCAL] {
        let nu = self.n_velocity();
        let mut out = [0; N_LOCAL];
        out[..N_U].copy_from_slice(self.velocity.dofmap.cell_dofs(cell));
        for (o, &d) in out[N_U..].iter_mut().zip(self.stress.dofmap.cell_dofs(cell)) {
            *o = nu + d;
        }
        out
    }

    /// Stress-space indices of the interior (cell-owned) dofs of a cell.
    pub fn stress_interior_dofs(&self, cell: usize) -> [usize; 4] {
        let row = self.n_stress() / 2;
        let base = 2 * self.mesh.n_edges() + 2 * cell;
        [base, base + 1, row + base, row + base + 1]
    }

    pub(crate) fn frame(&self, cell: usize) -> CellFrame {
        let amap = self.mesh.affine_map(cell);
        let mut signs = [0.0; N_RT];
        signs.copy_from_slice(&self.stress.dofmap.cell_signs(cell)[..N_RT]);
        CellFrame {
            amap,
            inv_t: amap.inverse_transpose(),
            signs,
        }
    }

    pub(crate) fn ref_points(&self) -> &[RefPoint] {
        &self.ref_points
    }

    pub(crate) fn gather_velocity(&self, cell: usize, u: &[f64]) -> [f64; N_U] {
        let mut lu = [0.0; N_U];
        for (l, &d) in lu.iter_mut().zip(self.velocity.dofmap.cell_dofs(cell)) {
            *l = u[d];
        }
        lu
    }

    pub(crate) fn gather(&self, cell: usize, u: &[f64], sigma: &[f64]) -> ([f64; N_U], [f64; 2 * N_RT]) {
        let lu = self.gather_velocity(cell, u);
        let mut ls = [0.0; 2 * N_RT];
        for (l, &d) in ls.iter_mut().zip(self.stress.dofmap.cell_dofs(cell)) {
            *l = sigma[d];
        }
        (lu, ls)
    }

    /// Field values at a reference point of a cell.
    pub fn evaluate(&self, u: &[f64], sigma: &[f64], cell: usize, xi: Point) -> LocalField {
        let b = self.frame(cell).push(&RefPoint::at(xi));
        let (lu, ls) = self.gather(cell, u, sigma);
        LocalField::from_local(&b, &lu, &ls)
    }

    /// Velocity value at a reference point of a cell.
    pub fn evaluate_velocity(&self, u: &[f64], cell: usize, xi: Point) -> [f64; 2] {
        let (phi, _) = lagrange_basis(2, xi);
        let lu = self.gather_velocity(cell, u);
        let mut v = [0.0; 2];
        for a in 0..6 {
            v[0] += lu[2 * a] * phi[a];
            v[1] += lu[2 * a + 1] * phi[a];
        }
        v
    }

    /// Physical quadrature points of a cell.
    pub fn quadrature_points(&self, cell: usize) -> Vec<Point> {
        let amap = self.mesh.affine_map(cell);
        self.quad.points.iter().map(|&xi| amap.map(xi)).collect()
    }

    /// `‖u‖² + ‖∇u‖² + ‖σ‖² + ‖div σ‖²` (all in L2 over the mesh).
    pub fn energy_norm_sq(&self, u: &[f64], sigma: &[f64]) -> f64 {
        self.error_norm_sq(u, sigma, &|_| LocalField::default())
    }

    /// Energy norm of the difference between the discrete pair and an exact
    /// field given in physical coordinates.
    pub fn error_norm_sq<F>(&self, u: &[f64], sigma: &[f64], exact: &F) -> f64
    where
        F: Fn(Point) -> LocalField + Sync,
    {
        let cells = par::map_range(self.exec, self.mesh.n_cells(), |c| {
            let frame = self.frame(c);
            let (lu, ls) = self.gather(c, u, sigma);
            let det = frame.amap.det.abs();
            let mut acc = 0.0;
            for (q, r) in self.ref_points.iter().enumerate() {
                let f = LocalField::from_local(&frame.push(r), &lu, &ls);
                let e = exact(frame.amap.map(self.quad.points[q]));
                let mut s = 0.0;
                for i in 0..2 {
                    s += (f.u[i] - e.u[i]).powi(2) + (f.div_sigma[i] - e.div_sigma[i]).powi(2);
                    for j in 0..2 {
                        s += (f.grad_u[i][j] - e.grad_u[i][j]).powi(2) + (f.sigma[i][j] - e.sigma[i][j]).powi(2);
                    }
                }
                acc += self.quad.weights[q] * det * s;
            }
            acc
        });
        cells.iter().sum()
    }

    fn build_pattern(&mut self) {
        let n = self.n_dofs();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for c in 0..self.mesh.n_cells() {
            let dofs = self.cell_dofs(c);
            let free: Vec<usize> = dofs.iter().copied().filter(|&d| !self.is_constrained(d)).collect();
            for &i in &free {
                rows[i].extend(free.iter().map(|&j| j as u32));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, mut r) in rows.into_iter().enumerate() {
            if r.is_empty() {
                r.push(i as u32);
            }
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
    }

    fn build_patches(&mut self) {
        let mut patches: Vec<Vec<usize>> = vec![Vec::new(); self.mesh.n_points()];
        for c in 0..self.mesh.n_cells() {
            let dofs = self.cell_dofs(c);
            for &v in &self.mesh.cells()[c] {
                patches[v].extend(dofs.iter().copied().filter(|&d| !self.is_constrained(d)));
            }
        }
        for p in &mut patches {
            p.sort_unstable();
            p.dedup();
        }
        patches.retain(|p| !p.is_empty());
        self.patches = patches;
    }

    /// Unconstrained unknowns of the cells around each vertex, sorted.
    pub fn vertex_patches(&self) -> &[Vec<usize>] {
        &self.patches
    }

    /// Zero matrix with the normal-equation sparsity.
    pub fn empty_matrix(&self) -> CsrMatrix {
        CsrMatrix::from_pattern(self.n_dofs(), self.row_ptr.clone(), self.col_idx.clone())
    }
}
