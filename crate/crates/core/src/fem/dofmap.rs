use crate::fem::basis::{n_lagrange, n_rt};
use crate::mesh::{BoundaryTag, Triangulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Continuous vector-valued Lagrange elements of the given order.
    VectorLagrange(usize),
    /// One H(div)-conforming Raviart-Thomas field of the given order.
    RaviartThomas(usize),
    /// Two stacked Raviart-Thomas fields, one per tensor row.
    RowwiseRaviartThomas(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceDescriptor {
    pub kind: SpaceKind,
    /// Boundary part on which the essential condition is imposed
    /// (trace for Lagrange, normal trace for Raviart-Thomas).
    pub constrained_tag: BoundaryTag,
}

impl SpaceDescriptor {
    /// P2 velocity vanishing on the Dirichlet boundary.
    pub fn velocity() -> Self {
        SpaceDescriptor {
            kind: SpaceKind::VectorLagrange(2),
            constrained_tag: BoundaryTag::Dirichlet,
        }
    }

    /// Row-wise RT1 stress with vanishing normal trace on the Neumann boundary.
    pub fn stress() -> Self {
        SpaceDescriptor {
            kind: SpaceKind::RowwiseRaviartThomas(1),
            constrained_tag: BoundaryTag::Neumann,
        }
    }

    pub fn n_local(&self) -> usize {
        match self.kind {
            SpaceKind::VectorLagrange(k) => 2 * n_lagrange(k),
            SpaceKind::RaviartThomas(l) => n_rt(l),
            SpaceKind::RowwiseRaviartThomas(l) => 2 * n_rt(l),
        }
    }
}

/// Cell-to-global numbering with orientation signs and essential constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    n_dofs: usize,
    stride: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    constrained: Vec<bool>,
}

impl DofMap {
    pub fn build(space: &SpaceDescriptor, mesh: &Triangulation) -> DofMap {
        match space.kind {
            SpaceKind::VectorLagrange(k) => lagrange(k, space.constrained_tag, mesh),
            SpaceKind::RaviartThomas(l) => raviart_thomas(l, space.constrained_tag, mesh),
            SpaceKind::RowwiseRaviartThomas(l) => {
                let row = raviart_thomas(l, space.constrained_tag, mesh);
                stack_rows(&row)
            }
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.stride
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.dofs[cell * self.stride..(cell + 1) * self.stride]
    }

    pub fn cell_signs(&self, cell: usize) -> &[f64] {
        &self.signs[cell * self.stride..(cell + 1) * self.stride]
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn constrained_mask(&self) -> &[bool] {
        &self.constrained
    }

    pub fn n_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    /// Sets constrained entries of a coefficient vector to zero.
    pub fn apply_constraints(&self, coeffs: &mut [f64]) {
        for (c, &fixed) in coeffs.iter_mut().zip(&self.constrained) {
            if fixed {
                *c = 0.0;
            }
        }
    }
}

/// Global scalar node of a Lagrange element: vertices first, then edges.
pub fn lagrange_node(order: usize, mesh: &Triangulation, cell: usize, local: usize) -> usize {
    if local < 3 {
        mesh.cells()[cell][local]
    } else {
        debug_assert_eq!(order, 2);
        mesh.n_points() + mesh.cell_edges(cell)[local - 3]
    }
}

fn lagrange(order: usize, tag: BoundaryTag, mesh: &Triangulation) -> DofMap {
    let n_nodes = match order {
        1 => mesh.n_points(),
        2 => mesh.n_points() + mesh.n_edges(),
        _ => panic!("Lagrange order {order} not supported"),
    };
    let nl = n_lagrange(order);
    let stride = 2 * nl;
    let mut dofs = Vec::with_capacity(stride * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        for a in 0..nl {
            let node = lagrange_node(order, mesh, c, a);
            dofs.push(2 * node);
            dofs.push(2 * node + 1);
        }
    }
    let mut constrained = vec![false; 2 * n_nodes];
    for (e, t) in mesh.boundary_edges() {
        if t != tag {
            continue;
        }
        let [a, b] = mesh.edges()[e];
        let mut nodes = vec![a, b];
        if order == 2 {
            nodes.push(mesh.n_points() + e);
        }
        for n in nodes {
            constrained[2 * n] = true;
            constrained[2 * n + 1] = true;
        }
    }
    DofMap {
        n_dofs: 2 * n_nodes,
        stride,
        signs: vec![1.0; dofs.len()],
        dofs,
        constrained,
    }
}

fn raviart_thomas(order: usize, tag: BoundaryTag, mesh: &Triangulation) -> DofMap {
    let per_edge = order + 1;
    let interior = if order == 1 { 2 } else { 0 };
    let n_edge_dofs = per_edge * mesh.n_edges();
    let n_dofs = n_edge_dofs + interior * mesh.n_cells();
    let stride = n_rt(order);
    let mut dofs = Vec::with_capacity(stride * mesh.n_cells());
    let mut signs = Vec::with_capacity(stride * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let edges = mesh.cell_edges(c);
        let esigns = mesh.cell_edge_signs(c);
        for i in 0..3 {
            for m in 0..per_edge {
                dofs.push(per_edge * edges[i] + m);
                // The zeroth moment flips with the normal; the first moment
                // flips with both normal and arc direction and so never does.
                signs.push(if m == 0 { f64::from(esigns[i]) } else { 1.0 });
            }
        }
        for k in 0..interior {
            dofs.push(n_edge_dofs + interior * c + k);
            signs.push(1.0);
        }
    }
    let mut constrained = vec![false; n_dofs];
    for (e, t) in mesh.boundary_edges() {
        if t == tag {
            for m in 0..per_edge {
                constrained[per_edge * e + m] = true;
            }
        }
    }
    DofMap {
        n_dofs,
        stride,
        dofs,
        signs,
        constrained,
    }
}

fn stack_rows(row: &DofMap) -> DofMap {
    let n_cells = row.dofs.len() / row.stride;
    let stride = 2 * row.stride;
    let mut dofs = Vec::with_capacity(stride * n_cells);
    let mut signs = Vec::with_capacity(stride * n_cells);
    for c in 0..n_cells {
        for r in 0..2 {
            dofs.extend(row.cell_dofs(c).iter().map(|d| r * row.n_dofs + d));
            signs.extend_from_slice(row.cell_signs(c));
        }
    }
    let mut constrained = row.constrained.clone();
    constrained.extend_from_slice(&row.constrained);
    DofMap {
        n_dofs: 2 * row.n_dofs,
        stride,
        dofs,
        signs,
        constrained,
    }
}
