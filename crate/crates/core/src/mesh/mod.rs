//! Conforming triangle meshes with tagged boundaries.
//!
//! Edges carry a global orientation from the lower to the higher vertex
//! index. Each cell stores, per local edge, the global edge index and a sign
//! that is `+1` when the counter-clockwise traversal of the cell runs along
//! the global orientation. Local edge `i` is the edge opposite local vertex `i`.

mod generate;
mod io;

pub use generate::{square_grid, square_with_hole};
pub use io::{read_mesh, read_mesh_file, write_mesh, write_mesh_file};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Solid boundary, velocity vanishes.
    Dirichlet,
    /// Open-water boundary, normal stress vanishes.
    Neumann,
}

impl BoundaryTag {
    pub fn letter(self) -> char {
        match self {
            BoundaryTag::Dirichlet => 'D',
            BoundaryTag::Neumann => 'N',
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryTag::Dirichlet => f.write_str("DIRICHLET"),
            BoundaryTag::Neumann => f.write_str("NEUMANN"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("cell {cell} references vertex {vertex} but only {n_points} points exist")]
    InvalidVertex {
        cell: usize,
        vertex: usize,
        n_points: usize,
    },
    #[error("degenerate or negatively oriented cell {0}")]
    DegenerateCell(usize),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("untagged boundary edge ({0}, {1})")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("tag given for ({0}, {1}) which is not a boundary edge")]
    TagOnInteriorEdge(usize, usize),
    #[error("empty active set")]
    EmptyActiveSet,
    #[error("thickness array has {got} entries, mesh has {expected} cells")]
    ThicknessLength { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is not `Clone`; keep the message only.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for MeshError {
    fn from(e: std::io::Error) -> Self {
        MeshError::Io(IoError(e.to_string()))
    }
}

/// Affine map from the reference triangle `{(0,0),(1,0),(0,1)}` onto a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    /// Column-major: `jacobian[r][c]`, columns are `p1 - p0` and `p2 - p0`.
    pub jacobian: [[f64; 2]; 2],
    pub offset: Point,
    pub det: f64,
}

impl AffineMap {
    pub fn from_vertices(p0: Point, p1: Point, p2: Point) -> Self {
        let jacobian = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        AffineMap {
            jacobian,
            offset: p0,
            det,
        }
    }

    pub fn map(&self, xi: Point) -> Point {
        let j = &self.jacobian;
        [
            self.offset[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.offset[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    /// Reference coordinates of a physical point.
    pub fn inverse_map(&self, x: Point) -> Point {
        let k = self.inverse();
        let d = [x[0] - self.offset[0], x[1] - self.offset[1]];
        [k[0][0] * d[0] + k[0][1] * d[1], k[1][0] * d[0] + k[1][1] * d[1]]
    }

    /// Inverse transpose of the Jacobian, used for gradients.
    pub fn inverse_transpose(&self) -> [[f64; 2]; 2] {
        let j = &self.jacobian;
        let d = self.det;
        [[j[1][1] / d, -j[1][0] / d], [-j[0][1] / d, j[0][0] / d]]
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let j = &self.jacobian;
        let d = self.det;
        [[j[1][1] / d, -j[0][1] / d], [-j[1][0] / d, j[0][0] / d]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    points: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    cell_edge_signs: Vec<[i8; 3]>,
    edge_cells: Vec<[Option<usize>; 2]>,
    boundary_tags: Vec<Option<BoundaryTag>>,
    edge_index: HashMap<[usize; 2], usize>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Triangulation {
    /// Builds a triangulation. Clockwise cells are reoriented; `tagger` is
    /// called with the endpoints (lower index first) of every boundary edge.
    pub fn build<F>(points: Vec<Point>, cells: Vec<[usize; 3]>, mut tagger: F) -> Result<Self, MeshError>
    where
        F: FnMut(usize, usize) -> Option<BoundaryTag>,
    {
        let n_points = points.len();
        let mut cells = cells;
        for (ci, cell) in cells.iter_mut().enumerate() {
            for &v in cell.iter() {
                if v >= n_points {
                    return Err(MeshError::InvalidVertex {
                        cell: ci,
                        vertex: v,
                        n_points,
                    });
                }
            }
            let a = signed_area(points[cell[0]], points[cell[1]], points[cell[2]]);
            let scale = cell_scale(&points, cell);
            if !(a.abs() > 1e-14 * scale * scale) {
                return Err(MeshError::DegenerateCell(ci));
            }
            if a < 0.0 {
                cell.swap(1, 2);
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_edge_signs = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            let mut ce = [0usize; 3];
            let mut cs = [0i8; 3];
            for i in 0..3 {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                let key = edge_key(a, b);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_cells.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_cells[e];
                if slot[0].is_none() {
                    slot[0] = Some(ci);
                } else if slot[1].is_none() {
                    slot[1] = Some(ci);
                } else {
                    return Err(MeshError::NonConforming(format!(
                        "edge ({}, {}) shared by more than two cells",
                        key[0], key[1]
                    )));
                }
                ce[i] = e;
                cs[i] = if a < b { 1 } else { -1 };
            }
            cell_edges.push(ce);
            cell_edge_signs.push(cs);
        }

        // Two cells sharing an edge must traverse it in opposite directions.
        for (e, ec) in edge_cells.iter().enumerate() {
            if let [Some(c0), Some(c1)] = *ec {
                let s0 = sign_of(&cell_edges[c0], &cell_edge_signs[c0], e);
                let s1 = sign_of(&cell_edges[c1], &cell_edge_signs[c1], e);
                if s0 == s1 {
                    return Err(MeshError::NonConforming(format!(
                        "cells {c0} and {c1} overlap across edge ({}, {})",
                        edges[e][0], edges[e][1]
                    )));
                }
            }
        }

        check_hanging_nodes(&points, &edges, &edge_cells)?;

        let mut boundary_tags = vec![None; edges.len()];
        for (e, ec) in edge_cells.iter().enumerate() {
            if ec[1].is_none() {
                let [a, b] = edges[e];
                match tagger(a, b) {
                    Some(t) => boundary_tags[e] = Some(t),
                    None => return Err(MeshError::UntaggedBoundaryEdge(a, b)),
                }
            }
        }

        Ok(Triangulation {
            points,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            boundary_tags,
            edge_index,
        })
    }

    /// Builds a triangulation from an explicit list of tagged boundary edges.
    pub fn with_tagged_boundary(
        points: Vec<Point>,
        cells: Vec<[usize; 3]>,
        boundary: &[(usize, usize, BoundaryTag)],
    ) -> Result<Self, MeshError> {
        let tags: HashMap<[usize; 2], BoundaryTag> =
            boundary.iter().map(|&(a, b, t)| (edge_key(a, b), t)).collect();
        let mesh = Self::build(points, cells, |a, b| tags.get(&[a, b]).copied())?;
        for key in tags.keys() {
            let known = mesh
                .edge_lookup(key[0], key[1])
                .map(|e| mesh.is_boundary_edge(e))
                .unwrap_or(false);
            if !known {
                return Err(MeshError::TagOnInteriorEdge(key[0], key[1]));
            }
        }
        Ok(mesh)
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self, cell: usize) -> [usize; 3] {
        self.cell_edges[cell]
    }

    pub fn cell_edge_signs(&self, cell: usize) -> [i8; 3] {
        self.cell_edge_signs[cell]
    }

    pub fn edge_cells(&self, edge: usize) -> [Option<usize>; 2] {
        self.edge_cells[edge]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_cells[edge][1].is_none()
    }

    pub fn boundary_tag(&self, edge: usize) -> Option<BoundaryTag> {
        self.boundary_tags[edge]
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, BoundaryTag)> + '_ {
        self.boundary_tags
            .iter()
            .enumerate()
            .filter_map(|(e, t)| t.map(|t| (e, t)))
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.boundary_tags.iter().filter(|t| t.is_some()).count()
    }

    pub fn edge_lookup(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&edge_key(a, b)).copied()
    }

    pub fn affine_map(&self, cell: usize) -> AffineMap {
        let [a, b, c] = self.cells[cell];
        AffineMap::from_vertices(self.points[a], self.points[b], self.points[c])
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cells[cell];
        signed_area(self.points[a], self.points[b], self.points[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    pub fn centroid(&self, cell: usize) -> Point {
        let [a, b, c] = self.cells[cell];
        let p = &self.points;
        [
            (p[a][0] + p[b][0] + p[c][0]) / 3.0,
            (p[a][1] + p[b][1] + p[c][1]) / 3.0,
        ]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        let (p, q) = (self.points[a], self.points[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.n_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Unit normal of an edge, rotated clockwise from the global tangent.
    /// For a cell with sign `+1` on this edge it points outward.
    pub fn edge_normal(&self, edge: usize) -> [f64; 2] {
        let [a, b] = self.edges[edge];
        let (p, q) = (self.points[a], self.points[b]);
        let t = [q[0] - p[0], q[1] - p[1]];
        let len = t[0].hypot(t[1]);
        [t[1] / len, -t[0] / len]
    }

    /// Red refinement: every cell splits into four through its edge midpoints.
    pub fn uniform_refine(&self) -> Triangulation {
        let nv = self.n_points();
        let mut points = self.points.clone();
        for &[a, b] in &self.edges {
            let (p, q) = (self.points[a], self.points[b]);
            points.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
        let mut cells = Vec::with_capacity(4 * self.n_cells());
        for (ci, &[a, b, c]) in self.cells.iter().enumerate() {
            let [ea, eb, ec] = self.cell_edges[ci];
            let (ma, mb, mc) = (nv + ea, nv + eb, nv + ec);
            cells.push([a, mc, mb]);
            cells.push([mc, b, ma]);
            cells.push([mb, ma, c]);
            cells.push([ma, mb, mc]);
        }
        let mut tags = HashMap::new();
        for (e, t) in self.boundary_edges() {
            let [a, b] = self.edges[e];
            let m = nv + e;
            tags.insert(edge_key(a, m), t);
            tags.insert(edge_key(m, b), t);
        }
        Triangulation::build(points, cells, |a, b| tags.get(&[a, b]).copied())
            .expect("red refinement of a valid mesh is valid")
    }

    /// Restricts the mesh to cells with thickness at least `h_min`.
    ///
    /// Edges that become boundary through the removal are tagged Neumann;
    /// retained boundary edges of the parent keep their tag. Vertices are
    /// renumbered in increasing parent order so edge orientation is inherited.
    pub fn active_subdomain(&self, h_values: &[f64], h_min: f64) -> Result<SubMesh, MeshError> {
        if h_values.len() != self.n_cells() {
            return Err(MeshError::ThicknessLength {
                expected: self.n_cells(),
                got: h_values.len(),
            });
        }
        let active: Vec<bool> = h_values.iter().map(|&h| h >= h_min).collect();
        let parent_cell: Vec<usize> = (0..self.n_cells()).filter(|&c| active[c]).collect();
        if parent_cell.is_empty() {
            return Err(MeshError::EmptyActiveSet);
        }
        let mut used = vec![false; self.n_points()];
        for &c in &parent_cell {
            for &v in &self.cells[c] {
                used[v] = true;
            }
        }
        let mut new_index = vec![usize::MAX; self.n_points()];
        let mut parent_vertex = Vec::new();
        for (v, &u) in used.iter().enumerate() {
            if u {
                new_index[v] = parent_vertex.len();
                parent_vertex.push(v);
            }
        }
        let points = parent_vertex.iter().map(|&v| self.points[v]).collect();
        let cells = parent_cell
            .iter()
            .map(|&c| {
                let [a, b, d] = self.cells[c];
                [new_index[a], new_index[b], new_index[d]]
            })
            .collect();
        let mut tags = HashMap::new();
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let [c0, c1] = self.edge_cells[e];
            let n_active = [c0, c1].iter().flatten().filter(|&&c| active[c]).count();
            if n_active == 1 {
                let tag = self.boundary_tags[e].unwrap_or(BoundaryTag::Neumann);
                tags.insert(edge_key(new_index[a], new_index[b]), tag);
            }
        }
        let mesh = Triangulation::build(points, cells, |a, b| tags.get(&[a, b]).copied())?;
        let parent_edge = mesh
            .edges
            .iter()
            .map(|&[a, b]| {
                self.edge_lookup(parent_vertex[a], parent_vertex[b])
                    .expect("sub-mesh edges exist in the parent")
            })
            .collect();
        Ok(SubMesh {
            mesh,
            parent_cell,
            parent_vertex,
            parent_edge,
        })
    }

    /// Cell-averaged values of a scalar field, by the centroid and edge
    /// midpoints (exact for quadratics).
    pub fn cell_averages<F: FnMut(Point) -> f64>(&self, mut f: F) -> Vec<f64> {
        (0..self.n_cells())
            .map(|c| {
                let [a, b, d] = self.cells[c];
                let p = &self.points;
                let mid = |i: usize, j: usize| [0.5 * (p[i][0] + p[j][0]), 0.5 * (p[i][1] + p[j][1])];
                (f(mid(a, b)) + f(mid(b, d)) + f(mid(d, a))) / 3.0
            })
            .collect()
    }
}

fn sign_of(edges: &[usize; 3], signs: &[i8; 3], e: usize) -> i8 {
    let i = edges.iter().position(|&x| x == e).expect("edge belongs to cell");
    signs[i]
}

fn cell_scale(points: &[Point], cell: &[usize; 3]) -> f64 {
    let mut s: f64 = 0.0;
    for i in 0..3 {
        let (p, q) = (points[cell[i]], points[cell[(i + 1) % 3]]);
        s = s.max((q[0] - p[0]).hypot(q[1] - p[1]));
    }
    s
}

fn check_hanging_nodes(
    points: &[Point],
    edges: &[[usize; 2]],
    edge_cells: &[[Option<usize>; 2]],
) -> Result<(), MeshError> {
    let boundary: Vec<usize> = (0..edges.len()).filter(|&e| edge_cells[e][1].is_none()).collect();
    let mut verts: Vec<usize> = boundary.iter().flat_map(|&e| edges[e]).collect();
    verts.sort_unstable();
    verts.dedup();
    for &e in &boundary {
        let [a, b] = edges[e];
        let (p, q) = (points[a], points[b]);
        let t = [q[0] - p[0], q[1] - p[1]];
        let len2 = t[0] * t[0] + t[1] * t[1];
        for &v in &verts {
            if v == a || v == b {
                continue;
            }
            let r = [points[v][0] - p[0], points[v][1] - p[1]];
            let s = (r[0] * t[0] + r[1] * t[1]) / len2;
            if s <= 1e-12 || s >= 1.0 - 1e-12 {
                continue;
            }
            let cross = r[0] * t[1] - r[1] * t[0];
            if cross.abs() <= 1e-12 * len2 {
                return Err(MeshError::NonConforming(format!(
                    "hanging node {v} on edge ({a}, {b})"
                )));
            }
        }
    }
    Ok(())
}

/// A restriction of a parent mesh together with the entity maps back to it.
#[derive(Debug, Clone)]
pub struct SubMesh {
    pub mesh: Triangulation,
    pub parent_cell: Vec<usize>,
    pub parent_vertex: Vec<usize>,
    pub parent_edge: Vec<usize>,
}
