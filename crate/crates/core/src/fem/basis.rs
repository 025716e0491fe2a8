//! Reference shape functions.
//!
//! Lagrange nodes: vertices `0, 1, 2`, then (order 2) the midpoints of the
//! local edges `0, 1, 2`, local edge `i` being opposite vertex `i` and
//! running from vertex `i + 1` to vertex `i + 2`.
//!
//! Raviart-Thomas degrees of freedom, per local edge `i` with outward normal
//! `n` and arc parameter `s ∈ [0, 1]` along the local direction:
//! `∫_e σ·n ds` and (order 1) `∫_e σ·n (2s - 1) ds`; order 1 adds the
//! interior moments `∫_T σ_x` and `∫_T σ_y`. Local ordering is
//! `[e0 m0, e0 m1, e1 m0, e1 m1, e2 m0, e2 m1, int x, int y]`.

use std::sync::OnceLock;

use crate::fem::dense;
use crate::fem::quadrature::{gauss_legendre, make_quadrature};
use crate::mesh::Point;

pub const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Endpoints of local edge `i` in local direction.
pub fn ref_edge(i: usize) -> (Point, Point) {
    (REF_VERTICES[(i + 1) % 3], REF_VERTICES[(i + 2) % 3])
}

/// Outward normal of local edge `i` scaled by the edge length.
pub fn ref_edge_scaled_normal(i: usize) -> [f64; 2] {
    let (a, b) = ref_edge(i);
    [b[1] - a[1], -(b[0] - a[0])]
}

pub fn n_lagrange(order: usize) -> usize {
    match order {
        1 => 3,
        2 => 6,
        _ => panic!("Lagrange order {order} not supported"),
    }
}

pub fn n_rt(order: usize) -> usize {
    match order {
        0 => 3,
        1 => 8,
        _ => panic!("Raviart-Thomas order {order} not supported"),
    }
}

/// Values and reference gradients of the nodal Lagrange basis.
pub fn lagrange_basis(order: usize, xi: Point) -> (Vec<f64>, Vec<[f64; 2]>) {
    let l = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    match order {
        1 => (l.to_vec(), dl.to_vec()),
        2 => {
            let mut v = Vec::with_capacity(6);
            let mut g = Vec::with_capacity(6);
            for i in 0..3 {
                v.push(l[i] * (2.0 * l[i] - 1.0));
                let f = 4.0 * l[i] - 1.0;
                g.push([f * dl[i][0], f * dl[i][1]]);
            }
            for i in 0..3 {
                let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                v.push(4.0 * l[a] * l[b]);
                g.push([
                    4.0 * (dl[a][0] * l[b] + l[a] * dl[b][0]),
                    4.0 * (dl[a][1] * l[b] + l[a] * dl[b][1]),
                ]);
            }
            (v, g)
        }
        _ => panic!("Lagrange order {order} not supported"),
    }
}

/// Reference coordinates of the Lagrange nodes.
pub fn lagrange_nodes(order: usize) -> Vec<Point> {
    let mut nodes = REF_VERTICES.to_vec();
    if order == 2 {
        for i in 0..3 {
            let (a, b) = ref_edge(i);
            nodes.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        }
    }
    nodes
}

/// Monomial-type spanning set of RT^order with divergences.
fn rt_prime(order: usize, p: Point) -> (Vec<[f64; 2]>, Vec<f64>) {
    let (x, y) = (p[0], p[1]);
    match order {
        0 => (vec![[1.0, 0.0], [0.0, 1.0], [x, y]], vec![0.0, 0.0, 2.0]),
        1 => (
            vec![
                [1.0, 0.0],
                [x, 0.0],
                [y, 0.0],
                [0.0, 1.0],
                [0.0, x],
                [0.0, y],
                [x * x, x * y],
                [x * y, y * y],
            ],
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 3.0 * x, 3.0 * y],
        ),
        _ => panic!("Raviart-Thomas order {order} not supported"),
    }
}

/// Applies the reference degrees of freedom to a vector field.
pub fn rt_reference_dofs<F: Fn(Point) -> [f64; 2]>(order: usize, f: F) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(4);
    let mut dofs = Vec::with_capacity(n_rt(order));
    for i in 0..3 {
        let (a, b) = ref_edge(i);
        let n = ref_edge_scaled_normal(i);
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for (&s, &w) in gx.iter().zip(&gw) {
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let v = f(p);
            let flux = v[0] * n[0] + v[1] * n[1];
            m0 += w * flux;
            m1 += w * flux * (2.0 * s - 1.0);
        }
        dofs.push(m0);
        if order == 1 {
            dofs.push(m1);
        }
    }
    if order == 1 {
        let q = make_quadrature(4).expect("degree 4 rule");
        dofs.push(q.integrate(|p| f(p)[0]));
        dofs.push(q.integrate(|p| f(p)[1]));
    }
    dofs
}

/// Coefficients `C` with `φ_k = Σ_j C[j][k] p_j`.
fn rt_coefficients(order: usize) -> &'static Vec<Vec<f64>> {
    static RT0: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    static RT1: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let cell = match order {
        0 => &RT0,
        1 => &RT1,
        _ => panic!("Raviart-Thomas order {order} not supported"),
    };
    cell.get_or_init(|| {
        let n = n_rt(order);
        // D[i][j] = dof_i(p_j)
        let mut d = vec![vec![0.0; n]; n];
        for j in 0..n {
            let col = rt_reference_dofs(order, |p| rt_prime(order, p).0[j]);
            for i in 0..n {
                d[i][j] = col[i];
            }
        }
        dense::invert(&d).expect("RT dof matrix is unisolvent")
    })
}

/// Reference RT shape functions (dual to the dofs) and their divergences.
pub fn rt_basis(order: usize, xi: Point) -> (Vec<[f64; 2]>, Vec<f64>) {
    let c = rt_coefficients(order);
    let (pv, pd) = rt_prime(order, xi);
    let n = pv.len();
    let mut values = vec![[0.0; 2]; n];
    let mut divs = vec![0.0; n];
    for k in 0..n {
        for j in 0..n {
            let cjk = c[j][k];
            values[k][0] += cjk * pv[j][0];
            values[k][1] += cjk * pv[j][1];
            divs[k] += cjk * pd[j];
        }
    }
    (values, divs)
}
