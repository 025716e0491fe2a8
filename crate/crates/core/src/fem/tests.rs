use super::*;
use crate::mesh::{square_grid, BoundaryTag, Triangulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn free_mesh(n: usize) -> Triangulation {
    // Perturbed interior vertices so cells are not all similar.
    let base = square_grid(n, 1.0, |_, _| BoundaryTag::Neumann);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let h = 1.0 / n as f64;
    let points: Vec<Point> = base
        .points()
        .iter()
        .map(|&p| {
            let interior = p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0;
            if interior {
                [p[0] + 0.2 * h * rng.gen_range(-1.0..1.0), p[1] + 0.2 * h * rng.gen_range(-1.0..1.0)]
            } else {
                p
            }
        })
        .collect();
    Triangulation::build(points, base.cells().to_vec(), |_, _| Some(BoundaryTag::Neumann)).unwrap()
}

fn unconstrained_velocity() -> SpaceDescriptor {
    SpaceDescriptor {
        kind: SpaceKind::VectorLagrange(2),
        constrained_tag: BoundaryTag::Dirichlet,
    }
}

fn unconstrained_stress() -> SpaceDescriptor {
    SpaceDescriptor {
        kind: SpaceKind::RowwiseRaviartThomas(1),
        constrained_tag: BoundaryTag::Dirichlet,
    }
}

#[test]
fn piola_identity_and_scaling() {
    let id = AffineMap::from_vertices([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
    let (v, d) = piola_push(&id, &[[0.3, -0.7]], &[1.5]);
    assert_eq!(v, vec![[0.3, -0.7]]);
    assert_eq!(d, vec![1.5]);
    let scaled = AffineMap::from_vertices([0.0, 0.0], [2.0, 0.0], [0.0, 2.0]);
    assert_eq!(scaled.det, 4.0);
    let (v, d) = piola_push(&scaled, &[[0.3, -0.7]], &[1.5]);
    assert_eq!(v, vec![[0.15, -0.35]]);
    assert_eq!(d, vec![0.375]);
}

#[test]
fn pushed_rt0_has_unit_flux_on_random_cell() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let mut p: Vec<Point> = (0..3).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        let amap = loop {
            let m = AffineMap::from_vertices(p[0], p[1], p[2]);
            if m.det > 1e-2 {
                break m;
            }
            p.swap(1, 2);
            let m = AffineMap::from_vertices(p[0], p[1], p[2]);
            if m.det > 1e-2 {
                break m;
            }
            p = (0..3).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        };
        let (gx, gw) = gauss_legendre(3);
        for k in 0..3 {
            // physical edge k from vertex k+1 to k+2, outward normal
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = t[0].hypot(t[1]);
            let n = [t[1] / len, -t[0] / len];
            let mut flux = 0.0;
            for (&s, &w) in gx.iter().zip(&gw) {
                let x = [a[0] + s * t[0], a[1] + s * t[1]];
                let xi = amap.inverse_map(x);
                let (v, d) = basis::rt_basis(0, xi);
                let (v, _) = piola_push(&amap, &v, &d);
                flux += w * len * (v[k][0] * n[0] + v[k][1] * n[1]);
            }
            assert!((flux - 1.0).abs() < 1e-12, "{flux}");
        }
    }
}

#[test]
fn constant_velocity_interpolant() {
    let mesh = free_mesh(3);
    let space = FeSpace::new(unconstrained_velocity(), &mesh);
    let f = space.interpolate_vector(&mesh, |_| [1.0, 2.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for c in 0..mesh.n_cells() {
        let xi = [rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)];
        let FieldValue::Vector { value, gradient } = f.evaluate(&space, &mesh, c, xi) else { unreachable!() };
        assert!((value[0] - 1.0).abs() < 1e-14 && (value[1] - 2.0).abs() < 1e-14);
        assert!(gradient.iter().flatten().all(|g| g.abs() < 1e-12));
    }
}

#[test]
fn dirichlet_constraints_zero_after_interpolation() {
    let mesh = square_grid(3, 1.0, |_, _| BoundaryTag::Dirichlet);
    let space = FeSpace::new(SpaceDescriptor::velocity(), &mesh);
    let f = space.interpolate_vector(&mesh, |x| [x[0] + 1.0, 3.0]);
    for i in 0..space.n_dofs() {
        if space.dofmap.is_constrained(i) {
            assert_eq!(f.coeffs[i], 0.0);
        }
    }
    let stress = FeSpace::new(SpaceDescriptor::stress(), &square_grid(2, 1.0, |_, _| BoundaryTag::Neumann));
    let s = stress.interpolate_tensor(&square_grid(2, 1.0, |_, _| BoundaryTag::Neumann), |x| [[x[0], 1.0], [2.0, x[1]]]);
    for i in 0..stress.n_dofs() {
        if stress.dofmap.is_constrained(i) {
            assert_eq!(s.coeffs[i], 0.0);
        }
    }
}

#[test]
fn linear_flux_divergence_reproduced() {
    let mesh = free_mesh(3);
    for order in [0, 1] {
        let space = FeSpace::new(
            SpaceDescriptor {
                kind: SpaceKind::RaviartThomas(order),
                constrained_tag: BoundaryTag::Dirichlet,
            },
            &mesh,
        );
        let f = space.interpolate_flux(&mesh, |x| x);
        for c in 0..mesh.n_cells() {
            let FieldValue::Flux { value, divergence } = f.evaluate(&space, &mesh, c, [0.2, 0.3]) else {
                unreachable!()
            };
            assert!((divergence - 2.0).abs() < 1e-12, "order {order}: {divergence}");
            let x = mesh.affine_map(c).map([0.2, 0.3]);
            assert!((value[0] - x[0]).abs() < 1e-12 && (value[1] - x[1]).abs() < 1e-12);
        }
    }
}

/// Cellwise L2 projection of `g` onto P1, evaluated at `xi`. Uses the
/// barycentric mass matrix `|T|/12 (1 + δ_ij)` and a degree-8 rule.
pub(crate) fn p1_projection(mesh: &Triangulation, cell: usize, g: &dyn Fn(Point) -> f64, xi: Point) -> f64 {
    let amap = mesh.affine_map(cell);
    let q = make_quadrature(8).unwrap();
    let mut rhs = [0.0; 3];
    for (p, w) in q.points.iter().zip(&q.weights) {
        let l = [1.0 - p[0] - p[1], p[0], p[1]];
        let gv = g(amap.map(*p));
        for i in 0..3 {
            rhs[i] += w * amap.det * gv * l[i];
        }
    }
    // inverse of |T|/12 (I + 11ᵀ) is 12/|T| (I - 11ᵀ/4)
    let area = 0.5 * amap.det;
    let s: f64 = rhs.iter().sum();
    let coef: Vec<f64> = rhs.iter().map(|r| 12.0 / area * (r - s / 4.0)).collect();
    let l = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
    (0..3).map(|i| coef[i] * l[i]).sum()
}

#[test]
fn commuting_divergence_projection() {
    let mesh = free_mesh(3);
    let space = FeSpace::new(unconstrained_stress(), &mesh);
    let q = |x: Point| [[x[0] * x[0] + x[1], x[0] * x[1]], [x[1] * x[1], x[0] - x[0] * x[1]]];
    let divs: [Box<dyn Fn(Point) -> f64>; 2] = [Box::new(|x| 2.0 * x[0] + x[0]), Box::new(|x| -x[0])];
    let f = space.interpolate_tensor(&mesh, q);
    let mut worst: f64 = 0.0;
    for c in 0..mesh.n_cells() {
        for xi in [[0.1, 0.1], [0.7, 0.2], [0.3, 0.6]] {
            let FieldValue::Tensor { divergence, .. } = f.evaluate(&space, &mesh, c, xi) else { unreachable!() };
            for r in 0..2 {
                let expected = p1_projection(&mesh, c, &*divs[r], xi);
                worst = worst.max((divergence[r] - expected).abs());
            }
        }
    }
    assert!(worst < 1e-11, "{worst}");
}

#[test]
fn zero_function_evaluates_to_zero() {
    let mesh = free_mesh(2);
    let v = FeSpace::new(SpaceDescriptor::velocity(), &mesh);
    let s = FeSpace::new(SpaceDescriptor::stress(), &mesh);
    let (zv, zs) = (v.zero(), s.zero());
    assert_eq!(
        zv.evaluate(&v, &mesh, 0, [0.3, 0.3]),
        FieldValue::Vector { value: [0.0; 2], gradient: [[0.0; 2]; 2] }
    );
    assert_eq!(
        zs.evaluate(&s, &mesh, 1, [0.3, 0.3]),
        FieldValue::Tensor { value: [[0.0; 2]; 2], divergence: [0.0; 2] }
    );
}

#[test]
fn rotation_has_zero_strain() {
    let mesh = free_mesh(3);
    let space = FeSpace::new(unconstrained_velocity(), &mesh);
    let f = space.interpolate_vector(&mesh, |x| [x[1], -x[0]]);
    let q = make_quadrature(6).unwrap();
    for c in 0..mesh.n_cells() {
        for xi in &q.points {
            let FieldValue::Vector { gradient: g, .. } = f.evaluate(&space, &mesh, c, *xi) else { unreachable!() };
            let eps = [g[0][0], 0.5 * (g[0][1] + g[1][0]), g[1][1]];
            assert!(eps.iter().all(|e| e.abs() < 1e-13), "{eps:?}");
        }
    }
}

#[test]
fn gradient_of_x_squared() {
    let mesh = free_mesh(4);
    let space = FeSpace::new(unconstrained_velocity(), &mesh);
    let f = space.interpolate_vector(&mesh, |x| [x[0] * x[0], 0.0]);
    for c in 0..mesh.n_cells() {
        let amap = mesh.affine_map(c);
        let xi = [0.25, 0.25];
        let x = amap.map(xi);
        let FieldValue::Vector { value, gradient } = f.evaluate(&space, &mesh, c, xi) else { unreachable!() };
        assert!((value[0] - x[0] * x[0]).abs() < 1e-13);
        assert!((gradient[0][0] - 2.0 * x[0]).abs() < 1e-12 && gradient[0][1].abs() < 1e-12);
    }
}

#[test]
fn hdiv_normal_trace_continuity() {
    let mesh = free_mesh(5);
    let space = FeSpace::new(unconstrained_stress(), &mesh);
    let f = space.interpolate_tensor(&mesh, |x| {
        [[(3.0 * x[0]).sin() + x[1], x[0] * x[1].exp()], [(x[0] - x[1]).cos(), x[1] * x[1] * x[0]]]
    });
    let worst = normal_jump(&mesh, &space, &f.coeffs, 50, 17);
    assert!(worst <= 1e-11, "{worst}");
}

#[test]
fn p2_inter_element_continuity() {
    let mesh = free_mesh(5);
    let space = FeSpace::new(unconstrained_velocity(), &mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let coeffs: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let interior: Vec<usize> = (0..mesh.n_edges()).filter(|&e| !mesh.is_boundary_edge(e)).collect();
    let mut worst: f64 = 0.0;
    for &e in &interior {
        let [Some(c0), Some(c1)] = mesh.edge_cells(e) else { unreachable!() };
        let [a, b] = mesh.edges()[e];
        for s in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let (p, q) = (mesh.points()[a], mesh.points()[b]);
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let v = |c: usize| match space.evaluate(&mesh, &coeffs, c, mesh.affine_map(c).inverse_map(x)) {
                FieldValue::Vector { value, .. } => value,
                _ => unreachable!(),
            };
            let (v0, v1) = (v(c0), v(c1));
            worst = worst.max((v0[0] - v1[0]).abs()).max((v0[1] - v1[1]).abs());
        }
    }
    assert!(worst <= 1e-12, "{worst}");
}

/// Largest jump of the tensor normal trace over `n_edges` random interior
/// edges (with repetition), sampled at random points along each edge.
pub(crate) fn normal_jump(mesh: &Triangulation, space: &FeSpace, coeffs: &[f64], n_edges: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior: Vec<usize> = (0..mesh.n_edges()).filter(|&e| !mesh.is_boundary_edge(e)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..n_edges {
        let e = interior[rng.gen_range(0..interior.len())];
        let [Some(c0), Some(c1)] = mesh.edge_cells(e) else { unreachable!() };
        let [a, b] = mesh.edges()[e];
        let n = mesh.edge_normal(e);
        for _ in 0..5 {
            let s: f64 = rng.gen();
            let (p, q) = (mesh.points()[a], mesh.points()[b]);
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let tr = |c: usize| match space.evaluate(mesh, coeffs, c, mesh.affine_map(c).inverse_map(x)) {
                FieldValue::Tensor { value, .. } => {
                    [value[0][0] * n[0] + value[0][1] * n[1], value[1][0] * n[0] + value[1][1] * n[1]]
                }
                _ => unreachable!(),
            };
            let (t0, t1) = (tr(c0), tr(c1));
            worst = worst.max((t0[0] - t1[0]).abs()).max((t0[1] - t1[1]).abs());
        }
    }
    worst
}
