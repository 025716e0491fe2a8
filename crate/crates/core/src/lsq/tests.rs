use super::*;
use crate::mesh::square_grid;
use crate::mesh::{BoundaryTag, Point, Triangulation};
use crate::model::{CoefficientFields, Model, PhysicalParams, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_params(c_o: f64) -> PhysicalParams {
    PhysicalParams {
        rho: 1.0,
        rho_o: 1.0,
        c_o,
        p_star: 1.0,
        c_m: 1.0,
        c_hard: 1.0,
        h_min: 0.05,
        dt: 1.0,
    }
}

fn field(name: &str, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ScalarField {
    ScalarField::new(name, move |x, _| f(x))
}

/// Dirichlet on the vertical sides, Neumann on the horizontal ones.
fn mixed_square(n: usize) -> Triangulation {
    square_grid(n, 1.0, |p, q| {
        if (p[0] == 0.0 && q[0] == 0.0) || (p[0] == 1.0 && q[0] == 1.0) {
            BoundaryTag::Dirichlet
        } else {
            BoundaryTag::Neumann
        }
    })
}

/// `u = (c x(1-x), 0)`, so `ε(u) = [[c(1-2x), 0], [0, 0]]`; with η = 1,
/// `σ = 2ε(u)` is linear and `div σ = (-4c, 0)`.
const C: f64 = 0.3;

fn exact_u(x: Point) -> [f64; 2] {
    [C * x[0] * (1.0 - x[0]), 0.0]
}

fn exact_sigma(x: Point) -> [[f64; 2]; 2] {
    [[2.0 * C * (1.0 - 2.0 * x[0]), 0.0], [0.0, 0.0]]
}

fn representable_model(c_o: f64) -> Model {
    let fields = CoefficientFields {
        concentration: ScalarField::constant("A", 1.0),
        thickness: ScalarField::constant("h", 1.0),
        ocean_velocity: [field("v_o_x", |x| exact_u(x)[0]), ScalarField::constant("v_o_y", 0.0)],
        // g = τ_o(u) - div σ with τ_o(u) = 0
        body_force: Some([ScalarField::constant("g_x", 4.0 * C), ScalarField::constant("g_y", 0.0)]),
    };
    Model::new(unit_params(c_o), fields).unwrap()
}

fn smooth_model(c_o: f64) -> Model {
    let fields = CoefficientFields {
        concentration: field("A", |x| 0.5 + 0.5 * x[0]),
        thickness: field("h", |x| 1.0 + 0.5 * x[1]),
        ocean_velocity: [field("v_o_x", |x| x[1] - 0.5 + 0.3), field("v_o_y", |x| 0.5 - x[0] + 0.2)],
        body_force: None,
    };
    Model::new(unit_params(c_o), fields).unwrap()
}

fn exact_state(disc: &Discretization) -> State {
    let u = disc.velocity().interpolate_vector(disc.mesh(), exact_u).coeffs;
    let sigma = disc.stress().interpolate_tensor(disc.mesh(), exact_sigma).coeffs;
    State {
        u_old: u.clone(),
        u,
        sigma,
    }
}

fn random_vector(disc: &Discretization, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    (0..disc.n_dofs())
        .map(|d| if disc.is_constrained(d) { 0.0 } else { scale * rng.gen_range(-1.0..1.0) })
        .collect()
}

fn random_state(disc: &Discretization, rng: &mut ChaCha8Rng) -> State {
    let x = random_vector(disc, rng, 0.1);
    let old = random_vector(disc, rng, 0.1);
    let nu = disc.n_velocity();
    State {
        u: x[..nu].to_vec(),
        sigma: x[nu..].to_vec(),
        u_old: old[..nu].to_vec(),
    }
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[test]
fn representable_solution_has_zero_functional() {
    for n in [1, 2, 4] {
        let disc = Discretization::new(mixed_square(n));
        let model = representable_model(1.0);
        let state = exact_state(&disc);
        let scale = disc.energy_norm_sq(&state.u, &state.sigma);
        for mode in [Mode::TimeDependent, Mode::Stationary] {
            let p = Problem::new(&disc, &model, mode, 0.0).unwrap();
            let h = p.functional(&state);
            assert!(h <= 1e-24 * scale, "n = {n}: {h:e} vs scale {scale:e}");
            let sys = p.assemble(&state);
            let rhs = sq(&sys.rhs).sqrt();
            assert!(rhs <= 1e-12 * sys.matrix.max_abs(), "{rhs:e}");
        }
    }
}

#[test]
fn pointwise_examples() {
    let disc = Discretization::new(mixed_square(4));
    let model = smooth_model(1.0);
    let p = Problem::new(&disc, &model, Mode::TimeDependent, 0.0).unwrap();
    // u = u_old = v_o, σ = 0: r1 = 0, r2 = -(2η)^{1/2} ε(v_o)
    let v_o = disc
        .velocity()
        .interpolate_vector(disc.mesh(), |x| [x[1] - 0.2, 0.7 - x[0]])
        .coeffs;
    let state = State {
        u: v_o.clone(),
        sigma: vec![0.0; disc.n_stress()],
        u_old: v_o,
    };
    // interior cell so the interpolant is unconstrained on its nodes
    let cell = (0..disc.mesh().n_cells())
        .find(|&c| disc.cell_dofs(c)[..N_U].iter().all(|&d| !disc.is_constrained(d)))
        .unwrap();
    let xi = [0.2, 0.3];
    let r = p.residual_at(&state, cell, xi).unwrap();
    let x = disc.mesh().affine_map(cell).map(xi);
    let eta = 1.0 * (1.0 + 0.5 * x[1]) * (1.0f64 * (0.5 + 0.5 * x[0] - 1.0)).exp();
    assert!(r.r1[0].abs() < 1e-14 && r.r1[1].abs() < 1e-14, "{:?}", r.r1);
    // ε(v_o) = 0: the rotation has zero strain
    for row in r.r2 {
        for v in row {
            assert!(v.abs() < 1e-13 * eta.sqrt(), "{v}");
        }
    }
}

#[test]
fn beta_scaling_of_momentum_residual() {
    let mesh = mixed_square(2);
    let disc = Discretization::new(mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let state = random_state(&disc, &mut rng);
    let mut params = unit_params(0.0);
    let base = Model::new(params, smooth_model(0.0).fields).unwrap();
    params.dt *= 4.0;
    let scaled = Model::new(params, smooth_model(0.0).fields).unwrap();
    let (c, xi) = (3, [0.25, 0.25]);
    let f = disc.evaluate(&state.u, &state.sigma, c, xi);
    let old = disc.evaluate_velocity(&state.u_old, c, xi);
    let x = disc.mesh().affine_map(c).map(xi);
    let beta = 1.0 / (1.0 + 0.5 * x[1]);
    for i in 0..2 {
        let mass = (f.u[i] - old[i]) / beta.sqrt();
        let div = -beta.sqrt() * f.div_sigma[i];
        let r_base = Problem::new(&disc, &base, Mode::TimeDependent, 0.0).unwrap().residual_at(&state, c, xi).unwrap();
        let r_scaled = Problem::new(&disc, &scaled, Mode::TimeDependent, 0.0).unwrap().residual_at(&state, c, xi).unwrap();
        assert!((r_base.r1[i] - (mass + div)).abs() < 1e-13);
        assert!((r_scaled.r1[i] - (0.5 * mass + 2.0 * div)).abs() < 1e-13);
    }
}

#[test]
fn stress_only_direction() {
    let disc = Discretization::new(mixed_square(2));
    let model = smooth_model(1.0);
    let p = Problem::new(&disc, &model, Mode::TimeDependent, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let state = random_state(&disc, &mut rng);
    let mut dx = random_vector(&disc, &mut rng, 1.0);
    dx[..disc.n_velocity()].iter_mut().for_each(|v| *v = 0.0);
    let (c, xi) = (5, [0.1, 0.6]);
    let d = p.residual_derivative_at(&state, c, xi, &dx).unwrap();
    let tau = disc.evaluate(&vec![0.0; disc.n_velocity()], &dx[disc.n_velocity()..], c, xi);
    let x = disc.mesh().affine_map(c).map(xi);
    let h = 1.0 + 0.5 * x[1];
    let (beta, eta) = (1.0 / h, h * (0.5 * x[0] - 0.5).exp());
    for i in 0..2 {
        assert!((d.r1[i] + beta.sqrt() * tau.div_sigma[i]).abs() < 1e-12);
        for j in 0..2 {
            assert!((d.r2[i][j] - tau.sigma[i][j] / (2.0 * eta).sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn derivative_matches_finite_differences() {
    let disc = Discretization::new(mixed_square(2));
    let model = smooth_model(1.0);
    let p = Problem::new(&disc, &model, Mode::TimeDependent, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let state = random_state(&disc, &mut rng);
        let dx = random_vector(&disc, &mut rng, 1.0);
        let d = p.residual_derivative_vector(&state, &dx);
        let step = 1e-6;
        let mut plus = state.clone();
        plus.add_scaled(&dx, step);
        let mut minus = state.clone();
        minus.add_scaled(&dx, -step);
        let rp = p.residual_vector(&plus);
        let rm = p.residual_vector(&minus);
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * step)).collect();
        let err: Vec<f64> = fd.iter().zip(&d).map(|(a, b)| a - b).collect();
        assert!(sq(&err).sqrt() <= 1e-6 * sq(&d).sqrt(), "{}", sq(&err).sqrt() / sq(&d).sqrt());
    }
}

#[test]
fn functional_identities() {
    let disc = Discretization::new(mixed_square(3));
    let model = smooth_model(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for mode in [Mode::TimeDependent, Mode::Stationary] {
        let p = Problem::new(&disc, &model, mode, 0.0).unwrap();
        let state = random_state(&disc, &mut rng);
        let h = p.functional(&state);
        let ind = p.local_indicators(&state);
        assert!(ind.iter().all(|&v| v >= 0.0));
        let sum: f64 = ind.iter().sum();
        assert!((sum - h).abs() <= 1e-12 * h);
        let rv = sq(&p.residual_vector(&state));
        assert!((rv - h).abs() <= 1e-12 * h, "{rv} {h}");
    }
    let zero_model = Model::new(
        unit_params(1.0),
        CoefficientFields {
            concentration: ScalarField::constant("A", 1.0),
            thickness: ScalarField::constant("h", 1.0),
            ocean_velocity: [ScalarField::constant("v_o_x", 0.0), ScalarField::constant("v_o_y", 0.0)],
            body_force: None,
        },
    )
    .unwrap();
    let p = Problem::new(&disc, &zero_model, Mode::TimeDependent, 0.0).unwrap();
    assert_eq!(p.functional(&State::zeros(&disc)), 0.0);
}

#[test]
fn gram_matrix_structure() {
    let disc = Discretization::new(mixed_square(2));
    let model = smooth_model(1.0);
    let p = Problem::new(&disc, &model, Mode::TimeDependent, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let state = random_state(&disc, &mut rng);
    let sys = p.assemble(&state);
    let a = &sys.matrix;
    assert!(a.is_structurally_symmetric());
    assert!(a.max_asymmetry() <= 1e-12 * a.max_abs());
    let exec = disc.execution();
    for d in 0..disc.n_dofs() {
        if disc.is_constrained(d) {
            let (cols, vals) = a.row(d);
            assert_eq!((cols, vals), (&[d as u32][..], &[1.0][..]));
            assert_eq!(sys.rhs[d], 0.0);
        }
    }
    for _ in 0..20 {
        let x = random_vector(&disc, &mut rng, 1.0);
        let q = a.quadratic_form(exec, &x);
        let dr = sq(&p.residual_derivative_vector(&state, &x));
        assert!(q >= 0.0);
        assert!((q - dr).abs() <= 1e-10 * dr, "{q} {dr}");
    }
    // rhs = -(R, DR[φ_i]) = -Jᵀ r
    let r = p.residual_vector(&state);
    for _ in 0..5 {
        let x = random_vector(&disc, &mut rng, 1.0);
        let jx = p.residual_derivative_vector(&state, &x);
        let lhs: f64 = sys.rhs.iter().zip(&x).map(|(a, b)| a * b).sum();
        let rhs: f64 = -r.iter().zip(&jx).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-30), "{lhs} {rhs}");
    }
}

#[test]
fn linear_problem_matrix_independent_of_state() {
    let disc = Discretization::new(mixed_square(2));
    let model = smooth_model(0.0);
    let p = Problem::new(&disc, &model, Mode::TimeDependent, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let a = p.assemble(&random_state(&disc, &mut rng)).matrix;
    let b = p.assemble(&random_state(&disc, &mut rng)).matrix;
    assert_eq!(a, b);
}

#[test]
fn interior_perturbation_is_local() {
    let disc = Discretization::new(mixed_square(3));
    let model = smooth_model(1.0);
    let p = Problem::new(&disc, &model, Mode::TimeDependent, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let state = random_state(&disc, &mut rng);
    let before = p.local_indicators(&state);
    let cell = 7;
    let mut perturbed = state.clone();
    for d in disc.stress_interior_dofs(cell) {
        perturbed.sigma[d] += rng.gen_range(0.5..1.0);
    }
    let after = p.local_indicators(&perturbed);
    for c in 0..before.len() {
        if c == cell {
            assert!(after[c] != before[c]);
        } else {
            assert_eq!(after[c], before[c], "cell {c}");
        }
    }
}

#[test]
fn parallel_assembly_matches_sequential() {
    use crate::par::Execution;
    let mesh = mixed_square(4);
    let seq = Discretization::new(mesh.clone()).with_execution(Execution::Sequential);
    let par = Discretization::new(mesh).with_execution(Execution::Parallel);
    let model = smooth_model(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let state = random_state(&seq, &mut rng);
    let ps = Problem::new(&seq, &model, Mode::TimeDependent, 0.0).unwrap();
    let pp = Problem::new(&par, &model, Mode::TimeDependent, 0.0).unwrap();
    assert_eq!(ps.assemble(&state), pp.assemble(&state));
    assert_eq!(ps.functional(&state).to_bits(), pp.functional(&state).to_bits());
}
