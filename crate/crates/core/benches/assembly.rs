//! Gauss-Newton system assembly and functional evaluation, sequential
//! against data-parallel execution on the rotating-current square.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use icefem::lsq::{Discretization, Mode, Problem, State};
use icefem::mesh::{square_grid, BoundaryTag};
use icefem::model::{CoefficientFields, Model, PhysicalParams, ScalarField};
use icefem::par::Execution;
use icefem::solver::{initial_stress, SigmaInit};

const L: f64 = 500_000.0;

fn model() -> Model {
    let fields = CoefficientFields {
        concentration: ScalarField::new("A", |x, _| x[0] / L),
        thickness: ScalarField::constant("h", 1.0),
        ocean_velocity: [
            ScalarField::new("v_o_x", |x, _| 0.1 * (2.0 * x[1] - L) / L),
            ScalarField::new("v_o_y", |x, _| 0.1 * (L - 2.0 * x[0]) / L),
        ],
        body_force: None,
    };
    Model::new(PhysicalParams::default(), fields).unwrap()
}

fn state(disc: &Discretization, model: &Model) -> State {
    let u = disc
        .velocity()
        .interpolate_vector(disc.mesh(), |x| {
            let v = model.coefficients_at(x, 0.0).unwrap().v_o;
            [0.9 * v[0], 1.1 * v[1]]
        })
        .coeffs;
    let sigma = initial_stress(disc, model, &u, 0.0, SigmaInit::Interpolate).unwrap();
    State {
        u_old: u.clone(),
        u,
        sigma,
    }
}

fn assembly(c: &mut Criterion) {
    let model = model();
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for n in [16, 32, 64] {
        let mesh = square_grid(n, L, |_, _| BoundaryTag::Dirichlet);
        for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let disc = Discretization::new(mesh.clone()).with_execution(exec);
            let st = state(&disc, &model);
            let problem = Problem::new(&disc, &model, Mode::TimeDependent, 600.0).unwrap();
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| black_box(problem.assemble(black_box(&st))))
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("functional");
    let mesh = square_grid(64, L, |_, _| BoundaryTag::Dirichlet);
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let disc = Discretization::new(mesh.clone()).with_execution(exec);
        let st = state(&disc, &model);
        let problem = Problem::new(&disc, &model, Mode::TimeDependent, 600.0).unwrap();
        group.bench_function(label, |b| b.iter(|| black_box(problem.functional(black_box(&st)))));
    }
    group.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
