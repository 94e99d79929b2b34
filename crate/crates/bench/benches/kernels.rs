use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use graphpde::dataset::{trajectory_samples, SimGraph, WindowSpec};
use graphpde::fem::{assemble_p1, resolve_bc, step_implicit_euler, BoundaryCondition, PdeSpec};
use graphpde::graphnet::{ArchSpec, Model};
use graphpde::mesh::{generate, sample_points, triangulate_domain};
use graphpde::pipeline::Scenario;
use graphpde::spectral::{random_filtered_ic, SpectralSolver};
use graphpde::Domain;
use std::sync::Arc;

fn triangulation(c: &mut Criterion) {
    let d = Domain::unit_square();
    let mut g = c.benchmark_group("triangulate");
    for n in [200, 1000, 4000] {
        let pts = sample_points(&d, n, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &pts.points, |b, p| {
            b.iter(|| triangulate_domain(&d, black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn fem(c: &mut Criterion) {
    let d = Domain::unit_square();
    let graph = generate(&d, 1000, 2).unwrap();
    c.bench_function("assemble_p1/1000", |b| {
        b.iter(|| assemble_p1(black_box(&graph)).unwrap())
    });

    let m = assemble_p1(&graph).unwrap();
    let bc = resolve_bc(&d, &[("top".into(), BoundaryCondition::Dirichlet(100.0))]).unwrap();
    let pde = PdeSpec::heat(bc);
    let u = vec![0.0; graph.num_nodes()];
    c.bench_function("implicit_euler_cg/1000", |b| {
        b.iter(|| step_implicit_euler(black_box(&u), 8e-4, &m, &pde, &graph).unwrap())
    });
}

fn gnn(c: &mut Criterion) {
    let (graph, traj) = Scenario::heat_square().with_frames(30).run(3).unwrap();
    let sim = Arc::new(SimGraph::for_trajectory(graph, &traj).unwrap());
    let s = trajectory_samples(&sim, &traj, WindowSpec::uniform(4, 1, 5), 1, 0)
        .unwrap()
        .remove(0);
    let model = Model::new(ArchSpec::new(4, 1, 0), 0).unwrap();
    c.bench_function("gnn_forward/256", |b| {
        b.iter(|| model.forward(&sim.topology, black_box(&s.nodes), &sim.edges).unwrap())
    });
    let mut grad = vec![0.0; model.params.len()];
    c.bench_function("gnn_forward_backward/256", |b| {
        b.iter(|| {
            model
                .loss_and_gradient(
                    &sim.topology,
                    black_box(&s.nodes),
                    &sim.edges,
                    &s.targets,
                    1.0,
                    &mut grad,
                )
                .unwrap()
        })
    });
}

fn spectral(c: &mut Criterion) {
    let solver = SpectralSolver::new(64, 3e-4).unwrap();
    let ic = solver.forward(&random_filtered_ic(64, 4).unwrap());
    c.bench_function("spectral_step/64", |b| {
        b.iter(|| {
            let mut z = ic.clone();
            solver.step(&mut z, 2e-3);
            z
        })
    });
}

criterion_group!(benches, triangulation, fem, gnn, spectral);
criterion_main!(benches);
