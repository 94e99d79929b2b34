#![allow(dead_code)]

use graphpde::graphnet::{Aggregation, ArchSpec, Model, Topology};
use graphpde::mesh::{generate, Domain, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Edge features `[dx, dy, params...]` in graph edge order.
pub fn edge_features(g: &Graph, params: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.num_edges() * (2 + params.len()));
    for e in 0..g.num_edges() {
        let d = g.displacement(e);
        out.extend_from_slice(&d);
        out.extend_from_slice(params);
    }
    out
}

pub struct MicroCase {
    pub model: Model,
    pub graph: Graph,
    pub topo: Topology,
    pub nodes: Vec<f64>,
    pub edges: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Small random model and graph for gradient checks.
pub fn micro_case(seed: u64) -> MicroCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arch = ArchSpec {
        layers: rng.random_range(1..=3),
        node_in: rng.random_range(2..=4),
        edge_in: rng.random_range(2..=4),
        out: rng.random_range(1..=2),
        hidden: rng.random_range(2..=5),
        message: rng.random_range(2..=4),
        latent: rng.random_range(2..=3),
        aggregation: if seed % 4 == 3 {
            Aggregation::Sum
        } else {
            Aggregation::Mean
        },
    };
    let graph = generate(&Domain::unit_square(), rng.random_range(2..=6), seed).unwrap();
    let topo = Topology::from_graph(&graph).unwrap();
    let mut model = Model::new(arch.clone(), seed).unwrap();
    for p in &mut model.params {
        *p += rng.random_range(-0.1..0.1);
    }
    model.norm.node_mean = rng.random_range(-1.0..1.0);
    model.norm.node_std = rng.random_range(0.5..2.0);
    for c in 0..arch.edge_in {
        model.norm.edge_mean[c] = rng.random_range(-0.2..0.2);
        model.norm.edge_std[c] = rng.random_range(0.5..1.5);
    }
    let n = graph.num_nodes();
    let nodes: Vec<f64> = (0..n * arch.node_in).map(|_| rng.random_range(-2.0..2.0)).collect();
    let params: Vec<f64> = (0..arch.edge_in - 2).map(|_| rng.random_range(0.5..1.5)).collect();
    let edges = edge_features(&graph, &params);
    let targets: Vec<f64> = (0..n * arch.out).map(|_| rng.random_range(-2.0..2.0)).collect();
    MicroCase {
        model,
        graph,
        topo,
        nodes,
        edges,
        targets,
    }
}

/// Largest relative deviation between reverse-mode gradients and central
/// differences (step 1e-6) of the summed squared error. Components below
/// 1e-4 of the largest gradient entry are measured against that floor,
/// where difference quotients are dominated by cancellation.
pub fn max_gradient_error(case: &MicroCase) -> f64 {
    let m = &case.model;
    let mut grad = vec![0.0; m.params.len()];
    m.loss_and_gradient(&case.topo, &case.nodes, &case.edges, &case.targets, 1.0, &mut grad)
        .unwrap();
    let sse = |model: &Model| -> f64 {
        let y = model.forward_normalized(&case.topo, &case.nodes, &case.edges).unwrap();
        y.iter()
            .zip(&case.targets)
            .map(|(p, t)| {
                let r = p - (t - model.norm.node_mean) / model.norm.node_std;
                r * r
            })
            .sum()
    };
    let floor = 1e-4 * grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut probe = m.clone();
    for i in 0..m.params.len() {
        let p0 = probe.params[i];
        probe.params[i] = p0 + h;
        let up = sse(&probe);
        probe.params[i] = p0 - h;
        let down = sse(&probe);
        probe.params[i] = p0;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(floor).max(1e-300);
        worst = worst.max(rel);
    }
    worst
}
