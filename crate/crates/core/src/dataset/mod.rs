//! Supervised samples cut from trajectories: sliding windows of `n` input
//! frames and `m` targets, node and edge feature matrices, and the
//! normalization statistics derived from a training split.

pub mod manifest;

pub use manifest::{DatasetManifest, ManifestRecord, Split};

use crate::error::{Error, Result};
use crate::fem::{PdeKind, Trajectory};
use crate::graphnet::{Normalization, Topology};
use crate::mesh::Graph;
use std::sync::Arc;

pub const STD_FLOOR: f64 = 1e-8;

/// Frame spacing of a window, in recorded frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub n: usize,
    pub m: usize,
    /// Between consecutive inputs and between consecutive targets.
    pub gap: usize,
    /// From the last input to the first target.
    pub lead: usize,
}

impl WindowSpec {
    /// Targets follow at the input cadence.
    pub fn uniform(n: usize, m: usize, gap: usize) -> Self {
        Self { n, m, gap, lead: gap }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.gap == 0 || self.lead == 0 {
            return Err(Error::invalid(format!(
                "window needs n, m, gap, lead >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Offset of the last target from the window start.
    pub fn span(&self) -> usize {
        (self.n - 1) * self.gap + self.lead + (self.m - 1) * self.gap
    }

    /// Number of windows a trajectory of `frames` frames yields.
    pub fn count(&self, frames: usize, max_windows: usize) -> usize {
        frames.saturating_sub(self.span()).min(max_windows)
    }

    pub fn inputs(&self, start: usize) -> Vec<usize> {
        (0..self.n).map(|k| start + k * self.gap).collect()
    }

    pub fn targets(&self, start: usize) -> Vec<usize> {
        let first = start + (self.n - 1) * self.gap + self.lead;
        (0..self.m).map(|k| first + k * self.gap).collect()
    }
}

/// Frame indices of one window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub inputs: Vec<usize>,
    pub targets: Vec<usize>,
}

/// Windows starting at offsets `0..count`.
pub fn window(num_frames: usize, spec: WindowSpec, max_windows: usize) -> Result<Vec<Window>> {
    spec.validate()?;
    let count = spec.count(num_frames, max_windows);
    if count == 0 {
        return Err(Error::TrajectoryTooShort {
            required: spec.span() + 1,
            available: num_frames,
        });
    }
    Ok((0..count)
        .map(|start| Window {
            start,
            inputs: spec.inputs(start),
            targets: spec.targets(start),
        })
        .collect())
}

/// Mesh, aggregation order and raw edge features shared by every window of
/// one simulation.
#[derive(Clone, Debug)]
pub struct SimGraph {
    pub graph: Graph,
    pub topology: Topology,
    /// `M x (2 + P)`: displacement, then PDE parameters at the edge midpoint.
    pub edges: Vec<f64>,
    pub edge_dim: usize,
}

impl SimGraph {
    pub fn new(graph: Graph, kind: PdeKind, params: &[f64]) -> Result<Self> {
        let edges = edge_features(&graph, kind, params)?;
        let topology = Topology::from_graph(&graph)?;
        Ok(Self {
            graph,
            topology,
            edges,
            edge_dim: 2 + kind.num_parameters(),
        })
    }

    pub fn for_trajectory(graph: Graph, traj: &Trajectory) -> Result<Self> {
        if graph.num_nodes() != traj.num_nodes {
            return Err(Error::Shape(format!(
                "trajectory has {} nodes, graph has {}",
                traj.num_nodes,
                graph.num_nodes()
            )));
        }
        Self::new(graph, traj.pde.kind, &traj.pde.parameters())
    }
}

/// Edge feature matrix; constant parameters are broadcast to every edge.
pub fn edge_features(graph: &Graph, kind: PdeKind, params: &[f64]) -> Result<Vec<f64>> {
    if params.len() != kind.num_parameters() {
        return Err(Error::MissingParameter(match kind {
            PdeKind::AdvectionDiffusion => "lambda1, lambda2",
            _ => "none expected",
        }));
    }
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("PDE parameter {p} is not finite")));
    }
    let mut out = Vec::with_capacity(graph.num_edges() * (2 + params.len()));
    for e in 0..graph.num_edges() {
        out.extend_from_slice(&graph.displacement(e));
        out.extend_from_slice(params);
    }
    Ok(out)
}

/// One training example.
#[derive(Clone, Debug)]
pub struct Sample {
    pub sim: Arc<SimGraph>,
    pub sim_id: usize,
    pub start: usize,
    /// `N x (n + 1)`: input frames oldest first, then the boundary flag.
    pub nodes: Vec<f64>,
    /// `N x m`.
    pub targets: Vec<f64>,
}

impl Sample {
    pub fn num_nodes(&self) -> usize {
        self.sim.graph.num_nodes()
    }
}

pub fn assemble_features(sim: &Arc<SimGraph>, traj: &Trajectory, w: &Window, sim_id: usize) -> Result<Sample> {
    let n = traj.num_nodes;
    if sim.graph.num_nodes() != n {
        return Err(Error::Shape(format!(
            "trajectory has {n} nodes, graph has {}",
            sim.graph.num_nodes()
        )));
    }
    if let Some(&t) = w.targets.iter().chain(&w.inputs).find(|&&t| t >= traj.num_frames()) {
        return Err(Error::TrajectoryTooShort {
            required: t + 1,
            available: traj.num_frames(),
        });
    }
    let width = w.inputs.len() + 1;
    let mut nodes = vec![0.0; n * width];
    for (c, &f) in w.inputs.iter().enumerate() {
        for (i, v) in traj.frame(f).iter().enumerate() {
            nodes[i * width + c] = *v;
        }
    }
    for i in 0..n {
        nodes[i * width + width - 1] = sim.graph.boundary[i] as f64;
    }
    let m = w.targets.len();
    let mut targets = vec![0.0; n * m];
    for (c, &f) in w.targets.iter().enumerate() {
        for (i, v) in traj.frame(f).iter().enumerate() {
            targets[i * m + c] = *v;
        }
    }
    Ok(Sample {
        sim: Arc::clone(sim),
        sim_id,
        start: w.start,
        nodes,
        targets,
    })
}

/// All windows of one trajectory as samples.
pub fn trajectory_samples(
    sim: &Arc<SimGraph>,
    traj: &Trajectory,
    spec: WindowSpec,
    max_windows: usize,
    sim_id: usize,
) -> Result<Vec<Sample>> {
    window(traj.num_frames(), spec, max_windows)?
        .iter()
        .map(|w| assemble_features(sim, traj, w, sim_id))
        .collect()
}

fn column_stats(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut first = None;
    let mut constant = true;
    for v in values.clone() {
        count += 1;
        sum += v;
        match first {
            None => first = Some(v),
            Some(f) => constant &= v == f,
        }
    }
    if count == 0 {
        return (0.0, 1.0);
    }
    if constant {
        return (first.unwrap(), 1.0);
    }
    let mean = sum / count as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    (mean, var.sqrt().max(STD_FLOOR))
}

/// Z-score statistics over the given (training) samples. Frame values of
/// all input columns pool into one node statistic; edge columns are
/// separate. A constant column gets its exact value as mean, so it
/// normalizes to zero.
pub fn compute_normalization(samples: &[Sample]) -> Result<Normalization> {
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("cannot normalize an empty split"))?;
    let width = first.nodes.len() / first.num_nodes();
    let edge_dim = first.sim.edge_dim;
    if samples
        .iter()
        .any(|s| s.nodes.len() != s.num_nodes() * width || s.sim.edge_dim != edge_dim)
    {
        return Err(Error::Shape("samples disagree on feature widths".into()));
    }
    let node_vals = samples.iter().flat_map(|s| {
        s.nodes
            .chunks_exact(width)
            .flat_map(move |row| row[..width - 1].iter().copied())
    });
    let (node_mean, node_std) = column_stats(node_vals);
    let mut edge_mean = Vec::with_capacity(edge_dim);
    let mut edge_std = Vec::with_capacity(edge_dim);
    for c in 0..edge_dim {
        let col = samples
            .iter()
            .flat_map(move |s| s.sim.edges.chunks_exact(edge_dim).map(move |r| r[c]));
        let (m, s) = column_stats(col);
        edge_mean.push(m);
        edge_std.push(s);
    }
    Ok(Normalization {
        node_mean,
        node_std,
        edge_mean,
        edge_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_counts() {
        let w = window(2, WindowSpec::uniform(1, 1, 1), 20).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].inputs, vec![0]);
        assert_eq!(w[0].targets, vec![1]);
        let spec = WindowSpec::uniform(4, 1, 20);
        assert_eq!(window(100, spec, 20).unwrap().len(), 20);
        assert_eq!(window(81, spec, 20).unwrap().len(), 1);
        match window(80, spec, 20) {
            Err(Error::TrajectoryTooShort {
                required: 81,
                available: 80,
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lead_offsets_targets() {
        let spec = WindowSpec {
            n: 2,
            m: 1,
            gap: 40,
            lead: 80,
        };
        let w = window(200, spec, 20).unwrap();
        assert_eq!(w[3].inputs, vec![3, 43]);
        assert_eq!(w[3].targets, vec![123]);
        assert_eq!(spec.span(), 120);
    }

    #[test]
    fn constant_columns_normalize_to_zero() {
        let (m, s) = column_stats([1.2, 1.2, 1.2].into_iter());
        assert_eq!((m, s), (1.2, 1.0));
        assert_eq!((1.2 - m) / s, 0.0);
        let (m, s) = column_stats([1.0, 3.0].into_iter());
        assert_eq!((m, s), (2.0, 1.0));
    }
}
