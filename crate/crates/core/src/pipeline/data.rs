//! Simulation collections split by simulation, windowed on demand.

use super::scenario::Scenario;
use crate::dataset::{
    compute_normalization, trajectory_samples, DatasetManifest, ManifestRecord, Sample, SimGraph, Split, WindowSpec,
};
use crate::error::{Error, Result};
use crate::fem::{read_trajectory, write_trajectory, PdeKind, Trajectory};
use crate::graphnet::Normalization;
use crate::io::file_sha256;
use crate::mesh::{read_graph, write_graph};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const MAX_WINDOWS: usize = 20;

#[derive(Clone, Debug)]
pub struct Simulation {
    pub id: usize,
    pub split: Split,
    pub sim: Arc<SimGraph>,
    pub traj: Arc<Trajectory>,
}

/// Generates `count` simulations with seeds `first_seed..`, ids `first_id..`.
pub fn generate_simulations(
    scenario: &Scenario,
    split: Split,
    first_id: usize,
    first_seed: u64,
    count: usize,
) -> Result<Vec<Simulation>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let (graph, traj) = scenario.run(first_seed + k as u64)?;
            Ok(Simulation {
                id: first_id + k,
                split,
                sim: Arc::new(SimGraph::for_trajectory(graph, &traj)?),
                traj: Arc::new(traj),
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub pde: PdeKind,
    pub spec: WindowSpec,
    pub max_windows: usize,
    pub norm: Normalization,
    pub sims: Vec<Simulation>,
}

impl Dataset {
    /// Normalization is computed from the training split only.
    pub fn new(sims: Vec<Simulation>, spec: WindowSpec, max_windows: usize) -> Result<Self> {
        let pde = sims
            .first()
            .ok_or_else(|| Error::invalid("dataset has no simulations"))?
            .traj
            .pde
            .kind;
        if sims.iter().any(|s| s.traj.pde.kind != pde) {
            return Err(Error::invalid("dataset mixes PDE kinds"));
        }
        let mut ids: Vec<usize> = sims.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("simulation ids must be unique"));
        }
        let mut d = Self {
            pde,
            spec,
            max_windows,
            norm: Normalization::identity(2 + pde.num_parameters()),
            sims,
        };
        d.norm = compute_normalization(&d.samples(Split::Train)?)?;
        Ok(d)
    }

    /// Same simulations under a different window layout, renormalized.
    pub fn rewindow(&self, spec: WindowSpec) -> Result<Self> {
        Self::new(self.sims.clone(), spec, self.max_windows)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Simulation> {
        self.sims.iter().filter(move |s| s.split == split)
    }

    pub fn samples(&self, split: Split) -> Result<Vec<Sample>> {
        let per_sim: Vec<Vec<Sample>> = self
            .split(split)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|s| trajectory_samples(&s.sim, &s.traj, self.spec, self.max_windows, s.id))
            .collect::<Result<_>>()?;
        Ok(per_sim.into_iter().flatten().collect())
    }

    /// Writes one trajectory and one mesh file per simulation plus the
    /// manifest; returns the manifest hash.
    pub fn save(&self, dir: &Path) -> Result<String> {
        std::fs::create_dir_all(dir)?;
        let records = self
            .sims
            .par_iter()
            .map(|s| {
                let traj = PathBuf::from(format!("sim{:05}.ptr", s.id));
                let graph = PathBuf::from(format!("sim{:05}.pgn", s.id));
                write_trajectory(&dir.join(&traj), &s.traj)?;
                write_graph(&dir.join(&graph), &s.sim.graph)?;
                let windows = self.spec.count(s.traj.num_frames(), self.max_windows);
                Ok(ManifestRecord {
                    sim_id: s.id,
                    split: s.split,
                    trajectory_sha: file_sha256(&dir.join(&traj))?,
                    trajectory: traj,
                    graph_sha: file_sha256(&dir.join(&graph))?,
                    graph,
                    windows: (0, windows),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.manifest_with(records).save(&dir.join(MANIFEST_NAME))
    }

    fn manifest_with(&self, records: Vec<ManifestRecord>) -> DatasetManifest {
        DatasetManifest {
            pde: self.pde,
            spec: self.spec,
            norm: self.norm.clone(),
            records,
        }
    }

    /// Loads a saved dataset from its manifest (or the directory holding it).
    pub fn load(path: &Path) -> Result<Self> {
        let manifest_path = if path.is_dir() {
            path.join(MANIFEST_NAME)
        } else {
            path.to_path_buf()
        };
        let manifest = DatasetManifest::load(&manifest_path)?;
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let sims = manifest
            .records
            .par_iter()
            .map(|r| {
                let traj = read_trajectory(&dir.join(&r.trajectory))?;
                let graph = read_graph(&dir.join(&r.graph))?;
                Ok(Simulation {
                    id: r.sim_id,
                    split: r.split,
                    sim: Arc::new(SimGraph::for_trajectory(graph, &traj)?),
                    traj: Arc::new(traj),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let max_windows = manifest
            .records
            .iter()
            .map(|r| r.windows.1)
            .max()
            .unwrap_or(MAX_WINDOWS);
        let d = Self {
            pde: manifest.pde,
            spec: manifest.spec,
            max_windows,
            norm: manifest.norm,
            sims,
        };
        if d.sims.iter().any(|s| s.traj.pde.kind != d.pde) {
            return Err(Error::format(
                "manifest",
                "trajectory PDE kind disagrees with the manifest",
            ));
        }
        Ok(d)
    }
}

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Standard heat dataset: train/val/test simulations on one scenario with
/// consecutive seeds starting at `seed`.
pub fn build_dataset(
    scenario: &Scenario,
    counts: [usize; 3],
    seed: u64,
    spec: WindowSpec,
    max_windows: usize,
) -> Result<Dataset> {
    let mut sims = Vec::new();
    let mut next = 0;
    for (split, count) in [Split::Train, Split::Val, Split::Test].into_iter().zip(counts) {
        sims.extend(generate_simulations(scenario, split, next, seed + next as u64, count)?);
        next += count;
    }
    Dataset::new(sims, spec, max_windows)
}
