//! Cross-geometry transfer, frame-count ablation and the resolution
//! benchmark grid.

use super::data::{build_dataset, generate_simulations, Dataset, Simulation};
use super::eval::{checkpoint_spec, evaluate, EvalReport};
use super::scenario::{n_points_for_edge, Scenario};
use super::train::{train, TrainConfig};
use crate::dataset::{trajectory_samples, Sample, Split, WindowSpec};
use crate::error::{Error, Result};
use crate::graphnet::{Checkpoint, Model};
use std::fmt::Write as _;

pub const SAME_GEOMETRY: &str = "same geometry";
pub const DIFFERENT_GEOMETRY: &str = "different geometry";

/// All windows of the given simulations.
pub fn windows_of(sims: &[Simulation], spec: WindowSpec, max_windows: usize) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for s in sims {
        out.extend(trajectory_samples(&s.sim, &s.traj, spec, max_windows, s.id)?);
    }
    Ok(out)
}

/// Fresh simulations of `scenario` evaluated without retraining.
pub fn transfer_test(
    checkpoint: &Checkpoint,
    scenario: &Scenario,
    seed: u64,
    n_sims: usize,
    max_windows: usize,
) -> Result<EvalReport> {
    let sims = generate_simulations(scenario, Split::Test, 0, seed, n_sims)?;
    let samples = windows_of(&sims, checkpoint_spec(checkpoint), max_windows)?;
    evaluate(
        &checkpoint.model,
        &samples,
        DIFFERENT_GEOMETRY,
        &resolution_tag(scenario),
    )
}

fn resolution_tag(scenario: &Scenario) -> String {
    format!("n_points={}", scenario.n_points())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub n: usize,
    pub gap: usize,
    pub same_mse: f64,
    pub same_mse_normalized: f64,
    pub transfer_mse: f64,
    pub transfer_mse_normalized: f64,
}

/// Input widths and spacings of the frame-count study, in recorded frames.
pub const ABLATION_GRID: [(usize, usize); 5] = [(2, 40), (3, 25), (4, 20), (5, 15), (8, 10)];
pub const ABLATION_LEAD: usize = 80;

/// One training per `(n, gap)`; each model is scored on the held-out
/// split of `base` and on the `transfer` simulations.
pub fn frame_ablation(
    config: &TrainConfig,
    base: &Dataset,
    transfer: &[Simulation],
    grid: &[(usize, usize)],
    lead: usize,
) -> Result<Vec<AblationRow>> {
    grid.iter()
        .map(|&(n, gap)| {
            let spec = WindowSpec { n, m: 1, gap, lead };
            let ds = base.rewindow(spec)?;
            let model = train(config, &ds)?.best.model;
            let same = evaluate(&model, &ds.samples(Split::Test)?, SAME_GEOMETRY, "")?;
            let other = evaluate(
                &model,
                &windows_of(transfer, spec, base.max_windows)?,
                DIFFERENT_GEOMETRY,
                "",
            )?;
            Ok(AblationRow {
                n,
                gap,
                same_mse: same.mean_mse,
                same_mse_normalized: same.mean_mse_normalized,
                transfer_mse: other.mean_mse,
                transfer_mse_normalized: other.mean_mse_normalized,
            })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("n,gap,same_mse,same_mse_normalized,transfer_mse,transfer_mse_normalized\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e}",
            r.n, r.gap, r.same_mse, r.same_mse_normalized, r.transfer_mse, r.transfer_mse_normalized
        )
        .unwrap();
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchCell {
    pub train_res: String,
    pub eval_geometry: String,
    pub eval_res: String,
    pub mse: f64,
    pub rel_l2: f64,
}

#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub train: TrainConfig,
    /// `(label, mean edge length)` per resolution.
    pub resolutions: Vec<(String, f64)>,
    /// Train, val and test simulations per training resolution.
    pub counts: [usize; 3],
    /// Distorted-domain simulations per evaluation resolution.
    pub transfer_sims: usize,
    pub spec: WindowSpec,
    pub max_windows: usize,
    pub frames: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            resolutions: vec![("high".into(), 0.1), ("low".into(), 0.2)],
            counts: [100, 10, 20],
            transfer_sims: 20,
            spec: WindowSpec::uniform(4, 1, 20),
            max_windows: 20,
            frames: 101,
            seed: 0,
        }
    }
}

/// Trains one heat model per resolution on the unit square and scores it
/// on the square at its own resolution and on the distorted domain at
/// every resolution.
pub fn benchmark_matrix(cfg: &BenchmarkConfig) -> Result<Vec<BenchCell>> {
    if cfg.resolutions.is_empty() {
        return Err(Error::invalid("benchmark needs at least one resolution"));
    }
    let square = Scenario::heat_square().with_frames(cfg.frames);
    let distorted = Scenario::heat_distorted().with_frames(cfg.frames);
    let transfer: Vec<(String, Vec<Simulation>)> = cfg
        .resolutions
        .iter()
        .enumerate()
        .map(|(k, (label, h))| {
            let n = n_points_for_edge(&distorted.domain(), *h, cfg.seed)?;
            let sc = distorted.clone().with_n_points(n);
            let seed = cfg.seed + 1_000_000 + (k * cfg.transfer_sims) as u64;
            Ok((
                label.clone(),
                generate_simulations(&sc, Split::Test, 0, seed, cfg.transfer_sims)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (k, (label, h)) in cfg.resolutions.iter().enumerate() {
        let n = n_points_for_edge(&square.domain(), *h, cfg.seed)?;
        let sc = square.clone().with_n_points(n);
        let total: usize = cfg.counts.iter().sum();
        let ds = build_dataset(
            &sc,
            cfg.counts,
            cfg.seed + (k * total) as u64,
            cfg.spec,
            cfg.max_windows,
        )?;
        let model: Model = train(&cfg.train, &ds)?.best.model;
        let same = evaluate(&model, &ds.samples(Split::Test)?, SAME_GEOMETRY, label)?;
        cells.push(BenchCell {
            train_res: label.clone(),
            eval_geometry: SAME_GEOMETRY.into(),
            eval_res: label.clone(),
            mse: same.mean_mse,
            rel_l2: same.mean_rel_l2,
        });
        for (eval_label, sims) in &transfer {
            let r = evaluate(
                &model,
                &windows_of(sims, cfg.spec, cfg.max_windows)?,
                DIFFERENT_GEOMETRY,
                eval_label,
            )?;
            cells.push(BenchCell {
                train_res: label.clone(),
                eval_geometry: DIFFERENT_GEOMETRY.into(),
                eval_res: eval_label.clone(),
                mse: r.mean_mse,
                rel_l2: r.mean_rel_l2,
            });
        }
    }
    Ok(cells)
}

pub fn benchmark_csv(cells: &[BenchCell]) -> String {
    let mut s = String::from("train-res,eval-geometry,eval-res,MSE,relL2\n");
    for c in cells {
        writeln!(
            s,
            "{},{},{},{:e},{:e}",
            c.train_res, c.eval_geometry, c.eval_res, c.mse, c.rel_l2
        )
        .unwrap();
    }
    s
}
