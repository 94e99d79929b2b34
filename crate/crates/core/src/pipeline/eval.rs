//! Single-step evaluation metrics and autoregressive rollout.

use crate::dataset::{Sample, SimGraph, WindowSpec};
use crate::error::{Error, Result};
use crate::fem::Trajectory;
use crate::graphnet::{Checkpoint, EpochRecord, Model};
use rayon::prelude::*;
use std::fmt::Write as _;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub geometry: String,
    pub resolution: String,
    /// `(simulation id, window start)` per sample.
    pub samples: Vec<(usize, usize)>,
    /// Physical units.
    pub mse: Vec<f64>,
    pub mse_normalized: Vec<f64>,
    pub rel_l2: Vec<f64>,
    pub mean_mse: f64,
    pub mean_mse_normalized: f64,
    pub mean_rel_l2: f64,
    /// Per-step rollout error, when a rollout was run.
    pub rollout_curve: Vec<f64>,
}

/// `||pred - truth|| / ||truth||`; an all-zero truth falls back to the
/// absolute norm so the metric stays finite.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> f64 {
    let num = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt();
    let den = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / truth.len().max(1) as f64
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Fails when the samples were built for a different feature layout.
pub fn check_compatible(model: &Model, samples: &[Sample]) -> Result<()> {
    let a = &model.arch;
    for s in samples {
        let width = s.nodes.len() / s.num_nodes().max(1);
        if width != a.node_in || s.sim.edge_dim != a.edge_in || s.targets.len() != s.num_nodes() * a.out {
            return Err(Error::Shape(format!(
                "model expects {} node, {} edge and {} output features; sample {} of simulation {} has {}, {} and {}",
                a.node_in,
                a.edge_in,
                a.out,
                s.start,
                s.sim_id,
                width,
                s.sim.edge_dim,
                s.targets.len() / s.num_nodes().max(1)
            )));
        }
    }
    Ok(())
}

/// Metrics for given physical-unit predictions, one per sample.
pub fn report_from_predictions(
    predictions: &[Vec<f64>],
    samples: &[Sample],
    node_std: f64,
    geometry: &str,
    resolution: &str,
) -> Result<EvalReport> {
    if predictions.len() != samples.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} samples",
            predictions.len(),
            samples.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    let mut r = EvalReport {
        geometry: geometry.to_string(),
        resolution: resolution.to_string(),
        ..Default::default()
    };
    for (p, s) in predictions.iter().zip(samples) {
        if p.len() != s.targets.len() {
            return Err(Error::Shape("prediction length differs from target length".into()));
        }
        let e = mse(p, &s.targets);
        r.samples.push((s.sim_id, s.start));
        r.mse.push(e);
        r.mse_normalized.push(e / (node_std * node_std));
        r.rel_l2.push(relative_l2(p, &s.targets));
    }
    r.mean_mse = mean(&r.mse);
    r.mean_mse_normalized = mean(&r.mse_normalized);
    r.mean_rel_l2 = mean(&r.rel_l2);
    Ok(r)
}

pub fn predict(model: &Model, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    check_compatible(model, samples)?;
    samples
        .par_iter()
        .map(|s| model.forward(&s.sim.topology, &s.nodes, &s.sim.edges))
        .collect()
}

pub fn evaluate(model: &Model, samples: &[Sample], geometry: &str, resolution: &str) -> Result<EvalReport> {
    let preds = predict(model, samples)?;
    report_from_predictions(&preds, samples, model.norm.node_std, geometry, resolution)
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sim,start,mse,mse_normalized,rel_l2\n");
        for (k, (sim, start)) in self.samples.iter().enumerate() {
            writeln!(
                s,
                "{sim},{start},{:e},{:e},{:e}",
                self.mse[k], self.mse_normalized[k], self.rel_l2[k]
            )
            .unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "geometry={} resolution={} samples={} mse={:e} mse_normalized={:e} rel_l2={:e}",
            self.geometry,
            self.resolution,
            self.samples.len(),
            self.mean_mse,
            self.mean_mse_normalized,
            self.mean_rel_l2
        )
    }
}

pub fn loss_curve_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,lr,train_loss,val_loss\n");
    for h in history {
        writeln!(s, "{},{:e},{:e},{:e}", h.epoch, h.lr, h.train_loss, h.val_loss).unwrap();
    }
    s
}

/// Window layout a checkpoint was trained on.
pub fn checkpoint_spec(c: &Checkpoint) -> WindowSpec {
    WindowSpec {
        n: c.model.arch.input_frames(),
        m: c.model.arch.out,
        gap: c.task.gap as usize,
        lead: c.task.lead as usize,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    /// Predicted frames in physical units.
    pub predictions: Vec<Vec<f64>>,
    /// Frame index of each prediction.
    pub frames: Vec<usize>,
    pub step_mse: Vec<f64>,
    pub step_mse_normalized: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RolloutOptions {
    pub steps: usize,
    /// Feed ground truth back instead of predictions.
    pub teacher_forcing: bool,
    /// Allow input widths other than three frames.
    pub general_n: bool,
}

impl RolloutOptions {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            teacher_forcing: false,
            general_n: false,
        }
    }
}

fn node_matrix(history: &[&[f64]], boundary: &[u8]) -> Vec<f64> {
    let width = history.len() + 1;
    let mut out = vec![0.0; boundary.len() * width];
    for (c, frame) in history.iter().enumerate() {
        for (i, v) in frame.iter().enumerate() {
            out[i * width + c] = *v;
        }
    }
    for (i, b) in boundary.iter().enumerate() {
        out[i * width + width - 1] = *b as f64;
    }
    out
}

fn check_rollout_model(model: &Model, spec: WindowSpec, opts: RolloutOptions) -> Result<()> {
    if model.arch.out != 1 {
        return Err(Error::invalid("rollout needs a single-output model"));
    }
    if spec.n != 3 && !opts.general_n {
        return Err(Error::invalid(format!(
            "rollout expects a 3-frame model, this one takes {} frames (enable general n to override)",
            spec.n
        )));
    }
    if spec.lead != spec.gap {
        return Err(Error::invalid(format!(
            "rollout chains predictions at the input cadence; gap {} differs from lead {}",
            spec.gap, spec.lead
        )));
    }
    if opts.steps == 0 {
        return Err(Error::invalid("rollout needs at least one step"));
    }
    Ok(())
}

/// Predictions only, from the `n` initial frames (oldest first).
pub fn rollout_from(
    model: &Model,
    sim: &SimGraph,
    spec: WindowSpec,
    initial: &[Vec<f64>],
    opts: RolloutOptions,
) -> Result<Vec<Vec<f64>>> {
    check_rollout_model(model, spec, opts)?;
    if initial.len() != spec.n || initial.iter().any(|f| f.len() != sim.graph.num_nodes()) {
        return Err(Error::Shape(format!(
            "rollout needs {} initial frames of {} values",
            spec.n,
            sim.graph.num_nodes()
        )));
    }
    let mut history: Vec<Vec<f64>> = initial.to_vec();
    let mut out = Vec::with_capacity(opts.steps);
    for _ in 0..opts.steps {
        let window: Vec<&[f64]> = history[history.len() - spec.n..].iter().map(Vec::as_slice).collect();
        let nodes = node_matrix(&window, &sim.graph.boundary);
        let y = model.forward(&sim.topology, &nodes, &sim.edges)?;
        history.push(y.clone());
        out.push(y);
    }
    Ok(out)
}

/// Rollout against a ground-truth trajectory starting at window `start`.
pub fn rollout(
    model: &Model,
    sim: &SimGraph,
    traj: &Trajectory,
    spec: WindowSpec,
    start: usize,
    opts: RolloutOptions,
) -> Result<Rollout> {
    check_rollout_model(model, spec, opts)?;
    let frames: Vec<usize> = (0..opts.steps).map(|k| start + (spec.n + k) * spec.gap).collect();
    let last = *frames.last().unwrap();
    if last >= traj.num_frames() {
        return Err(Error::TrajectoryTooShort {
            required: last + 1,
            available: traj.num_frames(),
        });
    }
    if traj.num_nodes != sim.graph.num_nodes() {
        return Err(Error::Shape("trajectory and mesh node counts differ".into()));
    }
    let mut history: Vec<Vec<f64>> = (0..spec.n).map(|k| traj.frame(start + k * spec.gap).to_vec()).collect();
    let mut r = Rollout {
        predictions: Vec::with_capacity(opts.steps),
        frames: frames.clone(),
        step_mse: Vec::new(),
        step_mse_normalized: Vec::new(),
    };
    let var = model.norm.node_std * model.norm.node_std;
    for &f in &frames {
        let window: Vec<&[f64]> = history[history.len() - spec.n..].iter().map(Vec::as_slice).collect();
        let nodes = node_matrix(&window, &sim.graph.boundary);
        let y = model.forward(&sim.topology, &nodes, &sim.edges)?;
        let truth = traj.frame(f);
        let e = mse(&y, truth);
        r.step_mse.push(e);
        r.step_mse_normalized.push(e / var);
        history.push(if opts.teacher_forcing {
            truth.to_vec()
        } else {
            y.clone()
        });
        r.predictions.push(y);
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutSummary {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub runs: usize,
}

impl RolloutSummary {
    pub fn from_runs(runs: &[Rollout]) -> Result<Self> {
        let steps = runs
            .first()
            .ok_or_else(|| Error::invalid("no rollouts to summarize"))?
            .step_mse
            .len();
        let mut s = Self {
            mean: vec![0.0; steps],
            min: vec![f64::INFINITY; steps],
            max: vec![0.0; steps],
            runs: runs.len(),
        };
        for r in runs {
            for (k, &e) in r.step_mse.iter().enumerate() {
                s.mean[k] += e / runs.len() as f64;
                s.min[k] = s.min[k].min(e);
                s.max[k] = s.max[k].max(e);
            }
        }
        Ok(s)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,mean_mse,min_mse,max_mse\n");
        for k in 0..self.mean.len() {
            writeln!(s, "{},{:e},{:e},{:e}", k + 1, self.mean[k], self.min[k], self.max[k]).unwrap();
        }
        s
    }
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}
