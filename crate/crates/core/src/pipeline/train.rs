//! Mini-batch Adam training with seeded shuffling, best-validation
//! selection and exact resumption.

use super::data::Dataset;
use crate::dataset::{Sample, Split};
use crate::error::{Error, Result};
use crate::graphnet::{
    adam_step, lr_schedule_with, save_checkpoint, AdamConfig, AdamState, Aggregation, ArchSpec, Checkpoint,
    EpochRecord, Model, RngState, TaskMeta,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub base_lr: f64,
    pub lr_decay: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub layers: usize,
    pub hidden: usize,
    pub message: usize,
    pub latent: usize,
    pub aggregation: Aggregation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            base_lr: 1e-3,
            lr_decay: 0.2,
            decay_every: 5,
            batch_size: 8,
            seed: 0,
            layers: 3,
            hidden: 128,
            message: 128,
            latent: 64,
            aggregation: Aggregation::Mean,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("epochs", self.epochs),
            ("decay_every", self.decay_every),
            ("batch_size", self.batch_size),
            ("layers", self.layers),
            ("hidden", self.hidden),
            ("message", self.message),
            ("latent", self.latent),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) || !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            return Err(Error::invalid("learning rate and decay must be positive"));
        }
        Ok(())
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        lr_schedule_with(epoch, self.base_lr, self.lr_decay, self.decay_every)
    }

    pub fn arch(&self, spec_n: usize, spec_m: usize, params: usize) -> ArchSpec {
        ArchSpec {
            layers: self.layers,
            hidden: self.hidden,
            message: self.message,
            latent: self.latent,
            aggregation: self.aggregation,
            ..ArchSpec::new(spec_n, spec_m, params)
        }
    }

    /// `key = value` lines, one per field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let agg = match self.aggregation {
            Aggregation::Mean => "mean",
            Aggregation::Sum => "sum",
        };
        for (k, v) in [
            ("epochs", self.epochs.to_string()),
            ("lr", format!("{:?}", self.base_lr)),
            ("lr_decay", format!("{:?}", self.lr_decay)),
            ("decay_every", self.decay_every.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("seed", self.seed.to_string()),
            ("layers", self.layers.to_string()),
            ("hidden", self.hidden.to_string()),
            ("message", self.message.to_string()),
            ("latent", self.latent.to_string()),
            ("aggregation", agg.to_string()),
        ] {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key = value, got {line:?}")))?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Sets one field by its text key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::invalid(format!("bad value {v:?} for {k}")))
        }
        match key {
            "epochs" => self.epochs = num(key, value)?,
            "lr" => self.base_lr = num(key, value)?,
            "lr_decay" => self.lr_decay = num(key, value)?,
            "decay_every" => self.decay_every = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "layers" => self.layers = num(key, value)?,
            "hidden" => self.hidden = num(key, value)?,
            "message" => self.message = num(key, value)?,
            "latent" => self.latent = num(key, value)?,
            "aggregation" => {
                self.aggregation = match value {
                    "mean" => Aggregation::Mean,
                    "sum" => Aggregation::Sum,
                    _ => return Err(Error::invalid(format!("unknown aggregation {value:?}"))),
                }
            }
            _ => return Err(Error::invalid(format!("unknown training key {key:?}"))),
        }
        Ok(())
    }
}

/// Mean squared error in normalized units over all samples.
pub fn normalized_mse(model: &Model, samples: &[Sample]) -> Result<f64> {
    let parts: Vec<(f64, usize)> = samples
        .par_iter()
        .map(|s| {
            let y = model.forward_normalized(&s.sim.topology, &s.nodes, &s.sim.edges)?;
            let n = &model.norm;
            let sse = y
                .iter()
                .zip(&s.targets)
                .map(|(p, t)| {
                    let r = p - (t - n.node_mean) / n.node_std;
                    r * r
                })
                .sum::<f64>();
            Ok((sse, y.len()))
        })
        .collect::<Result<_>>()?;
    let (sse, count) = parts.iter().fold((0.0, 0), |(a, b), (s, c)| (a + s, b + c));
    if count == 0 {
        return Err(Error::invalid("no samples to evaluate"));
    }
    Ok(sse / count as f64)
}

/// Squared error and gradient of one mini-batch, reduced in sample order.
fn batch_gradient(model: &Model, batch: &[&Sample], grad: &mut [f64]) -> Result<f64> {
    let entries: usize = batch.iter().map(|s| s.targets.len()).sum();
    let weight = 1.0 / entries as f64;
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|s| {
            let mut g = vec![0.0; model.params.len()];
            let sse = model.loss_and_gradient(&s.sim.topology, &s.nodes, &s.sim.edges, &s.targets, weight, &mut g)?;
            Ok((sse, g))
        })
        .collect::<Result<_>>()?;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut sse = 0.0;
    for (s, g) in parts {
        sse += s;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    Ok(sse * weight)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Lowest validation loss seen.
    pub best: Checkpoint,
    pub last: Checkpoint,
}

impl TrainOutcome {
    pub fn history(&self) -> &[EpochRecord] {
        &self.last.history
    }
}

pub struct TrainRun<'a> {
    pub config: &'a TrainConfig,
    pub dataset: &'a Dataset,
    /// Directory receiving `best.pmp` and `last.pmp` after every epoch.
    pub out_dir: Option<&'a Path>,
    pub resume: Option<Checkpoint>,
    /// Stop once this many epochs are complete (for interrupted runs).
    pub stop_after: Option<usize>,
    pub log: Option<&'a (dyn Fn(&EpochRecord) + Sync)>,
}

impl<'a> TrainRun<'a> {
    pub fn new(config: &'a TrainConfig, dataset: &'a Dataset) -> Self {
        Self {
            config,
            dataset,
            out_dir: None,
            resume: None,
            stop_after: None,
            log: None,
        }
    }
}

pub fn train(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    run(TrainRun::new(config, dataset))
}

pub fn run(r: TrainRun) -> Result<TrainOutcome> {
    let cfg = r.config;
    cfg.validate()?;
    let ds = r.dataset;
    let train = ds.samples(Split::Train)?;
    let val = ds.samples(Split::Val)?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid("training needs non-empty train and val splits"));
    }
    let arch = cfg.arch(ds.spec.n, ds.spec.m, ds.pde.num_parameters());
    let task = TaskMeta {
        pde_kind: ds.pde.id(),
        gap: ds.spec.gap as u64,
        lead: ds.spec.lead as u64,
    };
    let (mut last, mut best) = match r.resume {
        Some(c) => {
            if c.config != cfg.to_text() {
                return Err(Error::invalid("checkpoint was trained with a different configuration"));
            }
            if c.model.arch != arch || c.task != task {
                return Err(Error::Shape(
                    "checkpoint architecture or task does not match the dataset".into(),
                ));
            }
            let best = best_of(&c).or_else(|| {
                r.out_dir
                    .and_then(|d| crate::graphnet::load_checkpoint(&d.join("best.pmp")).ok())
                    .filter(|b| b.model.arch == c.model.arch && b.config == c.config)
            });
            (c, best)
        }
        None => {
            let mut model = Model::new(arch, cfg.seed)?;
            model.norm = ds.norm.clone();
            let c = Checkpoint {
                optimizer: AdamState::new(model.params.len()),
                model,
                epoch: 0,
                rng: RngState::capture(&ChaCha8Rng::seed_from_u64(cfg.seed)),
                task,
                config: cfg.to_text(),
                history: Vec::new(),
            };
            (c.clone(), None)
        }
    };
    let mut best_val = last.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
    let stop = r.stop_after.unwrap_or(cfg.epochs).min(cfg.epochs);
    let mut grad = vec![0.0; last.model.params.len()];
    let mut rng = last.rng.restore();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in last.epoch as usize..stop {
        let lr = cfg.lr(epoch);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let (mut sse, mut entries) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train[i]).collect();
            let n: usize = batch.iter().map(|s| s.targets.len()).sum();
            let loss = batch_gradient(&last.model, &batch, &mut grad)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            sse += loss * n as f64;
            entries += n;
            adam_step(
                &mut last.model.params,
                &grad,
                &mut last.optimizer,
                lr,
                AdamConfig::default(),
            );
        }
        let record = EpochRecord {
            epoch: epoch as u64,
            lr,
            train_loss: sse / entries as f64,
            val_loss: normalized_mse(&last.model, &val)?,
        };
        if !record.val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: usize::MAX,
            });
        }
        last.history.push(record.clone());
        last.epoch = epoch as u64 + 1;
        last.rng = RngState::capture(&rng);
        if record.val_loss < best_val || best.is_none() {
            best_val = best_val.min(record.val_loss);
            best = Some(last.clone());
        }
        if let Some(dir) = r.out_dir {
            std::fs::create_dir_all(dir)?;
            save_checkpoint(&dir.join("last.pmp"), &last)?;
            save_checkpoint(&dir.join("best.pmp"), best.as_ref().unwrap())?;
        }
        if let Some(log) = r.log {
            log(&record);
        }
    }
    Ok(TrainOutcome {
        best: best.unwrap_or_else(|| last.clone()),
        last,
    })
}

/// The resumed checkpoint itself, when no earlier epoch validated better.
fn best_of(c: &Checkpoint) -> Option<Checkpoint> {
    let last = c.history.last()?;
    let min = c.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
    (last.val_loss <= min).then(|| c.clone())
}
