//! `PMP1` checkpoints: architecture, normalization, parameters, optimizer
//! and RNG state, plus training provenance.
//!
//! Layout (little-endian): magic, version u32, architecture (layers,
//! node_in, edge_in, out, hidden, message, latent as u64, aggregation u8,
//! n u64, m u64), normalization (node mean/std, edge mean and std vectors),
//! parameters, Adam state (t, m, v), epoch u64, RNG state (32-byte seed,
//! stream u64, word position as two u64), then the extension block (PDE
//! kind u8, frame gap u64, lead u64, config text, per-epoch history) and a
//! SHA-256 digest.

use super::adam::AdamState;
use super::model::{Aggregation, ArchSpec, Model, Normalization};
use crate::error::{Error, Result};
use crate::io::{read_file, seal, unseal, write_atomic, ByteReader, ByteWriter};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PMP1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// What the model was trained to predict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskMeta {
    pub pde_kind: u8,
    /// Recorded frames between consecutive inputs.
    pub gap: u64,
    /// Recorded frames from the last input to the first target.
    pub lead: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub optimizer: AdamState,
    /// Completed epochs.
    pub epoch: u64,
    pub rng: RngState,
    pub task: TaskMeta,
    pub config: String,
    pub history: Vec<EpochRecord>,
}

pub fn encode_checkpoint(c: &Checkpoint) -> Vec<u8> {
    let mut w = ByteWriter::new();
    let a = &c.model.arch;
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    for v in [a.layers, a.node_in, a.edge_in, a.out, a.hidden, a.message, a.latent] {
        w.usize(v);
    }
    w.u8(a.aggregation.id());
    w.usize(a.input_frames());
    w.usize(a.out);
    let n = &c.model.norm;
    w.f64(n.node_mean);
    w.f64(n.node_std);
    w.f64_vec(&n.edge_mean);
    w.f64_vec(&n.edge_std);
    w.f64_vec(&c.model.params);
    w.u64(c.optimizer.t);
    w.f64_vec(&c.optimizer.m);
    w.f64_vec(&c.optimizer.v);
    w.u64(c.epoch);
    w.bytes(&c.rng.seed);
    w.u64(c.rng.stream);
    w.u64(c.rng.word_pos as u64);
    w.u64((c.rng.word_pos >> 64) as u64);
    w.u8(c.task.pde_kind);
    w.u64(c.task.gap);
    w.u64(c.task.lead);
    w.str(&c.config);
    w.usize(c.history.len());
    for r in &c.history {
        w.u64(r.epoch);
        w.f64(r.lr);
        w.f64(r.train_loss);
        w.f64(r.val_loss);
    }
    seal(w.into_inner())
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    const KIND: &str = "checkpoint";
    let mut head = ByteReader::new(KIND, bytes);
    head.expect_magic(CHECKPOINT_MAGIC)?;
    let version = head.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            KIND,
            format!("version {version} is not supported (expected {CHECKPOINT_VERSION})"),
        ));
    }
    let payload = unseal(KIND, bytes)?;
    let mut r = ByteReader::new(KIND, payload);
    r.take(8)?;
    let mut dims = [0usize; 7];
    for d in &mut dims {
        *d = r.usize()?;
    }
    let agg = r.u8()?;
    let aggregation =
        Aggregation::from_id(agg).ok_or_else(|| Error::format(KIND, format!("unknown aggregation {agg}")))?;
    let arch = ArchSpec {
        layers: dims[0],
        node_in: dims[1],
        edge_in: dims[2],
        out: dims[3],
        hidden: dims[4],
        message: dims[5],
        latent: dims[6],
        aggregation,
    };
    arch.validate()?;
    let (n, m) = (r.usize()?, r.usize()?);
    if n + 1 != arch.node_in || m != arch.out {
        return Err(Error::format(KIND, "frame counts disagree with the architecture"));
    }
    let norm = Normalization {
        node_mean: r.f64()?,
        node_std: r.f64()?,
        edge_mean: r.f64_vec()?,
        edge_std: r.f64_vec()?,
    };
    if norm.edge_mean.len() != arch.edge_in || norm.edge_std.len() != arch.edge_in {
        return Err(Error::format(
            KIND,
            "edge normalization width differs from the architecture",
        ));
    }
    let params = r.f64_vec()?;
    if params.len() != arch.num_params() {
        return Err(Error::format(
            KIND,
            format!(
                "{} parameters stored, architecture needs {}",
                params.len(),
                arch.num_params()
            ),
        ));
    }
    let t = r.u64()?;
    let am = r.f64_vec()?;
    let av = r.f64_vec()?;
    if am.len() != params.len() || av.len() != params.len() {
        return Err(Error::format(
            KIND,
            "optimizer state size differs from the parameter count",
        ));
    }
    let epoch = r.u64()?;
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let stream = r.u64()?;
    let lo = r.u64()? as u128;
    let hi = r.u64()? as u128;
    let task = TaskMeta {
        pde_kind: r.u8()?,
        gap: r.u64()?,
        lead: r.u64()?,
    };
    let config = r.str()?;
    let count = r.count(32)?;
    let mut history = Vec::with_capacity(count);
    for _ in 0..count {
        history.push(EpochRecord {
            epoch: r.u64()?,
            lr: r.f64()?,
            train_loss: r.f64()?,
            val_loss: r.f64()?,
        });
    }
    r.finish()?;
    Ok(Checkpoint {
        model: Model { arch, params, norm },
        optimizer: AdamState { m: am, v: av, t },
        epoch,
        rng: RngState {
            seed,
            stream,
            word_pos: lo | (hi << 64),
        },
        task,
        config,
        history,
    })
}

pub fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    write_atomic(path, &encode_checkpoint(c))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_file(path)?)
}
