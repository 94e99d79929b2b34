//! The learned stepper: message-passing network, gradients, optimizer and
//! checkpoints.

pub mod adam;
pub mod checkpoint;
mod linalg;
pub mod model;

pub use adam::{adam_step, lr_schedule, lr_schedule_with, AdamConfig, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, EpochRecord, RngState,
    TaskMeta, CHECKPOINT_MAGIC,
};
pub use model::{loss_mse, Aggregation, ArchSpec, Model, Normalization, Topology};
