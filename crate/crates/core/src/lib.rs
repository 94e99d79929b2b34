//! Learned time steppers for 2-D PDEs on unstructured meshes.
//!
//! The crate bundles everything needed to go from a domain description to
//! an evaluated message-passing surrogate:
//!
//! - [`mesh`]: point sampling, Delaunay graphs, periodic stitching.
//! - [`fem`]: P1 finite elements for heat and advection–diffusion ground truth.
//! - [`spectral`]: pseudo-spectral vorticity solver for periodic Navier–Stokes.
//! - [`graphnet`]: the message-passing network, its gradients, Adam and checkpoints.
//! - [`dataset`]: sliding windows over trajectories and feature assembly.
//! - [`pipeline`]: training, evaluation, transfer, ablation, rollout, benchmarks.
//! - [`render`] and [`validate`]: field rasters and file checks used by the CLI.

pub mod dataset;
pub mod error;
pub mod fem;
pub mod graphnet;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod render;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
pub use mesh::{Domain, Graph, Point};
