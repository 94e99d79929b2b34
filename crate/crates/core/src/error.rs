use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate point set: {0}")]
    DegeneratePointSet(String),

    #[error("boundary descriptor is not a closed loop: {0}")]
    OpenBoundary(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain is not periodic")]
    NotPeriodic,

    #[error("triangle {index} has zero area")]
    ZeroAreaTriangle { index: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("node {0} has no neighbours")]
    IsolatedNode(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("trajectory too short: need {required} frames, have {available}")]
    TrajectoryTooShort { required: usize, available: usize },

    #[error("missing PDE parameter: {0}")]
    MissingParameter(&'static str),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed {kind} data: {msg}")]
    Format { kind: &'static str, msg: String },

    #[error("checksum mismatch in {0}")]
    Checksum(String),

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Stable snake-case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegeneratePointSet(_) => "degenerate_point_set",
            Error::OpenBoundary(_) => "open_boundary",
            Error::InvalidDomain(_) => "invalid_domain",
            Error::NotPeriodic => "not_periodic",
            Error::ZeroAreaTriangle { .. } => "zero_area_triangle",
            Error::SolverNotConverged { .. } => "solver_not_converged",
            Error::IsolatedNode(_) => "isolated_node",
            Error::Shape(_) => "shape",
            Error::TrajectoryTooShort { .. } => "trajectory_too_short",
            Error::MissingParameter(_) => "missing_parameter",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Format { .. } => "format",
            Error::Checksum(_) => "checksum",
            Error::MissingFile(_) => "missing_file",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn format(kind: &'static str, msg: impl Into<String>) -> Self {
        Error::Format { kind, msg: msg.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
