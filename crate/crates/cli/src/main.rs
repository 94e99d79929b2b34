mod commands;
mod config;

use clap::{ArgAction, Args, ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "graphpde", version, color = ColorChoice::Never)]
#[command(about = "Meshes, PDE simulations and graph-network surrogates")]
pub struct Cli {
    /// File of `key = value` lines supplying flags of the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory relative output paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, env = "GRAPHPDE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Triangulate a domain and write the graph.
    Mesh(MeshArgs),
    /// Run one ground-truth simulation.
    Simulate(SimulateArgs),
    /// Generate train/val/test simulations and their manifest.
    Dataset(DatasetArgs),
    /// Train a model on a saved dataset.
    Train(TrainArgs),
    /// Score a checkpoint on one split of a dataset.
    Eval(EvalArgs),
    /// Score a checkpoint on fresh simulations of another geometry.
    Transfer(TransferArgs),
    /// Retrain over input-frame counts and spacings.
    Ablate(AblateArgs),
    /// Autoregressive rollout against a trajectory.
    Rollout(RolloutArgs),
    /// Resolution benchmark: train per resolution, evaluate across geometries.
    Bench(BenchArgs),
    /// Render a trajectory frame, or prediction, truth and error side by side.
    Plot(PlotArgs),
    /// Check graph, trajectory, checkpoint and manifest files.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MeshOpts {
    /// square, distorted, channel or periodic-square.
    #[arg(long)]
    pub domain: Option<String>,
    /// Approximate total node count.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Exact number of sampled points (overrides --nodes).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub bump: f64,
    #[arg(long, default_value_t = 0.2)]
    pub notch_depth: f64,
    #[arg(long, default_value_t = 0.5)]
    pub notch_height: f64,
}

#[derive(Args, Debug)]
pub struct MeshArgs {
    #[command(flatten)]
    pub mesh: MeshOpts,
    #[arg(short, long, default_value = "mesh.pgn")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// heat, advection-diffusion or navier-stokes.
    #[arg(long, default_value = "heat")]
    pub pde: String,
    #[command(flatten)]
    pub mesh: MeshOpts,
    /// Existing mesh to simulate on instead of generating one.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Boundary values, e.g. `top=200,left=0,right=neumann`.
    #[arg(long)]
    pub bc: Option<String>,
    /// zero, constant:C, sine:A, fourier:a1,a2,a3,a4, taylor-green:A or noise.
    #[arg(long)]
    pub ic: Option<String>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Navier–Stokes viscosity.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Spectral grid size for Navier–Stokes.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(short, long, default_value = "traj.ptr")]
    pub output: PathBuf,
    /// Where the generated mesh goes; defaults to the output with `.pgn`.
    #[arg(long)]
    pub graph_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct WindowOpts {
    /// Input frames per sample.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Target frames per sample.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Spacing between frames, in recorded frames.
    #[arg(long)]
    pub gap: Option<usize>,
    /// Distance from the last input to the first target; defaults to the gap.
    #[arg(long)]
    pub lead: Option<usize>,
    #[arg(long, default_value_t = graphpde::pipeline::MAX_WINDOWS)]
    pub max_windows: usize,
}

#[derive(Args, Debug)]
pub struct DatasetArgs {
    #[arg(long, default_value = "heat")]
    pub pde: String,
    #[command(flatten)]
    pub mesh: MeshOpts,
    #[command(flatten)]
    pub window: WindowOpts,
    #[arg(long, default_value_t = 100)]
    pub train: usize,
    #[arg(long, default_value_t = 10)]
    pub val: usize,
    #[arg(long, default_value_t = 20)]
    pub test: usize,
    /// Recorded frames per simulation.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(short, long, default_value = "data")]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TrainOpts {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub decay_every: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub message: Option<usize>,
    #[arg(long)]
    pub latent: Option<usize>,
    /// mean or sum.
    #[arg(long)]
    pub aggregation: Option<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory or manifest.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub train: TrainOpts,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Directory for best.pmp, last.pmp and loss.csv.
    #[arg(short, long, default_value = "run")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// train, val or test.
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(short, long, default_value = "eval.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct TransferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub mesh: MeshOpts,
    #[arg(long, default_value_t = 20)]
    pub sims: usize,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = graphpde::pipeline::MAX_WINDOWS)]
    pub max_windows: usize,
    #[arg(short, long, default_value = "transfer.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// Base dataset; it is re-windowed for every grid entry.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated `n:gap` pairs.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = graphpde::pipeline::ABLATION_LEAD)]
    pub lead: usize,
    #[arg(long, default_value_t = 20)]
    pub transfer_sims: usize,
    /// Domain of the transfer simulations.
    #[arg(long, default_value = "distorted")]
    pub transfer_domain: String,
    #[command(flatten)]
    pub train: TrainOpts,
    #[arg(short, long, default_value = "ablation.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct RolloutArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub traj: PathBuf,
    /// Mesh of the trajectory; defaults to the trajectory path with `.pgn`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub steps: usize,
    /// First frame of the initial window.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long, action = ArgAction::SetTrue)]
    pub teacher_forcing: bool,
    /// Accept models with other than three input frames.
    #[arg(long, action = ArgAction::SetTrue)]
    pub general_n: bool,
    #[arg(short, long, default_value = "rollout.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Mean edge length of the high resolution.
    #[arg(long, default_value_t = 0.1)]
    pub high: f64,
    /// Mean edge length of the low resolution.
    #[arg(long, default_value_t = 0.2)]
    pub low: f64,
    #[arg(long, default_value_t = 100)]
    pub train_sims: usize,
    #[arg(long, default_value_t = 10)]
    pub val_sims: usize,
    #[arg(long, default_value_t = 20)]
    pub test_sims: usize,
    #[arg(long, default_value_t = 20)]
    pub transfer_sims: usize,
    #[command(flatten)]
    pub window: WindowOpts,
    #[arg(long, default_value_t = 101)]
    pub frames: usize,
    #[command(flatten)]
    pub train: TrainOpts,
    #[arg(short, long, default_value = "bench.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// Defaults to the trajectory path with `.pgn`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Frame to show; defaults to the last one.
    #[arg(long)]
    pub frame: Option<usize>,
    /// Draw prediction, truth and error for the frame with this model.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Image path; a CSV of the nodal values is written next to it.
    #[arg(short, long, default_value = "plot.ppm")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub msg: String,
}

impl CliError {
    pub fn new(kind: &'static str, msg: impl Into<String>) -> Self {
        Self { kind, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for CliError {}

impl From<graphpde::Error> for CliError {
    fn from(e: graphpde::Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("io", e.to_string())
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("error: kind={} msg={}", e.kind, one_line(&e.msg));
    ExitCode::from(if e.kind == "usage" { 2 } else { 1 })
}

fn clap_error(e: clap::Error) -> Result<ExitCode, CliError> {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            Ok(ExitCode::SUCCESS)
        }
        _ => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            Err(CliError::new("usage", first.trim_start_matches("error: ")))
        }
    }
}

fn run(args: Vec<String>) -> Result<ExitCode, CliError> {
    let mut root = Cli::command();
    root.build();
    let matches = match root.clone().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => return clap_error(e),
    };
    let matches = match config::config_path(&args) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::new("io", format!("{path}: {e}")))?;
            let merged = config::merge(&root, &matches, args, &config::parse_config(&text)?)?;
            match root.clone().try_get_matches_from(&merged) {
                Ok(m) => m,
                Err(e) => return clap_error(e),
            }
        }
        None => matches,
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::new("usage", one_line(&e.to_string())))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::new("usage", "--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new("threads", e.to_string()))?;
    }
    if !matches!(cli.command, Command::Validate(_)) {
        if let Some((name, text)) = config::resolved(&root, &matches) {
            let hash = config::write_resolved(&cli.out_dir, &name, &text)?;
            println!("config-hash={hash}");
        }
    }
    commands::dispatch(&cli)
}

/// `dir.join(path)` with parent directories created.
pub fn output_path(dir: &Path, path: &Path) -> Result<PathBuf, CliError> {
    let p = dir.join(path);
    if let Some(parent) = p.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::new("io", format!("{}: {e}", parent.display())))?;
        }
    }
    Ok(p)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(code) => code,
        Err(e) => report(&e),
    }
}
