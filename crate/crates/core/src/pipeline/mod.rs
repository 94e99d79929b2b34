//! End-to-end workflows: data generation, training, evaluation, transfer,
//! frame ablation, rollout and the resolution benchmark.

pub mod data;
pub mod eval;
pub mod experiments;
pub mod scenario;
pub mod train;

pub use data::{build_dataset, generate_simulations, Dataset, Simulation, MANIFEST_NAME, MAX_WINDOWS};
pub use eval::{
    checkpoint_spec, evaluate, loss_curve_csv, mse, predict, relative_l2, report_from_predictions, rollout,
    rollout_from, spearman, EvalReport, Rollout, RolloutOptions, RolloutSummary,
};
pub use experiments::{
    ablation_csv, benchmark_csv, benchmark_matrix, frame_ablation, transfer_test, windows_of, AblationRow, BenchCell,
    BenchmarkConfig, ABLATION_GRID, ABLATION_LEAD, DIFFERENT_GEOMETRY, SAME_GEOMETRY,
};
pub use scenario::{integrate, n_points_for_edge, n_points_for_nodes, Scenario};
pub use train::{normalized_mse, run as run_training, train, TrainConfig, TrainOutcome, TrainRun};
