//! Training runs, depth sweeps, repeated-seed statistics and activation plots.

mod plot;
mod stats;
mod sweep;
mod train;

pub use plot::{
    activation_svg, curve_samples, emit_activation_plots, overlay_svg, PLOT_RANGE, PLOT_SAMPLES,
};
pub use stats::{run_repeated, run_with_seeds, RunStats};
pub use sweep::{
    run_depth_sweep, run_depth_sweep_on, sweep_cells, sweep_csv, SweepRow, SWEEP_CSV_HEADER,
};
pub use train::{
    accuracy_from_logits, evaluate, train, train_network, train_network_with, train_on, Architecture, TrainConfig,
    TrainReport,
};
