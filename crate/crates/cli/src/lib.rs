//! Experiment orchestration for frameprobe: configuration, sweeps over
//! layers and learning rates, noise and pitch ablations, CSV reports and
//! SVG plots.

pub mod commands;
pub mod config;
pub mod plot;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Overrides};
pub use report::{AblationTable, ReportTable, Transform};
pub use runner::{run_ablation, run_sweep, validate_files};

/// Process exit status for an error: 3 for training divergence, 2 for
/// invalid inputs, 1 for everything else.
pub fn exit_code(err: &frameprobe::Error) -> u8 {
    use frameprobe::Error::*;
    match err {
        Divergence { .. } => 3,
        Format(_) | Version { .. } | Corruption(_) | DimensionMismatch { .. } | Validation(_)
        | DegenerateInput(_) | InvalidArgument(_) | Unsupported(_) => 2,
        _ => 1,
    }
}
