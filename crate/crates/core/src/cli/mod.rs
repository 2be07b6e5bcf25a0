//! Config-driven commands behind the `mgu` binary: data generation,
//! training, evaluation, stability checking and MGU/GRU comparison.
//! Every output carries the tool version and the hash of the effective config.

mod commands;
mod config;

pub use commands::{
    build_clean_reference, build_dataset, cmd_check_stability, cmd_compare, cmd_evaluate, cmd_generate_data,
    cmd_train, exit_code, init_for, sequence_fit, CompareRow, EvalReport, SequenceMetrics, TrainSummary,
    EXIT_NOT_COMPLIANT,
};
pub use config::{apply_override, ArchConfig, CompareConfig, DataConfig, DataSource, RunConfig, StabilityConfig};
