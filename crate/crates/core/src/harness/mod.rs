//! Configuration-driven experiment runner and CSV output.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{
    decay_measurement, find_max_stable_step, run_cfl_scan, run_convergence, run_decay_experiment, run_experiment,
    run_topology_sweep, steps_to, DecayMeasurement, Workspace,
};
pub use output::{read_csv, write_csv, write_rows, ResultRow, CSV_HEADER};
