//! Benchmark harness around the `sparserc` library: declarative TOML
//! experiments, seeded repetitions with a worker pool, CSV reports, and
//! static sweep plots.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod report;

pub use config::{load_preset, preset_names, ExperimentSpec, SweepSpec};
pub use experiment::{generate_to_dir, run_experiment, run_external};
