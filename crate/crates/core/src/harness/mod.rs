//! Experiment suites: configuration, seeded batch execution, CSV output,
//! run manifests and replay.

mod config;
mod manifest;
mod run;
mod seeds;

pub use config::{
    cell_info, cell_key, parse_cell_key, preset, Cell, ExperimentConfig, Suite, PRESETS,
};
pub use manifest::{Manifest, ManifestEntry};
pub use run::{rebuild, replay, run_suite, write_outputs, RunOptions, SuiteOutput};
pub use seeds::{derive_seed, instance_seed, splitmix64, value_seed};
