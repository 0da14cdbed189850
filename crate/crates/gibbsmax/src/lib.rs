//! Experiment runner for `gibbsmax-core`: configuration, parallel sample
//! evaluation, and CSV / JSON / SVG output.
//!
//! Every command is deterministic given its configuration and seed; the
//! worker thread count only changes wall time.

pub mod config;
pub mod error;
pub mod exec;
pub mod run;
pub mod svg;
pub mod table;

pub use config::{Command, EnsembleDef, EnsembleSpec, ExperimentConfig, Format};
pub use error::CliError;
pub use exec::RayonExecutor;
pub use run::{emit, render, run, RunOutcome};
