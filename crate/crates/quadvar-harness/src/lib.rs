//! Experiment harness: configuration, Monte Carlo execution, and report
//! files for the quadratic-variation estimation studies.
//!
//! Experiments are described by a single TOML file (one experiment per
//! file; schema in `docs/config.md`) and run through the `quadvar` CLI.
//! Every output table is CSV with a header row and a `#`-prefixed preamble
//! carrying the resolved configuration digest; a `summary.json` with the
//! full resolved configuration, code version, and simulation diagnostics
//! is written alongside.
//!
//! Reruns with the same configuration and seed produce byte-identical
//! outputs at any worker count: replicate streams derive from
//! `(master_seed, replicate_index)` alone and aggregation is ordered by
//! replicate index.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod runner;

pub use error::{ExitCode, HarnessError, HarnessResult};

/// Code version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
