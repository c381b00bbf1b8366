//! Batch experiments on top of the `quadcorr` library: asymptotic variance
//! and bias curves, Monte Carlo signature plots, jump studies, intraday
//! curve averaging and tick-data summary statistics.
//!
//! Every run writes CSV files plus a `manifest.json` that records the
//! resolved config, its hash, the seed schedule and a hash of every output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use manifest::{ExperimentOutput, RunManifest};

/// Validates `cfg`, runs the experiment and writes its outputs into `out_dir`.
pub fn run_to_dir(kind: ExperimentKind, cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let (output, units) = experiments::run(kind, cfg)?;
    let manifest = RunManifest::new(kind, cfg, &output, units, start.elapsed().as_secs_f64());
    manifest::write_outputs(out_dir, &output, &manifest)?;
    Ok(manifest)
}
