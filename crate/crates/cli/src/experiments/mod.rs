//! Experiment drivers. Each returns its files in memory; results are gathered
//! in index order so output bytes never depend on scheduling.

pub mod avar;
pub mod intraday;
pub mod signature;
pub mod stats;
pub mod tvbias;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::manifest::ExperimentOutput;

/// Runs `kind` and returns its output with the number of seeded units.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<(ExperimentOutput, usize)> {
    cfg.validate(kind)?;
    Ok(match kind {
        ExperimentKind::AvarCurves => (avar::run_avar_curves(cfg)?, 0),
        ExperimentKind::TvBiasCurves => (tvbias::run_tv_bias_curves(cfg)?, 0),
        ExperimentKind::McSignature => (signature::run_mc_signature(cfg)?, cfg.replications),
        ExperimentKind::JumpStudy => (signature::run_jump_study(cfg)?, cfg.replications),
        ExperimentKind::IntradayAverage => (intraday::run_intraday_average(cfg)?, cfg.intraday.days),
        ExperimentKind::SummaryStats => (stats::run_summary_stats(cfg)?, 0),
    })
}

pub(crate) struct CsvBuilder(String);

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        CsvBuilder(header.join(",") + "\n")
    }

    pub fn row(&mut self, fields: &[String]) {
        self.0.push_str(&fields.join(","));
        self.0.push('\n');
    }

    pub fn finish(self) -> String {
        self.0
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
