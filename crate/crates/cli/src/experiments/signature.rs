use quadcorr::estimators::{estimate_at_span, SpanEstimates};
use quadcorr::rng::replication_seed;
use quadcorr::simulator::{simulate_scenario, HestonSpec, JumpMode, NoiseLayer};
use quadcorr::EstimatorKind;
use rayon::prelude::*;

use super::{quantile, CsvBuilder};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::manifest::ExperimentOutput;

pub const SIGNATURE_REPS_FILE: &str = "signature_reps.csv";
pub const SIGNATURE_SUMMARY_FILE: &str = "signature_summary.csv";

const ESTIMATORS: [EstimatorKind; 3] = [EstimatorKind::Pearson, EstimatorKind::Kendall, EstimatorKind::SubsampledQuadrant];
const REP_COLUMNS: [&str; 5] = ["rho", "rep", "delta_seconds", "estimator", "value"];
const SUMMARY_COLUMNS: [&str; 9] = ["rho", "delta_seconds", "estimator", "n", "mean", "rmse", "q05", "q50", "q95"];

/// Estimates at every sampling interval for one simulated day.
pub type RepEstimates = Vec<(u64, quadcorr::Result<SpanEstimates>)>;

/// Simulates one day under `spec` and `layers` and estimates P, K and Q_S at
/// each `(delta_seconds, span)`.
pub fn simulate_rep(spec: &HestonSpec, layers: &[NoiseLayer], spans: &[(u64, usize)], seed: u64) -> quadcorr::Result<RepEstimates> {
    let path = simulate_scenario(spec, layers, seed)?;
    Ok(spans.iter().map(|&(d, s)| (d, estimate_at_span(&path.observed_x, &path.observed_y, s))).collect())
}

/// Per-(rho, delta, estimator) Monte Carlo results in replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureTable {
    pub rows: Vec<SignatureRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureRow {
    pub rho: f64,
    pub delta_seconds: u64,
    pub estimator: EstimatorKind,
    /// `(rep, value)` for the replications that succeeded.
    pub values: Vec<(usize, f64)>,
}

impl SignatureRow {
    pub fn mean(&self) -> f64 {
        self.values.iter().map(|v| v.1).sum::<f64>() / self.values.len() as f64
    }

    pub fn rmse(&self) -> f64 {
        (self.values.iter().map(|v| (v.1 - self.rho).powi(2)).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

impl SignatureTable {
    pub fn find(&self, rho: f64, delta_seconds: u64, estimator: EstimatorKind) -> Option<&SignatureRow> {
        self.rows.iter().find(|r| r.rho == rho && r.delta_seconds == delta_seconds && r.estimator == estimator)
    }

    fn reps_csv(&self) -> String {
        let mut csv = CsvBuilder::new(&REP_COLUMNS);
        for r in &self.rows {
            for &(rep, v) in &r.values {
                csv.row(&[r.rho.to_string(), rep.to_string(), r.delta_seconds.to_string(), r.estimator.label().into(), v.to_string()]);
            }
        }
        csv.finish()
    }

    fn summary_csv(&self) -> String {
        let mut csv = CsvBuilder::new(&SUMMARY_COLUMNS);
        for r in &self.rows {
            let mut sorted: Vec<f64> = r.values.iter().map(|v| v.1).collect();
            sorted.sort_by(f64::total_cmp);
            csv.row(&[
                r.rho.to_string(),
                r.delta_seconds.to_string(),
                r.estimator.label().into(),
                r.values.len().to_string(),
                r.mean().to_string(),
                r.rmse().to_string(),
                quantile(&sorted, 0.05).to_string(),
                quantile(&sorted, 0.5).to_string(),
                quantile(&sorted, 0.95).to_string(),
            ]);
        }
        csv.finish()
    }
}

/// Runs `cfg.replications` days for every configured correlation under the
/// given noise stack. Replication `r` uses seed `base_seed + r` for every
/// correlation, so curves across correlations share random numbers.
pub fn signature_table(cfg: &ExperimentConfig, layers: &[NoiseLayer], out: &mut ExperimentOutput, tag: &str) -> Result<SignatureTable> {
    let spans: Vec<(u64, usize)> = cfg.delta_grid.iter().map(|&d| cfg.scenario.span_for(d).map(|s| (d, s))).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &rho in &cfg.rho_values {
        let spec = cfg.scenario.heston(rho);
        let reps: Vec<quadcorr::Result<RepEstimates>> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| simulate_rep(&spec, layers, &spans, replication_seed(cfg.base_seed, r as u64)))
            .collect();
        let mut by_cell: Vec<Vec<(usize, SpanEstimates)>> = vec![Vec::new(); spans.len()];
        for (rep, result) in reps.into_iter().enumerate() {
            match result {
                Err(e) => out.fail(format!("{tag}rho={rho} rep={rep}"), e),
                Ok(per_delta) => {
                    for (k, (d, est)) in per_delta.into_iter().enumerate() {
                        match est {
                            Ok(e) => by_cell[k].push((rep, e)),
                            Err(e) => out.fail(format!("{tag}rho={rho} rep={rep} delta={d}s"), e),
                        }
                    }
                }
            }
        }
        for (k, cell) in by_cell.iter().enumerate() {
            for kind in ESTIMATORS {
                rows.push(SignatureRow {
                    rho,
                    delta_seconds: spans[k].0,
                    estimator: kind,
                    values: cell.iter().map(|(rep, e)| (*rep, e.get(kind).expect("P, K and QS are present"))).collect(),
                });
            }
        }
    }
    Ok(SignatureTable { rows })
}

/// Correlation signature plots: Monte Carlo mean, RMSE and quantiles of P,
/// K and Q_S per sampling interval under the configured noise stack.
pub fn run_mc_signature(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    let table = signature_table(cfg, &cfg.scenario.noise, &mut out, "")?;
    out.push(SIGNATURE_REPS_FILE, table.reps_csv());
    out.push(SIGNATURE_SUMMARY_FILE, table.summary_csv());
    Ok(out)
}

pub fn jump_files(mode: JumpMode) -> (String, String) {
    let m = match mode {
        JumpMode::Independent => "independent",
        JumpMode::CoJump => "co_jump",
    };
    (format!("jumps_{m}_reps.csv"), format!("jumps_{m}_summary.csv"))
}

/// Signature runs with a jump layer appended to the configured noise stack,
/// once per jump mode. Modes share seeds.
pub fn run_jump_study(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    for &mode in &cfg.jumps.modes {
        let mut layers = cfg.scenario.noise.clone();
        layers.push(NoiseLayer::Jumps { intensity_x: cfg.jumps.intensity, intensity_y: cfg.jumps.intensity, mode });
        let (reps_name, summary_name) = jump_files(mode);
        let table = signature_table(cfg, &layers, &mut out, &format!("{mode:?} "))?;
        out.push(reps_name, table.reps_csv());
        out.push(summary_name, table.summary_csv());
    }
    Ok(out)
}
