use quadcorr::intraday::{decompose_beta, gamma_adjustment, low_frequency_beta, rolling_curves, CurveAverager, IntradayCurves};
use quadcorr::rng::{replication_seed, rng_from_seed, substream_seed};
use quadcorr::simulator::simulate_heston;
use quadcorr::{EstimatorKind, SampledPath};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::CsvBuilder;
use crate::config::{ExperimentConfig, RampAsset, MARKET_NAME};
use crate::error::{CliError, Result};
use crate::manifest::ExperimentOutput;

pub const DECOMPOSITION_FILE: &str = "decomposition.csv";
pub const SCATTER_FILE: &str = "scatter.csv";

const DAYS_PER_BATCH: usize = 16;
const ESTIMATORS: [EstimatorKind; 3] = [EstimatorKind::Pearson, EstimatorKind::Kendall, EstimatorKind::SubsampledQuadrant];

pub fn curve_file(asset: &str) -> String {
    format!("intraday_{asset}.csv")
}

pub fn variance_file(asset: &str) -> String {
    format!("intraday_{asset}_variance.csv")
}

/// One simulated day: the market and each configured asset.
#[derive(Debug, Clone)]
pub struct SimulatedDay {
    pub market: SampledPath,
    pub assets: Vec<SampledPath>,
}

/// The market follows the X leg of the Heston scenario. Asset `i` has spot
/// volatility `lambda_i(u)` times the market's and correlation `rho_i(u)`
/// with it; its idiosyncratic shocks come from stream `101 + i`.
pub fn simulate_day(cfg: &ExperimentConfig, assets: &[RampAsset], seed: u64) -> quadcorr::Result<SimulatedDay> {
    let heston = simulate_heston(&cfg.scenario.heston(0.0), seed)?;
    let v = &heston.spot_var_x;
    let n = v.len();
    let dt = 1.0 / n as f64;
    let mut rng = rng_from_seed(substream_seed(seed, 100));
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut market = Vec::with_capacity(n + 1);
    market.push(cfg.scenario.x0);
    for k in 0..n {
        market.push(market[k] + (v[k] * dt).sqrt() * z[k]);
    }
    let mut paths = Vec::with_capacity(assets.len());
    for (i, a) in assets.iter().enumerate() {
        let mut rng = rng_from_seed(substream_seed(seed, 101 + i as u64));
        let mut y = Vec::with_capacity(n + 1);
        y.push(cfg.scenario.y0);
        for k in 0..n {
            let u = (k as f64 + 0.5) * dt;
            let (r, l) = (a.rho_at(u), a.lambda_at(u));
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(y[k] + l * (v[k] * dt).sqrt() * (r * z[k] + (1.0 - r * r).sqrt() * e));
        }
        paths.push(SampledPath::from_values(y)?);
    }
    Ok(SimulatedDay { market: SampledPath::from_values(market)?, assets: paths })
}

struct DayResult {
    curves: Vec<quadcorr::Result<IntradayCurves>>,
    daily_returns: Vec<f64>,
}

fn daily_return(p: &SampledPath) -> f64 {
    p.values()[p.n()] - p.values()[0]
}

/// Day-averaged intraday curves per asset (the market against itself is
/// included as a control), the pointwise across-day variances, the log beta
/// decomposition from the averaged curves and scatter data.
pub fn run_intraday_average(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ic = &cfg.intraday;
    let names: Vec<&str> = std::iter::once(MARKET_NAME).chain(ic.assets.iter().map(|a| a.name.as_str())).collect();
    let mut out = ExperimentOutput::default();
    let mut averagers = vec![CurveAverager::default(); names.len()];
    // (rho_QS, lambda) at the first and last window per asset and day
    let mut edges: Vec<Vec<[f64; 4]>> = vec![Vec::new(); names.len()];
    let mut daily: Vec<Vec<(f64, f64)>> = vec![Vec::new(); names.len()];

    for batch in (0..ic.days).collect::<Vec<_>>().chunks(DAYS_PER_BATCH) {
        let results: Vec<quadcorr::Result<DayResult>> = batch
            .par_iter()
            .map(|&d| {
                let day = simulate_day(cfg, &ic.assets, replication_seed(cfg.base_seed, d as u64))?;
                let all: Vec<&SampledPath> = std::iter::once(&day.market).chain(&day.assets).collect();
                Ok(DayResult {
                    curves: all.iter().map(|p| rolling_curves(p, &day.market, &ic.rolling)).collect(),
                    daily_returns: all.iter().map(|p| daily_return(p)).collect(),
                })
            })
            .collect();
        for (&d, result) in batch.iter().zip(results) {
            let day = match result {
                Ok(day) => day,
                Err(e) => {
                    out.fail(format!("day={d}"), e);
                    continue;
                }
            };
            for (i, curves) in day.curves.into_iter().enumerate() {
                match curves {
                    Ok(c) => {
                        averagers[i].add(&c)?;
                        let last = c.len() - 1;
                        edges[i].push([c.rho_qs[0], c.lambda[0], c.rho_qs[last], c.lambda[last]]);
                        daily[i].push((day.daily_returns[i], day.daily_returns[0]));
                    }
                    Err(e) => out.fail(format!("day={d} asset={}", names[i]), e),
                }
            }
        }
    }

    let mut decomposition = CsvBuilder::new(&["asset", "delta_log_rho", "delta_log_lambda", "delta_log_beta"]);
    let mut scatter = CsvBuilder::new(&[
        "asset",
        "estimator",
        "delta_log_rho",
        "delta_log_lambda",
        "delta_log_beta",
        "low_frequency_beta",
        "gamma_adj_first",
        "gamma_adj_last",
    ]);
    for (i, name) in names.iter().enumerate() {
        if averagers[i].days() == 0 {
            out.fail(format!("asset={name}"), "no successful days");
            continue;
        }
        let mean = averagers[i].mean();
        out.push(curve_file(name), mean.to_csv_string());
        out.push(variance_file(name), averagers[i].variance().to_csv_string());

        let (asset_ret, market_ret): (Vec<f64>, Vec<f64>) = daily[i].iter().copied().unzip();
        let lf_beta = low_frequency_beta(&asset_ret, &market_ret).map_or(f64::NAN, |b| b);
        let col = |k: usize| edges[i].iter().map(|e| e[k]).collect::<Vec<f64>>();
        let gamma_first = gamma_adjustment(&col(0), &col(1));
        let gamma_last = gamma_adjustment(&col(2), &col(3));
        for kind in ESTIMATORS {
            match decompose_beta(&mean, kind) {
                Ok(d) => {
                    let fields = [d.delta_log_rho.to_string(), d.delta_log_lambda.to_string(), d.delta_log_beta.to_string()];
                    if kind == EstimatorKind::SubsampledQuadrant {
                        let mut row = vec![name.to_string()];
                        row.extend(fields.iter().cloned());
                        decomposition.row(&row);
                    }
                    let mut row = vec![name.to_string(), kind.label().into()];
                    row.extend(fields);
                    row.extend([lf_beta.to_string(), gamma_first.to_string(), gamma_last.to_string()]);
                    scatter.row(&row);
                }
                Err(e) => out.fail(format!("asset={name} decomposition {kind}"), e),
            }
        }
    }
    if out.artifacts.is_empty() {
        return Err(CliError::Experiment("every intraday day failed".into()));
    }
    out.push(DECOMPOSITION_FILE, decomposition.finish());
    out.push(SCATTER_FILE, scatter.finish());
    Ok(out)
}
