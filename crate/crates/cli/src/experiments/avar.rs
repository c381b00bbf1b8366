use quadcorr::theory::{avar_kendall, avar_pearson, avar_quadrant, avar_subsampled, avar_subsampled_limit};

use super::CsvBuilder;
use crate::config::{rho_grid, ExperimentConfig};
use crate::error::Result;
use crate::manifest::ExperimentOutput;

pub const AVAR_FILE: &str = "avar_curves.csv";

/// Asymptotic variances of P, K, Q and Q_S (configured spans plus the
/// large-`S` limit) over a symmetric correlation grid. Columns
/// `rho,estimator,S,value`; `S` is empty for P, K, Q and `inf` for the limit.
pub fn run_avar_curves(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut csv = CsvBuilder::new(&["rho", "estimator", "S", "value"]);
    for rho in rho_grid(cfg.avar.rho_step, cfg.avar.rho_max) {
        let mut emit = |est: &str, s: String, v: f64| csv.row(&[rho.to_string(), est.into(), s, v.to_string()]);
        emit("P", String::new(), avar_pearson(rho)?);
        emit("K", String::new(), avar_kendall(rho)?);
        emit("Q", String::new(), avar_quadrant(rho)?);
        for &s in &cfg.avar.spans {
            emit("QS", s.to_string(), avar_subsampled(rho, s)?);
        }
        emit("QS", "inf".into(), avar_subsampled_limit(rho)?);
    }
    let mut out = ExperimentOutput::default();
    out.push(AVAR_FILE, csv.finish());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn table(text: &str) -> BTreeMap<(String, String, String), f64> {
        text.lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                ((f[0].into(), f[1].into(), f[2].into()), f[3].parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn curves_are_monotone_in_span_and_even_in_rho() {
        let out = run_avar_curves(&ExperimentConfig::default()).unwrap();
        let t = table(out.artifact(AVAR_FILE).unwrap());
        assert_eq!(t.len(), 199 * 9);
        let get = |rho: &str, est: &str, s: &str| t[&(rho.to_string(), est.to_string(), s.to_string())];
        for rho in ["0", "0.3", "0.75", "-0.5"] {
            let seq: Vec<f64> = ["1", "2", "5", "10", "60", "inf"].iter().map(|s| get(rho, "QS", s)).collect();
            assert!(seq.windows(2).all(|w| w[1] < w[0]), "{rho}: {seq:?}");
            assert_eq!(get(rho, "QS", "1"), get(rho, "Q", ""));
        }
        for (a, b) in [("0.4", "-0.4"), ("0.99", "-0.99")] {
            for est in ["P", "K", "Q"] {
                assert_eq!(get(a, est, ""), get(b, est, ""));
            }
        }
        let pi2 = std::f64::consts::PI.powi(2);
        assert_eq!(get("0", "P", ""), 1.0);
        assert!((get("0", "Q", "") - pi2 / 4.0).abs() < 1e-15);
        assert!((get("0", "K", "") - pi2 / 9.0).abs() < 1e-15);
    }
}
