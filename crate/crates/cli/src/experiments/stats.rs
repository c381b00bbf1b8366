use std::fs;
use std::path::{Path, PathBuf};

use quadcorr::sampling::{compute_summary_stats, SummaryStats};
use quadcorr::TickSeries;

use super::CsvBuilder;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::ExperimentOutput;

pub const STATS_FILE: &str = "summary_stats.csv";

fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<PathBuf>> {
    let io = |source| CliError::Io { path: dir.to_path_buf(), source };
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let keep = if want_dirs { path.is_dir() } else { path.extension().is_some_and(|e| e == "csv") };
        if keep {
            entries.push(path);
        }
    }
    entries.sort();
    Ok(entries)
}

fn asset_stats(dir: &Path, name: &str, cfg: &ExperimentConfig) -> Result<Vec<SummaryStats>> {
    let files = sorted_entries(dir, false)?;
    if files.is_empty() {
        return Err(CliError::Experiment(format!("{}: no tick files", dir.display())));
    }
    files
        .iter()
        .map(|f| {
            let ticks = TickSeries::read_csv(f, name, cfg.stats.day_length_seconds)?;
            Ok(compute_summary_stats(&ticks, &cfg.stats.deltas)?)
        })
        .collect()
}

/// Per-asset averages over days of the trade price, the trade duration and
/// the share of zero returns at each configured interval. The tick
/// directory holds one sub-directory per asset with one CSV per day.
pub fn run_summary_stats(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let root = cfg.stats.tick_dir.as_deref().ok_or_else(|| CliError::Config("stats.tick_dir is required".into()))?;
    let assets = sorted_entries(root, true)?;
    if assets.is_empty() {
        return Err(CliError::Experiment(format!("{}: empty universe, no asset directories", root.display())));
    }
    let mut header = vec!["asset".to_string(), "days".into(), "average_price".into(), "duration_seconds".into()];
    header.extend(cfg.stats.deltas.iter().map(|d| format!("zero_pct_{d}s")));
    header.push("ticks".into());
    let mut csv = CsvBuilder::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut out = ExperimentOutput::default();
    for dir in assets {
        let name = dir.file_name().expect("directory entries have names").to_string_lossy().into_owned();
        let days = match asset_stats(&dir, &name, cfg) {
            Ok(d) => d,
            Err(e) => {
                out.fail(format!("asset={name}"), e);
                continue;
            }
        };
        let n = days.len() as f64;
        let avg = |f: &dyn Fn(&SummaryStats) -> f64| days.iter().map(f).sum::<f64>() / n;
        let mut row = vec![name, days.len().to_string(), avg(&|s| s.average_price).to_string(), avg(&|s| s.mean_duration).to_string()];
        row.extend(cfg.stats.deltas.iter().map(|d| avg(&|s| s.zero_return_pct[d]).to_string()));
        row.push(days.iter().map(|s| s.n_ticks).sum::<usize>().to_string());
        csv.row(&row);
    }
    out.push(STATS_FILE, csv.finish());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StatsConfig;
    use quadcorr::rng::rng_from_seed;
    use rand_distr::{Distribution, Exp};

    fn write_day(dir: &Path, name: &str, rows: &[(i64, f64)]) {
        fs::create_dir_all(dir).unwrap();
        let mut text = String::from("timestamp_ns,price\n");
        for (t, p) in rows {
            text.push_str(&format!("{t},{p}\n"));
        }
        fs::write(dir.join(name), text).unwrap();
    }

    fn cfg(root: &Path) -> ExperimentConfig {
        ExperimentConfig { stats: StatsConfig { tick_dir: Some(root.to_path_buf()), ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn constant_price_and_poisson_fixture() {
        let root = tempfile::tempdir().unwrap();
        let every_second: Vec<(i64, f64)> = (0..=23_400).map(|s| (s * 1_000_000_000, 50.0)).collect();
        write_day(&root.path().join("CONST"), "day1.csv", &every_second);

        let mut rng = rng_from_seed(5);
        let gaps = Exp::new(1.0 / 2.28).unwrap();
        let (mut t, mut p, mut rows) = (0.0f64, 100.0f64, Vec::new());
        while t < 23_400.0 {
            rows.push(((t * 1e9) as i64, p));
            t += gaps.sample(&mut rng);
            p += 0.01;
        }
        write_day(&root.path().join("POIS"), "day1.csv", &rows);

        let out = run_summary_stats(&cfg(root.path())).unwrap();
        assert!(out.failures.is_empty());
        let text = out.artifact(STATS_FILE).unwrap();
        let lines: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(lines[0], ["asset", "days", "average_price", "duration_seconds", "zero_pct_1s", "zero_pct_180s", "ticks"]);
        assert_eq!(lines[1][0], "CONST");
        assert_eq!(lines[1][4], "100");
        assert_eq!(lines[1][5], "100");
        assert_eq!(lines[2][0], "POIS");
        let duration: f64 = lines[2][3].parse().unwrap();
        assert!((duration - 2.28).abs() < 0.05, "{duration}");
        // every trade moves the price, so P(zero 1s return) = P(no trade in a second)
        let zeros: f64 = lines[2][4].parse().unwrap();
        assert!((zeros / 100.0 - (-1.0f64 / 2.28).exp()).abs() < 0.02, "{zeros}");
    }

    #[test]
    fn empty_universe_and_bad_asset() {
        let root = tempfile::tempdir().unwrap();
        let err = run_summary_stats(&cfg(root.path())).unwrap_err();
        assert!(err.to_string().contains("empty universe"));
        write_day(&root.path().join("BAD"), "day1.csv", &[(0, -1.0)]);
        write_day(&root.path().join("GOOD"), "day1.csv", &[(0, 10.0), (5_000_000_000, 10.5)]);
        let out = run_summary_stats(&cfg(root.path())).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert!(out.failures[0].unit.contains("BAD"));
        assert_eq!(out.artifact(STATS_FILE).unwrap().lines().count(), 2);
    }
}
