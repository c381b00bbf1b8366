//! Tick ingestion and calendar-time sampling.
//!
//! A trading day of physical length `T_day` seconds is mapped onto `[0, 1]`
//! and sampled at the `N + 1` grid points `j / N`. Every grid point takes the
//! log price of the last tick at or before it (previous-tick interpolation);
//! grid points before the first tick are backfilled with the first tick.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Length of a 6.5 hour trading session in seconds.
pub const DEFAULT_DAY_SECONDS: f64 = 23_400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    /// Seconds since the session open.
    pub time: f64,
    pub log_price: f64,
}

/// Irregularly spaced observations of one asset over one trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub asset_id: String,
    ticks: Vec<Tick>,
    day_length_seconds: f64,
}

impl TickSeries {
    /// Validates that ticks are non-empty, strictly increasing in time and
    /// inside `[0, day_length_seconds]`.
    pub fn new(asset_id: impl Into<String>, ticks: Vec<Tick>, day_length_seconds: f64) -> Result<Self> {
        if !(day_length_seconds.is_finite() && day_length_seconds > 0.0) {
            return Err(Error::input(format!("day length must be positive, got {day_length_seconds}")));
        }
        if ticks.is_empty() {
            return Err(Error::input("tick series is empty"));
        }
        for (i, t) in ticks.iter().enumerate() {
            if !(t.time.is_finite() && t.log_price.is_finite()) {
                return Err(Error::input(format!("tick {i} is not finite")));
            }
            if t.time < 0.0 || t.time > day_length_seconds {
                return Err(Error::input(format!(
                    "tick {i} at {}s lies outside the trading day [0, {day_length_seconds}]",
                    t.time
                )));
            }
            if i > 0 && t.time <= ticks[i - 1].time {
                return Err(Error::input(format!("tick times must be strictly increasing (tick {i})")));
            }
        }
        Ok(Self { asset_id: asset_id.into(), ticks, day_length_seconds })
    }

    /// Builds a series from raw `(seconds, price)` trades: sorts by time,
    /// keeps the last trade for duplicated timestamps and takes logs.
    pub fn from_prices(
        asset_id: impl Into<String>,
        trades: impl IntoIterator<Item = (f64, f64)>,
        day_length_seconds: f64,
    ) -> Result<Self> {
        let mut trades: Vec<(f64, f64)> = trades.into_iter().collect();
        for &(t, p) in &trades {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::input(format!("price at {t}s must be positive, got {p}")));
            }
        }
        // stable sort keeps arrival order within a timestamp, so the dedup
        // below retains the last reported trade
        trades.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ticks: Vec<Tick> = Vec::with_capacity(trades.len());
        for (time, price) in trades {
            let tick = Tick { time, log_price: price.ln() };
            match ticks.last_mut() {
                Some(last) if last.time == time => *last = tick,
                _ => ticks.push(tick),
            }
        }
        Self::new(asset_id, ticks, day_length_seconds)
    }

    /// Reads a `timestamp_ns,price` CSV. Timestamps are nanoseconds since
    /// the session open.
    pub fn read_csv(path: &Path, asset_id: impl Into<String>, day_length_seconds: f64) -> Result<Self> {
        let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let headers = reader.headers().map_err(csv_err)?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::input(format!("{}: missing column `{name}`", path.display())))
        };
        let (ts_col, px_col) = (col("timestamp_ns")?, col("price")?);
        let mut trades = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let parse_err = |what: &str| Error::input(format!("{}: row {}: bad {what}", path.display(), line + 2));
            let ns: i64 = record[ts_col].parse().map_err(|_| parse_err("timestamp_ns"))?;
            let price: f64 = record[px_col].parse().map_err(|_| parse_err("price"))?;
            trades.push((ns as f64 * 1e-9, price));
        }
        Self::from_prices(asset_id, trades, day_length_seconds)
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    pub fn day_length_seconds(&self) -> f64 {
        self.day_length_seconds
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }
}

/// Log prices on the equispaced grid `j / N`, `j = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    values: Vec<f64>,
    day_length_seconds: f64,
}

impl SampledPath {
    pub fn new(values: Vec<f64>, day_length_seconds: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::input(format!("a sampled path needs N >= 1 (got {} values)", values.len())));
        }
        if !(day_length_seconds.is_finite() && day_length_seconds > 0.0) {
            return Err(Error::input(format!("day length must be positive, got {day_length_seconds}")));
        }
        Ok(Self { values, day_length_seconds })
    }

    /// Path with the default 23,400 second day.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, DEFAULT_DAY_SECONDS)
    }

    /// Number of base-resolution intervals.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn day_length_seconds(&self) -> f64 {
        self.day_length_seconds
    }

    /// Physical length of one base interval.
    pub fn base_step_seconds(&self) -> f64 {
        self.day_length_seconds / self.n() as f64
    }

    /// Converts a sampling interval in seconds to a span in base intervals.
    /// The interval must be a whole number of base steps.
    pub fn span_for_seconds(&self, delta_seconds: f64) -> Result<usize> {
        let steps = delta_seconds / self.base_step_seconds();
        let rounded = steps.round();
        if rounded < 1.0 || (steps - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded as usize > self.n() {
            return Err(Error::input(format!(
                "sampling interval {delta_seconds}s is not a whole number of {}s base steps within the day",
                self.base_step_seconds()
            )));
        }
        Ok(rounded as usize)
    }

    /// Base-resolution increments `values[j] - values[j-1]`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// CSV export with header `index,log_price`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        out.push_str("index,log_price\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

/// Aligned overlapping span-`S` returns of two assets.
///
/// `returns_x[k] = X[(S + k) / N] - X[k / N]` for `k = 0..=N-S`, i.e. the
/// returns ending at grid indices `j = S..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnGrid {
    pub span: usize,
    pub base_n: usize,
    pub returns_x: Vec<f64>,
    pub returns_y: Vec<f64>,
}

impl ReturnGrid {
    pub fn len(&self) -> usize {
        self.returns_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns_x.is_empty()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.span == 0 || self.span > self.base_n {
            return Err(Error::input(format!("span {} outside 1..={}", self.span, self.base_n)));
        }
        let expected = self.base_n - self.span + 1;
        if self.returns_x.len() != expected || self.returns_y.len() != expected {
            return Err(Error::input(format!(
                "return grid has {}/{} returns, expected N - S + 1 = {expected}",
                self.returns_x.len(),
                self.returns_y.len()
            )));
        }
        Ok(())
    }
}

/// Previous-tick sampling onto `N + 1` equispaced grid points.
pub fn previous_tick_sample(ticks: &TickSeries, n: usize) -> Result<SampledPath> {
    if n == 0 {
        return Err(Error::input("N must be at least 1"));
    }
    let day = ticks.day_length_seconds();
    let ts = ticks.ticks();
    let mut values = Vec::with_capacity(n + 1);
    let mut next = 0usize;
    let mut current = ts[0].log_price;
    for j in 0..=n {
        let grid_time = j as f64 * day / n as f64;
        while next < ts.len() && ts[next].time <= grid_time {
            current = ts[next].log_price;
            next += 1;
        }
        values.push(current);
    }
    SampledPath::new(values, day)
}

/// All `N - S + 1` overlapping span-`S` returns of two paths.
pub fn make_return_grid(path_x: &SampledPath, path_y: &SampledPath, span: usize) -> Result<ReturnGrid> {
    let n = path_x.n();
    if path_y.n() != n {
        return Err(Error::input(format!("paths have different resolutions ({n} vs {})", path_y.n())));
    }
    if span == 0 || span > n {
        return Err(Error::input(format!("span must lie in 1..={n}, got {span}")));
    }
    Ok(ReturnGrid {
        span,
        base_n: n,
        returns_x: span_returns(path_x.values(), span),
        returns_y: span_returns(path_y.values(), span),
    })
}

pub(crate) fn span_returns(values: &[f64], span: usize) -> Vec<f64> {
    values[span..].iter().zip(values).map(|(hi, lo)| hi - lo).collect()
}

/// Non-overlapping span-`S` returns ending at grid indices
/// `shift + S, shift + 2S, ... <= N`.
pub fn make_sparse_nonoverlapping(path: &SampledPath, span: usize, shift: usize) -> Result<Vec<f64>> {
    let n = path.n();
    if span == 0 || span > n {
        return Err(Error::input(format!("span must lie in 1..={n}, got {span}")));
    }
    if shift >= span {
        return Err(Error::input(format!("shift {shift} must be smaller than the span {span}")));
    }
    let v = path.values();
    Ok((shift + span..=n).step_by(span).map(|end| v[end] - v[end - span]).collect())
}

/// Trade-level summary statistics for one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub average_price: f64,
    /// Mean seconds between consecutive trades.
    pub mean_duration: f64,
    /// Sampling interval in seconds -> percentage of zero returns.
    pub zero_return_pct: BTreeMap<u64, f64>,
    pub n_ticks: usize,
}

/// Average price, mean trade duration and the percentage of zero
/// previous-tick returns at each sampling interval (in whole seconds).
///
/// A series holding a single trade reports the whole day as its duration.
pub fn compute_summary_stats(ticks: &TickSeries, deltas_seconds: &[u64]) -> Result<SummaryStats> {
    let ts = ticks.ticks();
    let average_price = ts.iter().map(|t| t.log_price.exp()).sum::<f64>() / ts.len() as f64;
    let mean_duration = if ts.len() > 1 {
        (ts[ts.len() - 1].time - ts[0].time) / (ts.len() - 1) as f64
    } else {
        ticks.day_length_seconds()
    };
    let mut zero_return_pct = BTreeMap::new();
    for &delta in deltas_seconds {
        let n = grid_count(ticks.day_length_seconds(), delta)?;
        let path = previous_tick_sample(ticks, n)?;
        let zeros = path.values().windows(2).filter(|w| w[1] == w[0]).count();
        zero_return_pct.insert(delta, 100.0 * zeros as f64 / n as f64);
    }
    Ok(SummaryStats { average_price, mean_duration, zero_return_pct, n_ticks: ts.len() })
}

fn grid_count(day_length: f64, delta_seconds: u64) -> Result<usize> {
    if delta_seconds == 0 {
        return Err(Error::input("sampling interval must be positive"));
    }
    let n = day_length / delta_seconds as f64;
    if n < 1.0 || (n - n.round()).abs() > 1e-9 {
        return Err(Error::input(format!("{delta_seconds}s does not divide a {day_length}s day")));
    }
    Ok(n.round() as usize)
}
