//! Rolling-window intraday correlations, relative volatilities and betas.
//!
//! A window ending at base index `e` covers the overlapping span-`S` returns
//! `X[k + S] - X[k]` for `k` in `e - W ..= e - S`. Q_S and the relative
//! volatility use all of them; P, K and the regression beta use the
//! non-overlapping returns ending at `e, e - S, ..., e - W + S`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{greiner_link, kendall_numerator, sign_product, EstimatorKind};
use crate::sampling::{make_sparse_nonoverlapping, span_returns, SampledPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// Sums of absolute truncated returns.
    #[default]
    Absolute,
    /// Sums of signed truncated returns (experimental).
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RollingConfig {
    pub window: usize,
    pub span: usize,
    pub n: usize,
    pub step: usize,
    pub lambda_mode: LambdaMode,
    /// Divide the Q_S sign sum by the non-zero count instead of `W - S + 1`.
    pub zero_aware_qs: bool,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig { window: 3600, span: 180, n: 23_400, step: 1, lambda_mode: LambdaMode::Absolute, zero_aware_qs: false }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        let RollingConfig { window, span, n, step, .. } = *self;
        if span == 0 || step == 0 || span > window || window > n {
            return Err(Error::input(format!("need 1 <= S <= W <= N and step >= 1 (S={span}, W={window}, N={n}, step={step})")));
        }
        if window % span != 0 || n % span != 0 {
            return Err(Error::input(format!("S={span} must divide both W={window} and N={n}")));
        }
        Ok(())
    }

    /// Overlapping returns per window.
    pub fn returns_per_window(&self) -> usize {
        self.window - self.span + 1
    }

    /// Window end indices: `W, W + step, ...`, always ending with `N`.
    pub fn eval_ends(&self) -> Vec<usize> {
        let mut ends: Vec<usize> = (self.window..=self.n).step_by(self.step).collect();
        if ends.last() != Some(&self.n) {
            ends.push(self.n);
        }
        ends
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationThresholds {
    pub nu_x: f64,
    pub nu_y: f64,
    pub bv_x: f64,
    pub bv_y: f64,
}

/// `(pi/2) sum_{j>=2} |r_j| |r_{j-1}|` over non-overlapping span-`S` returns
/// starting at index 0.
pub fn bipower_variation(path: &SampledPath, span: usize) -> Result<f64> {
    if span == 0 {
        return Err(Error::input("span must be at least 1"));
    }
    let r = make_sparse_nonoverlapping(path, span, 0)?;
    if r.len() < 2 {
        return Err(Error::input(format!("bipower variation needs at least 2 returns, got {}", r.len())));
    }
    Ok(FRAC_PI_2 * r.windows(2).map(|w| w[0].abs() * w[1].abs()).sum::<f64>())
}

/// `nu = 4 sqrt(BV) / n^0.49` per path, with `n` the number of span-`S` returns.
pub fn thresholds(path_x: &SampledPath, path_y: &SampledPath, span: usize) -> Result<TruncationThresholds> {
    let n = (path_x.n() / span.max(1)) as f64;
    let bv_x = bipower_variation(path_x, span)?;
    let bv_y = bipower_variation(path_y, span)?;
    let nu = |bv: f64| 4.0 * bv.sqrt() / n.powf(0.49);
    Ok(TruncationThresholds { nu_x: nu(bv_x), nu_y: nu(bv_y), bv_x, bv_y })
}

#[inline]
pub fn truncate(x: f64, nu: f64) -> f64 {
    if x.abs() < nu {
        x
    } else {
        0.0
    }
}

fn aggregate(x: f64, nu: f64, mode: LambdaMode) -> f64 {
    match mode {
        LambdaMode::Absolute => truncate(x, nu).abs(),
        LambdaMode::Signed => truncate(x, nu),
    }
}

/// Ratio of truncated asset-return aggregates to market-return aggregates.
pub fn relative_volatility(asset: &[f64], market: &[f64], nu_asset: f64, nu_market: f64, mode: LambdaMode) -> Result<f64> {
    if asset.len() != market.len() {
        return Err(Error::input("return windows differ in length"));
    }
    let num: f64 = asset.iter().map(|&r| aggregate(r, nu_asset, mode)).sum();
    let den: f64 = market.iter().map(|&r| aggregate(r, nu_market, mode)).sum();
    if den == 0.0 {
        return Err(Error::degenerate("market returns in the window sum to zero after truncation"));
    }
    Ok(num / den)
}

/// `sum [a][m] / sum [m]^2` with both factors truncated.
pub fn beta_regression(asset: &[f64], market: &[f64], nu_asset: f64, nu_market: f64) -> Result<f64> {
    if asset.len() != market.len() {
        return Err(Error::input("return windows differ in length"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (&a, &m) in asset.iter().zip(market) {
        let m = truncate(m, nu_market);
        num += truncate(a, nu_asset) * m;
        den += m * m;
    }
    if den == 0.0 {
        return Err(Error::degenerate("market quadratic variation is zero in the window"));
    }
    Ok(num / den)
}

/// OLS slope of asset on market returns (with intercept).
pub fn low_frequency_beta(asset: &[f64], market: &[f64]) -> Result<f64> {
    if asset.len() != market.len() || asset.len() < 2 {
        return Err(Error::input("need at least 2 paired daily returns"));
    }
    let n = asset.len() as f64;
    let (ma, mm) = (asset.iter().sum::<f64>() / n, market.iter().sum::<f64>() / n);
    let (mut sam, mut smm) = (0.0, 0.0);
    for (&a, &m) in asset.iter().zip(market) {
        sam += (a - ma) * (m - mm);
        smm += (m - mm) * (m - mm);
    }
    if smm == 0.0 {
        return Err(Error::degenerate("market returns have zero variance"));
    }
    Ok(sam / smm)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntradayCurves {
    pub eval_times: Vec<f64>,
    pub rho_p: Vec<f64>,
    pub rho_k: Vec<f64>,
    pub rho_qs: Vec<f64>,
    pub lambda: Vec<f64>,
    pub beta_p: Vec<f64>,
    pub beta_k: Vec<f64>,
    pub beta_qs: Vec<f64>,
    pub beta_reg: Vec<f64>,
}

pub const CURVE_COLUMNS: [&str; 9] =
    ["eval_time", "rho_P", "rho_K", "rho_QS", "lambda", "beta_P", "beta_K", "beta_QS", "beta_reg"];

impl IntradayCurves {
    pub fn len(&self) -> usize {
        self.eval_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eval_times.is_empty()
    }

    pub fn rho(&self, kind: EstimatorKind) -> Result<&[f64]> {
        match kind {
            EstimatorKind::Pearson => Ok(&self.rho_p),
            EstimatorKind::Kendall => Ok(&self.rho_k),
            EstimatorKind::SubsampledQuadrant => Ok(&self.rho_qs),
            EstimatorKind::Quadrant => Err(Error::input("intraday curves carry P, K and QS only")),
        }
    }

    pub fn beta(&self, kind: EstimatorKind) -> Result<&[f64]> {
        match kind {
            EstimatorKind::Pearson => Ok(&self.beta_p),
            EstimatorKind::Kendall => Ok(&self.beta_k),
            EstimatorKind::SubsampledQuadrant => Ok(&self.beta_qs),
            EstimatorKind::Quadrant => Err(Error::input("intraday curves carry P, K and QS only")),
        }
    }

    /// Columns in [`CURVE_COLUMNS`] order.
    pub fn columns(&self) -> [&[f64]; 9] {
        [
            &self.eval_times,
            &self.rho_p,
            &self.rho_k,
            &self.rho_qs,
            &self.lambda,
            &self.beta_p,
            &self.beta_k,
            &self.beta_qs,
            &self.beta_reg,
        ]
    }

    fn columns_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.eval_times,
            &mut self.rho_p,
            &mut self.rho_k,
            &mut self.rho_qs,
            &mut self.lambda,
            &mut self.beta_p,
            &mut self.beta_k,
            &mut self.beta_qs,
            &mut self.beta_reg,
        ]
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = CURVE_COLUMNS.join(",");
        out.push('\n');
        let cols = self.columns();
        for i in 0..self.len() {
            let row: Vec<String> = cols.iter().map(|c| format!("{}", c[i])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn nan_on_err(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn window_pearson(a: &[f64], m: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mm) = (a.iter().sum::<f64>() / n, m.iter().sum::<f64>() / n);
    let (mut sam, mut saa, mut smm) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(m) {
        let (x, y) = (x - ma, y - mm);
        sam += x * y;
        saa += x * x;
        smm += y * y;
    }
    if saa <= 0.0 || smm <= 0.0 {
        return f64::NAN;
    }
    (sam / (saa * smm).sqrt()).clamp(-1.0, 1.0)
}

fn window_kendall(a: &[f64], m: &[f64]) -> f64 {
    let n = a.len();
    let (num, _) = kendall_numerator(a, m);
    let tau = num as f64 / (n * (n - 1) / 2) as f64;
    nan_on_err(greiner_link(tau))
}

/// Rolling P, K, Q_S correlations, relative volatility and betas of an asset
/// against the market over one day. Truncation thresholds come from the
/// day's bipower variation at span `S`. Degenerate windows yield NaN.
pub fn rolling_curves(asset: &SampledPath, market: &SampledPath, cfg: &RollingConfig) -> Result<IntradayCurves> {
    cfg.validate()?;
    if asset.n() != cfg.n || market.n() != cfg.n {
        return Err(Error::input(format!(
            "paths have {} and {} intervals, config expects N = {}",
            asset.n(),
            market.n(),
            cfg.n
        )));
    }
    let (w, s) = (cfg.window, cfg.span);
    let th = thresholds(asset, market, s)?;
    let ra = span_returns(asset.values(), s);
    let rm = span_returns(market.values(), s);

    // prefix sums over the overlapping returns
    let m = ra.len();
    let mut sign_sum = vec![0i64; m + 1];
    let mut nonzero = vec![0i64; m + 1];
    let mut agg_a = vec![0.0; m + 1];
    let mut agg_m = vec![0.0; m + 1];
    for k in 0..m {
        let sp = sign_product(ra[k], rm[k]);
        sign_sum[k + 1] = sign_sum[k] + sp;
        nonzero[k + 1] = nonzero[k] + (sp != 0) as i64;
        agg_a[k + 1] = agg_a[k] + aggregate(ra[k], th.nu_x, cfg.lambda_mode);
        agg_m[k + 1] = agg_m[k] + aggregate(rm[k], th.nu_y, cfg.lambda_mode);
    }

    let per_window = w / s;
    let mut sub_a = vec![0.0; per_window];
    let mut sub_m = vec![0.0; per_window];
    let mut curves = IntradayCurves::default();
    for e in cfg.eval_ends() {
        let (lo, hi) = (e - w, e - s + 1);
        let tau_num = sign_sum[hi] - sign_sum[lo];
        let denom = if cfg.zero_aware_qs { nonzero[hi] - nonzero[lo] } else { (hi - lo) as i64 };
        let rho_qs = if denom > 0 { nan_on_err(greiner_link((tau_num as f64 / denom as f64).clamp(-1.0, 1.0))) } else { f64::NAN };
        let den = agg_m[hi] - agg_m[lo];
        let lambda = if den != 0.0 { (agg_a[hi] - agg_a[lo]) / den } else { f64::NAN };

        for j in 0..per_window {
            let k = e - (j + 1) * s;
            sub_a[j] = ra[k];
            sub_m[j] = rm[k];
        }
        let rho_p = window_pearson(&sub_a, &sub_m);
        let rho_k = window_kendall(&sub_a, &sub_m);
        let beta_reg = nan_on_err(beta_regression(&sub_a, &sub_m, th.nu_x, th.nu_y));

        let row = [e as f64 / cfg.n as f64, rho_p, rho_k, rho_qs, lambda, rho_p * lambda, rho_k * lambda, rho_qs * lambda, beta_reg];
        for (col, v) in curves.columns_mut().into_iter().zip(row) {
            col.push(v);
        }
    }
    Ok(curves)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaDecomposition {
    pub kind: EstimatorKind,
    pub delta_log_rho: f64,
    pub delta_log_lambda: f64,
    pub delta_log_beta: f64,
}

/// Last-window minus first-window log changes of correlation, relative
/// volatility and beta for one estimator's curves.
pub fn decompose_beta(curves: &IntradayCurves, kind: EstimatorKind) -> Result<BetaDecomposition> {
    if curves.is_empty() {
        return Err(Error::input("empty curves"));
    }
    let rho = curves.rho(kind)?;
    let beta = curves.beta(kind)?;
    let last = curves.len() - 1;
    for (name, v) in [("rho", rho[0]), ("rho", rho[last]), ("lambda", curves.lambda[0]), ("lambda", curves.lambda[last])] {
        if !(v > 0.0) {
            return Err(Error::degenerate(format!("log decomposition undefined: {kind} {name} = {v}")));
        }
    }
    Ok(BetaDecomposition {
        kind,
        delta_log_rho: rho[last].ln() - rho[0].ln(),
        delta_log_lambda: curves.lambda[last].ln() - curves.lambda[0].ln(),
        delta_log_beta: beta[last].ln() - beta[0].ln(),
    })
}

/// `cov(rho, lambda) / (mean(rho) mean(lambda))` across days at one time of day.
pub fn gamma_adjustment(rho: &[f64], lambda: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = rho.iter().zip(lambda).map(|(&r, &l)| (r, l)).filter(|(r, l)| r.is_finite() && l.is_finite()).collect();
    if pairs.len() < 2 {
        return f64::NAN;
    }
    let n = pairs.len() as f64;
    let mr = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let cov = pairs.iter().map(|(r, l)| (r - mr) * (l - ml)).sum::<f64>() / (n - 1.0);
    cov / (mr * ml)
}

/// Running pointwise mean and variance of curves across days, skipping NaN.
#[derive(Debug, Clone, Default)]
pub struct CurveAverager {
    eval_times: Vec<f64>,
    sums: [Vec<f64>; 8],
    sum_sq: [Vec<f64>; 8],
    counts: [Vec<u32>; 8],
    days: usize,
}

impl CurveAverager {
    pub fn add(&mut self, curves: &IntradayCurves) -> Result<()> {
        if self.days == 0 {
            self.eval_times = curves.eval_times.clone();
            let len = curves.len();
            for i in 0..8 {
                self.sums[i] = vec![0.0; len];
                self.sum_sq[i] = vec![0.0; len];
                self.counts[i] = vec![0; len];
            }
        } else if curves.eval_times != self.eval_times {
            return Err(Error::input("curves use different evaluation times"));
        }
        let cols = curves.columns();
        for (i, col) in cols[1..].iter().enumerate() {
            for (j, &v) in col.iter().enumerate() {
                if v.is_finite() {
                    self.sums[i][j] += v;
                    self.sum_sq[i][j] += v * v;
                    self.counts[i][j] += 1;
                }
            }
        }
        self.days += 1;
        Ok(())
    }

    pub fn days(&self) -> usize {
        self.days
    }

    /// Pointwise means. The P, K and Q_S beta columns are rebuilt as the
    /// product of the mean correlation and the mean relative volatility, so
    /// the averaged curves decompose exactly; the gap to the mean of daily
    /// betas is `cov(rho, lambda)`, see [`gamma_adjustment`].
    pub fn mean(&self) -> IntradayCurves {
        let mut out = IntradayCurves { eval_times: self.eval_times.clone(), ..Default::default() };
        for (i, col) in out.columns_mut().into_iter().skip(1).enumerate() {
            *col = self.sums[i].iter().zip(&self.counts[i]).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
        }
        let products = |rho: &[f64]| rho.iter().zip(&out.lambda).map(|(r, l)| r * l).collect::<Vec<f64>>();
        out.beta_p = products(&out.rho_p);
        out.beta_k = products(&out.rho_k);
        out.beta_qs = products(&out.rho_qs);
        out
    }

    /// Pointwise means of the daily betas, in `[beta_P, beta_K, beta_QS]` order.
    pub fn mean_daily_betas(&self) -> [Vec<f64>; 3] {
        // columns 4..7 of the accumulator follow CURVE_COLUMNS minus eval_time
        std::array::from_fn(|k| {
            let i = 4 + k;
            self.sums[i].iter().zip(&self.counts[i]).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect()
        })
    }

    /// Pointwise across-day sample variance, in the same layout as [`Self::mean`].
    pub fn variance(&self) -> IntradayCurves {
        let mut out = IntradayCurves { eval_times: self.eval_times.clone(), ..Default::default() };
        for (i, col) in out.columns_mut().into_iter().skip(1).enumerate() {
            *col = (0..self.eval_times.len())
                .map(|j| {
                    let c = self.counts[i][j] as f64;
                    if c < 2.0 {
                        return f64::NAN;
                    }
                    let m = self.sums[i][j] / c;
                    ((self.sum_sq[i][j] - c * m * m) / (c - 1.0)).max(0.0)
                })
                .collect();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{kendall_tau, pearson, subsampled_quadrant, CenteredPairs};
    use crate::sampling::make_return_grid;
    use crate::simulator::{simulate_tv_diffusion, TvDiffusionSpec};

    fn path(v: Vec<f64>) -> SampledPath {
        SampledPath::from_values(v).unwrap()
    }

    fn brownian(n: usize, sx: f64, sy: f64, rho: f64, seed: u64) -> (SampledPath, SampledPath) {
        let p = simulate_tv_diffusion(&TvDiffusionSpec::from_fns(n, |_| sx, |_| sy, |_| rho), seed).unwrap();
        (p.latent_x, p.latent_y)
    }

    #[test]
    fn default_window_arithmetic() {
        let cfg = RollingConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.returns_per_window(), 3421);
        let ends = cfg.eval_ends();
        assert_eq!((ends[0], *ends.last().unwrap(), ends.len()), (3600, 23_400, 19_801));
        let coarse = RollingConfig { step: 7000, ..cfg };
        assert_eq!(coarse.eval_ends(), vec![3600, 10_600, 17_600, 23_400]);
        assert!(RollingConfig { window: 100, ..cfg }.validate().is_err());
        assert!(RollingConfig { span: 7000, window: 7000, ..cfg }.validate().is_err());
    }

    #[test]
    fn bipower_examples() {
        assert_eq!(bipower_variation(&path(vec![1.0; 11]), 2).unwrap(), 0.0);
        // alternating +-r: n returns of magnitude r
        let r = 0.3;
        let v: Vec<f64> = (0..=8).map(|i| if i % 2 == 0 { 0.0 } else { r }).collect();
        let bv = bipower_variation(&path(v), 1).unwrap();
        assert!((bv - FRAC_PI_2 * 7.0 * r * r).abs() < 1e-15);
        assert!(bipower_variation(&path(vec![0.0, 1.0, 2.0]), 2).is_err());

        let mut total = 0.0;
        for seed in 0..20 {
            let (x, _) = brownian(23_400, 0.4, 0.3, 0.0, seed);
            total += bipower_variation(&x, 1).unwrap();
        }
        let mean = total / 20.0;
        assert!((mean - 0.16).abs() < 0.16 * 0.01, "{mean}");
    }

    #[test]
    fn threshold_arithmetic() {
        let (x, y) = brownian(23_400, 0.4, 0.2, 0.5, 3);
        let th = thresholds(&x, &y, 180).unwrap();
        assert!((th.nu_x - 4.0 * th.bv_x.sqrt() / 130f64.powf(0.49)).abs() < 1e-15);
        let x2 = path(x.values().iter().map(|v| 2.0 * v).collect());
        let th2 = thresholds(&x2, &y, 180).unwrap();
        assert!((th2.bv_x / th.bv_x - 4.0).abs() < 1e-12);
        assert!((th2.nu_x / th.nu_x - 2.0).abs() < 1e-12);
        assert_eq!(truncate(10.0 * th.nu_x, th.nu_x), 0.0);
        assert_eq!(truncate(0.5 * th.nu_x, th.nu_x), 0.5 * th.nu_x);
    }

    #[test]
    fn relative_volatility_examples() {
        let m = [0.1, -0.2, 0.3];
        let a: Vec<f64> = m.iter().map(|v| 2.5 * v).collect();
        assert!((relative_volatility(&a, &m, 10.0, 10.0, LambdaMode::Absolute).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(relative_volatility(&m, &m, 10.0, 10.0, LambdaMode::Absolute).unwrap(), 1.0);
        assert!(relative_volatility(&m, &[0.0; 3], 1.0, 1.0, LambdaMode::Absolute).is_err());
        assert!(relative_volatility(&m, &m, 1.0, 0.01, LambdaMode::Absolute).is_err());
        assert!((relative_volatility(&a, &m, 10.0, 10.0, LambdaMode::Signed).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn regression_and_low_frequency_betas() {
        let m = [0.1, -0.2, 0.3, 0.05];
        assert_eq!(beta_regression(&m, &m, 1.0, 1.0).unwrap(), 1.0);
        let a: Vec<f64> = m.iter().map(|v| 2.0 * v).collect();
        assert!((beta_regression(&a, &m, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(beta_regression(&a, &[0.0; 4], 1.0, 1.0).is_err());

        assert!((low_frequency_beta(&m, &m).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = m.iter().map(|v| -v).collect();
        assert!((low_frequency_beta(&neg, &m).unwrap() + 1.0).abs() < 1e-15);
        // y = 0.2 + 1.3 x + e with e orthogonal to x and summing to zero
        let x = [1.0, 2.0, 3.0, 4.0];
        let e = [0.1, -0.1, -0.1, 0.1];
        let y: Vec<f64> = x.iter().zip(e).map(|(x, e)| 0.2 + 1.3 * x + e).collect();
        assert!((low_frequency_beta(&y, &x).unwrap() - 1.3).abs() < 1e-14);
        assert!(low_frequency_beta(&[1.0], &[1.0]).is_err());
        assert!(low_frequency_beta(&[1.0, 2.0], &[1.0, 1.0]).is_err());
    }

    fn small_cfg() -> RollingConfig {
        RollingConfig { window: 600, span: 30, n: 3000, step: 37, ..Default::default() }
    }

    #[test]
    fn curves_match_direct_estimators() {
        let cfg = small_cfg();
        let (m, a) = brownian(cfg.n, 0.3, 0.5, 0.4, 8);
        let curves = rolling_curves(&a, &m, &cfg).unwrap();
        let th = thresholds(&a, &m, cfg.span).unwrap();
        for (i, &t) in curves.eval_times.iter().enumerate() {
            let e = (t * cfg.n as f64).round() as usize;
            let sub = |p: &SampledPath| SampledPath::from_values(p.values()[e - cfg.window..=e].to_vec()).unwrap();
            let g = make_return_grid(&sub(&a), &sub(&m), cfg.span).unwrap();
            assert_eq!(g.len(), cfg.returns_per_window());
            assert_eq!(subsampled_quadrant(&g).unwrap().rho_hat, curves.rho_qs[i]);
            let lam = relative_volatility(&g.returns_x, &g.returns_y, th.nu_x, th.nu_y, LambdaMode::Absolute).unwrap();
            assert!((lam - curves.lambda[i]).abs() < 1e-12 * lam);

            let ends: Vec<usize> = (0..cfg.window / cfg.span).map(|j| e - j * cfg.span).collect();
            let ret = |p: &SampledPath| ends.iter().map(|&k| p.values()[k] - p.values()[k - cfg.span]).collect::<Vec<_>>();
            let (sa, sm) = (ret(&a), ret(&m));
            let pairs = CenteredPairs::new(sa.clone(), sm.clone()).unwrap();
            assert!((pearson(&pairs).unwrap().rho_hat - curves.rho_p[i]).abs() < 1e-12);
            assert_eq!(kendall_tau(&pairs).unwrap().rho_hat, curves.rho_k[i]);
            assert_eq!(beta_regression(&sa, &sm, th.nu_x, th.nu_y).unwrap(), curves.beta_reg[i]);
            assert_eq!(curves.beta_qs[i], curves.rho_qs[i] * curves.lambda[i]);
        }
    }

    #[test]
    fn identical_paths_give_unit_curves() {
        let cfg = small_cfg();
        let (m, _) = brownian(cfg.n, 0.3, 0.5, 0.4, 9);
        let c = rolling_curves(&m, &m, &cfg).unwrap();
        for col in [&c.rho_p, &c.rho_k, &c.rho_qs, &c.lambda, &c.beta_qs, &c.beta_reg] {
            assert!(col.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
        let d = decompose_beta(&c, EstimatorKind::SubsampledQuadrant).unwrap();
        assert!(d.delta_log_beta.abs() < 1e-12 && d.delta_log_rho.abs() < 1e-12);
    }

    #[test]
    fn degenerate_windows_are_nan() {
        let cfg = small_cfg();
        let (m, _) = brownian(cfg.n, 0.3, 0.5, 0.4, 10);
        let mut flat = vec![0.0; cfg.n + 1];
        // the asset only moves in the second half of the day
        for k in cfg.n / 2..=cfg.n {
            flat[k] = m.values()[k] - m.values()[cfg.n / 2];
        }
        let c = rolling_curves(&path(flat), &m, &cfg).unwrap();
        assert!(c.rho_p[0].is_nan());
        assert_eq!(c.rho_qs[0], 0.0);
        assert!(decompose_beta(&c, EstimatorKind::SubsampledQuadrant).is_err());
    }

    #[test]
    fn decomposition_identity() {
        let mut c = IntradayCurves::default();
        for (t, r, l) in [(0.2, 0.2, 1.2), (0.6, 0.3, 1.1), (1.0, 0.4, 0.6)] {
            for (col, v) in c.columns_mut().into_iter().zip([t, r, r, r, l, r * l, r * l, r * l, r * l]) {
                col.push(v);
            }
        }
        let d = decompose_beta(&c, EstimatorKind::Kendall).unwrap();
        assert!((d.delta_log_rho - 2f64.ln()).abs() < 1e-15);
        assert!((d.delta_log_lambda - 0.5f64.ln()).abs() < 1e-15);
        assert!(d.delta_log_beta.abs() < 1e-15);
        assert!((d.delta_log_beta - d.delta_log_rho - d.delta_log_lambda).abs() < 1e-12);
        assert!(decompose_beta(&c, EstimatorKind::Quadrant).is_err());
    }

    #[test]
    fn averager_statistics() {
        let mut avg = CurveAverager::default();
        for v in [1.0, 2.0, f64::NAN, 6.0] {
            let mut c = IntradayCurves::default();
            for col in c.columns_mut() {
                col.push(v);
            }
            c.eval_times[0] = 0.5;
            avg.add(&c).unwrap();
        }
        assert_eq!(avg.days(), 4);
        assert_eq!(avg.mean().rho_qs, vec![3.0]);
        assert_eq!(avg.mean().beta_qs, vec![9.0]);
        assert_eq!(avg.mean_daily_betas()[2], vec![3.0]);
        assert!((avg.variance().lambda[0] - 7.0).abs() < 1e-12);
        assert!((gamma_adjustment(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 2.0 / 8.0).abs() < 1e-15);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn decomposition_is_additive(
                first in (0.01f64..0.99, 0.1f64..5.0),
                last in (0.01f64..0.99, 0.1f64..5.0),
            ) {
                let mut c = IntradayCurves::default();
                for (t, (r, l)) in [(0.5, first), (1.0, last)] {
                    for (col, v) in c.columns_mut().into_iter().zip([t, r, r, r, l, r * l, r * l, r * l, r * l]) {
                        col.push(v);
                    }
                }
                for kind in [EstimatorKind::Pearson, EstimatorKind::Kendall, EstimatorKind::SubsampledQuadrant] {
                    let d = decompose_beta(&c, kind).unwrap();
                    prop_assert!((d.delta_log_beta - d.delta_log_rho - d.delta_log_lambda).abs() < 1e-12);
                }
            }

            #[test]
            fn betas_are_products_of_curves(seed in 0u64..1000, rho in -0.9f64..0.9, sy in 0.2f64..3.0) {
                let (m, a) = brownian(600, 1.0, sy, rho, seed);
                let cfg = RollingConfig { window: 120, span: 6, n: 600, step: 7, ..Default::default() };
                let c = rolling_curves(&a, &m, &cfg).unwrap();
                for i in 0..c.eval_times.len() {
                    prop_assert_eq!(c.beta_p[i].to_bits(), (c.rho_p[i] * c.lambda[i]).to_bits());
                    prop_assert_eq!(c.beta_k[i].to_bits(), (c.rho_k[i] * c.lambda[i]).to_bits());
                    prop_assert_eq!(c.beta_qs[i].to_bits(), (c.rho_qs[i] * c.lambda[i]).to_bits());
                }
            }
        }
    }
}
