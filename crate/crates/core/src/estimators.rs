//! Correlation estimators.
//!
//! Quadrant, Kendall and subsampled-quadrant estimators first estimate the
//! sign concordance `tau` and then map it to a correlation with Greiner's
//! link `rho = sin(pi * tau / 2)`. Sign sums are accumulated as integers so
//! results do not depend on summation order.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{make_return_grid, make_sparse_nonoverlapping, ReturnGrid, SampledPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Pearson,
    Kendall,
    Quadrant,
    SubsampledQuadrant,
}

impl EstimatorKind {
    /// Short label used in output tables.
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Pearson => "P",
            EstimatorKind::Kendall => "K",
            EstimatorKind::Quadrant => "Q",
            EstimatorKind::SubsampledQuadrant => "QS",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrEstimate {
    pub kind: EstimatorKind,
    /// Sign-concordance estimate; `None` for Pearson.
    pub tau_hat: Option<f64>,
    pub rho_hat: f64,
    /// Number of terms in the averaged sum (pairs, or pairs of pairs for Kendall).
    pub n_used: usize,
    /// Number of terms with a non-zero sign product.
    pub n_nonzero: usize,
    /// Integer numerator of `tau_hat` (sum of signs).
    pub concordance: Option<i64>,
}

/// Equal-length observation pairs, optionally recentered.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredPairs {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl CenteredPairs {
    /// Wraps the data without recentering.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::input(format!("series lengths differ ({} vs {})", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(Error::input(format!("need at least 2 pairs, got {}", x.len())));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::input("observations must be finite"));
        }
        Ok(Self { x, y })
    }

    /// Subtracts the sample means.
    pub fn mean_centered(x: &[f64], y: &[f64]) -> Result<Self> {
        let mut pairs = Self::new(x.to_vec(), y.to_vec())?;
        let (mx, my) = (mean(&pairs.x), mean(&pairs.y));
        pairs.x.iter_mut().for_each(|v| *v -= mx);
        pairs.y.iter_mut().for_each(|v| *v -= my);
        Ok(pairs)
    }

    /// Subtracts the sample medians (lower median for even lengths).
    pub fn median_centered(x: &[f64], y: &[f64]) -> Result<Self> {
        let mut pairs = Self::new(x.to_vec(), y.to_vec())?;
        let (mx, my) = (lower_median(&pairs.x), lower_median(&pairs.y));
        pairs.x.iter_mut().for_each(|v| *v -= mx);
        pairs.y.iter_mut().for_each(|v| *v -= my);
        Ok(pairs)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn lower_median(v: &[f64]) -> f64 {
    let mut buf = v.to_vec();
    let mid = (buf.len() - 1) / 2;
    let (_, m, _) = buf.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Greiner's link `rho = sin(pi * tau / 2)`.
pub fn greiner_link(tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau.abs() <= 1.0) {
        return Err(Error::input(format!("tau must lie in [-1, 1], got {tau}")));
    }
    Ok((FRAC_PI_2 * tau).sin())
}

#[inline]
fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `sgn(a * b)` without forming the (possibly underflowing) product.
#[inline]
pub fn sign_product(a: f64, b: f64) -> i64 {
    sign(a) * sign(b)
}

/// Sum of `sgn(x_i * y_i)` and the number of non-zero terms.
pub fn sign_concordance(x: &[f64], y: &[f64]) -> (i64, usize) {
    x.iter().zip(y).fold((0i64, 0usize), |(sum, nz), (&a, &b)| {
        let s = sign_product(a, b);
        (sum + s, nz + (s != 0) as usize)
    })
}

fn tau_estimate(kind: EstimatorKind, concordance: i64, n_used: usize, n_nonzero: usize, denom: f64) -> Result<CorrEstimate> {
    let tau = (concordance as f64 / denom).clamp(-1.0, 1.0);
    Ok(CorrEstimate {
        kind,
        tau_hat: Some(tau),
        rho_hat: greiner_link(tau)?,
        n_used,
        n_nonzero,
        concordance: Some(concordance),
    })
}

/// Sample correlation of the mean-centered data.
pub fn pearson(pairs: &CenteredPairs) -> Result<CorrEstimate> {
    let (mx, my) = (mean(&pairs.x), mean(&pairs.y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in pairs.x.iter().zip(&pairs.y) {
        let (a, b) = (a - mx, b - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::degenerate("Pearson correlation undefined for a constant series"));
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let nonzero = pairs.x.iter().zip(&pairs.y).filter(|(a, b)| **a - mx != 0.0 && **b - my != 0.0).count();
    Ok(CorrEstimate {
        kind: EstimatorKind::Pearson,
        tau_hat: None,
        rho_hat: rho,
        n_used: pairs.len(),
        n_nonzero: nonzero,
        concordance: None,
    })
}

/// Quadrant estimator: mean of `sgn(x_i y_i)` on the pairs as given.
/// Use [`CenteredPairs::median_centered`] to recenter first.
pub fn quadrant_tau(pairs: &CenteredPairs) -> Result<CorrEstimate> {
    let (sum, nz) = sign_concordance(&pairs.x, &pairs.y);
    tau_estimate(EstimatorKind::Quadrant, sum, pairs.len(), nz, pairs.len() as f64)
}

/// Kendall's tau-a, `2 / (n (n - 1)) * sum_{i<j} sgn((x_i - x_j)(y_i - y_j))`,
/// in `O(n log n)` via Knight's merge-sort inversion count. Ties contribute 0.
pub fn kendall_tau(pairs: &CenteredPairs) -> Result<CorrEstimate> {
    let n = pairs.len();
    let (numerator, nonzero) = kendall_numerator(&pairs.x, &pairs.y);
    let total = n * (n - 1) / 2;
    tau_estimate(EstimatorKind::Kendall, numerator, total, nonzero, total as f64)
}

fn cmp(a: f64, b: f64) -> Ordering {
    // inputs are finite; partial_cmp also equates -0.0 and 0.0
    a.partial_cmp(&b).expect("finite inputs")
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Returns `(concordant - discordant, concordant + discordant)`.
pub(crate) fn kendall_numerator(x: &[f64], y: &[f64]) -> (i64, usize) {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| cmp(x[i], x[j]).then(cmp(y[i], y[j])));

    let all = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let mut x_ties = 0u64;
    let mut joint_ties = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let run = (j - i) as u64;
        x_ties += run * (run - 1) / 2;
        // within an x-tie group the y values are sorted; count y-ties inside it
        let mut k = i;
        while k < j {
            let mut m = k + 1;
            while m < j && y[order[m]] == y[order[k]] {
                m += 1;
            }
            let r = (m - k) as u64;
            joint_ties += r * (r - 1) / 2;
            k = m;
        }
        i = j;
    }

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let y_ties = tied_pairs(&ys);

    let untied = all - x_ties - y_ties + joint_ties;
    let numerator = untied as i64 - 2 * swaps as i64;
    (numerator, untied as usize)
}

/// Bottom-up merge sort returning the number of strict inversions.
fn merge_count(data: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = data.len();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            if mid < hi {
                let (mut l, mut r, mut out) = (lo, mid, lo);
                while l < mid && r < hi {
                    if cmp(data[r], data[l]) == Ordering::Less {
                        swaps += (mid - l) as u64;
                        buf[out] = data[r];
                        r += 1;
                    } else {
                        buf[out] = data[l];
                        l += 1;
                    }
                    out += 1;
                }
                buf[out..out + mid - l].copy_from_slice(&data[l..mid]);
                out += mid - l;
                buf[out..out + hi - r].copy_from_slice(&data[r..hi]);
                data[lo..hi].copy_from_slice(&buf[lo..hi]);
            }
            lo += 2 * width;
        }
        width *= 2;
    }
    swaps
}

/// Subsampled quadrant estimator over all `N - S + 1` overlapping span-`S`
/// returns. Zero products count in the denominator.
pub fn subsampled_quadrant(grid: &ReturnGrid) -> Result<CorrEstimate> {
    grid.validate()?;
    let (sum, nz) = sign_concordance(&grid.returns_x, &grid.returns_y);
    let n = grid.len();
    tau_estimate(EstimatorKind::SubsampledQuadrant, sum, n, nz, n as f64)
}

/// Zero-return aware variant: the denominator is `N1 - S + 1`, where `N1`
/// counts the non-zero products, floored at 1. The resulting `tau` is
/// clamped to `[-1, 1]`.
pub fn subsampled_quadrant_zero_aware(grid: &ReturnGrid) -> Result<CorrEstimate> {
    grid.validate()?;
    let (sum, nz) = sign_concordance(&grid.returns_x, &grid.returns_y);
    if nz == 0 {
        return Err(Error::degenerate("every return product is zero"));
    }
    if nz == grid.len() {
        return tau_estimate(EstimatorKind::SubsampledQuadrant, sum, grid.len(), nz, grid.len() as f64);
    }
    let denom = (nz as i64 - grid.span as i64 + 1).max(1);
    tau_estimate(EstimatorKind::SubsampledQuadrant, sum, grid.len(), nz, denom as f64)
}

/// P, K and Q_S at one sampling span, as used by the signature experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanEstimates {
    pub span: usize,
    pub pearson: f64,
    pub kendall: f64,
    pub qs: f64,
}

impl SpanEstimates {
    pub fn get(&self, kind: EstimatorKind) -> Option<f64> {
        match kind {
            EstimatorKind::Pearson => Some(self.pearson),
            EstimatorKind::Kendall => Some(self.kendall),
            EstimatorKind::SubsampledQuadrant => Some(self.qs),
            EstimatorKind::Quadrant => None,
        }
    }
}

/// P and K on the non-overlapping span-`S` returns starting at index 0,
/// and the zero-aware Q_S on all overlapping span-`S` returns.
pub fn estimate_at_span(px: &SampledPath, py: &SampledPath, span: usize) -> Result<SpanEstimates> {
    let rx = make_sparse_nonoverlapping(px, span, 0)?;
    let ry = make_sparse_nonoverlapping(py, span, 0)?;
    let pairs = CenteredPairs::new(rx, ry)?;
    Ok(SpanEstimates {
        span,
        pearson: pearson(&pairs)?.rho_hat,
        kendall: kendall_tau(&pairs)?.rho_hat,
        qs: subsampled_quadrant_zero_aware(&make_return_grid(px, py, span)?)?.rho_hat,
    })
}
