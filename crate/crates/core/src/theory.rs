//! Closed-form and quadrature-defined theoretical quantities.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{check_correlation, check_open_correlation, Error, Result};
use crate::estimators::EstimatorKind;
use crate::normal::{bivariate_cdf, norm_cdf};
use crate::quadrature::Integrator;

const TOL_1D: f64 = 1e-8;
const TOL_2D: f64 = 1e-6;

#[inline]
fn asin_sq(x: f64) -> f64 {
    let a = x.asin();
    a * a
}

/// `(1 - rho^2)^2`.
pub fn avar_pearson(rho: f64) -> Result<f64> {
    check_open_correlation("rho", rho)?;
    let c = 1.0 - rho * rho;
    Ok(c * c)
}

/// `(1 - rho^2) [(pi/3)^2 - 4 asin^2(rho/2)]`.
pub fn avar_kendall(rho: f64) -> Result<f64> {
    check_open_correlation("rho", rho)?;
    Ok((1.0 - rho * rho) * ((PI / 3.0).powi(2) - 4.0 * asin_sq(rho / 2.0)))
}

/// `(1 - rho^2) [(pi/2)^2 - asin^2(rho)]`.
pub fn avar_quadrant(rho: f64) -> Result<f64> {
    check_open_correlation("rho", rho)?;
    Ok((1.0 - rho * rho) * (asin_sq(1.0) - asin_sq(rho)))
}

/// Asymptotic variance of `sqrt(n) (Q_S - rho)` with `n` sparse returns:
/// `(1 - rho^2) / S * sum_{|s| < S} [asin^2(w_s) - asin^2(w_s rho)]`,
/// `w_s = (S - |s|) / S`. The `|s| = S` terms vanish.
pub fn avar_subsampled(rho: f64, span: usize) -> Result<f64> {
    check_open_correlation("rho", rho)?;
    if span == 0 {
        return Err(Error::input("span must be at least 1"));
    }
    let s_f = span as f64;
    let term = |s: usize| {
        let w = (span - s) as f64 / s_f;
        asin_sq(w) - asin_sq(w * rho)
    };
    let tail: f64 = (1..span).map(term).sum();
    let sum = term(0) + 2.0 * tail;
    Ok((1.0 - rho * rho) * (sum / s_f))
}

/// `lim_{S -> inf} V_S(rho) = 2 (1 - rho^2) [asin^2(1) - 2 sqrt(1 - rho^2) asin(rho) / rho - asin^2(rho)]`.
pub fn avar_subsampled_limit(rho: f64) -> Result<f64> {
    check_open_correlation("rho", rho)?;
    let r2 = rho * rho;
    let ratio = if rho.abs() < 1e-4 {
        1.0 - r2 / 3.0 - 2.0 * r2 * r2 / 15.0
    } else {
        (1.0 - r2).sqrt() * rho.asin() / rho
    };
    Ok((1.0 - r2) * 2.0 * (asin_sq(1.0) - 2.0 * ratio - asin_sq(rho)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymVarCurve {
    pub kind: EstimatorKind,
    pub rho_grid: Vec<f64>,
    pub variance: Vec<f64>,
    /// Subsample span; `Some` only for the subsampled quadrant estimator.
    pub span: Option<usize>,
}

pub fn avar_curve(kind: EstimatorKind, rho_grid: &[f64], span: Option<usize>) -> Result<AsymVarCurve> {
    let variance = rho_grid
        .iter()
        .map(|&rho| match kind {
            EstimatorKind::Pearson => avar_pearson(rho),
            EstimatorKind::Kendall => avar_kendall(rho),
            EstimatorKind::Quadrant => avar_quadrant(rho),
            EstimatorKind::SubsampledQuadrant => match span {
                Some(s) => avar_subsampled(rho, s),
                None => avar_subsampled_limit(rho),
            },
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymVarCurve {
        kind,
        rho_grid: rho_grid.to_vec(),
        variance,
        span: if kind == EstimatorKind::SubsampledQuadrant { span } else { None },
    })
}

/// `P(X > 0, Y > 0) = 1/4 + asin(rho) / (2 pi)`.
pub fn quadrant_prob(rho: f64) -> Result<f64> {
    check_correlation("rho", rho)?;
    Ok(0.25 + rho.asin() / (2.0 * PI))
}

/// Orthant probability `P(X > 0, Y > 0, X~ > 0, Y~ > 0)` for a normal vector
/// with `corr(X, Y) = corr(X~, Y~) = rho`, `corr(X, X~) = corr(Y, Y~) = omega`
/// and `corr(X, Y~) = corr(Y, X~) = omega rho` (Cheng's formula).
pub fn orthant_g(rho: f64, omega: f64) -> Result<f64> {
    check_correlation("rho", rho)?;
    check_correlation("omega", omega)?;
    let (a, b, c) = (rho.asin(), omega.asin(), (omega * rho).asin());
    Ok(1.0 / 16.0 + (a + b + c) / (4.0 * PI) + (a * a + b * b - c * c) / (4.0 * PI * PI))
}

/// `cov(1{XY > 0}, 1{X~ Y~ > 0}) = [asin^2(omega) - asin^2(omega rho)] / pi^2`
/// for the vector described in [`orthant_g`].
pub fn sign_product_cov(rho: f64, omega: f64) -> Result<f64> {
    check_correlation("rho", rho)?;
    check_correlation("omega", omega)?;
    Ok((asin_sq(omega) - asin_sq(omega * rho)) / (PI * PI))
}

/// Volatility paths on the unit interval, in per-day units.
#[derive(Clone)]
pub enum VolPathSpec {
    Functions {
        sigma_x: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        sigma_y: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// Piecewise constant on equal cells covering `[0, 1]`.
    Tabulated { sigma_x: Vec<f64>, sigma_y: Vec<f64> },
}

impl fmt::Debug for VolPathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolPathSpec::Functions { .. } => f.write_str("VolPathSpec::Functions"),
            VolPathSpec::Tabulated { sigma_x, .. } => write!(f, "VolPathSpec::Tabulated({} cells)", sigma_x.len()),
        }
    }
}

impl VolPathSpec {
    pub fn from_fns(
        sigma_x: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma_y: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        VolPathSpec::Functions { sigma_x: Arc::new(sigma_x), sigma_y: Arc::new(sigma_y) }
    }

    pub fn tabulated(sigma_x: Vec<f64>, sigma_y: Vec<f64>) -> Result<Self> {
        if sigma_x.len() != sigma_y.len() || sigma_x.is_empty() {
            return Err(Error::input("tabulated volatility paths must be non-empty and of equal length"));
        }
        if sigma_x.iter().chain(&sigma_y).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::input("volatilities must be strictly positive and finite"));
        }
        Ok(VolPathSpec::Tabulated { sigma_x, sigma_y })
    }

    /// Tabulated spec from per-step spot variances, averaged over `blocks`
    /// equal blocks (volatility = sqrt of the block-mean variance).
    pub fn from_spot_variances(var_x: &[f64], var_y: &[f64], blocks: usize) -> Result<Self> {
        if var_x.len() != var_y.len() || blocks == 0 || var_x.len() % blocks != 0 {
            return Err(Error::input(format!(
                "cannot split {} variance observations into {blocks} equal blocks",
                var_x.len()
            )));
        }
        let width = var_x.len() / blocks;
        let avg = |v: &[f64]| v.chunks(width).map(|c| (c.iter().sum::<f64>() / width as f64).sqrt()).collect();
        Self::tabulated(avg(var_x), avg(var_y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlimResult {
    pub lambda_factor: f64,
    pub pearson_plim: f64,
    pub kendall_plim: f64,
    pub qs_plim: f64,
}

// h(u, v) from the per-time products and squares; clamped against rounding above 1
#[inline]
fn collinearity(xu: f64, yu: f64, xv: f64, yv: f64) -> f64 {
    let h = (xu * yu + xv * yv) / ((xu * xu + xv * xv).sqrt() * (yu * yu + yv * yv).sqrt());
    h.min(1.0)
}

/// Probability limits of P, K and Q_S when both volatilities vary over the
/// day and the correlation is constant:
/// `P -> lambda rho`, `K -> sin(int int asin(h(u, v) rho))`, `Q_S -> rho`.
///
/// Tabulated specs are summed exactly over cells (`O(m^2)` for `m` cells);
/// function specs use adaptive quadrature.
pub fn plim_under_tv_vol(spec: &VolPathSpec, rho: f64) -> Result<PlimResult> {
    check_correlation("rho", rho)?;
    let (lambda, k_integral) = match spec {
        VolPathSpec::Tabulated { sigma_x, sigma_y } => {
            let m = sigma_x.len();
            let sxy: f64 = sigma_x.iter().zip(sigma_y).map(|(a, b)| a * b).sum();
            let sxx: f64 = sigma_x.iter().map(|a| a * a).sum();
            let syy: f64 = sigma_y.iter().map(|b| b * b).sum();
            let lambda = (sxy / (sxx * syy).sqrt()).min(1.0);
            let mut off = 0.0;
            for i in 0..m {
                let mut row = 0.0;
                for j in i + 1..m {
                    row += (collinearity(sigma_x[i], sigma_y[i], sigma_x[j], sigma_y[j]) * rho).asin();
                }
                off += row;
            }
            let diag = m as f64 * rho.asin();
            (lambda, (diag + 2.0 * off) / (m as f64 * m as f64))
        }
        VolPathSpec::Functions { sigma_x, sigma_y } => {
            let bad = std::cell::Cell::new(None);
            let check = |name: &'static str, u: f64, v: f64| {
                if !(v.is_finite() && v > 0.0) && bad.get().is_none() {
                    bad.set(Some((name, u, v)));
                }
                v
            };
            let fx = |u: f64| check("sigma_x", u, sigma_x(u));
            let fy = |u: f64| check("sigma_y", u, sigma_y(u));
            let q = Integrator::new(TOL_1D);
            let sxy = q.integrate(|u| fx(u) * fy(u), 0.0, 1.0)?.value;
            let sxx = q.integrate(|u| fx(u).powi(2), 0.0, 1.0)?.value;
            let syy = q.integrate(|u| fy(u).powi(2), 0.0, 1.0)?.value;
            if let Some((name, u, v)) = bad.get() {
                return Err(Error::input(format!("{name}({u}) = {v} is not strictly positive")));
            }
            let lambda = (sxy / (sxx * syy).sqrt()).min(1.0);
            let k = if rho == 0.0 {
                0.0
            } else {
                Integrator::new(TOL_2D)
                    .integrate_2d(
                        |u, v| (collinearity(sigma_x(u), sigma_y(u), sigma_x(v), sigma_y(v)) * rho).asin(),
                        (0.0, 1.0),
                        (0.0, 1.0),
                    )?
                    .value
            };
            (lambda, k)
        }
    };
    Ok(PlimResult {
        lambda_factor: lambda,
        pearson_plim: lambda * rho,
        kendall_plim: k_integral.clamp(-FRAC_PI_2, FRAC_PI_2).sin(),
        qs_plim: rho,
    })
}

/// Volatility designs for the bias curves, built from `g(u) = 1/5 + 4u/5`
/// and `h(u) = (6/5 + cos(2 pi u)) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasDesign {
    /// `sigma_x = g`, `sigma_y = h`.
    LowCollinearity,
    /// `sigma_x = 3g/10 + 6h/10`, `sigma_y = h`.
    HighCollinearity,
}

impl BiasDesign {
    pub const ALL: [BiasDesign; 2] = [BiasDesign::LowCollinearity, BiasDesign::HighCollinearity];

    pub fn label(self) -> &'static str {
        match self {
            BiasDesign::LowCollinearity => "low_collinearity",
            BiasDesign::HighCollinearity => "high_collinearity",
        }
    }

    pub fn sigma_x(self, u: f64) -> f64 {
        let g = 0.2 + 0.8 * u;
        match self {
            BiasDesign::LowCollinearity => g,
            BiasDesign::HighCollinearity => 0.3 * g + 0.6 * self.sigma_y(u),
        }
    }

    pub fn sigma_y(self, u: f64) -> f64 {
        0.5 * (1.2 + (2.0 * PI * u).cos())
    }

    pub fn vol_spec(self) -> VolPathSpec {
        VolPathSpec::from_fns(move |u| self.sigma_x(u), move |u| self.sigma_y(u))
    }
}

/// Limit of `Q_S` under a deterministic correlation path and constant
/// volatilities: `sin(int_0^1 asin(rho(u)) du)`.
pub fn plim_qs_tv_corr(rho_path: impl Fn(f64) -> f64) -> Result<f64> {
    let bad = std::cell::Cell::new(None);
    let integral = Integrator::new(TOL_1D).integrate(
        |u| {
            let r = rho_path(u);
            if !(r.is_finite() && r.abs() <= 1.0) {
                bad.set(Some((u, r)));
                return 0.0;
            }
            r.asin()
        },
        0.0,
        1.0,
    )?;
    if let Some((u, r)) = bad.get() {
        return Err(Error::input(format!("rho({u}) = {r} lies outside [-1, 1]")));
    }
    Ok(integral.value.sin())
}

/// Argument scaling used for the sparse Quadrant influence function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadrantIfScaling {
    /// `x0 / sqrt(S - 1)`: the remaining `S - 1` uncontaminated returns.
    #[default]
    SqrtSMinus1,
    /// `x0 / sqrt(2S - 1)`, the form printed alongside the Kendall result.
    Sqrt2SMinus1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceValue {
    pub kind: EstimatorKind,
    pub point: (f64, f64),
    pub rho: f64,
    pub span: usize,
    pub value: f64,
}

/// Probability that two independent draws from the standard bivariate normal
/// are concordant, equivalently `P(XY > 0)`: `1/2 + asin(rho) / pi`.
pub fn concordance_prob(rho: f64) -> Result<f64> {
    check_correlation("rho", rho)?;
    Ok(0.5 + rho.asin() / PI)
}

// P((a + Z)(b + W) > 0) for (Z, W) standard bivariate normal
fn same_sign_prob(a: f64, b: f64, rho: f64) -> f64 {
    2.0 * bivariate_cdf(a, b, rho) + 1.0 - norm_cdf(a) - norm_cdf(b)
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Influence function at the standard bivariate normal with correlation
/// `rho`, for estimators applied to span-`S` aggregated returns.
pub fn influence(kind: EstimatorKind, point: (f64, f64), rho: f64, span: usize) -> Result<InfluenceValue> {
    influence_with_scaling(kind, point, rho, span, QuadrantIfScaling::default())
}

pub fn influence_with_scaling(
    kind: EstimatorKind,
    point: (f64, f64),
    rho: f64,
    span: usize,
    scaling: QuadrantIfScaling,
) -> Result<InfluenceValue> {
    check_open_correlation("rho", rho)?;
    if span == 0 {
        return Err(Error::input("span must be at least 1"));
    }
    let (x0, y0) = point;
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(Error::input("contamination point must be finite"));
    }
    let root = (1.0 - rho * rho).sqrt();
    let q = concordance_prob(rho)?;
    let s = span as f64;
    let value = match kind {
        EstimatorKind::Pearson => x0 * y0 - 0.5 * (x0 * x0 + y0 * y0) * rho,
        EstimatorKind::Kendall => {
            let c = (2.0 * s - 1.0).sqrt();
            2.0 * PI * root * s * (same_sign_prob(x0 / c, y0 / c, rho) - q)
        }
        EstimatorKind::Quadrant | EstimatorKind::SubsampledQuadrant if span == 1 => {
            let tau = 2.0 * rho.asin() / PI;
            FRAC_PI_2 * root * (sgn(x0 * y0) - tau)
        }
        EstimatorKind::Quadrant => {
            return Err(Error::input("the plain Quadrant estimator has span 1; use SubsampledQuadrant"));
        }
        EstimatorKind::SubsampledQuadrant => {
            let c = match scaling {
                QuadrantIfScaling::SqrtSMinus1 => (s - 1.0).sqrt(),
                QuadrantIfScaling::Sqrt2SMinus1 => (2.0 * s - 1.0).sqrt(),
            };
            PI * root * s * (same_sign_prob(x0 / c, y0 / c, rho) - q)
        }
    };
    Ok(InfluenceValue { kind, point, rho, span, value })
}
