//! Bivariate Heston paths and microstructure noise layers.
//!
//! Time is measured in trading days: a path has `n_steps` increments of
//! length `1 / n_steps`, and drifts and variances are per day.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_correlation, check_probability, Error, Result};
use crate::rng::{rng_from_seed, substream_seed, SimRng};
use crate::sampling::SampledPath;

pub const DEFAULT_STEPS: usize = 23_400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetHeston {
    pub mu: f64,
    pub sigma_bar_sq: f64,
    pub kappa: f64,
    pub s_volvol: f64,
    /// Correlation between the asset's return and variance shocks.
    pub varrho: f64,
}

impl AssetHeston {
    fn validate(&self, name: &str) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma_bar_sq > 0.0 && self.kappa > 0.0 && self.s_volvol >= 0.0) {
            return Err(Error::input(format!(
                "{name}: need finite mu, sigma_bar_sq > 0, kappa > 0, s_volvol >= 0 (got {self:?})"
            )));
        }
        if !(self.sigma_bar_sq.is_finite() && self.kappa.is_finite() && self.s_volvol.is_finite()) {
            return Err(Error::input(format!("{name}: parameters must be finite")));
        }
        check_correlation(&format!("{name}.varrho"), self.varrho)
    }
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_x0() -> f64 {
    100f64.ln()
}

fn default_y0() -> f64 {
    40f64.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HestonSpec {
    pub x: AssetHeston,
    pub y: AssetHeston,
    pub rho: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_y0")]
    pub y0: f64,
}

impl HestonSpec {
    /// The two-asset calibration used throughout the simulation study.
    pub fn table1(rho: f64) -> Self {
        HestonSpec {
            x: AssetHeston { mu: 0.05, sigma_bar_sq: 0.16, kappa: 3.0, s_volvol: 0.8, varrho: -0.60 },
            y: AssetHeston { mu: 0.03, sigma_bar_sq: 0.09, kappa: 2.0, s_volvol: 0.5, varrho: -0.75 },
            rho,
            n_steps: DEFAULT_STEPS,
            x0: default_x0(),
            y0: default_y0(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.x.validate("x")?;
        self.y.validate("y")?;
        check_correlation("rho", self.rho)?;
        if self.n_steps == 0 {
            return Err(Error::input("n_steps must be positive"));
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(Error::input("initial log prices must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub latent_x: SampledPath,
    pub latent_y: SampledPath,
    pub observed_x: SampledPath,
    pub observed_y: SampledPath,
    /// Variance in force over each step (`n_steps` values).
    pub spot_var_x: Vec<f64>,
    pub spot_var_y: Vec<f64>,
    pub seed: u64,
}

impl SimPath {
    pub fn n(&self) -> usize {
        self.latent_x.n()
    }

    fn from_latent(x: Vec<f64>, y: Vec<f64>, spot_var_x: Vec<f64>, spot_var_y: Vec<f64>, seed: u64) -> Result<Self> {
        let latent_x = SampledPath::from_values(x)?;
        let latent_y = SampledPath::from_values(y)?;
        Ok(SimPath {
            observed_x: latent_x.clone(),
            observed_y: latent_y.clone(),
            latent_x,
            latent_y,
            spot_var_x,
            spot_var_y,
            seed,
        })
    }

    fn observed_mut(&mut self) -> [&mut [f64]; 2] {
        [self.observed_x.values_mut(), self.observed_y.values_mut()]
    }
}

fn initial_variance(asset: &AssetHeston, rng: &mut SimRng) -> Result<f64> {
    if asset.s_volvol == 0.0 {
        return Ok(asset.sigma_bar_sq);
    }
    let s2 = asset.s_volvol * asset.s_volvol;
    let gamma = Gamma::new(2.0 * asset.kappa * asset.sigma_bar_sq / s2, s2 / (2.0 * asset.kappa))
        .map_err(|e| Error::input(format!("initial variance distribution: {e}")))?;
    Ok(gamma.sample(rng))
}

/// Full-truncation Euler scheme for two Heston assets. Return shocks have
/// correlation `rho`; each variance shock has correlation `varrho` with its
/// own asset's return shock.
pub fn simulate_heston(spec: &HestonSpec, seed: u64) -> Result<SimPath> {
    spec.validate()?;
    let n = spec.n_steps;
    let dt = 1.0 / n as f64;
    let mut rng = rng_from_seed(substream_seed(seed, 0));
    let mut vx = initial_variance(&spec.x, &mut rng)?;
    let mut vy = initial_variance(&spec.y, &mut rng)?;

    let rho_c = (1.0 - spec.rho * spec.rho).sqrt();
    let lev_x = (1.0 - spec.x.varrho * spec.x.varrho).sqrt();
    let lev_y = (1.0 - spec.y.varrho * spec.y.varrho).sqrt();

    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut var_x = Vec::with_capacity(n);
    let mut var_y = Vec::with_capacity(n);
    let (mut x, mut y) = (spec.x0, spec.y0);
    xs.push(x);
    ys.push(y);
    for _ in 0..n {
        let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let dw_x = z[0];
        let dw_y = spec.rho * z[0] + rho_c * z[1];
        let db_x = spec.x.varrho * dw_x + lev_x * z[2];
        let db_y = spec.y.varrho * dw_y + lev_y * z[3];

        let (px, py) = (vx.max(0.0), vy.max(0.0));
        var_x.push(px);
        var_y.push(py);
        x += spec.x.mu * dt + (px * dt).sqrt() * dw_x;
        y += spec.y.mu * dt + (py * dt).sqrt() * dw_y;
        vx += spec.x.kappa * (spec.x.sigma_bar_sq - px) * dt + spec.x.s_volvol * (px * dt).sqrt() * db_x;
        vy += spec.y.kappa * (spec.y.sigma_bar_sq - py) * dt + spec.y.s_volvol * (py * dt).sqrt() * db_y;
        xs.push(x);
        ys.push(y);
    }
    SimPath::from_latent(xs, ys, var_x, var_y, seed)
}

/// Driftless bivariate diffusion with per-step variances and correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct TvDiffusionSpec {
    pub var_x: Vec<f64>,
    pub var_y: Vec<f64>,
    pub rho: Vec<f64>,
    pub x0: f64,
    pub y0: f64,
}

impl TvDiffusionSpec {
    /// Evaluates volatility and correlation paths at step midpoints.
    pub fn from_fns(
        n_steps: usize,
        sigma_x: impl Fn(f64) -> f64,
        sigma_y: impl Fn(f64) -> f64,
        rho: impl Fn(f64) -> f64,
    ) -> Self {
        let mid = |k: usize| (k as f64 + 0.5) / n_steps as f64;
        TvDiffusionSpec {
            var_x: (0..n_steps).map(|k| sigma_x(mid(k)).powi(2)).collect(),
            var_y: (0..n_steps).map(|k| sigma_y(mid(k)).powi(2)).collect(),
            rho: (0..n_steps).map(|k| rho(mid(k))).collect(),
            x0: 0.0,
            y0: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.var_x.len();
        if n == 0 || self.var_y.len() != n || self.rho.len() != n {
            return Err(Error::input("variance and correlation paths must be non-empty and of equal length"));
        }
        if self.var_x.iter().chain(&self.var_y).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input("variances must be finite and non-negative"));
        }
        self.rho.iter().try_for_each(|&r| check_correlation("rho", r))
    }
}

pub fn simulate_tv_diffusion(spec: &TvDiffusionSpec, seed: u64) -> Result<SimPath> {
    spec.validate()?;
    let n = spec.var_x.len();
    let dt = 1.0 / n as f64;
    let mut rng = rng_from_seed(substream_seed(seed, 0));
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let (mut x, mut y) = (spec.x0, spec.y0);
    xs.push(x);
    ys.push(y);
    for k in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let r = spec.rho[k];
        x += (spec.var_x[k] * dt).sqrt() * z1;
        y += (spec.var_y[k] * dt).sqrt() * (r * z1 + (1.0 - r * r).sqrt() * z2);
        xs.push(x);
        ys.push(y);
    }
    SimPath::from_latent(xs, ys, spec.var_x.clone(), spec.var_y.clone(), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpMode {
    Independent,
    CoJump,
}

/// Grid coarseness, either in log-price units or as a multiple of the
/// path's average volatility `sqrt(mean spot variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TickSize {
    Absolute(f64),
    Proportional(f64),
}

impl TickSize {
    fn from_fields(alpha: Option<f64>, proportional_c: Option<f64>) -> Result<Option<Self>> {
        match (alpha, proportional_c) {
            (Some(_), Some(_)) => Err(Error::input("give either alpha or proportional_c, not both")),
            (Some(a), None) => Ok(Some(TickSize::Absolute(a))),
            (None, Some(c)) => Ok(Some(TickSize::Proportional(c))),
            (None, None) => Ok(None),
        }
    }

    /// Per-asset tick sizes for this path.
    pub fn resolve(self, path: &SimPath) -> Result<[f64; 2]> {
        let alphas = match self {
            TickSize::Absolute(a) => [a, a],
            TickSize::Proportional(c) => {
                let vol = |v: &[f64]| (v.iter().sum::<f64>() / v.len() as f64).sqrt();
                [c * vol(&path.spot_var_x), c * vol(&path.spot_var_y)]
            }
        };
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::input(format!("tick size must be positive, got {alphas:?}")));
        }
        Ok(alphas)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseLayer {
    IndependentNoise {
        xi_sq: f64,
    },
    GridRounding {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        proportional_c: Option<f64>,
    },
    /// Without `alpha`/`proportional_c` the tick of the preceding rounding layer is reused.
    GridNoise {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        proportional_c: Option<f64>,
        p: f64,
    },
    StalePrices {
        q_x: f64,
        q_y: f64,
    },
    Jumps {
        intensity_x: f64,
        intensity_y: f64,
        mode: JumpMode,
    },
}

/// Adds iid `N(0, omega^2)` noise to every observation, with
/// `omega^2 = xi_sq * sqrt(mean(sigma^4))` computed per asset.
pub fn apply_independent_noise(mut path: SimPath, xi_sq: f64, seed: u64) -> Result<SimPath> {
    if !(xi_sq.is_finite() && xi_sq >= 0.0) {
        return Err(Error::input(format!("xi_sq must be non-negative, got {xi_sq}")));
    }
    if xi_sq == 0.0 {
        return Ok(path);
    }
    let omega = |v: &[f64]| (xi_sq * (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt()).sqrt();
    let omegas = [omega(&path.spot_var_x), omega(&path.spot_var_y)];
    let mut rng = rng_from_seed(seed);
    for (values, w) in path.observed_mut().into_iter().zip(omegas) {
        for v in values.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += w * z;
        }
    }
    Ok(path)
}

// alpha * floor(x / alpha), snapping values that sit on the grid up to rounding
fn floor_to_grid(x: f64, alpha: f64) -> f64 {
    let r = x / alpha;
    let nearest = r.round();
    let k = if (r - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) { nearest } else { r.floor() };
    k * alpha
}

pub fn apply_grid_rounding(mut path: SimPath, tick: TickSize) -> Result<SimPath> {
    let alphas = tick.resolve(&path)?;
    for (values, alpha) in path.observed_mut().into_iter().zip(alphas) {
        values.iter_mut().for_each(|v| *v = floor_to_grid(*v, alpha));
    }
    Ok(path)
}

/// Displaces each observation by `+alpha` or `-alpha`, each with probability `p / 2`.
pub fn apply_grid_noise(mut path: SimPath, tick: TickSize, p: f64, seed: u64) -> Result<SimPath> {
    check_probability("p", p)?;
    let alphas = tick.resolve(&path)?;
    if p == 0.0 {
        return Ok(path);
    }
    let mut rng = rng_from_seed(seed);
    for (values, alpha) in path.observed_mut().into_iter().zip(alphas) {
        for v in values.iter_mut() {
            let u: f64 = rng.random();
            if u < p / 2.0 {
                *v += alpha;
            } else if u < p {
                *v -= alpha;
            }
        }
    }
    Ok(path)
}

/// Each observation after the first repeats the previous observed value
/// with probability `q` (per asset, independently).
pub fn apply_stale_prices(mut path: SimPath, q_x: f64, q_y: f64, seed: u64) -> Result<SimPath> {
    check_probability("q_x", q_x)?;
    check_probability("q_y", q_y)?;
    let mut rng = rng_from_seed(seed);
    for (values, q) in path.observed_mut().into_iter().zip([q_x, q_y]) {
        for j in 1..values.len() {
            if rng.random::<f64>() < q {
                values[j] = values[j - 1];
            }
        }
    }
    Ok(path)
}

fn draw_jumps(intensity: f64, n: usize, rng: &mut SimRng) -> Result<Vec<(usize, f64)>> {
    if intensity == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(intensity).map_err(|e| Error::input(format!("jump intensity: {e}")))?.sample(rng) as usize;
    let unit = 1.0 / (2.0 * intensity).sqrt();
    Ok((0..count)
        .map(|_| {
            let step = rng.random_range(1..=n);
            let size = rng.random_range(1.0..=2.0) * unit;
            (step, if rng.random::<bool>() { size } else { -size })
        })
        .collect())
}

fn add_jumps(values: &mut [f64], jumps: &[(usize, f64)]) {
    for &(step, size) in jumps {
        values[step..].iter_mut().for_each(|v| *v += size);
    }
}

/// Adds compound Poisson jumps (intensities per day). A jump at step `k`
/// shifts observations `k..=n`; sizes are uniform in magnitude on
/// `[1, 2] / sqrt(2 intensity)` with a random sign. In co-jump mode both
/// assets receive the same jump series, driven by `intensity_x`.
pub fn apply_jumps(mut path: SimPath, intensity_x: f64, intensity_y: f64, mode: JumpMode, seed: u64) -> Result<SimPath> {
    for (name, v) in [("intensity_x", intensity_x), ("intensity_y", intensity_y)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::input(format!("{name} must be non-negative, got {v}")));
        }
    }
    if mode == JumpMode::CoJump && intensity_x != intensity_y {
        return Err(Error::input("co-jumps need equal intensities"));
    }
    let n = path.n();
    let mut rng = rng_from_seed(seed);
    let jx = draw_jumps(intensity_x, n, &mut rng)?;
    let jy = match mode {
        JumpMode::Independent => draw_jumps(intensity_y, n, &mut rng)?,
        JumpMode::CoJump => jx.clone(),
    };
    add_jumps(path.observed_x.values_mut(), &jx);
    add_jumps(path.observed_y.values_mut(), &jy);
    Ok(path)
}

/// Applies `layers` in order; layer `k` draws from its own stream of `path.seed`.
pub fn apply_noise_stack(mut path: SimPath, layers: &[NoiseLayer]) -> Result<SimPath> {
    let mut last_tick = None;
    for (k, layer) in layers.iter().enumerate() {
        let seed = substream_seed(path.seed, k as u64 + 1);
        path = match *layer {
            NoiseLayer::IndependentNoise { xi_sq } => apply_independent_noise(path, xi_sq, seed)?,
            NoiseLayer::GridRounding { alpha, proportional_c } => {
                let tick = TickSize::from_fields(alpha, proportional_c)?
                    .ok_or_else(|| Error::input("grid_rounding needs alpha or proportional_c"))?;
                last_tick = Some(tick);
                apply_grid_rounding(path, tick)?
            }
            NoiseLayer::GridNoise { alpha, proportional_c, p } => {
                let tick = TickSize::from_fields(alpha, proportional_c)?
                    .or(last_tick)
                    .ok_or_else(|| Error::input("grid_noise needs a tick size or a preceding grid_rounding layer"))?;
                apply_grid_noise(path, tick, p, seed)?
            }
            NoiseLayer::StalePrices { q_x, q_y } => apply_stale_prices(path, q_x, q_y, seed)?,
            NoiseLayer::Jumps { intensity_x, intensity_y, mode } => {
                apply_jumps(path, intensity_x, intensity_y, mode, seed)?
            }
        };
    }
    Ok(path)
}

/// Simulates a Heston path and applies the noise stack.
pub fn simulate_scenario(spec: &HestonSpec, layers: &[NoiseLayer], seed: u64) -> Result<SimPath> {
    apply_noise_stack(simulate_heston(spec, seed)?, layers)
}
