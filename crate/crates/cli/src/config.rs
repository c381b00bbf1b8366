//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use quadcorr::intraday::RollingConfig;
use quadcorr::sampling::DEFAULT_DAY_SECONDS;
use quadcorr::simulator::{AssetHeston, HestonSpec, JumpMode, NoiseLayer};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AvarCurves,
    TvBiasCurves,
    McSignature,
    JumpStudy,
    IntradayAverage,
    SummaryStats,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AvarCurves => "avar_curves",
            ExperimentKind::TvBiasCurves => "tv_bias_curves",
            ExperimentKind::McSignature => "mc_signature",
            ExperimentKind::JumpStudy => "jump_study",
            ExperimentKind::IntradayAverage => "intraday_average",
            ExperimentKind::SummaryStats => "summary_stats",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the subcommand.
    pub experiment: Option<ExperimentKind>,
    pub base_seed: u64,
    pub replications: usize,
    pub rho_values: Vec<f64>,
    /// Sampling intervals in seconds.
    pub delta_grid: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    pub scenario: ScenarioConfig,
    pub avar: AvarConfig,
    pub tvbias: TvBiasConfig,
    pub jumps: JumpStudyConfig,
    pub intraday: IntradayConfig,
    pub stats: StatsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            base_seed: 1,
            replications: 500,
            rho_values: vec![0.25, 2.0 / 3.0],
            delta_grid: vec![1, 5, 15, 30, 60, 180, 300, 600, 900],
            output_dir: None,
            scenario: ScenarioConfig::default(),
            avar: AvarConfig::default(),
            tvbias: TvBiasConfig::default(),
            jumps: JumpStudyConfig::default(),
            intraday: IntradayConfig::default(),
            stats: StatsConfig::default(),
        }
    }
}

/// Heston parameters (defaulting to the two-asset calibration) and the
/// ordered noise stack applied to the observed prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub x: AssetHeston,
    pub y: AssetHeston,
    pub n_steps: usize,
    pub x0: f64,
    pub y0: f64,
    pub noise: Vec<NoiseLayer>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let t = HestonSpec::table1(0.0);
        ScenarioConfig { x: t.x, y: t.y, n_steps: t.n_steps, x0: t.x0, y0: t.y0, noise: Vec::new() }
    }
}

impl ScenarioConfig {
    pub fn heston(&self, rho: f64) -> HestonSpec {
        HestonSpec { x: self.x, y: self.y, rho, n_steps: self.n_steps, x0: self.x0, y0: self.y0 }
    }

    pub fn base_step_seconds(&self) -> f64 {
        DEFAULT_DAY_SECONDS / self.n_steps as f64
    }

    /// Base steps per sampling interval.
    pub fn span_for(&self, delta_seconds: u64) -> Result<usize> {
        let steps = delta_seconds as f64 / self.base_step_seconds();
        let span = steps.round() as usize;
        if span == 0 || (steps - steps.round()).abs() > 1e-9 || self.n_steps % span != 0 {
            return Err(CliError::Config(format!(
                "delta {delta_seconds}s must be a whole number of {}s base steps dividing the day",
                self.base_step_seconds()
            )));
        }
        Ok(span)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvarConfig {
    pub spans: Vec<usize>,
    pub rho_step: f64,
    pub rho_max: f64,
}

impl Default for AvarConfig {
    fn default() -> Self {
        AvarConfig { spans: vec![1, 2, 5, 10, 60], rho_step: 0.01, rho_max: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvBiasConfig {
    pub rho_step: f64,
    pub rho_max: f64,
}

impl Default for TvBiasConfig {
    fn default() -> Self {
        TvBiasConfig { rho_step: 0.01, rho_max: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpStudyConfig {
    /// Expected jumps per day, per asset.
    pub intensity: f64,
    pub modes: Vec<JumpMode>,
}

impl Default for JumpStudyConfig {
    fn default() -> Self {
        JumpStudyConfig { intensity: 1.0, modes: vec![JumpMode::Independent, JumpMode::CoJump] }
    }
}

/// An asset whose correlation with the market and relative volatility move
/// linearly from open to close.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampAsset {
    pub name: String,
    pub rho_start: f64,
    pub rho_end: f64,
    pub lambda_start: f64,
    pub lambda_end: f64,
}

impl RampAsset {
    pub fn rho_at(&self, u: f64) -> f64 {
        self.rho_start + (self.rho_end - self.rho_start) * u
    }

    pub fn lambda_at(&self, u: f64) -> f64 {
        self.lambda_start + (self.lambda_end - self.lambda_start) * u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntradayConfig {
    pub days: usize,
    pub rolling: RollingConfig,
    pub assets: Vec<RampAsset>,
}

impl Default for IntradayConfig {
    fn default() -> Self {
        IntradayConfig {
            days: 200,
            rolling: RollingConfig::default(),
            assets: vec![RampAsset {
                name: "RAMP".into(),
                rho_start: 0.05,
                rho_end: 0.25,
                lambda_start: 1.5,
                lambda_end: 1.0,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    /// Directory holding one sub-directory of `timestamp_ns,price` day files per asset.
    pub tick_dir: Option<PathBuf>,
    pub deltas: Vec<u64>,
    pub day_length_seconds: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { tick_dir: None, deltas: vec![1, 180], day_length_seconds: DEFAULT_DAY_SECONDS }
    }
}

pub const MARKET_NAME: &str = "MARKET";

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(declared) = self.experiment {
            if declared != kind {
                return bad(format!("config declares experiment `{}` but `{}` was requested", declared.name(), kind.name()));
            }
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if let Some(r) = self.rho_values.iter().find(|r| !(r.abs() < 1.0)) {
            return bad(format!("rho values must lie in (-1, 1), got {r}"));
        }
        self.scenario.heston(0.0).validate()?;
        match kind {
            ExperimentKind::McSignature | ExperimentKind::JumpStudy => {
                if self.rho_values.is_empty() || self.delta_grid.is_empty() {
                    return bad("rho_values and delta_grid must be non-empty".into());
                }
                for &d in &self.delta_grid {
                    self.scenario.span_for(d)?;
                }
                if kind == ExperimentKind::JumpStudy && self.jumps.modes.is_empty() {
                    return bad("jumps.modes must be non-empty".into());
                }
            }
            ExperimentKind::AvarCurves => {
                if self.avar.spans.contains(&0) {
                    return bad("avar spans must be positive".into());
                }
                check_grid(self.avar.rho_step, self.avar.rho_max)?;
            }
            ExperimentKind::TvBiasCurves => check_grid(self.tvbias.rho_step, self.tvbias.rho_max)?,
            ExperimentKind::IntradayAverage => {
                let c = &self.intraday;
                if c.days < 2 {
                    return bad("intraday.days must be at least 2".into());
                }
                if c.rolling.n != self.scenario.n_steps {
                    return bad(format!("intraday.rolling.n ({}) must equal scenario.n_steps ({})", c.rolling.n, self.scenario.n_steps));
                }
                if !self.scenario.noise.is_empty() {
                    return bad("intraday_average simulates noise-free days; remove scenario.noise".into());
                }
                c.rolling.validate()?;
                for a in &c.assets {
                    if a.name == MARKET_NAME || a.name.is_empty() || a.name.contains(['/', '\\', ',']) {
                        return bad(format!("invalid asset name `{}`", a.name));
                    }
                    for r in [a.rho_start, a.rho_end] {
                        if !(r.abs() < 1.0) {
                            return bad(format!("{}: correlation {r} outside (-1, 1)", a.name));
                        }
                    }
                    for l in [a.lambda_start, a.lambda_end] {
                        if !(l > 0.0 && l.is_finite()) {
                            return bad(format!("{}: relative volatility {l} must be positive", a.name));
                        }
                    }
                }
            }
            ExperimentKind::SummaryStats => {
                if self.stats.tick_dir.is_none() {
                    return bad("stats.tick_dir is required".into());
                }
                if self.stats.deltas.is_empty() {
                    return bad("stats.deltas must be non-empty".into());
                }
            }
        }
        Ok(())
    }
}

fn check_grid(step: f64, max: f64) -> Result<()> {
    if !(step > 0.0 && max > 0.0 && max < 1.0) {
        return Err(CliError::Config(format!("rho grid needs step > 0 and 0 < rho_max < 1 (step {step}, max {max})")));
    }
    Ok(())
}

/// Symmetric grid `-max, ..., 0, ..., max` of integer multiples of `step`,
/// rounded to 12 decimals so that e.g. `0.3` prints as `0.3`.
pub fn rho_grid(step: f64, max: f64) -> Vec<f64> {
    let k = (max / step + 1e-9).floor() as i64;
    (-k..=k).map(|i| (i as f64 * step * 1e12).round() / 1e12).collect()
}
