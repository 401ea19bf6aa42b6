//! Pipeline configuration file.
//!
//! TOML with the unit in every numeric key name. Paths are resolved against
//! the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cogradar::bandselect::{SelectionConstraints, SelectionMethod};
use cogradar::montecarlo::{MIN_OVERSAMPLE, MIN_TRIALS};
use cogradar::waveform::PowerAllocation;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub radar: RadarConfig,
    pub selection: SelectionConfig,
    #[serde(default)]
    pub allocation: AllocationConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub mc: McSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub b_h_hz: f64,
    pub p_watts: f64,
    pub n0_w_per_hz: f64,
    pub t_s_sec: f64,
    /// Defaults to `t_s_sec / 8`.
    pub pulse_width_sec: Option<f64>,
    /// Defaults to `4 * b_h_hz`.
    pub sample_rate_hz: Option<f64>,
    /// Exponent `k` of the reference spectrum `|H|² ∝ (1 - 2f/B_h)^k`.
    #[serde(default)]
    pub taper_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub rem_path: PathBuf,
    pub n_bands: usize,
    pub width_bins: Option<usize>,
    pub widths_bins: Option<Vec<usize>>,
    #[serde(default)]
    pub min_separation_bins: usize,
    #[serde(default = "default_method")]
    pub method: SelectionMethod,
}

fn default_method() -> SelectionMethod {
    SelectionMethod::Greedy
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationConfig {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub weights: Vec<f64>,
}

fn default_scheme() -> String {
    "equal_beta".into()
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self { scheme: default_scheme(), weights: Vec::new() }
    }
}

impl AllocationConfig {
    pub fn to_allocation(&self) -> CliResult<PowerAllocation> {
        parse_allocation(&self.scheme, &self.weights)
    }
}

pub fn parse_allocation(scheme: &str, weights: &[f64]) -> CliResult<PowerAllocation> {
    match scheme {
        "equal_beta" => Ok(PowerAllocation::EqualBeta),
        "equal_power" => Ok(PowerAllocation::EqualPower),
        "proportional" => {
            if weights.is_empty() {
                return Err(CliError::Config("proportional allocation needs weights".into()));
            }
            Ok(PowerAllocation::Proportional(weights.to_vec()))
        }
        other => Err(CliError::Config(format!(
            "unknown allocation scheme `{other}` (equal_beta, equal_power, proportional)"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub snr_db_lo: f64,
    pub snr_db_hi: f64,
    pub points: usize,
    pub pulses: u32,
    pub threshold_ratio: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { snr_db_lo: -20.0, snr_db_hi: 40.0, points: 61, pulses: 1, threshold_ratio: 1.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub n_trials: usize,
    pub snr_db_lo: f64,
    pub snr_db_hi: f64,
    pub points: usize,
    pub oversample: usize,
    pub interpolate_peak: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { n_trials: 500, snr_db_lo: -10.0, snr_db_hi: 30.0, points: 11, oversample: 8, interpolate_peak: true }
    }
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

fn integral(name: &str, x: f64) -> CliResult<usize> {
    let r = x.round();
    if r >= 1.0 && (x - r).abs() <= 1e-9 * r {
        Ok(r as usize)
    } else {
        Err(CliError::Config(format!("{name} must be a positive integer, got {x}")))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.selection.rem_path.is_relative() {
            cfg.selection.rem_path = base.join(&cfg.selection.rem_path);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn pulse_width(&self) -> f64 {
        self.radar.pulse_width_sec.unwrap_or(self.radar.t_s_sec / 8.0)
    }

    pub fn sample_rate(&self) -> f64 {
        self.radar.sample_rate_hz.unwrap_or(4.0 * self.radar.b_h_hz)
    }

    pub fn constraints(&self) -> CliResult<SelectionConstraints> {
        let s = &self.selection;
        match (&s.width_bins, &s.widths_bins) {
            (Some(d), None) => Ok(SelectionConstraints::equal(s.n_bands, *d, s.min_separation_bins)),
            (None, Some(ds)) => {
                if ds.len() != s.n_bands {
                    return Err(CliError::Config(format!("{} widths for {} bands", ds.len(), s.n_bands)));
                }
                Ok(SelectionConstraints::list(ds.clone(), s.min_separation_bins))
            }
            _ => Err(CliError::Config("give exactly one of width_bins and widths_bins".into())),
        }
    }

    /// Checks every numeric field before any work starts.
    pub fn validate(&self) -> CliResult<()> {
        let r = &self.radar;
        positive("b_h_hz", r.b_h_hz)?;
        positive("p_watts", r.p_watts)?;
        positive("n0_w_per_hz", r.n0_w_per_hz)?;
        positive("t_s_sec", r.t_s_sec)?;
        positive("sample_rate_hz", self.sample_rate())?;
        if self.sample_rate() < r.b_h_hz {
            return Err(CliError::Config("sample_rate_hz is below b_h_hz".into()));
        }
        let half = 0.5 * r.b_h_hz * r.t_s_sec;
        integral("b_h_hz * t_s_sec / 2", half)?;
        integral("sample_rate_hz * t_s_sec", self.sample_rate() * r.t_s_sec)?;
        let pw = self.pulse_width();
        if !(pw >= 0.0 && pw < r.t_s_sec) {
            return Err(CliError::Config(format!("pulse_width_sec must lie in [0, t_s_sec), got {pw}")));
        }
        if !(r.taper_exponent >= 0.0 && r.taper_exponent.is_finite()) {
            return Err(CliError::Config("taper_exponent must be non-negative".into()));
        }
        if self.selection.n_bands == 0 {
            return Err(CliError::Config("n_bands must be positive".into()));
        }
        self.constraints()?;
        self.allocation.to_allocation()?;
        let b = &self.bounds;
        if !(b.snr_db_lo.is_finite() && b.snr_db_hi > b.snr_db_lo) || b.points < 2 {
            return Err(CliError::Config("bounds grid needs snr_db_hi > snr_db_lo and points >= 2".into()));
        }
        if b.pulses == 0 {
            return Err(CliError::Config("pulses must be at least 1".into()));
        }
        positive("threshold_ratio", b.threshold_ratio)?;
        let m = &self.mc;
        if m.n_trials < MIN_TRIALS {
            return Err(CliError::Config(format!("mc.n_trials must be at least {MIN_TRIALS}")));
        }
        if m.oversample < MIN_OVERSAMPLE {
            return Err(CliError::Config(format!("mc.oversample must be at least {MIN_OVERSAMPLE}")));
        }
        if !(m.snr_db_lo.is_finite() && m.snr_db_hi >= m.snr_db_lo) || m.points == 0 {
            return Err(CliError::Config("mc grid needs snr_db_hi >= snr_db_lo and points >= 1".into()));
        }
        if !self.selection.rem_path.is_file() {
            return Err(CliError::Config(format!(
                "REM file {} does not exist",
                self.selection.rem_path.display()
            )));
        }
        Ok(())
    }
}
