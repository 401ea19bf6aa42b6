//! Monte Carlo delay estimation against the bounds.
//!
//! Each receive channel is a real lowpass signal on a window of length
//! `T_s`, held as its coefficients `a_k = A(f_k)` at the half-bin
//! frequencies `f_k = (k + 1/2) / T_s`, `0 <= k < K = B_c T_s / 2`. The band
//! `|f| < B_c / 2` then holds exactly `B_c T_s` coefficients, with no DC or
//! band-edge bin. The conventional radar has one channel of two-sided
//! bandwidth `B_h`. A cognitive band of width `w` becomes a channel of
//! bandwidth `2w` whose magnitude folds the band around its center:
//! `|G(u)|² = (|H(f_c + u/2)|² + |H(f_c - u/2)|²) / 2`. Its lowpass rms
//! bandwidth is the band's bandpass rms bandwidth.
//!
//! A channel carrying power `P_c` in bandwidth `B_c` is given pulse energy
//! `P_c / B_c`, so its Fisher information is `SNR_c F̄_c²` with
//! `SNR_c = P_c / (N_0 B_c)`. White noise of density `N_0` adds an
//! independent complex coefficient of variance `N_0 / T_s` to every `k`, so
//! the per-sample noise variance is exactly `N_0 B_c`.
//!
//! The estimator maximizes `Σ_c Σ_k Re(X_k a_k e^{j 2π f_k τ})`
//! over `τ` on a grid of step `T_s / M` confined to the prior support.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bounds::{crlb_cognitive, crlb_conventional, ezb_cognitive, ezb_conventional};
use crate::rng::{stream, trial_stream, StreamKind};
use crate::spectrum::{subband_power, Spectrum, Subband, SubbandPlan};
use crate::waveform::{WaveformKind, WaveformSpec};
use crate::{Error, Result};

pub const MIN_TRIALS: usize = 100;
pub const MIN_OVERSAMPLE: usize = 4;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// How the true delay of each trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    /// Uniform on `[0, T_s - τ_p]`.
    Uniform,
    /// Always the middle of the support.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_trials: usize,
    /// Linear SNRs `P / (N_0 B_h)`.
    pub snr_grid: Vec<f64>,
    /// Observation window, s.
    pub t_s: f64,
    /// Pulse length `τ_p`; delays lie in `[0, T_s - τ_p]`.
    pub pulse_width: f64,
    /// Estimator grid points per `1 / B_h`.
    pub tau_grid_oversample: usize,
    pub seed: u64,
    pub interpolate_peak: bool,
    pub delay_mode: DelayMode,
}

impl McConfig {
    pub fn new(snr_grid: Vec<f64>, t_s: f64, seed: u64) -> Self {
        Self {
            n_trials: 1000,
            snr_grid,
            t_s,
            pulse_width: t_s / 8.0,
            tau_grid_oversample: 8,
            seed,
            interpolate_peak: true,
            delay_mode: DelayMode::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials < MIN_TRIALS {
            return Err(Error::domain(format!("need at least {MIN_TRIALS} trials, got {}", self.n_trials)));
        }
        if self.tau_grid_oversample < MIN_OVERSAMPLE {
            return Err(Error::domain(format!(
                "oversample factor must be at least {MIN_OVERSAMPLE}, got {}",
                self.tau_grid_oversample
            )));
        }
        if !(self.t_s > 0.0 && self.t_s.is_finite()) {
            return Err(Error::domain("T_s must be positive"));
        }
        if !(self.pulse_width >= 0.0 && self.pulse_width < self.t_s) {
            return Err(Error::domain("pulse width must lie in [0, T_s)"));
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::domain("SNR grid must be nonempty and non-negative"));
        }
        Ok(())
    }

    /// Length of the delay support.
    pub fn support(&self) -> f64 {
        self.t_s - self.pulse_width
    }

    /// Variance of the uniform delay prior.
    pub fn prior_variance(&self) -> f64 {
        self.support().powi(2) / 12.0
    }

    /// Mean squared difference of two independent uniform delays, the error
    /// of an estimator that ignores the data.
    pub fn clamped_error_variance(&self) -> f64 {
        self.support().powi(2) / 6.0
    }
}

fn half_bin(k: usize, t_s: f64) -> f64 {
    (k as f64 + 0.5) / t_s
}

/// One lowpass receive channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    /// Two-sided bandwidth, Hz.
    pub bandwidth: f64,
    /// Power carried, W.
    pub power: f64,
    /// Real coefficients `a_0 .. a_{K-1}` at the half-bin frequencies.
    pub coeffs: Vec<f64>,
}

impl Channel {
    fn from_density(bandwidth: f64, power: f64, t_s: f64, density: impl Fn(f64) -> f64) -> Result<Self> {
        let half_bins = bandwidth * t_s / 2.0;
        let k_max = half_bins.round();
        if k_max < 1.0 || (half_bins - k_max).abs() > 1e-6 * k_max.max(1.0) {
            return Err(Error::domain(format!(
                "bandwidth {bandwidth} Hz is not an even number of 1/T_s bins for T_s = {t_s}"
            )));
        }
        let sq: Vec<f64> = (0..k_max as usize).map(|k| density(half_bin(k, t_s)).max(0.0)).collect();
        let raw = 2.0 * t_s * sq.iter().sum::<f64>();
        let target = power / bandwidth;
        let scale = if raw > 0.0 { target / raw } else { 0.0 };
        if power > 0.0 && !(raw > 0.0) {
            return Err(Error::domain("channel spectrum is empty"));
        }
        Ok(Self { bandwidth, power, coeffs: sq.iter().map(|s| (s * scale).sqrt()).collect() })
    }

    /// Number of coefficients.
    pub fn bins(&self) -> usize {
        self.coeffs.len()
    }

    /// Pulse energy, J.
    pub fn energy(&self, t_s: f64) -> f64 {
        2.0 * t_s * self.coeffs.iter().map(|a| a * a).sum::<f64>()
    }

    /// rms bandwidth of the channel's discrete spectrum, rad/s.
    pub fn rms_bandwidth(&self, t_s: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (k, a) in self.coeffs.iter().enumerate() {
            let w = 2.0 * PI * half_bin(k, t_s);
            num += w * w * a * a;
            den += a * a;
        }
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            0.0
        }
    }
}

/// Receive model of either radar.
#[derive(Debug, Clone)]
pub struct McModel {
    pub kind: WaveformKind,
    pub full_band: f64,
    pub total_power: f64,
    pub t_s: f64,
    pub channels: Vec<Channel>,
}

impl McModel {
    /// Conventional radar with one-sided magnitude `spectrum` on `[0, B_h/2]`.
    pub fn conventional(spectrum: &Spectrum, full_band: f64, power: f64, t_s: f64) -> Result<Self> {
        let ch = Channel::from_density(full_band, power, t_s, |f| spectrum.power_density_at(f))?;
        Ok(Self { kind: WaveformKind::Conventional, full_band, total_power: power, t_s, channels: vec![ch] })
    }

    /// Cognitive radar from bands, their magnitudes `β_i |H|` and powers.
    pub fn cognitive(full_band: f64, bands: &[(Subband, &Spectrum, f64)], t_s: f64) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::domain("no bands"));
        }
        let mut channels = Vec::with_capacity(bands.len());
        for (band, spectrum, power) in bands {
            let fc = band.f_center;
            let fold = |u: f64| 0.5 * (spectrum.power_density_at(fc + 0.5 * u) + spectrum.power_density_at(fc - 0.5 * u));
            channels.push(Channel::from_density(band.noise_bandwidth(), *power, t_s, fold)?);
        }
        let total_power = channels.iter().map(|c| c.power).sum();
        Ok(Self { kind: WaveformKind::Cognitive, full_band, total_power, t_s, channels })
    }

    /// Cognitive radar cut from `base` by the plan's bands and `β`s.
    pub fn from_plan(plan: &SubbandPlan, base: &Spectrum, t_s: f64) -> Result<Self> {
        plan.validate()?;
        let scaled: Vec<Spectrum> = plan
            .subbands
            .iter()
            .map(|b| {
                let g = *base.grid();
                let m = base.magnitude().iter().map(|h| h * b.beta).collect();
                Spectrum::new(g, m)
            })
            .collect::<Result<_>>()?;
        let mut parts = Vec::with_capacity(scaled.len());
        for (b, s) in plan.subbands.iter().zip(&scaled) {
            parts.push((*b, s, subband_power(s, b)?));
        }
        Self::cognitive(plan.full_band, &parts, t_s)
    }

    /// Model of a synthesized waveform.
    pub fn from_waveform(waveform: &WaveformSpec, t_s: f64) -> Result<Self> {
        match waveform.kind() {
            WaveformKind::Conventional => {
                Self::conventional(&waveform.spectrum(), waveform.full_band(), waveform.total_power(), t_s)
            }
            WaveformKind::Cognitive => {
                let parts: Vec<_> = waveform.components().iter().map(|c| (c.band, &c.spectrum, c.power())).collect();
                Self::cognitive(waveform.full_band(), &parts, t_s)
            }
        }
    }

    pub fn bins(&self) -> usize {
        self.channels.iter().map(Channel::bins).max().unwrap_or(0)
    }

    /// Noise density giving conventional SNR `snr`.
    pub fn noise_density(&self, snr: f64) -> f64 {
        if snr > 0.0 {
            self.total_power / (snr * self.full_band)
        } else {
            f64::INFINITY
        }
    }

    /// `(SNR_c, F̄_c)` of every channel at conventional SNR `snr`.
    pub fn per_channel(&self, snr: f64) -> Vec<(f64, f64)> {
        self.channels
            .iter()
            .map(|c| (snr * c.power / self.total_power * self.full_band / c.bandwidth, c.rms_bandwidth(self.t_s)))
            .collect()
    }

    /// CRLB and EZB of the model at conventional SNR `snr`.
    pub fn bounds_at(&self, snr: f64, prior_variance: f64) -> Result<(f64, f64)> {
        let per = self.per_channel(snr);
        match self.kind {
            WaveformKind::Conventional => {
                let (s, f) = per[0];
                let crlb = if s > 0.0 { crlb_conventional(s, f)? } else { f64::INFINITY };
                Ok((crlb, ezb_conventional(s, f, prior_variance)?))
            }
            WaveformKind::Cognitive => {
                let crlb = if snr > 0.0 { crlb_cognitive(&per)? } else { f64::INFINITY };
                let b_sum: f64 = self.channels.iter().map(|c| c.bandwidth).sum();
                let snr_tilde = snr * self.full_band / b_sum;
                Ok((crlb, ezb_cognitive(snr_tilde, &per, prior_variance)?))
            }
        }
    }

    /// Delayed pulses plus white noise of density `n0` in every channel.
    pub fn simulate_received<R: Rng + ?Sized>(&self, tau0: f64, n0: f64, support: f64, rng: &mut R) -> Result<Received> {
        if !(tau0 >= 0.0 && tau0 <= support) {
            return Err(Error::domain(format!("delay {tau0} s outside [0, {support}]")));
        }
        if !(n0 >= 0.0 && n0.is_finite()) {
            return Err(Error::domain("noise density must be non-negative"));
        }
        Ok(self.draw(tau0, n0, 1.0, rng))
    }

    fn draw<R: Rng + ?Sized>(&self, tau0: f64, n0: f64, gain: f64, rng: &mut R) -> Received {
        let half = (0.5 * n0 / self.t_s).sqrt();
        let channels = self
            .channels
            .iter()
            .map(|c| {
                c.coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| {
                        let phase = -2.0 * PI * half_bin(k, self.t_s) * tau0;
                        let clean = Complex64::from_polar(gain * a, phase);
                        if n0 == 0.0 {
                            return clean;
                        }
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        clean + Complex64::new(half * re, half * im)
                    })
                    .collect()
            })
            .collect();
        Received { t_s: self.t_s, channels }
    }
}

/// Received coefficients `X_0 .. X_{K-1}` of each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub t_s: f64,
    pub channels: Vec<Vec<Complex64>>,
}

impl Received {
    /// Time samples of channel `i` at `n` points per window, `n >= 2K`.
    pub fn time_samples(&self, i: usize, n: usize) -> Result<Vec<f64>> {
        let x = self.channels.get(i).ok_or_else(|| Error::domain(format!("no channel {i}")))?;
        if n < 2 * x.len() {
            return Err(Error::domain(format!("{n} samples cannot hold {} bins", x.len())));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..x.len()].copy_from_slice(x);
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        Ok(half_bin_real(&buf))
    }
}

/// `2 Re(e^{jπm/n} z_m)`: moves an inverse FFT onto the half-bin frequencies.
fn half_bin_real(z: &[Complex64]) -> Vec<f64> {
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(m, v)| 2.0 * (Complex64::from_polar(1.0, PI * m as f64 / n) * v).re)
        .collect()
}

/// Index of the largest value in `y[..=last]`; the first one wins ties.
pub fn peak_index(y: &[f64], last: usize) -> usize {
    let mut best = 0;
    for m in 1..=last.min(y.len() - 1) {
        if y[m] > y[best] {
            best = m;
        }
    }
    best
}

/// Grid-search delay estimator shared across trials.
pub struct DelayEstimator {
    fft: Arc<dyn Fft<f64>>,
    size: usize,
    step: f64,
    last_index: usize,
    support: f64,
    interpolate: bool,
}

impl DelayEstimator {
    pub fn new(model: &McModel, config: &McConfig) -> Result<Self> {
        config.validate()?;
        let base = ((model.full_band * model.t_s).ceil() as usize).max(2 * model.bins()).next_power_of_two();
        let size = base * config.tau_grid_oversample;
        let step = model.t_s / size as f64;
        let support = config.support();
        let last_index = ((support / step) * (1.0 + 1e-12)).floor() as usize;
        Ok(Self {
            fft: FftPlanner::new().plan_fft_inverse(size),
            size,
            step,
            last_index: last_index.min(size - 1),
            support,
            interpolate: config.interpolate_peak,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Correlation of `received` with the templates at every grid delay.
    pub fn correlation(&self, model: &McModel, received: &Received) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (c, x) in model.channels.iter().zip(&received.channels) {
            for (k, (a, v)) in c.coeffs.iter().zip(x).enumerate() {
                buf[k] += v * *a;
            }
        }
        self.fft.process(&mut buf);
        half_bin_real(&buf)
    }

    /// Delay maximizing the correlation over `[0, T_s - τ_p]`.
    pub fn estimate(&self, model: &McModel, received: &Received) -> Result<f64> {
        let y = self.correlation(model, received);
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(scale > 0.0) {
            return Err(Error::Estimation("correlation is identically zero".into()));
        }
        let best = peak_index(&y, self.last_index);
        let mut pos = best as f64;
        if self.interpolate {
            // the half-bin signal flips sign across the window edge
            let left = if best == 0 { -y[self.size - 1] } else { y[best - 1] };
            let right = if best + 1 == self.size { -y[0] } else { y[best + 1] };
            let curv = left - 2.0 * y[best] + right;
            if curv < 0.0 {
                pos += (0.5 * (left - right) / curv).clamp(-0.5, 0.5);
            }
        }
        Ok((pos * self.step).clamp(0.0, self.support))
    }
}

/// Estimate from a fresh estimator; see [`DelayEstimator`] for repeated use.
pub fn ml_delay_estimate(model: &McModel, received: &Received, config: &McConfig) -> Result<f64> {
    DelayEstimator::new(model, config)?.estimate(model, received)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub snr: f64,
    pub mse: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub crlb: f64,
    pub ezb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSweepResult {
    pub points: Vec<McPoint>,
    pub config: McConfig,
}

impl McSweepResult {
    /// SNR in dB at which the MSE first drops below `level`, interpolated
    /// linearly in dB against log MSE. `None` if it never does.
    pub fn departure_snr_db(&self, level: f64) -> Option<f64> {
        let db = |s: f64| 10.0 * s.log10();
        let k = self.points.iter().position(|p| p.mse < level)?;
        if k == 0 {
            return Some(db(self.points[0].snr));
        }
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        let t = (a.mse.ln() - level.ln()) / (a.mse.ln() - b.mse.ln());
        Some(db(a.snr) + t * (db(b.snr) - db(a.snr)))
    }
}

fn squared_errors(model: &McModel, est: &DelayEstimator, config: &McConfig, snr_index: usize, snr: f64) -> Result<Vec<f64>> {
    let n0 = model.noise_density(snr);
    let support = config.support();
    (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_stream(config.seed, snr_index as u32, t as u32);
            let tau0 = match config.delay_mode {
                DelayMode::Uniform => rng.random::<f64>() * support,
                DelayMode::Midpoint => 0.5 * support,
            };
            // at zero SNR the pulse vanishes against unit-density noise
            let rx = if n0.is_finite() {
                model.draw(tau0, n0, 1.0, &mut rng)
            } else {
                model.draw(tau0, 1.0, 0.0, &mut rng)
            };
            let e = est.estimate(model, &rx)? - tau0;
            Ok(e * e)
        })
        .collect()
}

fn bootstrap_ci(errors: &[f64], seed: u64, snr_index: usize) -> (f64, f64) {
    let n = errors.len();
    let mut rng = stream(seed, StreamKind::Bootstrap, snr_index as u32, 0);
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| errors[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(|a, b| a.total_cmp(b));
    let lo = means[(0.025 * BOOTSTRAP_RESAMPLES as f64).floor() as usize];
    let hi = means[((0.975 * BOOTSTRAP_RESAMPLES as f64).ceil() as usize).min(BOOTSTRAP_RESAMPLES - 1)];
    (lo, hi)
}

/// Empirical MSE with bootstrap 95% intervals over the SNR grid.
///
/// Results depend only on the model and config, not on thread count.
pub fn run_sweep(model: &McModel, config: &McConfig) -> Result<McSweepResult> {
    config.validate()?;
    let est = DelayEstimator::new(model, config)?;
    let prior = config.prior_variance();
    let mut points = Vec::with_capacity(config.snr_grid.len());
    for (i, &snr) in config.snr_grid.iter().enumerate() {
        let errors = squared_errors(model, &est, config, i, snr)?;
        let mse = errors.iter().sum::<f64>() / errors.len() as f64;
        let (lo, hi) = bootstrap_ci(&errors, config.seed, i);
        let (crlb, ezb) = model.bounds_at(snr, prior)?;
        points.push(McPoint { snr, mse, ci_lo: lo.min(mse), ci_hi: hi.max(mse), crlb, ezb });
    }
    Ok(McSweepResult { points, config: config.clone() })
}
