//! Conventional (full-band) and cognitive (multiband) pulse synthesis.
//!
//! A waveform is described by one or more band components, each a magnitude
//! spectrum on the nodes of a common frequency grid with spacing
//! `1 / duration`. Samples are produced by inverse DFT over one period of
//! length `duration` with a linear phase that centres the pulse in the
//! window. Band-edge nodes are synthesized at half power, which makes the
//! discrete time-domain energy equal the trapezoid spectral integral.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::spectrum::{rms_bandwidth_bandpass, subband_power, FrequencyGrid, Spectrum, Subband, SubbandPlan};
use crate::{Error, Result};

/// Default number of one-sided frequency bins across `[0, B_h/2]`.
pub const DEFAULT_BINS: usize = 1024;

/// Tolerance of the time/frequency energy check.
pub const PARSEVAL_TOL: f64 = 1e-6;
/// Tolerance of the power-conservation check.
pub const POWER_TOL: f64 = 1e-9;

/// Window length giving `DEFAULT_BINS` one-sided bins for a full band `b_h`.
pub fn default_duration(b_h: f64) -> f64 {
    2.0 * DEFAULT_BINS as f64 / b_h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformKind {
    Conventional,
    Cognitive,
}

/// A band of the waveform and its magnitude `β_i |H(f)|` on the band's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BandComponent {
    pub band: Subband,
    pub first_bin: usize,
    pub spectrum: Spectrum,
}

impl BandComponent {
    pub fn last_bin(&self) -> usize {
        self.first_bin + self.spectrum.grid().len() - 1
    }

    /// Two-sided power of the component.
    pub fn power(&self) -> f64 {
        subband_power(&self.spectrum, &self.band).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct WaveformSpec {
    kind: WaveformKind,
    full_band: f64,
    grid: FrequencyGrid,
    components: Vec<BandComponent>,
    samples: Vec<f64>,
    sample_rate: f64,
    duration: f64,
}

impl WaveformSpec {
    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    /// Two-sided bandwidth `B_h` of the reference full band (Hz).
    pub fn full_band(&self) -> f64 {
        self.full_band
    }

    /// One-sided grid over `[0, B_h/2]`.
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn components(&self) -> &[BandComponent] {
        &self.components
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn sample_times(&self) -> impl Iterator<Item = f64> + '_ {
        let dt = 1.0 / self.sample_rate;
        (0..self.samples.len()).map(move |n| n as f64 * dt)
    }

    /// Magnitude on the full one-sided grid (zero outside the bands).
    pub fn spectrum(&self) -> Spectrum {
        let mut mag = vec![0.0f64; self.grid.len()];
        for c in &self.components {
            for (i, m) in c.spectrum.magnitude().iter().enumerate() {
                let slot = &mut mag[c.first_bin + i];
                *slot = slot.max(*m);
            }
        }
        Spectrum::new(self.grid, mag).expect("component magnitudes are valid")
    }

    /// Component whose edges match `band`.
    pub fn component_for(&self, band: &Subband) -> Option<&BandComponent> {
        let tol = 1e-9 * band.width;
        self.components
            .iter()
            .find(|c| (c.band.lo() - band.lo()).abs() <= tol && (c.band.hi() - band.hi()).abs() <= tol)
    }

    /// Two-sided power of each band.
    pub fn band_powers(&self) -> Vec<f64> {
        self.components.iter().map(BandComponent::power).collect()
    }

    /// Total spectral power, the sum of the band powers.
    pub fn total_power(&self) -> f64 {
        self.band_powers().iter().sum()
    }

    /// Time-domain energy `Σ x_n^2 / fs`.
    pub fn time_energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.sample_rate
    }

    /// Samples of the `i`-th band signal on its own.
    pub fn band_samples(&self, i: usize) -> Result<Vec<f64>> {
        let c = self
            .components
            .get(i)
            .ok_or_else(|| Error::domain(format!("no band {i}")))?;
        synthesize_samples(std::slice::from_ref(c), self.grid.spacing(), self.samples.len(), self.sample_rate)
    }

    fn build(
        kind: WaveformKind,
        full_band: f64,
        grid: FrequencyGrid,
        components: Vec<BandComponent>,
        sample_rate: f64,
    ) -> Result<Self> {
        let duration = 1.0 / grid.spacing();
        let n = sample_count(sample_rate, duration)?;
        let samples = synthesize_samples(&components, grid.spacing(), n, sample_rate)?;
        let wf = Self { kind, full_band, grid, components, samples, sample_rate, duration };
        let spectral = wf.total_power();
        let temporal = wf.time_energy();
        if (spectral - temporal).abs() > PARSEVAL_TOL * spectral.max(f64::MIN_POSITIVE) {
            return Err(Error::Consistency(format!(
                "time-domain energy {temporal} differs from spectral power {spectral}"
            )));
        }
        Ok(wf)
    }
}

fn sample_count(sample_rate: f64, duration: f64) -> Result<usize> {
    let exact = sample_rate * duration;
    let n = exact.round();
    if !(n >= 2.0) || (exact - n).abs() > 1e-6 * n {
        return Err(Error::domain(format!(
            "sample_rate * duration = {exact} must be an integer number of samples"
        )));
    }
    Ok(n as usize)
}

/// Inverse-DFT synthesis of a real pulse centred in an `n`-sample window.
fn synthesize_samples(components: &[BandComponent], df: f64, n: usize, fs: f64) -> Result<Vec<f64>> {
    let mut power = vec![0.0f64; n / 2 + 1];
    for c in components {
        let (a, b) = (c.first_bin, c.last_bin());
        if b > n / 2 {
            return Err(Error::domain(format!(
                "band edge {} Hz is above the Nyquist frequency {} Hz",
                b as f64 * df,
                0.5 * fs
            )));
        }
        for (i, m) in c.spectrum.magnitude().iter().enumerate() {
            let k = a + i;
            let edge = (k == a || k == b) && a != b;
            // DC: the two half-weighted mirror images land on one bin
            let w = if k == 0 || !edge { 1.0 } else { 0.5 };
            power[k] += w * m * m;
        }
    }
    let duration = n as f64 / fs;
    let centre = 0.5 * duration;
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for (k, p) in power.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let f = k as f64 * df;
        let phase = Complex64::from_polar(1.0, -2.0 * PI * f * centre);
        if k == 0 {
            bins[0] = Complex64::new(fs * p.sqrt(), 0.0);
        } else if 2 * k == n {
            // Nyquist bin is shared by both mirror images
            bins[k] = fs * (2.0 * p).sqrt() * Complex64::new(phase.re.signum(), 0.0);
        } else {
            let x = fs * p.sqrt() * phase;
            bins[k] = x;
            bins[n - k] = x.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut bins);
    Ok(bins.iter().map(|z| z.re / n as f64).collect())
}

fn full_grid(b_h: f64, duration: f64) -> Result<FrequencyGrid> {
    if !(b_h > 0.0) || !b_h.is_finite() {
        return Err(Error::domain("b_h must be positive"));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::domain("duration must be positive"));
    }
    let bins = 0.5 * b_h * duration;
    let k = bins.round();
    if k < 1.0 || (bins - k).abs() > 1e-9 * k {
        return Err(Error::domain(format!(
            "B_h/2 * duration = {bins} must be a whole number of frequency bins"
        )));
    }
    FrequencyGrid::with_spacing(0.0, 1.0 / duration, k as usize + 1)
}

fn check_nyquist(b_h: f64, sample_rate: f64) -> Result<()> {
    if !(sample_rate >= b_h) {
        return Err(Error::domain(format!(
            "sample rate {sample_rate} Hz is below the Nyquist rate {b_h} Hz"
        )));
    }
    Ok(())
}

/// Full-band pulse with one-sided magnitude `shape(f)` on `[0, B_h/2]`,
/// scaled so its two-sided power is `p`.
pub fn synthesize_fullband(
    b_h: f64,
    p: f64,
    sample_rate: f64,
    duration: f64,
    shape: impl Fn(f64) -> f64,
) -> Result<WaveformSpec> {
    check_nyquist(b_h, sample_rate)?;
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::domain("power must be non-negative"));
    }
    let grid = full_grid(b_h, duration)?;
    let band = Subband::from_edges(0.0, 0.5 * b_h, 1.0)?;
    let raw = Spectrum::from_fn(grid, shape)?;
    let raw_power = subband_power(&raw, &band)?;
    let scale = if p == 0.0 {
        0.0
    } else if raw_power > 0.0 {
        (p / raw_power).sqrt()
    } else {
        return Err(Error::domain("shape has no power"));
    };
    let spectrum = Spectrum::new(grid, raw.magnitude().iter().map(|m| m * scale).collect())?;
    let component = BandComponent { band, first_bin: 0, spectrum };
    WaveformSpec::build(WaveformKind::Conventional, b_h, grid, vec![component], sample_rate)
}

/// Flat full-band pulse: `|H| = A` on `[0, B_h/2]` with `2 A^2 (B_h/2) = p`.
pub fn synthesize_flat_fullband(b_h: f64, p: f64, sample_rate: f64, duration: f64) -> Result<WaveformSpec> {
    synthesize_fullband(b_h, p, sample_rate, duration, |_| 1.0)
}

/// Node range `[first, last]` of a band on `grid`.
fn band_nodes(grid: &FrequencyGrid, band: &Subband) -> Result<(usize, usize)> {
    match (grid.node_at(band.lo()), grid.node_at(band.hi())) {
        (Some(a), Some(b)) if b > a => Ok((a, b)),
        _ => Err(Error::domain(format!(
            "band [{}, {}] Hz does not align with the {} Hz frequency grid",
            band.lo(),
            band.hi(),
            grid.spacing()
        ))),
    }
}

/// Restriction of `base` to `band`, scaled by `beta`.
fn restrict(base: &Spectrum, band: &Subband, beta: f64) -> Result<BandComponent> {
    let (a, b) = band_nodes(base.grid(), band)?;
    let grid = FrequencyGrid::new(base.grid().freq(a), base.grid().freq(b), b - a + 1)?;
    let mag = base.magnitude()[a..=b].iter().map(|m| beta * m).collect();
    Ok(BandComponent { band: *band, first_bin: a, spectrum: Spectrum::new(grid, mag)? })
}

/// Cognitive waveform: `β_i H(f)` on each subband of `plan`, zero elsewhere.
pub fn synthesize_cognitive(plan: &SubbandPlan, base: &WaveformSpec) -> Result<WaveformSpec> {
    plan.validate()?;
    if (plan.full_band - base.full_band).abs() > 1e-12 * base.full_band {
        return Err(Error::domain(format!(
            "plan full band {} Hz differs from base waveform {} Hz",
            plan.full_band, base.full_band
        )));
    }
    let base_spec = base.spectrum();
    let mut components = plan
        .subbands
        .iter()
        .map(|b| restrict(&base_spec, b, b.beta))
        .collect::<Result<Vec<_>>>()?;
    components.sort_by_key(|c| c.first_bin);
    let wf = WaveformSpec::build(WaveformKind::Cognitive, base.full_band, base.grid, components, base.sample_rate)?;
    let total = wf.total_power();
    if (total - plan.total_power).abs() > POWER_TOL * plan.total_power.max(f64::MIN_POSITIVE) {
        return Err(Error::Consistency(format!(
            "cognitive waveform carries {total} W but the plan requires {} W; check beta normalisation",
            plan.total_power
        )));
    }
    Ok(wf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", content = "weights", rename_all = "snake_case")]
pub enum PowerAllocation {
    /// One common `β` on every band.
    EqualBeta,
    /// Every band carries `P / N_b`.
    EqualPower,
    /// Band `i` carries `w_i P`.
    Proportional(Vec<f64>),
}

/// Power redistribution constants for `bands` so the cognitive waveform
/// built from `base` carries exactly `p`.
pub fn allocate_power(bands: &[Subband], scheme: &PowerAllocation, base: &Spectrum, p: f64) -> Result<Vec<f64>> {
    if bands.is_empty() {
        return Err(Error::domain("no bands to allocate"));
    }
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::domain("power must be non-negative"));
    }
    for (i, a) in bands.iter().enumerate() {
        for b in &bands[..i] {
            if a.overlaps(b) {
                return Err(Error::domain("bands overlap"));
            }
        }
    }
    let base_power = bands
        .iter()
        .map(|b| subband_power(base, &Subband { beta: 1.0, ..*b }))
        .collect::<Result<Vec<_>>>()?;
    let n = bands.len() as f64;
    let shares: Vec<f64> = match scheme {
        PowerAllocation::EqualBeta => {
            let total: f64 = base_power.iter().sum();
            base_power.iter().map(|q| q / total).collect()
        }
        PowerAllocation::EqualPower => vec![1.0 / n; bands.len()],
        PowerAllocation::Proportional(w) => {
            if w.len() != bands.len() {
                return Err(Error::domain(format!("{} weights for {} bands", w.len(), bands.len())));
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::domain("weights must be non-negative"));
            }
            let sum: f64 = w.iter().sum();
            if !(sum > 0.0) {
                return Err(Error::domain("weights sum to zero"));
            }
            w.iter().map(|x| x / sum).collect()
        }
    };
    let mut betas = Vec::with_capacity(bands.len());
    for (i, (share, q)) in shares.iter().zip(&base_power).enumerate() {
        if *share == 0.0 || p == 0.0 {
            betas.push(0.0);
        } else if !(*q > 0.0) || !share.is_finite() {
            return Err(Error::domain(format!("band {i} has no base power to scale")));
        } else {
            betas.push((share * p / q).sqrt());
        }
    }
    let achieved: f64 = betas.iter().zip(&base_power).map(|(b, q)| b * b * q).sum();
    if achieved > 0.0 {
        let fix = (p / achieved).sqrt();
        betas.iter_mut().for_each(|b| *b *= fix);
    }
    Ok(betas)
}

/// Plan with `betas` applied to `bands`.
pub fn plan_with_betas(
    full_band: f64,
    bands: &[Subband],
    betas: &[f64],
    total_power: f64,
    noise_density: f64,
) -> Result<SubbandPlan> {
    let subbands = bands
        .iter()
        .zip(betas)
        .map(|(b, &beta)| Subband { beta, ..*b })
        .collect();
    SubbandPlan::new(full_band, subbands, total_power, noise_density)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSummary {
    /// `P / (N_0 B_h)`.
    pub snr_full: f64,
    /// `P_i / (N_0 B_i)` with `B_i` the band's two-sided noise bandwidth.
    pub snr_i: Vec<f64>,
    /// `Σ P_i / (N_0 Σ B_i)`.
    pub snr_tilde: f64,
}

/// SNR quantities of a cognitive waveform from its measured band powers.
pub fn snr_summary(plan: &SubbandPlan, waveform: &WaveformSpec) -> Result<SnrSummary> {
    if !(plan.noise_density > 0.0) {
        return Err(Error::domain("noise density must be positive"));
    }
    let n0 = plan.noise_density;
    let powers = measured_band_powers(plan, waveform)?;
    let total: f64 = powers.iter().sum();
    let snr_i = plan
        .subbands
        .iter()
        .zip(&powers)
        .map(|(b, p)| p / (n0 * b.noise_bandwidth()))
        .collect();
    Ok(SnrSummary {
        snr_full: total / (n0 * plan.full_band),
        snr_i,
        snr_tilde: total / (n0 * plan.total_noise_bandwidth()),
    })
}

/// Two-sided power of each plan band, measured on the waveform.
pub fn measured_band_powers(plan: &SubbandPlan, waveform: &WaveformSpec) -> Result<Vec<f64>> {
    plan.subbands
        .iter()
        .map(|b| plan_component(waveform, b).map(BandComponent::power))
        .collect()
}

fn plan_component<'a>(waveform: &'a WaveformSpec, band: &Subband) -> Result<&'a BandComponent> {
    waveform
        .component_for(band)
        .ok_or_else(|| Error::domain(format!("waveform has no component for band at {} Hz", band.f_center)))
}

/// Per-band `(SNR_i, F̄_i)` pairs of a cognitive waveform; bands without
/// power contribute `(0, 0)`.
pub fn band_information(plan: &SubbandPlan, waveform: &WaveformSpec) -> Result<Vec<(f64, f64)>> {
    let snr = snr_summary(plan, waveform)?;
    plan.subbands
        .iter()
        .zip(&snr.snr_i)
        .map(|(b, s)| {
            let c = plan_component(waveform, b)?;
            if c.power() > 0.0 {
                Ok((*s, rms_bandwidth_bandpass(&c.spectrum, &c.band)?))
            } else {
                Ok((0.0, 0.0))
            }
        })
        .collect()
}
