//! Frequency grids, the radar environment map, subband plans and the spectral
//! integrals (band power, rms bandwidth) everything else is built on.
//!
//! Integrals use the composite trapezoid rule on the grid nodes that fall
//! inside the integration interval. When an interval edge does not land on a
//! node, `|H(f)|^2` is linearly interpolated there and the edge becomes an
//! extra node. On node-aligned bands the trapezoid sums equal the line
//! spectrum sums of the periodic pulse built from the same nodes.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance used when deciding whether a frequency sits on a node.
const NODE_TOL: f64 = 1e-9;

/// Uniform frequency grid with `m_points` nodes spanning `[f_lo, f_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    f_lo: f64,
    f_hi: f64,
    m_points: usize,
}

impl FrequencyGrid {
    pub fn new(f_lo: f64, f_hi: f64, m_points: usize) -> Result<Self> {
        if !(f_lo.is_finite() && f_hi.is_finite()) || f_hi <= f_lo {
            return Err(Error::domain(format!(
                "grid needs finite f_hi > f_lo, got [{f_lo}, {f_hi}]"
            )));
        }
        if m_points < 2 {
            return Err(Error::domain("grid needs at least two points"));
        }
        Ok(Self { f_lo, f_hi, m_points })
    }

    /// Grid on `[f_lo, f_lo + (m_points - 1) * spacing]`.
    pub fn with_spacing(f_lo: f64, spacing: f64, m_points: usize) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::domain("grid spacing must be positive"));
        }
        Self::new(f_lo, f_lo + spacing * (m_points.max(2) - 1) as f64, m_points)
    }

    pub fn f_lo(&self) -> f64 {
        self.f_lo
    }

    pub fn f_hi(&self) -> f64 {
        self.f_hi
    }

    pub fn len(&self) -> usize {
        self.m_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.f_hi - self.f_lo) / (self.m_points - 1) as f64
    }

    pub fn freq(&self, k: usize) -> f64 {
        if k + 1 == self.m_points {
            self.f_hi
        } else {
            self.f_lo + k as f64 * self.spacing()
        }
    }

    /// Fractional node position of `f`.
    pub fn position(&self, f: f64) -> f64 {
        (f - self.f_lo) / self.spacing()
    }

    /// Index of the node at `f`, if `f` lands on one.
    pub fn node_at(&self, f: f64) -> Option<usize> {
        let pos = self.position(f);
        let k = pos.round();
        if (pos - k).abs() <= NODE_TOL * pos.abs().max(1.0) && k >= 0.0 && (k as usize) < self.m_points {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        let tol = NODE_TOL * self.spacing();
        f >= self.f_lo - tol && f <= self.f_hi + tol
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m_points).map(|k| self.freq(k))
    }
}

/// One-sided magnitude spectrum `|H(f)|` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: FrequencyGrid,
    magnitude: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: FrequencyGrid, magnitude: Vec<f64>) -> Result<Self> {
        if magnitude.len() != grid.len() {
            return Err(Error::domain(format!(
                "spectrum has {} samples but grid has {} points",
                magnitude.len(),
                grid.len()
            )));
        }
        if magnitude.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::domain("magnitudes must be finite and non-negative"));
        }
        Ok(Self { grid, magnitude })
    }

    pub fn from_fn(grid: FrequencyGrid, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let magnitude = grid.frequencies().map(&mut f).collect();
        Self::new(grid, magnitude)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    /// `|H(f)|^2` with linear interpolation between nodes.
    pub fn power_density_at(&self, f: f64) -> f64 {
        let pos = self.grid.position(f).clamp(0.0, (self.grid.len() - 1) as f64);
        let k = (pos.floor() as usize).min(self.grid.len() - 2);
        let t = pos - k as f64;
        let a = self.magnitude[k] * self.magnitude[k];
        let b = self.magnitude[k + 1] * self.magnitude[k + 1];
        if t == 0.0 {
            a
        } else if t == 1.0 {
            b
        } else {
            a + (b - a) * t
        }
    }

    /// Trapezoid integral of `|H(f)|^2 * weight(f)` over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, weight: impl Fn(f64) -> f64) -> Result<f64> {
        if !(hi >= lo) {
            return Err(Error::domain(format!("empty interval [{lo}, {hi}]")));
        }
        if !self.grid.contains(lo) || !self.grid.contains(hi) {
            return Err(Error::domain(format!(
                "interval [{lo}, {hi}] outside grid [{}, {}]",
                self.grid.f_lo(),
                self.grid.f_hi()
            )));
        }
        if hi == lo {
            return Ok(0.0);
        }
        let mut nodes: Vec<(f64, f64)> = Vec::new();
        let (first, lo_node) = match self.grid.node_at(lo) {
            Some(k) => (k, Some(k)),
            None => (self.grid.position(lo).ceil() as usize, None),
        };
        let last = match self.grid.node_at(hi) {
            Some(k) => k,
            None => self.grid.position(hi).floor() as usize,
        };
        if lo_node.is_none() {
            nodes.push((lo, self.power_density_at(lo)));
        }
        for k in first..=last.min(self.grid.len() - 1) {
            let m = self.magnitude[k];
            nodes.push((self.grid.freq(k), m * m));
        }
        if self.grid.node_at(hi).is_none() {
            nodes.push((hi, self.power_density_at(hi)));
        }
        let mut acc = 0.0;
        for pair in nodes.windows(2) {
            let (f0, p0) = pair[0];
            let (f1, p1) = pair[1];
            acc += 0.5 * (f1 - f0) * (p0 * weight(f0) + p1 * weight(f1));
        }
        Ok(acc)
    }
}

/// One-sided band power `∫_band |H(f)|^2 df`.
pub fn band_power(spectrum: &Spectrum, band: &Subband) -> Result<f64> {
    spectrum.integrate(band.lo(), band.hi(), |_| 1.0)
}

/// Two-sided power carried by a band: the one-sided integral plus its mirror.
pub fn subband_power(spectrum: &Spectrum, band: &Subband) -> Result<f64> {
    Ok(2.0 * band_power(spectrum, band)?)
}

/// RMS bandwidth (rad/s) of a lowpass signal whose two-sided spectrum spans `b_h` Hz.
pub fn rms_bandwidth_lowpass(spectrum: &Spectrum, b_h: f64) -> Result<f64> {
    if !(b_h > 0.0) {
        return Err(Error::domain("b_h must be positive"));
    }
    let hi = 0.5 * b_h;
    let power = spectrum.integrate(0.0, hi, |_| 1.0)?;
    if !(power > 0.0) {
        return Err(Error::domain("spectrum carries no power"));
    }
    let second = spectrum.integrate(0.0, hi, |f| f * f)?;
    Ok(2.0 * PI * (second / power).sqrt())
}

/// RMS bandwidth (rad/s) of a bandpass component, measured about the band
/// centre and doubled because the moment only covers one side.
pub fn rms_bandwidth_bandpass(spectrum: &Spectrum, band: &Subband) -> Result<f64> {
    let power = band_power(spectrum, band)?;
    if !(power > 0.0) {
        return Err(Error::domain("band carries no power"));
    }
    let fc = band.f_center;
    let second = spectrum.integrate(band.lo(), band.hi(), |f| (f - fc) * (f - fc))?;
    Ok(2.0 * 2.0 * PI * (second / power).sqrt())
}

/// A contiguous band `[f_center - width/2, f_center + width/2]` on the
/// one-sided axis with magnitude scale `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subband {
    #[serde(rename = "f_center_hz")]
    pub f_center: f64,
    #[serde(rename = "width_hz")]
    pub width: f64,
    #[serde(default = "unit_beta")]
    pub beta: f64,
}

fn unit_beta() -> f64 {
    1.0
}

impl Subband {
    pub fn new(f_center: f64, width: f64, beta: f64) -> Result<Self> {
        let band = Self { f_center, width, beta };
        band.validate()?;
        Ok(band)
    }

    /// Band covering `[lo, hi]`.
    pub fn from_edges(lo: f64, hi: f64, beta: f64) -> Result<Self> {
        Self::new(0.5 * (lo + hi), hi - lo, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(Error::domain(format!("band width must be positive, got {}", self.width)));
        }
        if !self.f_center.is_finite() || self.lo() < -NODE_TOL * self.width {
            return Err(Error::domain(format!(
                "band [{}, {}] extends below 0 Hz",
                self.lo(),
                self.hi()
            )));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::domain("beta must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn lo(&self) -> f64 {
        self.f_center - 0.5 * self.width
    }

    pub fn hi(&self) -> f64 {
        self.f_center + 0.5 * self.width
    }

    /// Two-sided noise bandwidth of the band (band plus mirror image), the
    /// quantity the band's noise variance `N_0 * B_i` is measured over.
    pub fn noise_bandwidth(&self) -> f64 {
        2.0 * self.width
    }

    pub fn overlaps(&self, other: &Subband) -> bool {
        let tol = NODE_TOL * self.width.max(other.width);
        self.lo() < other.hi() - tol && other.lo() < self.hi() - tol
    }
}

/// Subbands of a cognitive waveform together with the full-band reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandPlan {
    /// Two-sided bandwidth `B_h` of the conventional waveform (Hz).
    #[serde(rename = "full_band_hz")]
    pub full_band: f64,
    pub subbands: Vec<Subband>,
    #[serde(rename = "total_power_w")]
    pub total_power: f64,
    #[serde(rename = "noise_density_w_per_hz")]
    pub noise_density: f64,
}

impl SubbandPlan {
    pub fn new(full_band: f64, subbands: Vec<Subband>, total_power: f64, noise_density: f64) -> Result<Self> {
        let plan = Self { full_band, subbands, total_power, noise_density };
        plan.validate()?;
        Ok(plan)
    }

    /// Structural checks: bands valid, disjoint and inside `[0, B_h/2]`.
    pub fn validate(&self) -> Result<()> {
        if !(self.full_band > 0.0) || !self.full_band.is_finite() {
            return Err(Error::domain("full band must be positive"));
        }
        if !(self.total_power >= 0.0) || !self.total_power.is_finite() {
            return Err(Error::domain("total power must be non-negative"));
        }
        if !(self.noise_density >= 0.0) || !self.noise_density.is_finite() {
            return Err(Error::domain("noise density must be non-negative"));
        }
        if self.subbands.is_empty() {
            return Err(Error::domain("plan needs at least one subband"));
        }
        let edge = 0.5 * self.full_band;
        for (i, b) in self.subbands.iter().enumerate() {
            b.validate()?;
            if b.hi() > edge * (1.0 + NODE_TOL) {
                return Err(Error::domain(format!(
                    "subband {i} reaches {} Hz beyond B_h/2 = {edge} Hz",
                    b.hi()
                )));
            }
            for other in &self.subbands[..i] {
                if b.overlaps(other) {
                    return Err(Error::domain(format!("subband {i} overlaps another subband")));
                }
            }
        }
        Ok(())
    }

    pub fn n_bands(&self) -> usize {
        self.subbands.len()
    }

    /// Sum of the subbands' two-sided noise bandwidths.
    pub fn total_noise_bandwidth(&self) -> f64 {
        self.subbands.iter().map(Subband::noise_bandwidth).sum()
    }

    /// Checks `Σ P_i = P` where `P_i` is measured on `spectrum`.
    pub fn check_power_conservation(&self, spectrum: &Spectrum, rel_tol: f64) -> Result<f64> {
        let mut total = 0.0;
        for b in &self.subbands {
            total += subband_power(spectrum, b)?;
        }
        let scale = self.total_power.max(f64::MIN_POSITIVE);
        if (total - self.total_power).abs() > rel_tol * scale {
            return Err(Error::Consistency(format!(
                "subband powers sum to {total} W, expected {} W",
                self.total_power
            )));
        }
        Ok(total)
    }
}

/// Known interference power density per frequency bin and the set of bins
/// reserved for other services.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarEnvironmentMap {
    grid: FrequencyGrid,
    interference: Vec<f64>,
    excluded: BTreeSet<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RemRow {
    freq_hz: f64,
    interference_w_per_hz: f64,
    excluded: u8,
}

impl RadarEnvironmentMap {
    pub fn new(grid: FrequencyGrid, interference: Vec<f64>, excluded: BTreeSet<usize>) -> Result<Self> {
        if interference.len() != grid.len() {
            return Err(Error::domain(format!(
                "interference has {} entries, grid has {}",
                interference.len(),
                grid.len()
            )));
        }
        if let Some(k) = interference.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain(format!("interference at bin {k} is negative or not finite")));
        }
        if let Some(&k) = excluded.iter().next_back() {
            if k >= grid.len() {
                return Err(Error::domain(format!("excluded bin {k} outside grid")));
            }
        }
        Ok(Self { grid, interference, excluded })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn interference(&self) -> &[f64] {
        &self.interference
    }

    pub fn excluded(&self) -> &BTreeSet<usize> {
        &self.excluded
    }

    pub fn is_excluded(&self, k: usize) -> bool {
        self.excluded.contains(&k)
    }

    /// Interference energy attributed to bin `k` (W).
    pub fn bin_energy(&self, k: usize) -> f64 {
        self.interference[k] * self.grid.spacing()
    }

    /// Reads the `freq_hz,interference_w_per_hz,excluded` CSV format.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["freq_hz", "interference_w_per_hz", "excluded"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse(format!(
                "REM header must be `{}`, got `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut freqs = Vec::new();
        let mut interference = Vec::new();
        let mut excluded = BTreeSet::new();
        for (k, row) in rdr.deserialize::<RemRow>().enumerate() {
            let row = row?;
            match row.excluded {
                0 => {}
                1 => {
                    excluded.insert(k);
                }
                v => return Err(Error::Parse(format!("row {k}: excluded must be 0 or 1, got {v}"))),
            }
            freqs.push(row.freq_hz);
            interference.push(row.interference_w_per_hz);
        }
        if freqs.len() < 2 {
            return Err(Error::Parse("REM needs at least two rows".into()));
        }
        let spacing = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
        if !(spacing > 0.0) {
            return Err(Error::Parse("REM frequencies must be strictly increasing".into()));
        }
        for (k, pair) in freqs.windows(2).enumerate() {
            let step = pair[1] - pair[0];
            if !(step > 0.0) {
                return Err(Error::Parse(format!("row {}: frequencies not strictly increasing", k + 1)));
            }
            let expected_f = freqs[0] + (k + 1) as f64 * spacing;
            if (pair[1] - expected_f).abs() > 1e-9 * spacing.max(pair[1].abs() * 1e-3) {
                return Err(Error::Parse(format!("row {}: frequency spacing is not uniform", k + 1)));
            }
        }
        let grid = FrequencyGrid::new(freqs[0], freqs[freqs.len() - 1], freqs.len())?;
        Self::new(grid, interference, excluded)
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for k in 0..self.grid.len() {
            wtr.serialize(RemRow {
                freq_hz: self.grid.freq(k),
                interference_w_per_hz: self.interference[k],
                excluded: u8::from(self.is_excluded(k)),
            })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(lo: f64, hi: f64, m: usize, value: f64) -> Spectrum {
        Spectrum::new(FrequencyGrid::new(lo, hi, m).unwrap(), vec![value; m]).unwrap()
    }

    /// Plain trapezoid of a closure on a uniform fine grid; independent of `Spectrum::integrate`.
    fn fine_trapezoid(lo: f64, hi: f64, n: usize, g: impl Fn(f64) -> f64) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = 0.5 * (g(lo) + g(hi));
        for i in 1..n {
            s += g(lo + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(FrequencyGrid::new(1.0, 1.0, 10).is_err());
        assert!(FrequencyGrid::new(0.0, 1.0, 1).is_err());
        let g = FrequencyGrid::new(0.0, 10.0, 101).unwrap();
        assert_eq!(g.freq(0), 0.0);
        assert_eq!(g.freq(100), 10.0);
        assert_eq!(g.node_at(2.5), Some(25));
        assert_eq!(g.node_at(2.55), None);
    }

    #[test]
    fn flat_band_power() {
        let s = flat(0.0, 20.0, 201, 1.0);
        let band = Subband::from_edges(5.0, 15.0, 1.0).unwrap();
        assert!((band_power(&s, &band).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_spectrum_has_zero_power() {
        let s = flat(0.0, 20.0, 201, 0.0);
        let band = Subband::from_edges(5.0, 15.0, 1.0).unwrap();
        assert_eq!(band_power(&s, &band).unwrap(), 0.0);
    }

    #[test]
    fn ramp_band_power_matches_closed_form_and_fine_oracle() {
        // |H|^2 ramps 0 -> 1 across [0, 10]
        let grid = FrequencyGrid::new(0.0, 10.0, 101).unwrap();
        let s = Spectrum::from_fn(grid, |f| (f / 10.0).sqrt()).unwrap();
        let band = Subband::from_edges(0.0, 10.0, 1.0).unwrap();
        let p = band_power(&s, &band).unwrap();
        assert!((p - 5.0).abs() < 1e-12);
        let oracle = fine_trapezoid(0.0, 10.0, 1000, |f| f / 10.0);
        assert!((p - oracle).abs() / oracle < 1e-6);
    }

    #[test]
    fn fractional_edges_interpolate() {
        let grid = FrequencyGrid::new(0.0, 10.0, 11).unwrap();
        let s = Spectrum::from_fn(grid, |f| (f / 10.0).sqrt()).unwrap();
        let band = Subband::from_edges(2.25, 7.75, 1.0).unwrap();
        let exact = (7.75f64.powi(2) - 2.25f64.powi(2)) / 20.0;
        assert!((band_power(&s, &band).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn band_outside_grid_is_domain_error() {
        let s = flat(0.0, 10.0, 11, 1.0);
        let band = Subband::from_edges(8.0, 12.0, 1.0).unwrap();
        assert!(matches!(band_power(&s, &band), Err(Error::Domain(_))));
    }

    #[test]
    fn flat_lowpass_rms() {
        // two-sided width 2 Hz -> one-sided support [0, 1]
        let s = flat(0.0, 1.0, 1025, 1.0);
        let f = rms_bandwidth_lowpass(&s, 2.0).unwrap();
        assert!((f / (2.0 * PI / 3f64.sqrt()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn impulse_at_dc_has_zero_rms() {
        let grid = FrequencyGrid::new(0.0, 1.0, 1025).unwrap();
        let mut m = vec![0.0; 1025];
        m[0] = 1.0;
        let s = Spectrum::new(grid, m).unwrap();
        assert_eq!(rms_bandwidth_lowpass(&s, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_power_rms_is_domain_error() {
        let s = flat(0.0, 1.0, 11, 0.0);
        assert!(rms_bandwidth_lowpass(&s, 2.0).is_err());
        let band = Subband::from_edges(0.2, 0.4, 1.0).unwrap();
        assert!(rms_bandwidth_bandpass(&s, &band).is_err());
    }

    #[test]
    fn raised_cosine_lowpass_matches_fine_oracle() {
        let rc = |f: f64| 0.5 * (1.0 + (PI * f).cos());
        let grid = FrequencyGrid::new(0.0, 1.0, 1025).unwrap();
        let s = Spectrum::from_fn(grid, rc).unwrap();
        let got = rms_bandwidth_lowpass(&s, 2.0).unwrap();
        let num = fine_trapezoid(0.0, 1.0, 10240, |f| rc(f).powi(2) * f * f);
        let den = fine_trapezoid(0.0, 1.0, 10240, |f| rc(f).powi(2));
        let oracle = 2.0 * PI * (num / den).sqrt();
        assert!((got - oracle).abs() / oracle < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn flat_bandpass_rms() {
        let s = flat(0.0, 10.0, 10001, 1.0);
        let band = Subband::new(5.0, 3.0, 1.0).unwrap();
        let f = rms_bandwidth_bandpass(&s, &band).unwrap();
        assert!((f / (2.0 * PI * 3f64.sqrt()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn narrow_band_rms_vanishes() {
        let s = flat(0.0, 10.0, 1001, 1.0);
        let mut prev = f64::INFINITY;
        for w in [1.0, 0.1, 0.01, 0.001] {
            let band = Subband::new(5.0, w, 1.0).unwrap();
            let f = rms_bandwidth_bandpass(&s, &band).unwrap();
            assert!(f < prev);
            prev = f;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn parabolic_bandpass_matches_fine_oracle() {
        let fc = 3.0;
        let shape = |f: f64| (1.0 - (f - fc).powi(2)).max(0.0);
        let grid = FrequencyGrid::new(0.0, 5.0, 5121).unwrap();
        let s = Spectrum::from_fn(grid, shape).unwrap();
        let band = Subband::new(fc, 2.0, 1.0).unwrap();
        let got = rms_bandwidth_bandpass(&s, &band).unwrap();
        let num = fine_trapezoid(2.0, 4.0, 20480, |f| shape(f).powi(2) * (f - fc).powi(2));
        let den = fine_trapezoid(2.0, 4.0, 20480, |f| shape(f).powi(2));
        let oracle = 4.0 * PI * (num / den).sqrt();
        assert!((got - oracle).abs() / oracle < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn plan_rejects_overlap_and_out_of_band() {
        let a = Subband::new(1.0, 1.0, 1.0).unwrap();
        let b = Subband::new(1.4, 1.0, 1.0).unwrap();
        assert!(SubbandPlan::new(10.0, vec![a, b], 1.0, 1.0).is_err());
        let c = Subband::new(4.8, 1.0, 1.0).unwrap();
        assert!(SubbandPlan::new(10.0, vec![c], 1.0, 1.0).is_err());
        let d = Subband::new(2.0, 1.0, 1.0).unwrap();
        assert!(SubbandPlan::new(10.0, vec![a, d], 1.0, 1.0).is_ok());
        assert!(Subband::new(0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn rem_csv_round_trip_and_validation() {
        let text = "freq_hz,interference_w_per_hz,excluded\n0,0.5,0\n1,0.25,1\n2,0,0\n";
        let rem = RadarEnvironmentMap::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(rem.grid().len(), 3);
        assert!(rem.is_excluded(1));
        let mut out = Vec::new();
        rem.to_csv_writer(&mut out).unwrap();
        let back = RadarEnvironmentMap::from_csv_reader(out.as_slice()).unwrap();
        assert_eq!(back, rem);

        let uneven = "freq_hz,interference_w_per_hz,excluded\n0,0,0\n1,0,0\n2.5,0,0\n";
        assert!(RadarEnvironmentMap::from_csv_reader(uneven.as_bytes()).is_err());
        let negative = "freq_hz,interference_w_per_hz,excluded\n0,-1,0\n1,0,0\n";
        assert!(RadarEnvironmentMap::from_csv_reader(negative.as_bytes()).is_err());
        let bad_header = "f,i,e\n0,0,0\n1,0,0\n";
        assert!(RadarEnvironmentMap::from_csv_reader(bad_header.as_bytes()).is_err());
    }

    fn arb_spectrum() -> impl Strategy<Value = Spectrum> {
        prop::collection::vec(0.0f64..3.0, 65).prop_map(|m| {
            Spectrum::new(FrequencyGrid::new(0.0, 8.0, 65).unwrap(), m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn bandpass_rms_bounded_by_width(s in arb_spectrum(), lo in 0.0f64..6.0, w in 0.05f64..2.0) {
            let band = Subband::from_edges(lo, lo + w, 1.0).unwrap();
            if band_power(&s, &band).unwrap() > 1e-12 {
                let f = rms_bandwidth_bandpass(&s, &band).unwrap();
                prop_assert!(f >= 0.0);
                prop_assert!(f <= 2.0 * PI * w * (1.0 + 1e-12));
            }
        }

        #[test]
        fn band_power_is_additive(s in arb_spectrum(), a in 0.0f64..3.0, b in 3.0f64..5.0, c in 5.0f64..8.0) {
            let whole = band_power(&s, &Subband::from_edges(a, c, 1.0).unwrap()).unwrap();
            let left = band_power(&s, &Subband::from_edges(a, b, 1.0).unwrap()).unwrap();
            let right = band_power(&s, &Subband::from_edges(b, c, 1.0).unwrap()).unwrap();
            prop_assert!((whole - left - right).abs() <= 1e-9 * whole.max(1.0));
        }

        #[test]
        fn band_power_is_monotone(s in arb_spectrum(), bump in prop::collection::vec(0.0f64..1.0, 65)) {
            let louder: Vec<f64> = s.magnitude().iter().zip(&bump).map(|(m, d)| m + d).collect();
            let louder = Spectrum::new(*s.grid(), louder).unwrap();
            let band = Subband::from_edges(1.3, 6.1, 1.0).unwrap();
            prop_assert!(band_power(&louder, &band).unwrap() >= band_power(&s, &band).unwrap());
        }

        #[test]
        fn rms_is_scale_invariant(s in arb_spectrum(), k in 0.1f64..10.0) {
            let scaled = Spectrum::new(*s.grid(), s.magnitude().iter().map(|m| m * k).collect()).unwrap();
            if let (Ok(a), Ok(b)) = (rms_bandwidth_lowpass(&s, 16.0), rms_bandwidth_lowpass(&scaled, 16.0)) {
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
            }
            let band = Subband::from_edges(2.0, 5.0, 1.0).unwrap();
            if let (Ok(a), Ok(b)) = (rms_bandwidth_bandpass(&s, &band), rms_bandwidth_bandpass(&scaled, &band)) {
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
            }
        }
    }
}
