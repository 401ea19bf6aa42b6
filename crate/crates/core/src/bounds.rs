//! Delay-estimation bounds for the conventional and cognitive radars.
//!
//! SNRs are linear. rms bandwidths are in rad/s, so every bound is in s².
//! A cognitive configuration is described by a [`CognitiveProfile`], which
//! maps the conventional SNR `P / (N_0 B_h)` to the per-band quantities at
//! the same transmit power and noise density.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::special::{gamma_reg_three_halves, gaussian_q};
use crate::spectrum::{rms_bandwidth_lowpass, SubbandPlan};
use crate::waveform::{measured_band_powers, WaveformSpec};
use crate::{spectrum, Error, Result};

/// rms bandwidth of a flat spectrum relative to its two-sided width.
pub const FLAT_ALPHA: f64 = 0.288_675_134_594_812_9;

/// Default EZB/CRLB ratio that marks the asymptotic region.
pub const DEFAULT_THRESHOLD_RATIO: f64 = 1.25;

/// Relative slack used when comparing information totals.
pub const COMPARE_REL_TOL: f64 = 1e-12;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {x}")))
    }
}

fn check_non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be non-negative, got {x}")))
    }
}

/// Prior variance of a delay uniform on an interval of length `span`.
pub fn uniform_prior_variance(span: f64) -> Result<f64> {
    check_positive("prior span", span)?;
    Ok(span * span / 12.0)
}

/// Fisher information `Σ snr_i f_i²` of a set of bands.
pub fn band_fisher_information(per_band: &[(f64, f64)]) -> Result<f64> {
    let mut total = 0.0;
    for (i, &(snr, f)) in per_band.iter().enumerate() {
        if !(snr >= 0.0 && snr.is_finite() && f >= 0.0 && f.is_finite()) {
            return Err(Error::domain(format!("band {i}: snr {snr}, f_rms {f}")));
        }
        total += snr * f * f;
    }
    Ok(total)
}

/// `1 / (snr f_rms²)`.
pub fn crlb_conventional(snr: f64, f_rms: f64) -> Result<f64> {
    check_positive("snr", snr)?;
    check_positive("f_rms", f_rms)?;
    Ok(1.0 / (snr * f_rms * f_rms))
}

/// `1 / Σ snr_i f_i²`.
pub fn crlb_cognitive(per_band: &[(f64, f64)]) -> Result<f64> {
    let info = band_fisher_information(per_band)?;
    if !(info > 0.0) {
        return Err(Error::domain("no band carries delay information"));
    }
    Ok(1.0 / info)
}

fn ezb(snr: f64, info: f64, prior_variance: f64) -> Result<f64> {
    if snr == 0.0 {
        return Ok(prior_variance);
    }
    let prior_term = prior_variance * 2.0 * gaussian_q((snr / 2.0).sqrt());
    let asymptotic = gamma_reg_three_halves(snr / 4.0)? / info;
    Ok(prior_term + asymptotic)
}

/// Extended Ziv-Zakai bound of the conventional radar.
pub fn ezb_conventional(snr: f64, f_rms: f64, prior_variance: f64) -> Result<f64> {
    check_non_negative("snr", snr)?;
    check_positive("f_rms", f_rms)?;
    check_positive("prior variance", prior_variance)?;
    ezb(snr, snr * f_rms * f_rms, prior_variance)
}

/// Extended Ziv-Zakai bound of the cognitive radar.
pub fn ezb_cognitive(snr_tilde: f64, per_band: &[(f64, f64)], prior_variance: f64) -> Result<f64> {
    check_non_negative("snr_tilde", snr_tilde)?;
    check_positive("prior variance", prior_variance)?;
    let info = band_fisher_information(per_band)?;
    if snr_tilde > 0.0 && !(info > 0.0) {
        return Err(Error::domain("no band carries delay information"));
    }
    ezb(snr_tilde, info, prior_variance)
}

/// Outcome of the in-band power comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop1Check {
    pub holds: bool,
    /// `Σ P_i α_i² B_i`, W·Hz.
    pub lhs: f64,
    /// `P α² B_h`, W·Hz.
    pub rhs: f64,
    /// `lhs - rhs`.
    pub margin: f64,
}

/// Compares `Σ P_i α_i² B_i` against `P α² B_h`, with `B_i` the two-sided
/// noise bandwidth of each band and `P` the plan's total power.
///
/// Holds exactly when the cognitive CRLB does not exceed the conventional
/// one. Values within [`COMPARE_REL_TOL`] of the boundary count as holding.
pub fn check_prop1(plan: &SubbandPlan, band_powers: &[f64], band_alphas: &[f64], full_alpha: f64) -> Result<Prop1Check> {
    let n = plan.n_bands();
    if band_powers.len() != n || band_alphas.len() != n {
        return Err(Error::domain(format!(
            "{n} bands but {} powers and {} alphas",
            band_powers.len(),
            band_alphas.len()
        )));
    }
    for &a in band_alphas.iter().chain(std::iter::once(&full_alpha)) {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1], got {a}")));
        }
    }
    let lhs: f64 = plan
        .subbands
        .iter()
        .zip(band_powers)
        .zip(band_alphas)
        .map(|((b, p), a)| p * a * a * b.noise_bandwidth())
        .sum();
    let rhs = plan.total_power * full_alpha * full_alpha * plan.full_band;
    let margin = lhs - rhs;
    Ok(Prop1Check {
        holds: margin >= -COMPARE_REL_TOL * rhs.abs().max(lhs.abs()),
        lhs,
        rhs,
        margin,
    })
}

/// Band powers of a plan cut from a flat full-band spectrum, `β_i² P B_i / B_h`.
pub fn flat_band_powers(plan: &SubbandPlan) -> Vec<f64> {
    plan.subbands
        .iter()
        .map(|b| b.beta * b.beta * plan.total_power * b.noise_bandwidth() / plan.full_band)
        .collect()
}

/// [`check_prop1`] for a flat plan with flat-spectrum alphas.
pub fn check_prop1_flat(plan: &SubbandPlan) -> Result<Prop1Check> {
    let powers = flat_band_powers(plan);
    check_prop1(plan, &powers, &vec![FLAT_ALPHA; plan.n_bands()], FLAT_ALPHA)
}

/// Common `β` at which a flat cognitive plan with the given noise
/// bandwidths matches the conventional CRLB: `B_h / sqrt(Σ B_i²)`.
pub fn corollary3_min_beta(b_h: f64, noise_bandwidths: &[f64]) -> Result<f64> {
    check_positive("B_h", b_h)?;
    if noise_bandwidths.is_empty() {
        return Err(Error::domain("no bandwidths given"));
    }
    let mut sum_sq = 0.0;
    for &b in noise_bandwidths {
        check_positive("bandwidth", b)?;
        sum_sq += b * b;
    }
    Ok(b_h / sum_sq.sqrt())
}

/// Per-band description of a cognitive configuration, independent of SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveProfile {
    pub full_band: f64,
    /// Fraction of the total power in each band.
    pub power_shares: Vec<f64>,
    /// Two-sided noise bandwidth of each band, Hz.
    pub noise_bandwidths: Vec<f64>,
    /// rms bandwidth of each band, rad/s.
    pub f_rms: Vec<f64>,
}

impl CognitiveProfile {
    pub fn new(full_band: f64, power_shares: Vec<f64>, noise_bandwidths: Vec<f64>, f_rms: Vec<f64>) -> Result<Self> {
        check_positive("B_h", full_band)?;
        let n = power_shares.len();
        if n == 0 || noise_bandwidths.len() != n || f_rms.len() != n {
            return Err(Error::domain("profile vectors must be nonempty and of equal length"));
        }
        for i in 0..n {
            check_non_negative("power share", power_shares[i])?;
            check_positive("noise bandwidth", noise_bandwidths[i])?;
            check_non_negative("f_rms", f_rms[i])?;
        }
        Ok(Self { full_band, power_shares, noise_bandwidths, f_rms })
    }

    /// Flat plan: shares from the band `β`s, flat rms bandwidths.
    pub fn flat(plan: &SubbandPlan) -> Result<Self> {
        plan.validate()?;
        let powers = flat_band_powers(plan);
        let total: f64 = powers.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("plan carries no power"));
        }
        let bw: Vec<f64> = plan.subbands.iter().map(|b| b.noise_bandwidth()).collect();
        let f = bw.iter().map(|b| 2.0 * PI * FLAT_ALPHA * b).collect();
        Self::new(plan.full_band, powers.iter().map(|p| p / total).collect(), bw, f)
    }

    /// Profile measured on a synthesized cognitive waveform.
    pub fn from_waveform(plan: &SubbandPlan, waveform: &WaveformSpec) -> Result<Self> {
        let powers = measured_band_powers(plan, waveform)?;
        let total: f64 = powers.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("waveform carries no power"));
        }
        let mut f = Vec::with_capacity(powers.len());
        for (b, p) in plan.subbands.iter().zip(&powers) {
            let c = waveform
                .component_for(b)
                .ok_or_else(|| Error::domain(format!("waveform has no component for band at {} Hz", b.f_center)))?;
            f.push(if *p > 0.0 { spectrum::rms_bandwidth_bandpass(&c.spectrum, &c.band)? } else { 0.0 });
        }
        let bw = plan.subbands.iter().map(|b| b.noise_bandwidth()).collect();
        Self::new(plan.full_band, powers.iter().map(|p| p / total).collect(), bw, f)
    }

    pub fn n_bands(&self) -> usize {
        self.power_shares.len()
    }

    pub fn total_noise_bandwidth(&self) -> f64 {
        self.noise_bandwidths.iter().sum()
    }

    /// `(snr_i, f_i)` when the conventional radar sees `snr`.
    pub fn per_band_at(&self, snr: f64) -> Vec<(f64, f64)> {
        self.power_shares
            .iter()
            .zip(&self.noise_bandwidths)
            .zip(&self.f_rms)
            .map(|((s, b), f)| (snr * s * self.full_band / b, *f))
            .collect()
    }

    /// `Σ P_i / (N_0 Σ B_i)` when the conventional radar sees `snr`.
    pub fn snr_tilde_at(&self, snr: f64) -> f64 {
        let share: f64 = self.power_shares.iter().sum();
        snr * share * self.full_band / self.total_noise_bandwidth()
    }

    /// Fisher information per unit conventional SNR.
    pub fn information_per_snr(&self) -> f64 {
        self.power_shares
            .iter()
            .zip(&self.noise_bandwidths)
            .zip(&self.f_rms)
            .map(|((s, b), f)| s * self.full_band / b * f * f)
            .sum()
    }
}

/// rms bandwidth of a flat full band `B_h`, rad/s.
pub fn flat_fullband_rms(b_h: f64) -> f64 {
    2.0 * PI * FLAT_ALPHA * b_h
}

/// rms bandwidth of a conventional waveform, rad/s.
pub fn waveform_rms(waveform: &WaveformSpec) -> Result<f64> {
    rms_bandwidth_lowpass(&waveform.spectrum(), waveform.full_band())
}

/// Both radars at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub snr_operating: f64,
    pub crlb_conventional: f64,
    pub crlb_cognitive: f64,
    pub ezb_conventional: f64,
    pub ezb_cognitive: f64,
    pub prior_variance: f64,
    /// `(SNR_i, F̄_i)` per band.
    pub per_band: Vec<(f64, f64)>,
    pub condition_prop1: bool,
}

impl BoundReport {
    /// Bounds at conventional SNR `snr` times `pulses`.
    pub fn evaluate(
        profile: &CognitiveProfile,
        f_rms_full: f64,
        prior_variance: f64,
        snr: f64,
        pulses: u32,
    ) -> Result<Self> {
        if pulses == 0 {
            return Err(Error::domain("pulse count must be at least 1"));
        }
        let snr = snr * pulses as f64;
        let per_band = profile.per_band_at(snr);
        let info_r = snr * f_rms_full * f_rms_full;
        let info_cr = band_fisher_information(&per_band)?;
        Ok(Self {
            snr_operating: snr,
            crlb_conventional: crlb_conventional(snr, f_rms_full)?,
            crlb_cognitive: crlb_cognitive(&per_band)?,
            ezb_conventional: ezb_conventional(snr, f_rms_full, prior_variance)?,
            ezb_cognitive: ezb_cognitive(profile.snr_tilde_at(snr), &per_band, prior_variance)?,
            prior_variance,
            per_band,
            condition_prop1: info_cr >= info_r * (1.0 - COMPARE_REL_TOL),
        })
    }
}

/// One row of a bound sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub snr: f64,
    pub crlb_r: f64,
    pub crlb_cr: f64,
    pub ezb_r: f64,
    pub ezb_cr: f64,
}

/// Evaluates both radars over `snrs` in parallel; rows keep the input order.
pub fn bound_sweep(
    profile: &CognitiveProfile,
    f_rms_full: f64,
    prior_variance: f64,
    snrs: &[f64],
    pulses: u32,
) -> Result<Vec<BoundPoint>> {
    snrs.par_iter()
        .map(|&snr| {
            let r = BoundReport::evaluate(profile, f_rms_full, prior_variance, snr, pulses)?;
            Ok(BoundPoint {
                snr: r.snr_operating,
                crlb_r: r.crlb_conventional,
                crlb_cr: r.crlb_cognitive,
                ezb_r: r.ezb_conventional,
                ezb_cr: r.ezb_cognitive,
            })
        })
        .collect()
}

/// `points` SNRs spaced evenly in dB over `[lo_db, hi_db]`, returned linear.
pub fn db_grid(lo_db: f64, hi_db: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !lo_db.is_finite() || !hi_db.is_finite() || hi_db < lo_db {
        return Err(Error::domain(format!("bad SNR grid {lo_db}:{hi_db}:{points}")));
    }
    if points == 1 {
        return Ok(vec![db_to_linear(lo_db)]);
    }
    let step = (hi_db - lo_db) / (points - 1) as f64;
    Ok((0..points).map(|k| db_to_linear(lo_db + step * k as f64)).collect())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Grid points used by [`snr_threshold`] to bracket the crossing.
pub const THRESHOLD_SCAN_POINTS: usize = 2001;
/// Bisection tolerance of [`snr_threshold`] in natural-log SNR.
pub const THRESHOLD_LOG_TOL: f64 = 1e-3;

/// SNR above which `bound / crlb` stays below `ratio`, searched on `[lo, hi]`.
///
/// The ratio rises from zero at low SNR, peaks and then decays to one. The
/// crossing is taken on the decaying side: the last scan point still at or
/// above `ratio` and its successor bracket a bisection in log-SNR. If the
/// ratio never reaches `ratio`, `lo` is returned. The ratio must not increase
/// between its peak and the bracket.
pub fn snr_threshold(
    bound: impl Fn(f64) -> Result<f64> + Sync,
    crlb: impl Fn(f64) -> Result<f64> + Sync,
    ratio: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    check_positive("lower SNR", lo)?;
    check_positive("upper SNR", hi)?;
    if !(hi > lo) {
        return Err(Error::domain("upper SNR must exceed lower SNR"));
    }
    if !(ratio > 0.0) {
        return Err(Error::domain("ratio must be positive"));
    }
    let eval = |snr: f64| -> Result<f64> { Ok(bound(snr)? / crlb(snr)?) };
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let n = THRESHOLD_SCAN_POINTS;
    let xs: Vec<f64> = (0..n)
        .map(|k| ln_lo + (ln_hi - ln_lo) * k as f64 / (n - 1) as f64)
        .collect();
    let rs = xs.par_iter().map(|x| eval(x.exp())).collect::<Result<Vec<_>>>()?;
    let Some(last) = rs.iter().rposition(|r| *r >= ratio) else {
        return Ok(lo);
    };
    if last == n - 1 {
        return Err(Error::NotFound(format!(
            "bound/CRLB ratio still {} at SNR {hi}, above {ratio}",
            rs[n - 1]
        )));
    }
    let peak = rs[..=last]
        .iter()
        .enumerate()
        .fold(0, |best, (k, r)| if *r > rs[best] { k } else { best });
    for k in peak..=last {
        if rs[k + 1] > rs[k] * (1.0 + 1e-9) {
            return Err(Error::Consistency(format!(
                "bound/CRLB ratio increases near SNR {}",
                xs[k].exp()
            )));
        }
    }
    let (mut a, mut b) = (xs[last], xs[last + 1]);
    while b - a > THRESHOLD_LOG_TOL {
        let m = 0.5 * (a + b);
        if eval(m.exp())? >= ratio {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}
