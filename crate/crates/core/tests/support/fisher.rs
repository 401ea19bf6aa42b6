//! Time-domain Fisher information of synthesized pulses.
//!
//! A pulse is rebuilt from its spectrum nodes by a periodic inverse FFT at
//! 32 samples per period of its highest frequency, differentiated with a
//! sixth-order central difference and integrated over one period.

#![allow(dead_code)]

use cogradar::waveform::BandComponent;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

const OVERSAMPLE: usize = 32;

/// `∫h'² / ∫h²` of the real pulse with one-sided power nodes `power[k]` at
/// frequency `k / period`. The last node is a band edge and counts half.
pub fn derivative_energy_ratio(power: &[f64], period: f64) -> f64 {
    let k_max = power.len() - 1;
    let n = (OVERSAMPLE * 2 * k_max).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, p) in power.iter().enumerate() {
        let p = if k == k_max && k > 0 { 0.5 * p } else { *p };
        let a = p.sqrt();
        buf[k] = Complex64::new(a, 0.0);
        if k > 0 {
            buf[n - k] = Complex64::new(a, 0.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let h: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let dt = period / n as f64;
    let at = |i: isize| h[i.rem_euclid(n as isize) as usize];
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n as isize {
        let d = (-at(i - 3) + 9.0 * at(i - 2) - 45.0 * at(i - 1) + 45.0 * at(i + 1) - 9.0 * at(i + 2) + at(i + 3))
            / (60.0 * dt);
        num += d * d;
        den += at(i) * at(i);
    }
    num / den
}

/// Ratio for a full-band pulse whose nodes start at DC.
pub fn lowpass_ratio(component: &BandComponent) -> f64 {
    let power: Vec<f64> = component.spectrum.magnitude().iter().map(|m| m * m).collect();
    let period = 1.0 / component.spectrum.grid().spacing();
    derivative_energy_ratio(&power, period)
}

/// Ratio for a band folded about its center onto an equivalent lowpass
/// pulse: node `j` of the lowpass pulse sits at `2 j df` and carries the mean
/// of the two band nodes `j` steps either side of the center.
pub fn folded_band_ratio(component: &BandComponent) -> f64 {
    let m = component.spectrum.magnitude();
    let last = m.len() - 1;
    assert!(last.is_multiple_of(2), "band must span an even number of bins");
    let c = last / 2;
    let power: Vec<f64> = (0..=c).map(|j| 0.5 * (m[c + j] * m[c + j] + m[c - j] * m[c - j])).collect();
    let period = 0.5 / component.spectrum.grid().spacing();
    derivative_energy_ratio(&power, period)
}
