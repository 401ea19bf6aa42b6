//! Interference-aware subband selection, constant-power multiband waveform
//! synthesis, delay-estimation bounds (CRLB and extended Ziv-Zakai) and a
//! Monte Carlo harness that checks the bounds against a maximum-likelihood
//! delay estimator.
//!
//! Frequencies and bandwidths are stored in Hz. Spectra are stored one-sided
//! on `[0, B_h/2]` with implied conjugate symmetry, so the power of a band is
//! twice its one-sided integral. RMS bandwidths are returned in rad/s so that
//! `1 / (snr * f_rms^2)` is in seconds squared.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandselect;
pub mod bounds;
mod error;
pub mod montecarlo;
pub mod rng;
pub mod special;
pub mod spectrum;
pub mod waveform;

pub use error::{Error, Result};
pub use spectrum::{FrequencyGrid, RadarEnvironmentMap, Spectrum, Subband, SubbandPlan};
