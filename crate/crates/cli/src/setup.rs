//! Construction steps shared by the subcommands and the pipeline.

use std::fs::File;
use std::path::Path;

use cogradar::bandselect::{check_selection, select_bands, SelectionConstraints, SelectionMethod, SelectionResult};
use cogradar::waveform::{allocate_power, plan_with_betas, synthesize_fullband, PowerAllocation, WaveformSpec};
use cogradar::{RadarEnvironmentMap, SubbandPlan};

use crate::error::{CliError, CliResult};

pub fn load_rem(path: &Path) -> CliResult<RadarEnvironmentMap> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(RadarEnvironmentMap::from_csv_reader(f)?)
}

fn whole(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0)
}

/// Checks that every REM bin edge lands on the `1 / t_s` waveform grid and
/// that the map stays inside `[0, b_h / 2]`.
pub fn check_rem_alignment(rem: &RadarEnvironmentMap, b_h: f64, t_s: f64) -> CliResult<()> {
    let g = rem.grid();
    if !whole(g.spacing() * t_s) || !whole(g.f_lo() * t_s) {
        return Err(CliError::Config(format!(
            "REM grid (start {} Hz, spacing {} Hz) is not aligned with the 1/t_s = {} Hz waveform grid",
            g.f_lo(),
            g.spacing(),
            1.0 / t_s
        )));
    }
    if g.f_lo() < 0.0 || g.f_hi() + g.spacing() > 0.5 * b_h * (1.0 + 1e-9) {
        return Err(CliError::Config(format!(
            "REM bins span [{}, {}] Hz, outside [0, {}] Hz",
            g.f_lo(),
            g.f_hi() + g.spacing(),
            0.5 * b_h
        )));
    }
    Ok(())
}

/// Runs the selector and verifies the placement structurally.
pub fn run_selection(
    rem: &RadarEnvironmentMap,
    c: &SelectionConstraints,
    method: SelectionMethod,
) -> CliResult<SelectionResult> {
    let r = select_bands(rem, c, method)?;
    check_selection(rem, c, &r)?;
    Ok(r)
}

/// Reference pulse with `|H|² ∝ (1 - 2f/B_h)^k` and power `p`.
pub fn base_waveform(b_h: f64, p: f64, sample_rate: f64, t_s: f64, taper_exponent: f64) -> CliResult<WaveformSpec> {
    let half = 0.5 * taper_exponent;
    let shape = move |f: f64| (1.0 - 2.0 * f / b_h).max(0.0).powf(half);
    Ok(synthesize_fullband(b_h, p, sample_rate, t_s, shape)?)
}

/// Plan over the selected bands with `β`s from `scheme`.
pub fn build_plan(
    selection: &SelectionResult,
    scheme: &PowerAllocation,
    base: &WaveformSpec,
    p: f64,
    n0: f64,
) -> CliResult<SubbandPlan> {
    let betas = allocate_power(&selection.bands, scheme, &base.spectrum(), p)?;
    Ok(plan_with_betas(base.full_band(), &selection.bands, &betas, p, n0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogradar::FrequencyGrid;
    use std::collections::BTreeSet;

    fn rem(f_lo: f64, spacing: f64, bins: usize) -> RadarEnvironmentMap {
        let g = FrequencyGrid::with_spacing(f_lo, spacing, bins).unwrap();
        RadarEnvironmentMap::new(g, vec![1.0; bins], BTreeSet::new()).unwrap()
    }

    #[test]
    fn alignment_rules() {
        assert!(check_rem_alignment(&rem(0.0, 2.0, 64), 256.0, 2.0).is_ok());
        assert!(check_rem_alignment(&rem(0.0, 0.3, 64), 256.0, 2.0).is_err());
        assert!(check_rem_alignment(&rem(0.0, 2.0, 65), 256.0, 2.0).is_err());
    }

    #[test]
    fn zero_taper_is_flat() {
        let wf = base_waveform(64.0, 2.0, 256.0, 1.0, 0.0).unwrap();
        let m = wf.spectrum().magnitude().to_vec();
        assert!(m.iter().all(|x| (x - m[0]).abs() < 1e-15));
        assert!((wf.total_power() - 2.0).abs() < 1e-12);
    }
}
