//! End-to-end run: select bands, build both waveforms, evaluate the bounds,
//! simulate the estimator and write every artifact.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cogradar::bandselect::SelectionResult;
use cogradar::bounds::{
    bound_sweep, check_prop1, check_prop1_flat, corollary3_min_beta, crlb_cognitive, crlb_conventional, db_grid,
    ezb_cognitive, ezb_conventional, linear_to_db, snr_threshold, uniform_prior_variance, waveform_rms, BoundPoint,
    BoundReport, CognitiveProfile, Prop1Check,
};
use cogradar::montecarlo::{run_sweep, DelayMode, McConfig, McModel, McSweepResult};
use cogradar::waveform::{measured_band_powers, synthesize_cognitive, WaveformSpec, POWER_TOL};
use cogradar::SubbandPlan;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::io::{num, save_json, Table};
use crate::setup;

pub const BANDS_FILE: &str = "bands.json";
pub const WAVEFORM_FILE: &str = "waveform.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const MC_FILE: &str = "mc.csv";
pub const REPORT_FILE: &str = "report.json";
pub const ARTIFACTS: [&str; 5] = [BANDS_FILE, WAVEFORM_FILE, BOUNDS_FILE, MC_FILE, REPORT_FILE];

pub const BOUNDS_HEADER: [&str; 5] = ["snr_db", "crlb_r", "crlb_cr", "ezb_r", "ezb_cr"];
pub const MC_HEADER: [&str; 6] = ["snr_db", "mse", "ci_lo", "ci_hi", "crlb", "ezb"];
pub const WAVEFORM_HEADER: [&str; 2] = ["t_s", "amplitude"];

/// SNR at which both EZBs are compared with their CRLBs.
const HIGH_SNR: f64 = 1e6;
/// Relative agreement required between the closed-form and bisected `β`.
const BETA_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsArtifact {
    pub selection: SelectionResult,
    pub plan: SubbandPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSection {
    pub target_w: f64,
    pub measured_w: f64,
    pub band_powers_w: Vec<f64>,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinBetaSection {
    pub closed_form: f64,
    pub bisection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSection {
    pub ratio: f64,
    pub conventional_snr_db: f64,
    pub cognitive_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSection {
    pub prior_variance_s2: f64,
    pub f_rms_conventional: f64,
    pub f_rms_bands: Vec<f64>,
    pub crlb_conventional_at_unit_snr: f64,
    pub crlb_cognitive_at_unit_snr: f64,
    pub prop1: Prop1Check,
    pub min_common_beta: MinBetaSection,
    pub high_snr_ratio_conventional: f64,
    pub high_snr_ratio_cognitive: f64,
    pub thresholds: ThresholdSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSection {
    pub n_trials: usize,
    pub plateau_s2: f64,
    pub departure_level_s2: f64,
    pub departure_conventional_db: Option<f64>,
    pub departure_cognitive_db: Option<f64>,
    pub min_mse_over_ezb: f64,
}

/// Pass/fail outcome of every check the pipeline performs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub selection_valid: bool,
    pub power_conserved: bool,
    pub prop1_holds: bool,
    pub prop1_matches_crlb: bool,
    pub min_beta_matches_bisection: bool,
    pub ezb_zero_snr_is_prior: bool,
    pub ezb_high_snr_is_crlb: bool,
    pub threshold_ordering: bool,
    pub mc_intervals_valid: bool,
    pub cognitive_departs_first: bool,
}

impl Verdicts {
    pub fn all(&self) -> bool {
        let v = serde_json::to_value(self).expect("verdicts serialize");
        v.as_object().is_some_and(|m| m.values().all(|x| x.as_bool() == Some(true)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub n_bands: usize,
    pub selection_objective_w: f64,
    pub power: PowerSection,
    pub bounds: BoundsSection,
    pub mc: McSection,
    pub verdicts: Verdicts,
}

/// Everything the pipeline computes, before it is written out.
pub struct PipelineOutput {
    pub bands: BandsArtifact,
    pub waveform: WaveformSpec,
    pub bound_rows: Vec<(f64, BoundPoint)>,
    pub mc_conventional: McSweepResult,
    pub mc_cognitive: McSweepResult,
    pub report: Report,
}

fn snr_db_of(points: &McSweepResult) -> impl Iterator<Item = f64> + '_ {
    points.config.snr_grid.iter().map(|s| linear_to_db(*s))
}

/// Bisects the common `β` at which a flat plan over `plan`'s bands ties
/// with the conventional radar.
fn bisect_min_beta(plan: &SubbandPlan) -> CliResult<f64> {
    let margin = |beta: f64| -> CliResult<f64> {
        let mut p = plan.clone();
        p.subbands.iter_mut().for_each(|b| b.beta = beta);
        Ok(check_prop1_flat(&p)?.margin)
    };
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    if margin(lo)? > 0.0 || margin(hi)? < 0.0 {
        return Err(CliError::Numerical("common beta tie lies outside [1e-6, 1e6]".into()));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if margin(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Runs every stage in memory.
pub fn compute(cfg: &PipelineConfig) -> CliResult<PipelineOutput> {
    cfg.validate()?;
    let r = &cfg.radar;
    let rem = setup::load_rem(&cfg.selection.rem_path)?;
    setup::check_rem_alignment(&rem, r.b_h_hz, r.t_s_sec)?;
    let constraints = cfg.constraints()?;
    let selection = setup::run_selection(&rem, &constraints, cfg.selection.method)?;

    let base = setup::base_waveform(r.b_h_hz, r.p_watts, cfg.sample_rate(), r.t_s_sec, r.taper_exponent)?;
    let plan = setup::build_plan(&selection, &cfg.allocation.to_allocation()?, &base, r.p_watts, r.n0_w_per_hz)?;
    let cognitive = synthesize_cognitive(&plan, &base)?;
    let band_powers = measured_band_powers(&plan, &cognitive)?;
    let measured: f64 = band_powers.iter().sum();
    let power_error = (measured - r.p_watts).abs() / r.p_watts;

    // bounds
    let b = &cfg.bounds;
    let profile = CognitiveProfile::from_waveform(&plan, &cognitive)?;
    let f_full = waveform_rms(&base)?;
    let prior = uniform_prior_variance(r.t_s_sec)?;
    let snrs = db_grid(b.snr_db_lo, b.snr_db_hi, b.points)?;
    let sweep = bound_sweep(&profile, f_full, prior, &snrs, b.pulses)?;
    let bound_rows: Vec<(f64, BoundPoint)> = snrs.iter().map(|s| linear_to_db(*s)).zip(sweep).collect();

    let alphas: Vec<f64> = profile
        .f_rms
        .iter()
        .zip(&profile.noise_bandwidths)
        .map(|(f, bw)| f / (2.0 * PI * bw))
        .collect();
    let full_alpha = f_full / (2.0 * PI * r.b_h_hz);
    let prop1 = check_prop1(&plan, &band_powers, &alphas, full_alpha)?;
    let unit = BoundReport::evaluate(&profile, f_full, prior, 1.0, 1)?;
    let crlb_order = unit.crlb_cognitive <= unit.crlb_conventional * (1.0 + 1e-12);

    let closed_beta = corollary3_min_beta(r.b_h_hz, &profile.noise_bandwidths)?;
    let bisected_beta = bisect_min_beta(&plan)?;

    let zero_r = ezb_conventional(0.0, f_full, prior)?;
    let zero_cr = ezb_cognitive(0.0, &profile.per_band_at(0.0), prior)?;
    let high = BoundReport::evaluate(&profile, f_full, prior, HIGH_SNR, 1)?;
    let high_r = high.ezb_conventional / high.crlb_conventional;
    let high_cr = high.ezb_cognitive / high.crlb_cognitive;
    let in_limit = |x: f64| (1.0..=1.01).contains(&x);

    let pulses = b.pulses as f64;
    let (lo, hi) = (snrs[0], snrs[snrs.len() - 1]);
    let th_r = snr_threshold(
        |s| ezb_conventional(s * pulses, f_full, prior),
        |s| crlb_conventional(s * pulses, f_full),
        b.threshold_ratio,
        lo,
        hi,
    )?;
    let th_cr = snr_threshold(
        |s| ezb_cognitive(profile.snr_tilde_at(s * pulses), &profile.per_band_at(s * pulses), prior),
        |s| crlb_cognitive(&profile.per_band_at(s * pulses)),
        b.threshold_ratio,
        lo,
        hi,
    )?;

    // monte carlo
    let m = &cfg.mc;
    let mc_cfg = McConfig {
        n_trials: m.n_trials,
        snr_grid: db_grid(m.snr_db_lo, m.snr_db_hi, m.points)?,
        t_s: r.t_s_sec,
        pulse_width: cfg.pulse_width(),
        tau_grid_oversample: m.oversample,
        seed: cfg.seed,
        interpolate_peak: m.interpolate_peak,
        delay_mode: DelayMode::Uniform,
    };
    let mc_conventional = run_sweep(&McModel::from_waveform(&base, r.t_s_sec)?, &mc_cfg)?;
    let mc_cognitive = run_sweep(&McModel::from_waveform(&cognitive, r.t_s_sec)?, &mc_cfg)?;
    let plateau = mc_cfg.clamped_error_variance();
    let level = 0.5 * plateau;
    let dep_r = mc_conventional.departure_snr_db(level);
    let dep_cr = mc_cognitive.departure_snr_db(level);
    let all_points = || mc_conventional.points.iter().chain(&mc_cognitive.points);
    let min_ratio = all_points().map(|p| p.mse / p.ezb).fold(f64::INFINITY, f64::min);
    let ci_ok = all_points().all(|p| p.ci_lo <= p.mse && p.mse <= p.ci_hi && p.ci_lo >= 0.0);
    let departs_first = match (dep_cr, dep_r) {
        (Some(c), Some(v)) => c < v,
        (Some(_), None) => true,
        _ => false,
    };

    let verdicts = Verdicts {
        selection_valid: true,
        power_conserved: power_error <= POWER_TOL,
        prop1_holds: prop1.holds,
        prop1_matches_crlb: prop1.holds == crlb_order,
        min_beta_matches_bisection: (closed_beta - bisected_beta).abs() <= BETA_AGREEMENT * closed_beta,
        ezb_zero_snr_is_prior: zero_r == prior && zero_cr == prior,
        ezb_high_snr_is_crlb: in_limit(high_r) && in_limit(high_cr),
        threshold_ordering: th_cr <= th_r,
        mc_intervals_valid: ci_ok,
        cognitive_departs_first: departs_first,
    };
    let report = Report {
        seed: cfg.seed,
        n_bands: plan.n_bands(),
        selection_objective_w: selection.objective,
        power: PowerSection {
            target_w: r.p_watts,
            measured_w: measured,
            band_powers_w: band_powers,
            relative_error: power_error,
        },
        bounds: BoundsSection {
            prior_variance_s2: prior,
            f_rms_conventional: f_full,
            f_rms_bands: profile.f_rms.clone(),
            crlb_conventional_at_unit_snr: unit.crlb_conventional,
            crlb_cognitive_at_unit_snr: unit.crlb_cognitive,
            prop1,
            min_common_beta: MinBetaSection { closed_form: closed_beta, bisection: bisected_beta },
            high_snr_ratio_conventional: high_r,
            high_snr_ratio_cognitive: high_cr,
            thresholds: ThresholdSection {
                ratio: b.threshold_ratio,
                conventional_snr_db: linear_to_db(th_r),
                cognitive_snr_db: linear_to_db(th_cr),
            },
        },
        mc: McSection {
            n_trials: m.n_trials,
            plateau_s2: plateau,
            departure_level_s2: level,
            departure_conventional_db: dep_r,
            departure_cognitive_db: dep_cr,
            min_mse_over_ezb: min_ratio,
        },
        verdicts,
    };
    Ok(PipelineOutput {
        bands: BandsArtifact { selection, plan },
        waveform: cognitive,
        bound_rows,
        mc_conventional,
        mc_cognitive,
        report,
    })
}

pub fn bounds_table(rows: &[(f64, BoundPoint)]) -> Table {
    let mut t = Table::new(&BOUNDS_HEADER);
    for (db, p) in rows {
        t.push(&[*db, p.crlb_r, p.crlb_cr, p.ezb_r, p.ezb_cr]);
    }
    t
}

/// MC rows. With more than one sweep a leading `radar` column names each.
pub fn mc_table(sweeps: &[(&str, &McSweepResult)]) -> Table {
    let labelled = sweeps.len() > 1;
    let mut header: Vec<&str> = if labelled { vec!["radar"] } else { Vec::new() };
    header.extend(MC_HEADER);
    let mut t = Table::new(&header);
    for (name, sweep) in sweeps {
        for (db, p) in snr_db_of(sweep).zip(&sweep.points) {
            let mut cells = if labelled { vec![name.to_string()] } else { Vec::new() };
            cells.extend([db, p.mse, p.ci_lo, p.ci_hi, p.crlb, p.ezb].map(num));
            t.push_cells(cells);
        }
    }
    t
}

pub fn waveform_table(wf: &WaveformSpec) -> Table {
    let mut t = Table::new(&WAVEFORM_HEADER);
    for (time, x) in wf.sample_times().zip(wf.samples()) {
        t.push(&[time, *x]);
    }
    t
}

/// Writes all artifacts into `dir`.
pub fn write_artifacts(out: &PipelineOutput, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = |name: &str| dir.join(name);
    save_json(&path(BANDS_FILE), &out.bands)?;
    waveform_table(&out.waveform).save(&path(WAVEFORM_FILE))?;
    bounds_table(&out.bound_rows).save(&path(BOUNDS_FILE))?;
    mc_table(&[("conventional", &out.mc_conventional), ("cognitive", &out.mc_cognitive)]).save(&path(MC_FILE))?;
    save_json(&path(REPORT_FILE), &out.report)?;
    Ok(ARTIFACTS.iter().map(|n| path(n)).collect())
}

/// Computes and writes the pipeline described by `cfg`.
pub fn run_pipeline(cfg: &PipelineConfig) -> CliResult<Report> {
    let out = compute(cfg)?;
    write_artifacts(&out, &cfg.output_dir)?;
    Ok(out.report)
}
