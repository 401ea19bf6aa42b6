use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cogradar::bandselect::{SelectionConstraints, SelectionMethod};
use cogradar::bounds::{
    bound_sweep, check_prop1_flat, corollary3_min_beta, crlb_cognitive, crlb_conventional, db_grid, ezb_cognitive,
    ezb_conventional, flat_fullband_rms, linear_to_db, snr_threshold, uniform_prior_variance, CognitiveProfile,
    Prop1Check, DEFAULT_THRESHOLD_RATIO,
};
use cogradar::montecarlo::{run_sweep, DelayMode, McConfig, McModel};
use cogradar::waveform::{synthesize_cognitive, WaveformKind};
use cogradar::{FrequencyGrid, Spectrum, SubbandPlan};
use cogradar_cli::io::{load_json, save_json, Table};
use cogradar_cli::pipeline::{bounds_table, mc_table, waveform_table};
use cogradar_cli::{setup, CliError, CliResult, PipelineConfig, THREADS_ENV};

#[derive(Parser)]
#[command(name = "cogradar", version, about = "Cognitive sub-Nyquist radar bounds and simulation")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Choose subbands from a radar environment map.
    Select(SelectArgs),
    /// Synthesize the conventional pulse or a cognitive waveform.
    Synth(SynthArgs),
    /// Evaluate CRLB and EZB curves for a plan.
    Bounds(BoundsArgs),
    /// Monte Carlo delay-estimation sweep.
    Mc(McArgs),
    /// Run the full pipeline from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    rem: PathBuf,
    #[arg(long)]
    n_bands: Option<usize>,
    #[arg(long, conflicts_with = "widths")]
    width_bins: Option<usize>,
    /// Comma-separated block widths in bins.
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    min_sep_bins: usize,
    #[arg(long, value_parser = parse_method, default_value = "greedy")]
    method: SelectionMethod,
    /// Output JSON path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Full bandwidth B_h in Hz.
    #[arg(long)]
    b_h: f64,
    /// Total power in W.
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    /// Observation window in s.
    #[arg(long)]
    ts: f64,
    /// Sample rate in Hz (default: 4 B_h).
    #[arg(long)]
    fs: Option<f64>,
    /// Exponent k of the reference spectrum (1 - 2f/B_h)^k.
    #[arg(long, default_value_t = 0.0)]
    taper: f64,
    /// Cut a cognitive waveform with this plan JSON.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    /// Plan JSON; bands are taken as flat cuts of a flat reference.
    #[arg(long)]
    plan: PathBuf,
    /// SNR grid `lo:hi:points` in dB.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, default_value = "-20:40:61")]
    snr_grid: Grid,
    /// Observation window in s; sets the uniform delay prior.
    #[arg(long)]
    ts: f64,
    #[arg(long, default_value_t = 1)]
    pulses: u32,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_RATIO)]
    ratio: f64,
    /// CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verdict JSON path (default: stderr).
    #[arg(long)]
    verdict: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Cognitive radar from this plan JSON.
    #[arg(long, required_unless_present = "fullband", conflicts_with = "fullband")]
    plan: Option<PathBuf>,
    /// Conventional radar with a flat spectrum over this B_h in Hz.
    #[arg(long)]
    fullband: Option<f64>,
    /// SNR grid `lo:hi:points` in dB.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, default_value = "-10:30:9")]
    snr_db: Grid,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ts: f64,
    /// Parabolic peak interpolation.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    interp: bool,
    #[arg(long, default_value_t = 8)]
    oversample: usize,
    /// CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    lo: f64,
    hi: f64,
    points: usize,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected lo:hi:points, got `{s}`"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let points: usize = n.parse().map_err(|e| format!("points: {e}"))?;
    Ok(Grid { lo, hi, points })
}

fn parse_method(s: &str) -> Result<SelectionMethod, String> {
    match s {
        "greedy" => Ok(SelectionMethod::Greedy),
        "oracle" => Ok(SelectionMethod::Oracle),
        _ => Err(format!("unknown method `{s}` (greedy, oracle)")),
    }
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>, fallback: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => save_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
            writeln!(fallback, "{text}").map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn emit_table(t: &Table, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => t.save(p),
        None => t.write_to(std::io::stdout().lock()),
    }
}

#[derive(Serialize)]
struct SelectedBand {
    f_center_hz: f64,
    width_hz: f64,
    start_bin: usize,
    width_bins: usize,
}

#[derive(Serialize)]
struct SelectOutput {
    method: SelectionMethod,
    objective_w: f64,
    bands: Vec<SelectedBand>,
}

fn cmd_select(a: SelectArgs) -> CliResult<()> {
    let rem = setup::load_rem(&a.rem)?;
    let c = match (a.width_bins, a.widths) {
        (Some(d), None) => {
            let n = a.n_bands.ok_or_else(|| CliError::Config("--width-bins needs --n-bands".into()))?;
            SelectionConstraints::equal(n, d, a.min_sep_bins)
        }
        (None, Some(ds)) => {
            if a.n_bands.is_some_and(|n| n != ds.len()) {
                return Err(CliError::Config("--n-bands disagrees with --widths".into()));
            }
            SelectionConstraints::list(ds, a.min_sep_bins)
        }
        _ => return Err(CliError::Config("give --width-bins or --widths".into())),
    };
    let r = setup::run_selection(&rem, &c, a.method)?;
    let out = SelectOutput {
        method: r.method,
        objective_w: r.objective,
        bands: r
            .bands
            .iter()
            .zip(&r.placements)
            .map(|(b, p)| SelectedBand {
                f_center_hz: b.f_center,
                width_hz: b.width,
                start_bin: p.start_bin,
                width_bins: p.width_bins,
            })
            .collect(),
    };
    emit_json(&out, a.out.as_deref(), &mut std::io::stdout().lock())
}

#[derive(Serialize)]
struct PowerReport {
    kind: WaveformKind,
    target_w: f64,
    spectral_w: f64,
    time_domain_w: f64,
    band_powers_w: Vec<f64>,
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let fs = a.fs.unwrap_or(4.0 * a.b_h);
    let base = setup::base_waveform(a.b_h, a.power, fs, a.ts, a.taper)?;
    let wf = match &a.plan {
        Some(p) => {
            let plan: SubbandPlan = load_json(p)?;
            synthesize_cognitive(&plan, &base)?
        }
        None => base,
    };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    waveform_table(&wf).save(&a.out_dir.join("waveform.csv"))?;
    let spec = wf.spectrum();
    let mut t = Table::new(&["freq_hz", "magnitude"]);
    for (f, m) in spec.grid().frequencies().zip(spec.magnitude()) {
        t.push(&[f, *m]);
    }
    t.save(&a.out_dir.join("spectrum.csv"))?;
    let report = PowerReport {
        kind: wf.kind(),
        target_w: a.power,
        spectral_w: wf.total_power(),
        time_domain_w: wf.time_energy(),
        band_powers_w: wf.band_powers(),
    };
    save_json(&a.out_dir.join("power.json"), &report)
}

#[derive(Serialize)]
struct BoundsVerdict {
    prop1: Prop1Check,
    min_common_beta: f64,
    threshold_ratio: f64,
    threshold_conventional_db: f64,
    threshold_cognitive_db: f64,
    threshold_ordering: bool,
}

fn cmd_bounds(a: BoundsArgs) -> CliResult<()> {
    let plan: SubbandPlan = load_json(&a.plan)?;
    let profile = CognitiveProfile::flat(&plan)?;
    let f_full = flat_fullband_rms(plan.full_band);
    let prior = uniform_prior_variance(a.ts)?;
    let snrs = db_grid(a.snr_grid.lo, a.snr_grid.hi, a.snr_grid.points)?;
    if snrs.len() < 2 {
        return Err(CliError::Config("--snr-grid needs at least two points".into()));
    }
    let sweep = bound_sweep(&profile, f_full, prior, &snrs, a.pulses)?;
    let rows: Vec<_> = snrs.iter().map(|s| linear_to_db(*s)).zip(sweep).collect();
    emit_table(&bounds_table(&rows), a.out.as_deref())?;

    let k = a.pulses as f64;
    let (lo, hi) = (snrs[0], snrs[snrs.len() - 1]);
    let th_r = snr_threshold(
        |s| ezb_conventional(s * k, f_full, prior),
        |s| crlb_conventional(s * k, f_full),
        a.ratio,
        lo,
        hi,
    )?;
    let th_cr = snr_threshold(
        |s| ezb_cognitive(profile.snr_tilde_at(s * k), &profile.per_band_at(s * k), prior),
        |s| crlb_cognitive(&profile.per_band_at(s * k)),
        a.ratio,
        lo,
        hi,
    )?;
    let verdict = BoundsVerdict {
        prop1: check_prop1_flat(&plan)?,
        min_common_beta: corollary3_min_beta(plan.full_band, &profile.noise_bandwidths)?,
        threshold_ratio: a.ratio,
        threshold_conventional_db: linear_to_db(th_r),
        threshold_cognitive_db: linear_to_db(th_cr),
        threshold_ordering: th_cr <= th_r,
    };
    emit_json(&verdict, a.verdict.as_deref(), &mut std::io::stderr().lock())
}

fn cmd_mc(a: McArgs) -> CliResult<()> {
    let flat = |b_h: f64| -> CliResult<Spectrum> {
        let grid = FrequencyGrid::new(0.0, 0.5 * b_h, 2)?;
        Ok(Spectrum::new(grid, vec![1.0, 1.0])?)
    };
    let model = match (&a.plan, a.fullband) {
        (Some(p), None) => {
            let plan: SubbandPlan = load_json(p)?;
            McModel::from_plan(&plan, &flat(plan.full_band)?, a.ts)?
        }
        (None, Some(b_h)) => McModel::conventional(&flat(b_h)?, b_h, 1.0, a.ts)?,
        _ => return Err(CliError::Config("give exactly one of --plan and --fullband".into())),
    };
    let cfg = McConfig {
        n_trials: a.trials,
        tau_grid_oversample: a.oversample,
        interpolate_peak: a.interp,
        delay_mode: DelayMode::Uniform,
        ..McConfig::new(db_grid(a.snr_db.lo, a.snr_db.hi, a.snr_db.points)?, a.ts, a.seed)
    };
    let result = run_sweep(&model, &cfg)?;
    emit_table(&mc_table(&[("", &result)]), a.out.as_deref())
}

fn cmd_pipeline(a: PipelineArgs) -> CliResult<()> {
    let cfg = PipelineConfig::load(&a.config)?;
    let report = cogradar_cli::run_pipeline(&cfg)?;
    let verdicts = serde_json::to_string_pretty(&report.verdicts).map_err(|e| CliError::Numerical(e.to_string()))?;
    println!("artifacts written to {}", cfg.output_dir.display());
    println!("{verdicts}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
