use cogradar::bounds::db_grid;
use cogradar::montecarlo::{peak_index, run_sweep, DelayEstimator, McConfig, McModel, Received};
use cogradar::rng::trial_stream;
use cogradar::spectrum::{FrequencyGrid, Spectrum, Subband, SubbandPlan};
use cogradar::Error;
use rustfft::num_complex::Complex64;

fn flat(b_h: f64) -> Spectrum {
    Spectrum::from_fn(FrequencyGrid::new(0.0, b_h / 2.0, 513).unwrap(), |_| 1.0).unwrap()
}

fn config(t_s: f64) -> McConfig {
    let mut c = McConfig::new(vec![10.0], t_s, 11);
    c.n_trials = 100;
    c
}

#[test]
fn noiseless_received_is_the_delayed_pulse() {
    let model = McModel::conventional(&flat(64.0), 64.0, 1.0, 4.0).unwrap();
    let rx = model.simulate_received(1.3, 0.0, 3.5, &mut trial_stream(1, 0, 0)).unwrap();
    for (k, (x, a)) in rx.channels[0].iter().zip(&model.channels[0].coeffs).enumerate() {
        let f = (k as f64 + 0.5) / 4.0;
        let expected = Complex64::from_polar(*a, -2.0 * std::f64::consts::PI * f * 1.3);
        assert_eq!(*x, expected);
    }
}

#[test]
fn delay_outside_support_is_rejected() {
    let model = McModel::conventional(&flat(64.0), 64.0, 1.0, 4.0).unwrap();
    let mut rng = trial_stream(1, 0, 0);
    assert!(matches!(model.simulate_received(3.6, 1.0, 3.5, &mut rng), Err(Error::Domain(_))));
    assert!(matches!(model.simulate_received(-0.1, 1.0, 3.5, &mut rng), Err(Error::Domain(_))));
}

#[test]
fn fullband_noise_variance_is_n0_times_bandwidth() {
    let b_h = 10.0;
    let t_s = 25.6;
    let model = McModel::conventional(&flat(b_h), b_h, 0.0, t_s).unwrap();
    let (mut sum, mut count) = (0.0, 0usize);
    for t in 0..10_000 {
        let rx = model.simulate_received(0.0, 1.0, 1.0, &mut trial_stream(5, 0, t)).unwrap();
        let x = rx.time_samples(0, 512).unwrap();
        sum += x.iter().map(|v| v * v).sum::<f64>();
        count += x.len();
    }
    let var = sum / count as f64;
    assert!((var / 10.0 - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn per_band_noise_variance_is_n0_times_band_noise_bandwidth() {
    let b_h = 512.0;
    let plan = SubbandPlan::new(
        b_h,
        vec![Subband::new(40.0, 64.0, 1.0).unwrap(), Subband::new(160.0, 32.0, 1.0).unwrap()],
        1.0,
        1.0,
    )
    .unwrap();
    let mut model = McModel::from_plan(&plan, &flat(b_h), 1.0).unwrap();
    model.channels.iter_mut().for_each(|c| c.coeffs.iter_mut().for_each(|a| *a = 0.0));
    let n0 = 0.5;
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for t in 0..10_000 {
        let rx = model.simulate_received(0.0, n0, 0.5, &mut trial_stream(6, 0, t)).unwrap();
        for i in 0..2 {
            let x = rx.time_samples(i, 256).unwrap();
            sums[i] += x.iter().map(|v| v * v).sum::<f64>();
            counts[i] += x.len();
        }
    }
    for (i, b) in plan.subbands.iter().enumerate() {
        let var = sums[i] / counts[i] as f64;
        let expected = n0 * b.noise_bandwidth();
        assert!((var / expected - 1.0).abs() < 0.02, "band {i}: {var} vs {expected}");
    }
}

#[test]
fn noiseless_on_grid_delay_is_recovered_exactly() {
    let model = McModel::conventional(&flat(64.0), 64.0, 1.0, 4.0).unwrap();
    let mut cfg = config(4.0);
    cfg.interpolate_peak = false;
    let est = DelayEstimator::new(&model, &cfg).unwrap();
    let tau0 = 37.0 * est.step();
    let rx = model.simulate_received(tau0, 0.0, cfg.support(), &mut trial_stream(1, 0, 0)).unwrap();
    assert_eq!(est.estimate(&model, &rx).unwrap(), tau0);

    cfg.interpolate_peak = true;
    let est = DelayEstimator::new(&model, &cfg).unwrap();
    assert!((est.estimate(&model, &rx).unwrap() - tau0).abs() < 1e-9 * est.step());
}

#[test]
fn noiseless_off_grid_delay_is_close_with_interpolation() {
    let model = McModel::conventional(&flat(64.0), 64.0, 1.0, 4.0).unwrap();
    let cfg = config(4.0);
    let est = DelayEstimator::new(&model, &cfg).unwrap();
    let tau0 = 37.3 * est.step();
    let rx = model.simulate_received(tau0, 0.0, cfg.support(), &mut trial_stream(1, 0, 0)).unwrap();
    assert!((est.estimate(&model, &rx).unwrap() - tau0).abs() < 0.05 * est.step());
}

#[test]
fn flat_correlation_breaks_ties_at_grid_start() {
    assert_eq!(peak_index(&[2.0; 64], 40), 0);
    assert_eq!(peak_index(&[0.0, 3.0, 1.0, 3.0], 3), 1);
}

#[test]
fn zero_correlation_is_an_estimation_error() {
    let model = McModel::conventional(&flat(64.0), 64.0, 1.0, 4.0).unwrap();
    let est = DelayEstimator::new(&model, &config(4.0)).unwrap();
    let rx = Received { t_s: 4.0, channels: vec![vec![Complex64::new(0.0, 0.0); model.channels[0].coeffs.len()]] };
    assert!(matches!(est.estimate(&model, &rx), Err(Error::Estimation(_))));
}

#[test]
fn config_invariants_are_enforced() {
    let mut c = config(4.0);
    c.n_trials = 99;
    assert!(c.validate().is_err());
    let mut c = config(4.0);
    c.tau_grid_oversample = 3;
    assert!(c.validate().is_err());
    let mut c = config(4.0);
    c.pulse_width = 4.0;
    assert!(c.validate().is_err());
}

#[test]
fn bandwidth_off_the_bin_grid_is_rejected() {
    assert!(McModel::conventional(&flat(64.0), 64.0, 1.0, 4.01).is_err());
}

#[test]
fn sweep_is_bit_identical_across_runs_and_thread_counts() {
    let model = McModel::conventional(&flat(64.0), 64.0, 1.0, 4.0).unwrap();
    let mut cfg = config(4.0);
    cfg.snr_grid = db_grid(0.0, 20.0, 2).unwrap();
    let a = run_sweep(&model, &cfg).unwrap();
    let b = run_sweep(&model, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| run_sweep(&model, &cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    for p in &a.points {
        assert!(p.ci_lo <= p.mse && p.mse <= p.ci_hi);
    }
}

#[test]
fn mse_falls_with_snr_up_to_ci_overlap() {
    let b_h = 64.0;
    let model = McModel::conventional(&flat(b_h), b_h, 1.0, 4.0).unwrap();
    let mut cfg = config(4.0);
    cfg.n_trials = 400;
    cfg.snr_grid = db_grid(-10.0, 30.0, 11).unwrap();
    let r = run_sweep(&model, &cfg).unwrap();
    for w in r.points.windows(2) {
        assert!(w[1].ci_lo <= w[0].ci_hi, "{:?}", w);
    }
    let top = r.points.last().unwrap();
    assert!(top.mse / top.crlb < 1.5);
    let bottom = &r.points[0];
    assert!((bottom.mse / cfg.clamped_error_variance() - 1.0).abs() < 0.2);
}

#[test]
fn cognitive_bounds_match_profile_at_snr() {
    let b_h = 256.0;
    let plan = SubbandPlan::new(b_h, vec![Subband::new(30.0, 16.0, 2.0).unwrap(), Subband::new(90.0, 16.0, 2.0).unwrap()], 1.0, 1.0).unwrap();
    let model = McModel::from_plan(&plan, &flat(b_h), 1.0).unwrap();
    let profile = cogradar::bounds::CognitiveProfile::flat(&plan).unwrap();
    let (crlb, _) = model.bounds_at(10.0, 1.0).unwrap();
    let expected = cogradar::bounds::crlb_cognitive(&profile.per_band_at(10.0)).unwrap();
    // discrete half-bin moments differ from the flat closed form by O(1/K^2)
    assert!((crlb / expected - 1.0).abs() < 1e-2, "{crlb} {expected}");
}
