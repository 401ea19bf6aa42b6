use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cogradar_cli::io::{load_json, Table};
use cogradar_cli::pipeline::{BandsArtifact, Report, ARTIFACTS, BOUNDS_HEADER, MC_HEADER, WAVEFORM_HEADER};
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn cogradar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogradar"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Example config rewritten to read the bundled REM and write into `out`.
fn example_config(dir: &Path, out: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let text = std::fs::read_to_string(data("example.toml")).unwrap();
    let text = text
        .replace("output_dir = \"out\"", &format!("output_dir = {:?}", out.to_str().unwrap()))
        .replace("rem_path = \"rem64.csv\"", &format!("rem_path = {:?}", data("rem64.csv").to_str().unwrap()));
    let path = dir.join("config.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

fn run_pipeline(dir: &Path, out: &Path, edit: impl Fn(String) -> String) -> Output {
    let cfg = example_config(dir, out, edit);
    cogradar(&["pipeline", "--config", cfg.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn pipeline_is_complete_deterministic_and_self_consistent() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = run_pipeline(tmp.path(), &a, |t| t);
    assert!(oa.status.success(), "{}", stderr(&oa));
    let ob = run_pipeline(tmp.path(), &b, |t| t);
    assert!(ob.status.success(), "{}", stderr(&ob));

    for name in ARTIFACTS {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert!(x == y, "{name} differs between runs");
    }

    let report: Report = load_json(&a.join("report.json")).unwrap();
    assert!(report.verdicts.all(), "{:#?}", report.verdicts);
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again, std::fs::read_to_string(a.join("report.json")).unwrap());

    let bands: BandsArtifact = load_json(&a.join("bands.json")).unwrap();
    assert_eq!(bands.plan.n_bands(), 2);
    let again = serde_json::to_string_pretty(&bands).unwrap() + "\n";
    assert_eq!(again, std::fs::read_to_string(a.join("bands.json")).unwrap());

    for (name, header) in [
        ("waveform.csv", WAVEFORM_HEADER.to_vec()),
        ("bounds.csv", BOUNDS_HEADER.to_vec()),
        ("mc.csv", [&["radar"][..], &MC_HEADER[..]].concat()),
    ] {
        let path = a.join(name);
        let t = Table::load(&path).unwrap();
        assert_eq!(t.header, header, "{name}");
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert!(buf == std::fs::read(&path).unwrap(), "{name} does not round-trip");
    }
    let bounds = Table::load(&a.join("bounds.csv")).unwrap();
    assert_eq!(bounds.rows.len(), 61);
    assert!(bounds.column("ezb_cr").unwrap().iter().all(|x| *x > 0.0));
}

#[test]
fn infeasible_selection_exits_3() {
    let tmp = TempDir::new().unwrap();
    let o = run_pipeline(tmp.path(), &tmp.path().join("out"), |t| {
        t.replace("n_bands = 2", "n_bands = 12").replace("width_bins = 4", "width_bins = 6")
    });
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("admissible"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn zero_power_exits_2_before_any_work() {
    let tmp = TempDir::new().unwrap();
    let o = run_pipeline(tmp.path(), &tmp.path().join("out"), |t| t.replace("p_watts = 1.0", "p_watts = 0.0"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("p_watts"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_rem_and_misaligned_grid_exit_2() {
    let tmp = TempDir::new().unwrap();
    let o = run_pipeline(tmp.path(), &tmp.path().join("out"), |t| {
        t.replace("rem64.csv", "missing.csv")
    });
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run_pipeline(tmp.path(), &tmp.path().join("out"), |t| t.replace("t_s_sec = 2.0", "t_s_sec = 1.25"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn select_writes_bands() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sel.json");
    let rem = data("rem64.csv");
    let o = cogradar(&[
        "select", "--rem", rem.to_str().unwrap(), "--widths", "4,3", "--min-sep-bins", "2",
        "--method", "oracle", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = load_json(&out).unwrap();
    let bands = v["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 2);
    assert!(bands.iter().all(|b| b["start_bin"].is_u64() && b["f_center_hz"].is_f64()));
    assert!(v["objective_w"].as_f64().unwrap() > 0.0);
}

#[test]
fn synth_bounds_and_mc_subcommands() {
    let tmp = TempDir::new().unwrap();
    let plan = tmp.path().join("plan.json");
    std::fs::write(
        &plan,
        r#"{"full_band_hz": 64.0, "subbands": [
            {"f_center_hz": 6.0, "width_hz": 4.0, "beta": 2.0},
            {"f_center_hz": 20.0, "width_hz": 4.0, "beta": 2.0}],
            "total_power_w": 1.0, "noise_density_w_per_hz": 0.01}"#,
    )
    .unwrap();
    let p = plan.to_str().unwrap();

    let dir = tmp.path().join("synth");
    let o = cogradar(&["synth", "--b-h", "64", "--ts", "1", "--plan", p, "--out-dir", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let power: serde_json::Value = load_json(&dir.join("power.json")).unwrap();
    assert!((power["spectral_w"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(Table::load(&dir.join("spectrum.csv")).unwrap().header, ["freq_hz", "magnitude"]);

    let csv = tmp.path().join("bounds.csv");
    let verdict = tmp.path().join("verdict.json");
    let o = cogradar(&[
        "bounds", "--plan", p, "--ts", "1", "--snr-grid", "-10:40:26",
        "--out", csv.to_str().unwrap(), "--verdict", verdict.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(Table::load(&csv).unwrap().rows.len(), 26);
    let v: serde_json::Value = load_json(&verdict).unwrap();
    assert!((v["min_common_beta"].as_f64().unwrap() - 64.0 / (2.0 * 8f64.powi(2)).sqrt()).abs() < 1e-12);

    let o = cogradar(&["mc", "--plan", p, "--ts", "1", "--snr-db", "0:20:3", "--trials", "100", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Table::read_from(o.stdout.as_slice()).unwrap();
    assert_eq!(t.header, MC_HEADER);
    assert_eq!(t.rows.len(), 3);

    let o = cogradar(&["mc", "--fullband", "64", "--ts", "1", "--snr-db", "20:20:1", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn version_flag() {
    let o = cogradar(&["--version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}
