use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nft_core::signals::{gen_sech, Signal, TimeGrid};
use serde_json::Value;

fn nft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nft"))
        .current_dir(dir)
        .env_remove("NFT_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_sech(dir: &Path, name: &str, amplitude: f64, grid: TimeGrid) -> String {
    let path = dir.join(name);
    gen_sech(amplitude, 0.0, 0.0, grid).unwrap().write_json(&path).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_lists_the_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = nft(dir.path(), &["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["generate", "spectrum", "detect", "compare"] {
        assert!(text.contains(sub), "missing {sub}");
    }
}

#[test]
fn generate_writes_the_same_pulse_as_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = nft(dir.path(), &["generate", "--pulse", "sech", "--amplitude", "1.3", "--freq-shift", "-0.5", "-o", "p.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = Signal::read_json(dir.path().join("p.json")).unwrap();
    assert_eq!(s, gen_sech(1.3, -0.5, 0.0, TimeGrid::default()).unwrap());
}

#[test]
fn invalid_rect_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = nft(dir.path(), &["generate", "--pulse", "rect", "--amplitude", "1", "--t-on", "2", "--t-off", "-1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("t_on"), "{}", stderr(&o));
    let spec = dir.path().join("bad.json");
    fs::write(&spec, r#"{"pulse": {"kind": "sech", "amplitude": -1}}"#).unwrap();
    let o = nft(dir.path(), &["--spec", spec.to_str().unwrap(), "generate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pulse.amplitude"), "{}", stderr(&o));
}

#[test]
fn seeded_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--pulse", "sech", "--amplitude", "1.3", "--snr-db", "20", "--seeds", "1..100"];
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    for out in [&first, &second] {
        let mut a = vec!["--output-dir", out.to_str().unwrap()];
        a.extend_from_slice(&args);
        let o = nft(dir.path(), &a);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(&first).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 100);
    for name in names {
        assert_eq!(fs::read(first.join(&name)).unwrap(), fs::read(second.join(&name)).unwrap());
    }
}

#[test]
fn spectrum_of_zero_signal_has_zero_phase() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.json");
    Signal::zeros(TimeGrid::default()).write_json(&path).unwrap();
    let o = nft(dir.path(), &["--output-dir", "out", "spectrum", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/zero_phase.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["omega", "theta", "g_magnitude"]);
    for rec in rdr.records() {
        assert_eq!(rec.unwrap()[1].parse::<f64>().unwrap(), 0.0);
    }
    assert!(dir.path().join("out/zero_spectrum.csv").is_file());
}

#[test]
fn spectrum_reports_the_count_and_honors_the_grid_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sech(dir.path(), "s.json", 2.2, TimeGrid::default());
    let o = nft(dir.path(), &["spectrum", &path, "--omega-min", "-5", "--omega-max", "5", "--n-points", "11"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv::Reader::from_path(dir.path().join("out/s_spectrum.csv")).unwrap().records().count();
    assert_eq!(rows, 11);

    let o = nft(dir.path(), &["spectrum", &path]);
    assert!(stderr(&o).contains("eigenvalue count: 2"), "{}", stderr(&o));

    let o = nft(dir.path(), &["spectrum", &path, "--omega-min", "-5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_signal_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"t_start\": 0, \"dt\": ").unwrap();
    let o = nft(dir.path(), &["spectrum", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.json"));
    let o = nft(dir.path(), &["detect", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn detect_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sech(dir.path(), "s.json", 2.2, TimeGrid::default());

    let o = nft(dir.path(), &["detect", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(&dir.path().join("out/s_detect.json"));
    assert_eq!(r["method"], "cs-phase");
    assert_eq!(r["converged"], true);
    assert_eq!(r["eigenvalues"].as_array().unwrap().len(), 2);

    let o = nft(dir.path(), &["detect", &path, "--method", "all", "-o", "all.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(&dir.path().join("all.json"));
    let mut keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["cs-phase", "fc", "nr"]);

    let o = nft(dir.path(), &["detect", &path, "--init", "0:1.5,0:0.9", "-o", "init.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(&dir.path().join("init.json"));
    assert_eq!(r["diagnostics"]["init_source"], "user");
    assert_eq!(r["diagnostics"]["init"][0]["sigma"], 1.5);
    assert_eq!(r["diagnostics"]["init"][1]["sigma"], 0.9);

    let o = nft(dir.path(), &["detect", &path, "--method", "magic"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_over_a_noisy_batch() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"pulse": {"kind": "sech", "amplitude": 1.3},
            "noise": {"snr_db": 20, "seeds": [1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20]},
            "methods": ["cs-phase"]}"#,
    )
    .unwrap();
    let o = nft(dir.path(), &["--spec", "spec.json", "compare"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/comparison.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 8);
    assert_eq!(rdr.records().count(), 20);
    let summary = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(summary["pulses"], 20);
    assert!(dir.path().join("out/timings.csv").is_file());
}

#[test]
fn compare_of_an_empty_batch_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = nft(dir.path(), &["compare"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn compare_reports_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_sech(dir.path(), "good.json", 1.3, TimeGrid::default());
    let short = write_sech(dir.path(), "short.json", 1.3, TimeGrid::symmetric(20.0, 256).unwrap());
    let o = nft(dir.path(), &["compare", &good, &short, "--methods", "fc"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("short"), "{}", stderr(&o));
    let rows: Vec<_> = csv::Reader::from_path(dir.path().join("out/comparison.csv")).unwrap().records().collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0].as_ref().unwrap()[0], "good");
}

#[test]
fn invalid_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["0", "many"] {
        let o = Command::new(env!("CARGO_BIN_EXE_nft"))
            .current_dir(dir.path())
            .env("NFT_THREADS", bad)
            .arg("compare")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains("NFT_THREADS"));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_nft"))
        .current_dir(dir.path())
        .env("NFT_THREADS", "2")
        .arg("compare")
        .output()
        .unwrap();
    assert!(o.status.success());
}
