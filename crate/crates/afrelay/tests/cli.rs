use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use afrelay::frame_io::read_frame;
use afrelay::output::read_metrics;

fn afrelay(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afrelay"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .arg("--quiet")
        .env_remove("AFRELAY_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn out_of_range_value_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = afrelay(&["estimate", "--frame", "x.txt", "--alpha", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("alpha") && msg.contains("1.5") && msg.contains("(0, 1)"), "{msg}");
}

#[test]
fn unknown_flags_and_missing_config_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(afrelay(&["sweep", "--bogus", "1"], dir.path()).status.code(), Some(2));
    let o = afrelay(&["sweep", "--config", "/nonexistent/afrelay.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("afrelay.toml"));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "particles = 3\n").unwrap();
    let o = afrelay(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("particles"));
}

#[test]
fn malformed_frame_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("frame.txt");
    fs::write(&frame, "not a frame\n").unwrap();
    let o = afrelay(&["estimate", "--frame", frame.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_can_strip_truth() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let mut args = vec!["simulate", "--t", "100", "--snr-db", "15", "--seed", "1", "--frame"];
        args.push(path.to_str().unwrap());
        args.extend_from_slice(extra);
        let o = afrelay(&args, dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        path
    };
    let a = run("a.txt", &[]);
    let b = run("b.txt", &[]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(read_frame(&a).unwrap().truth.is_some());
    let c = run("c.txt", &["--strip-truth"]);
    let stripped = read_frame(&c).unwrap();
    assert!(stripped.truth.is_none());
    assert_eq!(stripped.y, read_frame(&a).unwrap().y);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn estimate_on_a_simulated_frame() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("frame.txt");
    let f = frame.to_str().unwrap();
    let o = afrelay(&["simulate", "--t", "100", "--snr", "15", "--seed", "4", "--frame", f], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = afrelay(&["estimate", "--frame", f, "--snr", "15"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let acc = summary["acceptance_rate"].as_f64().unwrap();
    assert!((0.05..=0.5).contains(&acc), "acceptance {acc}");
    assert!(summary["mse"]["total"].as_f64().unwrap() >= 0.0);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 5001);
    assert!(trace.starts_with("iteration,alpha_0,beta_0,log_likelihood"));
}

#[test]
fn estimate_progress_goes_to_stderr_only() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("frame.txt");
    let f = frame.to_str().unwrap();
    afrelay(&["simulate", "--t", "20", "--snr", "10", "--frame", f], dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_afrelay"))
        .args(["estimate", "--frame", f, "--snr", "10", "--t", "20", "--iterations", "200"])
        .args(["--burnin", "50", "--n-particles", "10", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let lines: Vec<String> = stderr(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 10, "{lines:?}");
    assert!(lines[9].contains("100%"));
}

#[test]
fn sweep_writes_every_artifact_and_repeats_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        "t = 20\nsnr-db = [5, 20]\nframes = 3\nn-particles = 10\niterations = 120\nburnin = 40\nsampler = \"both\"\ngibbs-block = 5\n",
    )
    .unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = afrelay(&["sweep", "--config", cfg.to_str().unwrap(), "--seed", "7"], &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let a = run("a");
    let b = run("b");
    let ma = fs::read(a.join("metrics.csv")).unwrap();
    assert_eq!(ma, fs::read(b.join("metrics.csv")).unwrap());
    let records = read_metrics(&a.join("metrics.csv")).unwrap();
    assert_eq!(records.len(), 2 * 3 * 2);
    assert!(records.iter().all(|r| r.is_ok() && r.mse_total >= 0.0));
    for name in ["manifest.json", "summary.json", "timings.csv"] {
        assert!(a.join(name).exists(), "{name}");
    }
    let traces = fs::read_dir(a.join("traces")).unwrap().count();
    assert_eq!(traces, records.len());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["frames"], 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["acceptance_by_n"].as_array().unwrap().len(), 2);
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_afrelay"))
        .args(["bcrlb", "--t", "10", "--snr-db", "15"])
        .env("AFRELAY_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("bcrlb.csv").exists());
}

#[test]
fn bcrlb_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bcrlb", "--alpha", "0.95", "--beta", "0.95", "--snr-db", "15", "--t", "100"];
    let o = afrelay(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("bcrlb.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0][3], 1.0 + 1.0 + 10f64.powf(1.5));
    assert!(rows.windows(2).all(|w| w[1][2] <= w[0][2] + 1e-12));
}

#[test]
fn bench_writes_table_and_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bench", "--bench-n", "10,20", "--bench-t", "10,20", "--t", "10", "--n-particles", "10"];
    let o = afrelay(&[&args[..], &["--bench-iterations", "3"]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert!(json["exponent_n"].is_number() && json["exponent_t"].is_number());
}
