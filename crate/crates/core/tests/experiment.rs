use std::collections::BTreeMap;
use std::process::Command;

use fossos::channel::LosMode;
use fossos::experiment::{
    read_rows, run_drop, run_sweep, summarize, write_rows, ScenarioConfig, SweepSpec,
};

fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        bandwidth_mhz: 5.0,
        num_ms: 6,
        frames_per_drop: 8,
        ..ScenarioConfig::default()
    }
}

fn small_spec(subbands: Vec<usize>, seeds: Vec<u64>) -> SweepSpec {
    SweepSpec {
        bandwidths_mhz: vec![5.0],
        antennas: vec![2],
        num_ms: vec![6],
        subbands,
        los: vec![LosMode::Los],
        seeds,
    }
}

#[test]
fn worker_count_does_not_change_rows() {
    let base = small_config();
    let spec = SweepSpec {
        antennas: vec![1, 2],
        subbands: vec![1, 3],
        ..small_spec(vec![], vec![1, 2, 3])
    };
    let one = run_sweep(&base, &spec, Some(1)).unwrap();
    let three = run_sweep(&base, &spec, Some(3)).unwrap();
    assert_eq!(one.rows, three.rows);
    assert_eq!(one.rows.len(), spec.num_runs());
}

#[test]
fn map_overhead_increases_with_subbands() {
    let base = ScenarioConfig {
        num_ms: 12,
        ..small_config()
    };
    let out = run_sweep(&base, &small_spec(vec![1, 2, 3, 6], (1..=4).collect()), None).unwrap();
    let report = summarize(&out.rows);
    let overheads: Vec<f64> = report.cells.iter().map(|c| c.map_overhead.mean).collect();
    assert_eq!(overheads.len(), 4);
    assert!(overheads.windows(2).all(|w| w[1] > w[0]), "{overheads:?}");
}

#[test]
fn summary_equals_reaggregated_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let out = run_sweep(&small_config(), &small_spec(vec![1, 2], (1..=5).collect()), None).unwrap();
    write_rows(&path, &out.rows).unwrap();
    assert_eq!(read_rows(&path).unwrap(), out.rows);

    // Independent pass over the raw file with a plain CSV reader.
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (sb, goodput, map) = (col("subbands"), col("goodput_bytes_per_s"), col("map_overhead"));
    let mut sums: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let e = sums.entry(rec[sb].parse().unwrap()).or_default();
        e.0 += rec[goodput].parse::<f64>().unwrap();
        e.1 += rec[map].parse::<f64>().unwrap();
        e.2 += 1;
    }
    let report = summarize(&read_rows(&path).unwrap());
    assert_eq!(report.cells.len(), sums.len());
    for cell in &report.cells {
        let (g, m, n) = sums[&cell.key.subbands];
        assert_eq!(cell.runs, n);
        assert!((cell.goodput.mean - g / n as f64).abs() <= 1e-9 * cell.goodput.mean.abs().max(1.0));
        assert!((cell.map_overhead.mean - m / n as f64).abs() <= 1e-12);
    }
}

#[test]
fn failed_cells_are_recorded_not_fatal() {
    // Five subbands do not divide twelve subchannels.
    let out = run_sweep(&small_config(), &small_spec(vec![1, 5], vec![1]), None).unwrap();
    assert_eq!(out.rows.len(), 2);
    assert!(out.rows.iter().any(|r| r.is_ok()));
    assert!(out.rows.iter().any(|r| !r.is_ok() && r.subbands == 5));
}

#[test]
fn served_bytes_account_for_goodput() {
    let cfg = small_config();
    let m = run_drop(&cfg, 4).unwrap();
    assert_eq!(m.served_bytes.iter().sum::<u64>(), m.transmitted_bytes);
    let seconds = cfg.frames_per_drop as f64 * cfg.frame_duration_ms / 1000.0;
    assert!((m.goodput_bytes_per_s - m.transmitted_bytes as f64 / seconds).abs() < 1e-6);
    assert!(m.map_overhead > 0.0 && m.map_overhead < 1.0);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fossos"))
}

#[test]
fn run_is_identical_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, "bandwidth_mhz = 5.0\nnum_ms = 4\nframes_per_drop = 5\n").unwrap();
    let run = || {
        let out = bin().args(["run", "--seed", "9", "--config"]).arg(&cfg).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let a = run();
    assert_eq!(a, run());
    let json: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(json["frames"], 5);
}

#[test]
fn bad_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "num_ms = 4\nno_such_key = 1\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["sweep", "--seeds", "5..2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let status = bin()
        .args(["sweep", "--seeds", "1,2", "--bandwidths", "5", "--antennas", "2", "--users", "4"])
        .args(["--subbands", "1,2", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(status.status.success());
    for f in ["rows.csv", "manifest.json", "summary.txt", "summary.csv"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rows"], 4);
    let report_dir = dir.path().join("report");
    let out = bin()
        .args(["report", "--input"])
        .arg(out_dir.join("rows.csv"))
        .arg("--out")
        .arg(&report_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        std::fs::read_to_string(out_dir.join("summary.txt")).unwrap()
    );
    assert_eq!(
        std::fs::read(report_dir.join("summary.csv")).unwrap(),
        std::fs::read(out_dir.join("summary.csv")).unwrap()
    );
}
