use std::fs;
use std::path::Path;
use std::process::Command;

use sobolev_lab::{run, Outcome};
use tempfile::TempDir;

const DISK: &str = r#"{"shape":"disk","radius":1.0}"#;
const L_SHAPE: &str = r#"{"shape":"l-shape","side":1.0,"notch":0.5}"#;

fn lab(out: &Path, args: &[&str]) -> Outcome {
    lab_cached(out, None, args)
}

fn lab_cached(out: &Path, cache: Option<&Path>, args: &[&str]) -> Outcome {
    let mut full = vec!["sobolev-lab", "--out", out.to_str().unwrap()];
    full.extend_from_slice(args);
    // An explicit empty cache directory keeps tests independent of the
    // environment variable.
    let fallback = out.join(".no-cache");
    run(full, Some(cache.unwrap_or(&fallback).to_path_buf()))
}

#[test]
fn ball_prints_cp_at_full_precision() {
    let dir = TempDir::new().unwrap();
    let o = lab(dir.path(), &["ball", "-n", "2", "-p", "2"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let line = o.stdout.lines().next().unwrap();
    let value: f64 = line.trim_start_matches("C_p(B) = ").parse().unwrap();
    assert!((value - 5.783185962946784).abs() < 1e-8 * 5.8, "{line}");
    assert!(line.contains("5.783185"));
    assert!(dir.path().join("profile.csv").exists());
    assert!(dir.path().join("khat.csv").exists());
}

#[test]
fn binary_reports_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_sobolev-lab");
    let dir = TempDir::new().unwrap();
    let status = Command::new(exe)
        .args(["--out", dir.path().to_str().unwrap(), "ball", "-n", "3", "-p", "6"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("inadmissible"));

    let status = Command::new(exe)
        .args(["--out", dir.path().to_str().unwrap(), "ball", "-p", "1.5", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    assert!(v["cp_ball"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(lab(d, &["ball", "-n", "3", "-p", "6"]).code, 2);
    assert_eq!(lab(d, &["ball", "-p", "2", "-q", "1"]).code, 2);
    let empty = r#"{"shape":"polygon","vertices":[]}"#;
    assert_eq!(lab(d, &["domain", "--domain", empty, "-p", "2"]).code, 2);
    let o = lab(d, &["verify", "--domain", DISK, "-p", "2.5", "-q", "3"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("1 <= p <= 2"), "{}", o.stderr);
    assert_eq!(lab(d, &["verify", "--domain", DISK, "-p", "2", "-q", "3", "--h", "0"]).code, 2);
    assert_eq!(lab(d, &["no-such-command"]).code, 2);
    assert_eq!(lab(d, &["--help"]).code, 0);
}

#[test]
fn supercritical_flag_lifts_the_gate() {
    let dir = TempDir::new().unwrap();
    let o = lab(dir.path(), &["--experimental-supercritical", "ball", "-n", "2", "-p", "3"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let o = lab(dir.path(), &["ball", "-n", "2", "-p", "3"]);
    assert_eq!(o.code, 2);
}

#[test]
fn solver_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let o = lab(dir.path(), &["--max-iter", "1", "--tol", "1e-15", "domain", "--domain", DISK, "-p", "1.5", "--h", "1/16"]);
    assert_eq!(o.code, 3, "{}", o.stderr);
}

#[test]
fn verify_disk_is_the_equality_case() {
    let dir = TempDir::new().unwrap();
    let o = lab(dir.path(), &["--format", "json", "verify", "--domain", DISK, "-p", "2", "-q", "2", "-q", "4", "--h", "1/64"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["status"], "equality case (ball)");
    assert_eq!(v["report"]["passed"], true);
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn domain_then_rearrange() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(lab(d, &["domain", "--domain", L_SHAPE, "-p", "1.5", "--h", "1/32"]).code, 0);
    let field = d.join("field.csv");
    let out = d.join("r");
    let o = lab(&out, &["--format", "json", "rearrange", "--field", field.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    for r in v["equimeasurability"].as_array().unwrap() {
        assert!(r["residual"].as_f64().unwrap() < 1e-12);
    }
    let text = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("\"kind\":\"volume-profile\""));
}

#[test]
fn replay_reproduces_every_output() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cases: [(&[&str], &str); 3] = [
        (&["ball", "-n", "3", "-p", "1.5", "-q", "3"], "khat.csv"),
        (&["domain", "--domain", L_SHAPE, "-p", "2", "--h", "1/32"], "field.csv"),
        (&["verify", "--domain", DISK, "-p", "1", "-q", "1", "-q", "2", "--h", "1/32"], "report.json"),
    ];
    for (args, file) in cases {
        let first = lab(&a, args);
        assert_eq!(first.code, 0, "{}", first.stderr);
        let replayed = lab(&b, &["replay", a.join(file).to_str().unwrap()]);
        assert_eq!(replayed.code, 0, "{}", replayed.stderr);
        assert_eq!(first.stdout, replayed.stdout);
        for entry in fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            if name.to_str().unwrap().starts_with('.') {
                continue;
            }
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
        }
        fs::remove_dir_all(&a).unwrap();
        fs::remove_dir_all(&b).unwrap();
    }
}

#[test]
fn table_is_deterministic_across_cache_and_jobs() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("cache");
    let args = |jobs: &'static str| -> Vec<&'static str> {
        vec![
            "--jobs", jobs, "table", "--domain", DISK, "--domain", L_SHAPE, "-p", "1", "-p", "2", "-q", "2", "-q", "4",
            "--h", "1/32",
        ]
    };
    let cold = dir.path().join("cold");
    let warm = dir.path().join("warm");
    let parallel = dir.path().join("parallel");
    let uncached = dir.path().join("uncached");
    let o1 = lab_cached(&cold, Some(&cache), &args("1"));
    assert_eq!(o1.code, 0, "{}", o1.stderr);
    assert!(fs::read_dir(&cache).unwrap().count() > 0);
    let o2 = lab_cached(&warm, Some(&cache), &args("1"));
    let o3 = lab_cached(&parallel, Some(&cache), &args("4"));
    let o4 = lab(&uncached, &args("3"));
    let table = |d: &Path| fs::read(d.join("table.csv")).unwrap();
    assert_eq!(table(&cold), table(&warm));
    assert_eq!(table(&cold), table(&parallel));
    assert_eq!(table(&cold), table(&uncached));
    assert_eq!(o1.stdout, o2.stdout);
    assert_eq!(o1.stdout, o3.stdout);
    assert_eq!(o1.stdout, o4.stdout);

    let replay = dir.path().join("replay");
    let o5 = lab(&replay, &["replay", cold.join("table.csv").to_str().unwrap()]);
    assert_eq!(o5.code, 0);
    assert_eq!(table(&cold), table(&replay));
}

#[test]
fn table_keeps_going_past_failed_rows() {
    let dir = TempDir::new().unwrap();
    let o = lab(
        dir.path(),
        &["--format", "csv", "table", "--domain", DISK, "-p", "1", "-p", "3", "-q", "0.5", "-q", "4", "--h", "1/32"],
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stderr.contains("3 of 4 rows failed"), "{}", o.stderr);
    let mut reader = csv::Reader::from_reader(o.stdout.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let good: Vec<_> = rows.iter().filter(|r| r[17].is_empty()).collect();
    assert_eq!(good.len(), 1);
    assert_eq!(&good[0][1], "1");
    assert_eq!(&good[0][2], "4");
    assert_eq!(&good[0][16], "true");
    assert!(rows.iter().any(|r| r[17].contains("1 <= p <= 2")));
}

#[test]
fn table_refuses_oversized_sweeps() {
    let dir = TempDir::new().unwrap();
    let o = lab(dir.path(), &["table", "--domain", DISK, "-p", "1", "-p", "2", "-q", "2", "-q", "4", "--max-rows", "3"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("--max-rows"));
}
