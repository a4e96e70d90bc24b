//! End-to-end checks of the command-line interface: exit codes, output
//! shapes and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_basalt"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn basalt")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("basalt-cli-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn analyze_outputs_are_byte_identical_across_reruns() {
    let a = run(&["analyze", "equilibrium", "--f", "0.1", "--n", "1000", "--v", "100", "--rho", "1"]);
    let b = run(&["analyze", "equilibrium", "--f", "0.1", "--n", "1000", "--v", "100", "--rho", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("0.105028"), "unexpected output: {text}");
}

#[test]
fn analyze_isolation_matches_reference_values() {
    let out = run(&[
        "analyze", "isolation", "--join", "--f0", "0.5", "--i", "250", "--f", "0.1", "--n",
        "10000", "--v", "200",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("join,5.88160e-11"), "{text}");
}

#[test]
fn simulate_zero_byzantine_emits_zero_columns_and_exact_row_counts() {
    let dir = tmpdir("simulate");
    let out_dir = dir.join("runs");
    let out = run(&[
        "simulate", "--algo", "basalt", "--n", "120", "--f", "0", "--v", "10", "--rho", "1",
        "--force", "10", "--ticks", "40", "--seeds", "1..3", "--no-graph-metrics",
        "--no-track-seen", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary = read(&out_dir.join("summary.csv"));
    // |grid| * |seeds| rows plus the header.
    assert_eq!(summary.lines().count(), 1 + 3);
    let run_csv = read(&out_dir.join("run_basalt_n120_f0_v10_rho1_F10_s1.csv"));
    let mut lines = run_csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tick,byz_sample_fraction,byz_view_fraction,isolated_count,clustering,mean_path,indegree_spread,c_mean"
    );
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], "0"); // byz_sample_fraction
        assert_eq!(cols[2], "0"); // byz_view_fraction
        assert_eq!(cols[3], "0"); // isolated_count
    }

    // Reruns are byte-identical.
    let before = read(&out_dir.join("aggregate.csv"));
    let again = run(&[
        "simulate", "--algo", "basalt", "--n", "120", "--f", "0", "--v", "10", "--rho", "1",
        "--force", "10", "--ticks", "40", "--seeds", "1..3", "--no-graph-metrics",
        "--no-track-seen", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(before, read(&out_dir.join("aggregate.csv")));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn usage_errors_exit_2() {
    // Unknown algorithm.
    let out = run(&["simulate", "--algo", "nope", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    // Empty grid value list.
    let out = run(&["simulate", "--f", "", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    // Grid over the cap.
    let out = run(&[
        "simulate", "--n", "100", "--f", "0.1", "--seeds", "1..20000", "--out", "/tmp/unused",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Invalid protocol schedule (k/rho not integral).
    let out = run(&[
        "simulate", "--algo", "basalt", "--n", "100", "--f", "0.1", "--v", "10", "--rho", "3",
        "--ticks", "10", "--seeds", "1", "--out", "/tmp/unused",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Clap-level parse failure.
    let out = run(&["simulate", "--badflag"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown sweep panel.
    let out = run(&["sweep", "--panel", "zzz", "--out", "/tmp/unused.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3_and_name_the_row() {
    let dir = tmpdir("data");
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "network,asn,active_count\n10.0.0.0/8,1,100\nbroken,2,5\n").unwrap();
    let out = run(&[
        "analyze", "power", "--dataset", bad.to_str().unwrap(), "--honest", "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("row 2"), "stderr: {err}");

    let missing = dir.join("missing.csv");
    let out = run(&[
        "analyze", "power", "--dataset", missing.to_str().unwrap(), "--honest", "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn dataset_round_trip_through_the_cli() {
    let dir = tmpdir("dataset");
    let path = dir.join("blocks.csv");
    let out = run(&["analyze", "gen-dataset", "--out", path.to_str().unwrap(), "--seed", "1"]);
    assert!(out.status.success());

    let table2 = run(&[
        "analyze", "table2", "--dataset", path.to_str().unwrap(), "--honest", "100,1000",
    ]);
    assert!(table2.status.success());
    let text = String::from_utf8(table2.stdout).unwrap();
    assert_eq!(text.lines().count(), 6); // header + 5 methods
    assert_eq!(text.lines().next().unwrap(), "method,q100,q1000");
    assert!(text.contains("uniform,0.999999,0.999991"), "{text}");

    // Byte-identical across separate processes.
    let rerun = run(&[
        "analyze", "table2", "--dataset", path.to_str().unwrap(), "--honest", "100,1000",
    ]);
    assert_eq!(text.as_bytes(), rerun.stdout.as_slice());

    let fig2 = run(&[
        "analyze", "fig2", "--dataset", path.to_str().unwrap(), "--top", "5", "--honest",
        "1000",
    ]);
    assert!(fig2.status.success());
    let text = String::from_utf8(fig2.stdout).unwrap();
    assert_eq!(text.lines().count(), 6); // header + 5 ASes
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_file_defaults_are_overridden_by_flags() {
    let dir = tmpdir("config");
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "n = \"120\"\nf = \"0\"\nv = \"10\"\nticks = 20\nseeds = \"1\"\n").unwrap();
    let out_dir = dir.join("runs");
    let out = run(&[
        "--config", cfg.to_str().unwrap(),
        "simulate", "--no-graph-metrics", "--no-track-seen",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read(&out_dir.join("summary.csv"));
    assert!(summary.lines().nth(1).unwrap().starts_with("basalt,120,0,10,"));

    // A flag overrides the file value.
    let out = run(&[
        "--config", cfg.to_str().unwrap(),
        "simulate", "--n", "140", "--no-graph-metrics", "--no-track-seen",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary = read(&out_dir.join("summary.csv"));
    assert!(summary.lines().nth(1).unwrap().starts_with("basalt,140,"));
    let _ = std::fs::remove_dir_all(&dir);
}
