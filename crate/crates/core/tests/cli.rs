use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dbs-uplink"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name).to_str().unwrap().to_owned();
    let mut args = vec!["gen-scenario", "--out", &path];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

#[test]
fn help_lists_subcommands() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["solve", "sweep", "verify", "gen-scenario"] {
        assert!(text.contains(sub), "{text}");
    }
}

#[test]
fn solve_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "sub/s.json", &["--sites", "4", "--ues", "40", "--seed", "2"]);
    let report = dir.path().join("r.json");
    let trace = dir.path().join("t.csv");
    let o = run(&[
        "--jobs",
        "2",
        "solve",
        "--scenario",
        &scenario,
        "--out",
        report.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("aa-bud: throughput"));
    let r: dbs_uplink::report::SolutionReport = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.placements.len(), 3);
    assert_eq!(r.ues.len(), 40);
    assert_eq!(r.served_ues + r.blocked_ues, 40);
    let rows = csv::Reader::from_path(&trace).unwrap().records().count();
    // C(4,3) site sets times 11 altitudes
    assert_eq!(rows, 4 * 11);
    assert_eq!(r.evaluations, rows);
}

#[test]
fn solve_every_algorithm_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", &["--sites", "4", "--ues", "30", "--altitude", "150"]);
    for algo in ["aa-bud", "hd-dbs", "s-mbs"] {
        let o = run(&["solve", "--scenario", &scenario, "--algo", algo]);
        assert!(o.status.success(), "{algo}: {}", stderr(&o));
    }
    let o = run(&["solve", "--scenario", &scenario, "--mode", "coordinate-descent"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unknown_algorithm_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", &["--sites", "4", "--ues", "5"]);
    let o = run(&["solve", "--scenario", &scenario, "--algo", "greedy"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for name in ["aa-bud", "hd-dbs", "s-mbs", "exact-bud"] {
        assert!(e.contains(name), "{e}");
    }
}

#[test]
fn unreadable_scenario_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"seed\": 1").unwrap();
    let o = run(&["solve", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["solve", "--scenario", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_solver_refuses_large_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", &["--sites", "4", "--ues", "50"]);
    let o = run(&["solve", "--scenario", &scenario, "--algo", "exact-bud"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn gen_scenario_rejects_bad_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = run(&["gen-scenario", "--out", out.to_str().unwrap(), "--sites", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_creates_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    std::fs::write(
        &config,
        r#"{"base": {"grid_sites": 4}, "altitude_sweep": {"altitudes_m": [100, 200]}, "workload_sweep": {"ue_counts": [100, 120]}}"#,
    )
    .unwrap();
    let out = dir.path().join("a/b");
    let o = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--seed",
        "5",
        "--seeds",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = |f: &str| csv::Reader::from_path(out.join(f)).unwrap().records().count();
    assert_eq!(rows("altitude_sweep.csv"), 2 * 2);
    assert_eq!(rows("workload_sweep.csv"), 2 * 3);

    std::fs::write(&config, r#"{"seeds": {"count": "many"}}"#).unwrap();
    let o = run(&["sweep", "--config", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("v.json");
    let o = run(&["verify", "--instances", "20", "--json", json.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["instances"], 20);

    let o = run(&["verify", "--instances", "20", "--fault-halve-capacity"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));

    let o = run(&["verify", "--instances", "0"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("zero instances"));

    let o = run(&["verify", "--max-ues", "40"]);
    assert_eq!(o.status.code(), Some(3));
}
