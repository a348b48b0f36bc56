use std::path::Path;
use std::process::{Command, Output};

use freerecall::output::read_table;
use freerecall_core::{integrate_reduced, IntegrationConfig, ReducedParams, ReducedState};

fn freerecall(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freerecall"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sync_check_reports_bounds() {
    let o = freerecall(&["sync-check", "--g-a", "97", "--tau", "54", "--n", "12", "--omega", "1.8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("(1.7963, 1.8302)"), "{text}");
    assert!(text.contains("all conditions satisfied"), "{text}");
}

#[test]
fn sync_check_flags_violations() {
    let o = freerecall(&["sync-check", "--omega", "2.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("NOT satisfied"));
    assert!(!stdout(&o).contains("all conditions satisfied"));
}

#[test]
fn equilibria_below_pitchfork_is_unstable_origin() {
    let o = freerecall(&["equilibria", "--kappa", "5", "--g-a", "10", "--tau", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 1, "{text}");
    let fields: Vec<&str> = rows[0].split('\t').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[1], "0");
    assert_eq!(fields[4], "false");
}

#[test]
fn equilibria_above_pitchfork_lists_three() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("eq.json");
    let o = freerecall(&[
        "equilibria", "--kappa", "14", "--g-a", "10", "--tau", "2", "--report", path_str(&report),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["equilibria"].as_array().unwrap().len(), 3);
}

#[test]
fn validation_errors_exit_one() {
    let cases: [&[&str]; 5] = [
        &["simulate", "--t-end", "0"],
        &["reduce", "--tau", "1"],
        &["classify", "--trial-count", "2"],
        &["sweep", "--kappa-step", "-1"],
        &["sync-check", "--omega", "nan"],
    ];
    for args in cases {
        let o = freerecall(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
        assert!(stdout(&o).is_empty(), "{args:?}");
    }
}

#[test]
fn unknown_config_key_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "omgea = 2.0\n").unwrap();
    let o = freerecall(&["sync-check", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("omgea"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "kappa = 14.0\ng_a = 10.0\ntau = 2.0\n").unwrap();
    let from_file = freerecall(&["equilibria", "--config", path_str(&cfg)]);
    assert_eq!(stdout(&from_file).lines().count(), 5);
    let overridden = freerecall(&["equilibria", "--config", path_str(&cfg), "--kappa", "5"]);
    assert_eq!(stdout(&overridden).lines().count(), 3);
}

#[test]
fn unwritable_output_exits_two() {
    let o = freerecall(&["reduce", "--output", "/nonexistent-dir/r.csv", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("nonexistent-dir"));
}

#[test]
fn reduce_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let o = freerecall(&[
        "reduce", "--kappa", "5", "--g-a", "10", "--tau", "2", "--t-end", "20", "--dt", "0.01",
        "--record-stride", "5", "--d0", "-0.3", "--e0", "0.2", "--output", path_str(&path),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = read_table(&path).unwrap();
    assert_eq!(table.header, ["t", "d", "e"]);

    let p = ReducedParams::new(5.0, 10.0, 2.0).unwrap();
    let cfg = IntegrationConfig::new(0.01, 20.0, 5).unwrap();
    let traj = integrate_reduced(&p, ReducedState::new(-0.3, 0.2), &cfg).unwrap();
    assert_eq!(table.rows.len(), traj.len());
    for (row, x) in table.rows.iter().zip(traj.states()) {
        assert_eq!(&row[1..], x);
    }
}

#[test]
fn simulate_writes_network_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.csv");
    let o = freerecall(&["simulate", "--n", "3", "--t-end", "2", "--output", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = read_table(&path).unwrap();
    assert_eq!(table.header.len(), 1 + 4 * 3);
    assert_eq!(&table.header[..5], ["t", "s_1_1", "s_1_2", "a_1_1", "a_1_2"]);
    // 400 steps at dt = 0.005, one row every 10 steps plus t = 0
    assert_eq!(table.rows.len(), 41);
    let t = table.column("t").unwrap();
    assert!((t[40] - 2.0).abs() < 1e-12);
    assert!(table.column("s_1_1").unwrap()[0].abs() <= 1.0);
}

#[test]
fn reports_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = freerecall(&[
            "classify", "--kappa", "5", "--g-a", "10", "--tau", "2", "--trial-count", "8",
            "--seed", "3", "--output", path_str(&path),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(path).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let json: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(json["regime"], "StableLimitCycle");
    assert_eq!(json["evidence"].as_array().unwrap().len(), 8);
}

#[test]
fn sweep_brackets_bistable_onset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let o = freerecall(&[
        "sweep", "--g-a", "10", "--tau", "2", "--kappa-min", "13.1", "--kappa-max", "13.4",
        "--kappa-step", "0.1", "--trial-count", "8", "--refine-width", "0", "--output",
        path_str(&path),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["sweep"]["grid"].as_array().unwrap().len(), 4);
    let transitions = json["sweep"]["transitions"].as_array().unwrap();
    let last = &transitions[transitions.len() - 1];
    assert_eq!(last["to"], "BistableFixedPoints");
    assert!(last["kappa_low"].as_f64().unwrap() >= 13.2 - 1e-9);
    assert!(last["kappa_high"].as_f64().unwrap() <= 13.3 + 1e-9);
    assert!(json["refined_transitions"].as_array().unwrap().is_empty());
}

#[test]
fn recall_demo_writes_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let o = freerecall(&["recall-demo", "--t-end", "200", "--output", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for (file, header) in [
        ("hypercolumn1_activation.csv", vec!["t", "s_1_1", "s_1_2"]),
        ("hypercolumn1_output_adaptation.csv", vec!["t", "o_1_1", "o_1_2", "a_1_1", "a_1_2"]),
    ] {
        assert_eq!(read_table(&out.join(file)).unwrap().header, header);
    }
    let sync = read_table(&out.join("sync_errors.csv")).unwrap();
    assert_eq!(sync.header.len(), 2 + 2 * 11);
    assert_eq!(sync.header[2], "D_1_2");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["warning"].is_null());
    assert!(summary["final_sync_error"].as_f64().unwrap() < 1.0);
}

#[test]
fn recall_demo_warns_outside_sync_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let o = freerecall(&["recall-demo", "--omega", "1.7", "--t-end", "10", "--output", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("warning"));
}
