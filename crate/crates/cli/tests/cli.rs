use std::path::Path;
use std::process::{Command, Output};

use modaldyn_core::random::{random_density, rng};
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_modaldyn"));
    c.env_remove("MODALDYN_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.display().to_string()
}

fn cmatrix(rows: &[&[f64]]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Array(r.iter().map(|x| json!([x, 0.0])).collect()))
            .collect(),
    )
}

#[test]
fn epr_subsystem_is_flagged_degenerate() {
    let v = json_stdout(&run(&[
        "epistemic",
        "--scenario",
        "epr-bohm",
        "--subsystem",
        "A",
    ]));
    assert_eq!(v["schema_version"], 1);
    let entries = v["snapshots"][0]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for e in entries {
        assert!((e["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(e["degenerate"], true);
    }
}

#[test]
fn dephasing_eigenvalues_at_ln2() {
    let out = run(&[
        "epistemic",
        "--scenario",
        "dephasing",
        "--gamma",
        "0.5",
        "--time",
        "0.6931471805599453",
        "--rho0",
        "plus",
    ]);
    let v = json_stdout(&out);
    let e = &v["snapshots"][0]["entries"];
    assert!((e[0]["probability"].as_f64().unwrap() - 0.75).abs() < 1e-10);
    assert!((e[1]["probability"].as_f64().unwrap() - 0.25).abs() < 1e-10);
}

#[test]
fn several_times_in_one_call() {
    let v = json_stdout(&run(&[
        "epistemic",
        "--scenario",
        "damping",
        "--time",
        "0,0.5,1",
    ]));
    assert_eq!(v["snapshots"].as_array().unwrap().len(), 3);
    assert_eq!(v["snapshots"][0]["entries"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let out = run(&["epistemic", "--scenario", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
    let out = run(&["epistemic"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn epr_table_permissive_and_strict() {
    let v = json_stdout(&run(&[
        "conditional",
        "--scenario",
        "epr-bohm",
        "--blocks",
        "A,B",
        "--mode",
        "permissive",
    ]));
    let probs: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["probability"].as_f64().unwrap())
        .collect();
    assert_eq!(probs.len(), 4);
    let want = [0.0, 0.5, 0.5, 0.0];
    for (p, w) in probs.iter().zip(want) {
        assert!((p - w).abs() < 1e-12, "{probs:?}");
    }
    assert_eq!(v["basis_dependent"], true);
    assert_eq!(v["report"]["normalized"], true);

    let out = run(&[
        "conditional",
        "--scenario",
        "epr-bohm",
        "--blocks",
        "A,B",
        "--mode",
        "strict",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn random_two_by_three_file_rows_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let rho = random_density::<f64, _>(6, 6, &mut rng(17));
    let matrix: Vec<Vec<[f64; 2]>> = (0..6)
        .map(|i| (0..6).map(|j| [rho[(i, j)].re, rho[(i, j)].im]).collect())
        .collect();
    let scenario = json!({
        "schema_version": 1,
        "name": "random_2x3",
        "layout": {"dims": [2, 3], "labels": ["A", "B"]},
        "initial_state": {"kind": "density", "matrix": matrix},
        "dynamics": {"kind": "lindblad", "jumps": [
            {"operator": cmatrix(&[&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0], &[0.0; 6], &[0.0; 6], &[0.0; 6], &[0.0; 6], &[0.0; 6]]), "rate": 0.7}
        ]}
    });
    let path = write_json(dir.path(), "s.json", &scenario);
    let out = run(&[
        "conditional",
        "--scenario",
        &path,
        "--blocks",
        "A,B",
        "--interval",
        "0.4",
        "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut sums = [0.0f64; 6];
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let w: usize = rec[1].parse().unwrap();
        sums[w] += rec[4].parse::<f64>().unwrap();
    }
    for s in sums {
        assert!((s - 1.0).abs() < 1e-8);
    }
    assert!(text.contains("# normalized=true"));
}

#[test]
fn kinematic_table_on_a_sub_collection() {
    let v = json_stdout(&run(&[
        "conditional",
        "--scenario",
        "von-neumann",
        "--n-env",
        "2",
        "--blocks",
        "S,P",
        "--mode",
        "permissive",
    ]));
    assert_eq!(v["blocks"], json!([["S"], ["P"]]));
    assert_eq!(v["report"]["normalized"], true);
}

#[test]
fn sample_writes_indicator_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.json");
    let out = run(&[
        "sample",
        "--scenario",
        "damping",
        "--t",
        "1",
        "--steps",
        "8",
        "--n",
        "1",
        "--seed",
        "3",
        "--trajectory-out",
        traj.to_str().unwrap(),
    ]);
    let v = json_stdout(&out);
    for s in v["slices"].as_array().unwrap() {
        let f: Vec<f64> = s["frequencies"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert_eq!(f.iter().filter(|&&x| x == 1.0).count(), 1);
    }
    let t: Value = serde_json::from_str(&std::fs::read_to_string(traj).unwrap()).unwrap();
    assert_eq!(t["schema_version"], 1);
    assert_eq!(t["trajectories"].as_array().unwrap().len(), 1);
    assert_eq!(t["trajectories"][0]["points"].as_array().unwrap().len(), 9);
}

#[test]
fn seed_from_environment_and_override() {
    let args = [
        "sample",
        "--scenario",
        "damping",
        "--steps",
        "4",
        "--n",
        "50",
    ];
    let from_env = bin()
        .args(args)
        .env("MODALDYN_SEED", "11")
        .output()
        .unwrap();
    let explicit = run(&[&args[..], &["--seed", "11"]].concat());
    assert_eq!(from_env.stdout, explicit.stdout);
    let overridden = bin()
        .args(args)
        .args(["--seed", "11"])
        .env("MODALDYN_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(overridden.stdout, explicit.stdout);
    let other = run(&[&args[..], &["--seed", "12"]].concat());
    assert_ne!(other.stdout, explicit.stdout);
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn sample_exit_codes() {
    let out = run(&[
        "sample",
        "--scenario",
        "von-neumann",
        "--n-env",
        "1",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let mixed = json!({
        "schema_version": 1,
        "name": "mixed",
        "layout": {"dims": [2], "labels": ["Q"]},
        "initial_state": {"kind": "density", "matrix": cmatrix(&[&[0.5, 0.0], &[0.0, 0.5]])},
        "dynamics": {"kind": "lindblad"}
    });
    let path = write_json(dir.path(), "mixed.json", &mixed);
    let out = run(&["sample", "--scenario", &path, "--seed", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&[
        "sample",
        "--scenario",
        &path,
        "--seed",
        "1",
        "--mode",
        "permissive",
        "--n",
        "10",
    ]);
    assert_eq!(json_stdout(&out)["basis_dependent"], true);
}

#[test]
fn verify_channel_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let unitary =
        json!({"schema_version": 1, "kind": "unitary", "matrix": cmatrix(&[&[h, h], &[h, -h]])});
    let out = run(&[
        "verify-channel",
        "--channel",
        &write_json(dir.path(), "u.json", &unitary),
    ]);
    let v = json_stdout(&out);
    assert_eq!(v["is_cp"], true);
    assert_eq!(v["is_tp"], true);

    let swap = cmatrix(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ]);
    let transpose = json!({"schema_version": 1, "kind": "superoperator", "matrix": swap});
    let report = dir.path().join("report.json");
    let out = run(&[
        "verify-channel",
        "--channel",
        &write_json(dir.path(), "t.json", &transpose),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["is_cp"], false);
    assert_eq!(v["is_tp"], true);
    assert!((v["choi_min_eigenvalue"].as_f64().unwrap() + 1.0).abs() < 1e-12);

    let lossy = json!({"schema_version": 1, "kind": "kraus", "operators": [cmatrix(&[&[1.0, 0.0], &[0.0, 0.5]])]});
    let out = run(&[
        "verify-channel",
        "--channel",
        &write_json(dir.path(), "k.json", &lossy),
    ]);
    assert_eq!(out.status.code(), Some(5));

    let damping = json!({"schema_version": 1, "kind": "lindblad", "dim": 2, "time": 0.5,
        "jumps": [{"operator": cmatrix(&[&[0.0, 1.0], &[0.0, 0.0]]), "rate": 1.0}]});
    let out = run(&[
        "verify-channel",
        "--channel",
        &write_json(dir.path(), "l.json", &damping),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["verify-channel", "--channel", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["epr-bohm", "ghz", "dephasing", "damping", "von-neumann"] {
        let path = dir.path().join(format!("{name}.json"));
        let out = run(&[
            "scenario",
            "--scenario",
            name,
            "--n-env",
            "3",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let p = path.to_str().unwrap();
        let a = run(&[
            "epistemic",
            "--scenario",
            name,
            "--n-env",
            "3",
            "--time",
            "1",
        ]);
        let b = run(&["epistemic", "--scenario", p, "--time", "1"]);
        let (va, vb) = (json_stdout(&a), json_stdout(&b));
        assert_eq!(va["snapshots"], vb["snapshots"], "{name}");
    }
}

#[test]
fn csv_outputs_carry_schema_version() {
    let out = run(&[
        "epistemic",
        "--scenario",
        "ghz",
        "--subsystem",
        "A,B",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("schema_version,"));
    assert!(lines.all(|l| l.starts_with("1,")));
}
