//! End-to-end tests of the binary: flags, exit codes, output determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qrecsim")
}

fn example_db() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/example16.csv")
}

fn qrecsim(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("QRECSIM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn gatecount_prints_the_exact_golden_line() {
    let out = qrecsim(&["gatecount", "--l", "6", "--n", "16", "--c", "0"]);
    assert_eq!(stdout_of(&out), "{\"o1\":132,\"o2\":20,\"o3\":45}\n");
}

#[test]
fn gatecount_defaults_c_to_twice_l_minus_one() {
    let out = qrecsim(&["gatecount", "--l", "6", "--n", "16"]);
    assert_eq!(stdout_of(&out), "{\"o1\":132,\"o2\":20,\"o3\":65}\n");
}

#[test]
fn validate_reports_the_table_shape() {
    let db = example_db();
    let out = qrecsim(&["validate", "--db", db.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["records"], 16);
    assert_eq!(v["id_width"], 4);
    assert_eq!(v["feature_width"], 6);
    assert_eq!(v["qubits"], 17);
    assert_eq!(v["digest"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_flags_and_missing_arguments_exit_one() {
    let out = qrecsim(&["gatecount", "--l", "6", "--n", "16", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qrecsim(&["recommend", "--db", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qrecsim(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    let out = qrecsim(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("qrecsim"));
    let out = qrecsim(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn invalid_csv_exits_one_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "id,banana\n0,11\n").unwrap();
    let target = dir.path().join("circuit.txt");
    let out = qrecsim(&[
        "export-circuit",
        "--db",
        bad.to_str().unwrap(),
        "--feature",
        "11",
        "--stage",
        "init",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!target.exists());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let dumps = dir.path().join("dumps");
    let out = qrecsim(&[
        "recommend",
        "--db",
        bad.to_str().unwrap(),
        "--feature",
        "11",
        "--shots",
        "1",
        "--stage-dumps",
        dumps.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dumps.exists());
}

#[test]
fn exact_recommend_matches_predict() {
    let db = example_db();
    let predict = stdout_of(&qrecsim(&[
        "predict",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "101011",
    ]));
    let recommend = stdout_of(&qrecsim(&[
        "recommend",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "101011",
        "--shots",
        "3",
        "--exact",
    ]));
    let p: serde_json::Value = serde_json::from_str(&predict).unwrap();
    let r: serde_json::Value = serde_json::from_str(&recommend).unwrap();
    assert_eq!(p["analytic"]["p_c0_zero"], r["analytic"]["p_c0_zero"]);
    assert_eq!(p["table_digest"], r["table_digest"]);
    let pr = p["recommended"].as_array().unwrap();
    let rr = r["recommended"].as_array().unwrap();
    assert_eq!(pr.len(), rr.len());
    for (a, b) in pr.iter().zip(rr) {
        assert_eq!(a["id"], b["id"]);
        let pa = a["p"].as_f64().unwrap();
        let pb = b["p"].as_f64().unwrap();
        assert!((pa - pb).abs() < 1e-10, "{pa} vs {pb}");
    }
}

#[test]
fn sampled_runs_with_one_seed_are_byte_identical() {
    let db = example_db();
    let args = [
        "recommend",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "101011",
        "--shots",
        "50",
        "--seed",
        "5",
    ];
    let a = stdout_of(&qrecsim(&args));
    let b = stdout_of(&qrecsim(&args));
    assert_eq!(a, b);
    let other = stdout_of(&qrecsim(&[
        "recommend",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "101011",
        "--shots",
        "50",
        "--seed",
        "6",
    ]));
    assert_ne!(a, other);
}

#[test]
fn seed_env_variable_is_a_fallback_only() {
    let db = example_db();
    let base = [
        "recommend",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "101011",
        "--shots",
        "40",
    ];
    let flagged = stdout_of(&qrecsim(&[&base[..], &["--seed", "9"]].concat()));
    let env_only = Command::new(bin())
        .args(base)
        .env("QRECSIM_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(flagged, stdout_of(&env_only));
    let overridden = Command::new(bin())
        .args([&base[..], &["--seed", "9"]].concat())
        .env("QRECSIM_SEED", "12345")
        .output()
        .unwrap();
    assert_eq!(flagged, stdout_of(&overridden));
    let default = stdout_of(&qrecsim(&base));
    let zero = stdout_of(&qrecsim(&[&base[..], &["--seed", "0"]].concat()));
    assert_eq!(default, zero);
}

#[test]
fn marked_flag_accepts_comma_separated_patterns() {
    let db = example_db();
    let out = stdout_of(&qrecsim(&[
        "predict",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "110001",
        "--marked",
        "111001,110011",
        "--iterations",
        "1",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["analytic"]["g"], 2);
    assert_eq!(v["config"]["iterations"], 1);
    assert_eq!(v["config"]["auto_iterations"], false);
    let auto = stdout_of(&qrecsim(&[
        "predict",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "110001",
        "--iterations",
        "auto",
    ]));
    let v: serde_json::Value = serde_json::from_str(&auto).unwrap();
    assert_eq!(v["config"]["auto_iterations"], true);
}

#[test]
fn reproduce_writes_deterministic_data_files() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("one_a");
    let out2 = dir.path().join("one_b");
    for out in [&out1, &out2] {
        let res = qrecsim(&["reproduce", "--case", "one", "--out", out.to_str().unwrap()]);
        assert!(res.status.success());
        for name in ["report.json", "post_knn.csv", "post_grover.csv", "trajectory.csv"] {
            assert!(out.join(name).exists(), "missing {name}");
        }
    }
    for name in ["report.json", "post_knn.csv", "post_grover.csv", "trajectory.csv"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["source"], "reproduce-one");
    let traj = std::fs::read_to_string(out1.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,marked_probability\n1,"));
}

#[test]
fn exhausted_retries_exit_with_code_two() {
    // P(c0=0) = cos²(5π/12) ≈ 0.067 for this single record; find a seed whose
    // ten single-attempt shots all fail, in-process, then run the binary once
    let table = qrecsim_core::database::parse_table_str("id,feature\n0,111110\n").unwrap();
    let query = qrecsim_core::database::UserQuery::parse("000000").unwrap();
    let seed = (0..500u64)
        .find(|&seed| {
            let config = qrecsim_core::pipeline::RunConfig {
                seed,
                shots: 10,
                max_attempts: 1,
                exact: false,
                amplification: Some(qrecsim_core::grover::AmplificationPlan::default()),
                emit_stage_dumps: false,
            };
            matches!(
                qrecsim_core::pipeline::run(&table, &query, &config),
                Err(qrecsim_core::Error::RetryExhausted { .. })
            )
        })
        .expect("some seed exhausts every shot");

    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("far.csv");
    std::fs::write(&db, "id,feature\n0,111110\n").unwrap();
    let out = qrecsim(&[
        "recommend",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "000000",
        "--shots",
        "10",
        "--max-attempts",
        "1",
        "--seed",
        &seed.to_string(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exhausted"));
}

#[test]
fn stage_dump_files_cover_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let dumps = dir.path().join("dumps");
    let db = example_db();
    let out = qrecsim(&[
        "recommend",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "101011",
        "--shots",
        "1",
        "--exact",
        "--stage-dumps",
        dumps.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for name in ["post_init", "post_knn", "post_grover"] {
        let dist = dumps.join(format!("dist_{name}.csv"));
        let state = dumps.join(format!("state_{name}.csv"));
        assert!(dist.exists(), "missing {dist:?}");
        assert!(state.exists(), "missing {state:?}");
        let dist = std::fs::read_to_string(dist).unwrap();
        assert!(dist.starts_with("id,feature,p\n"));
        assert_eq!(dist.lines().count(), 17);
        let state = std::fs::read_to_string(state).unwrap();
        assert!(state.starts_with("index,ket,re,im\n"));
        assert_eq!(state.lines().count(), 1 + (1 << 17));
    }
}

#[test]
fn exported_circuits_are_stage_tagged_gate_lists() {
    let dir = tempfile::tempdir().unwrap();
    let db = example_db();
    for (stage, tag) in [("init", "init"), ("knn", "knn"), ("grover", "grover")] {
        let path = dir.path().join(format!("{stage}.txt"));
        let out = qrecsim(&[
            "export-circuit",
            "--db",
            db.to_str().unwrap(),
            "--feature",
            "101011",
            "--stage",
            stage,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("# stage: {tag}\n")));
        assert!(text.lines().count() > 1);
    }
    // the scoring stage is 4l+2 gates for l=6
    let knn = std::fs::read_to_string(dir.path().join("knn.txt")).unwrap();
    assert_eq!(knn.lines().count(), 1 + 26);
}

#[test]
fn two_record_example_predicts_half_acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("two.csv");
    std::fs::write(&db, "id,feature\n0,11\n1,00\n").unwrap();
    let out = stdout_of(&qrecsim(&[
        "predict",
        "--db",
        db.to_str().unwrap(),
        "--feature",
        "11",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["analytic"]["p_c0_zero"].as_f64().unwrap(), 0.5);
}
