use std::process::Command;

use conicond_cli::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conicond"))
}

fn small_tv() -> TvStatdimParams {
    TvStatdimParams {
        n: 12,
        s_min: 2,
        s_max: Some(12),
        s_step: 5,
    }
}

#[test]
fn csv_has_metadata_and_header() {
    let csv = cmd_tv_statdim(&small_tv(), 200, 9).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], format!("# seed=9,samples=200,version={VERSION}"));
    assert_eq!(lines[1], "s,statdim_mc,stderr,bound_prop13,kappa_c");
    assert_eq!(lines.len(), 2 + 3);
    assert!(!csv.contains('\r'));
    for row in &lines[2..] {
        let f: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[3] >= f[1] - 3.0 * f[2], "{row}");
    }
}

#[test]
fn commands_are_deterministic() {
    let a = cmd_tv_statdim(&small_tv(), 200, 4).unwrap();
    assert_eq!(a, cmd_tv_statdim(&small_tv(), 200, 4).unwrap());
    assert_ne!(a, cmd_tv_statdim(&small_tv(), 200, 5).unwrap());
    let p = PhaseParams {
        n: 20,
        s: 3,
        family: "l1".into(),
        m_min: Some(6),
        m_max: Some(14),
        m_step: 4,
        trials: 6,
        eta: 0.1,
    };
    assert_eq!(cmd_phase(&p, 100, 1).unwrap(), cmd_phase(&p, 100, 1).unwrap());
    let k = KappaDgParams {
        rho: vec![0.3, 0.7],
        n_max: 20,
        n_step: 10,
        trials: 5,
    };
    let out = cmd_kappa_dg(&k, 2).unwrap();
    assert_eq!(out, cmd_kappa_dg(&k, 2).unwrap());
    assert!(out.lines().any(|l| l.ends_with("NaN,0")));
}

#[test]
fn opt_m_flags_inadmissible_rows() {
    let p = OptMParams {
        n: 30,
        delta_c: 5.0,
        eta: 0.2,
        m_min: Some(5),
        m_max: Some(30),
        m_step: 5,
        operator: None,
        invert: true,
    };
    let csv = cmd_opt_m(&p, 100, 3).unwrap();
    let flags: Vec<&str> = csv.lines().skip(2).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(flags.first(), Some(&"0"));
    assert_eq!(flags.last(), Some(&"1"));
}

#[test]
fn config_validation() {
    assert!(ExperimentConfig::from_json(r#"{"command":"verify","params":{"suite":"cones"},"seed":1}"#).is_ok());
    // Seed is mandatory.
    assert!(ExperimentConfig::from_json(r#"{"command":"verify","params":{"suite":"cones"}}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"command":"nope","seed":1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"command":"verify","params":{"suite":"cones","x":1},"seed":1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"command":"phase","params":{"n":10},"seed":1}"#).is_err());
    assert!(ExperimentConfig::from_json(
        r#"{"command":"opt-m","params":{"n":10,"delta_c":2,"eta":0.1},"seed":1,"extra":0}"#
    )
    .is_err());
}

#[test]
fn verify_report_and_exit_code() {
    let rep = cmd_verify(Suite::Cones, 200, 1).unwrap();
    assert!(rep.pass);
    let st = bin()
        .args(["verify", "--suite", "cones", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&st.stdout).contains("ALL PASS"));
    let st = bin().args(["verify", "--suite", "cones"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2), "missing seed must fail");
}

#[test]
fn out_file_and_config_file_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let st = bin()
        .args(["--seed", "5", "--samples", "100", "--out"])
        .arg(&a)
        .args(["tv-statdim", "--n", "8", "--s-step", "3"])
        .status()
        .unwrap();
    assert!(st.success());
    let cfg = dir.path().join("cfg.json");
    let b = dir.path().join("b.csv");
    std::fs::write(
        &cfg,
        serde_json::json!({"command": "tv-statdim", "params": {"n": 8, "s_step": 3}, "seed": 5, "samples": 100, "out": b})
            .to_string(),
    )
    .unwrap();
    let st = bin().args(["--threads", "1", "--config"]).arg(&cfg).status().unwrap();
    assert!(st.success());
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    assert!(a.starts_with(b"# seed=5,samples=100,"));
}

#[test]
fn project_and_condition_json() {
    let st = bin()
        .args([
            "--json",
            "--seed",
            "0",
            "project",
            "--cone",
            r#"{"variant":"NonnegOrthant","dim":3}"#,
            "--x",
            "1,-2,3",
        ])
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let v: serde_json::Value = serde_json::from_slice(&st.stdout).unwrap();
    assert_eq!(v["point"], serde_json::json!([1.0, 0.0, 3.0]));
    assert_eq!(v["face_dim"], 2);

    let p = ConditionParams {
        a: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
        c: serde_json::json!({"variant":"Subspace","basis":[[1.0,0.0],[0.0,1.0]]}),
        d: None,
        method: None,
        starts: None,
    };
    let rep = cmd_condition(&p, 0).unwrap();
    assert!((rep.renegar_r - 2.0).abs() < 1e-9);
}

#[test]
fn statdim_command() {
    let p = StatdimParams {
        cone: serde_json::json!({"variant":"NonnegOrthant","dim":4}),
    };
    let out = cmd_statdim(&p, 100, 0).unwrap();
    assert_eq!(out.statdim.mean, 2.0);
    assert_eq!(out.statdim.stderr, 0.0);
}
