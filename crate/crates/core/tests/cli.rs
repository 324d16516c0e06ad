//! End-to-end tests of the qsteer binary.

use std::io::Write;
use std::process::Command;

fn qsteer() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qsteer"))
}

fn run_json(args: &[&str]) -> serde_json::Value {
    let out = qsteer().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "qsteer {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn exit_code(args: &[&str]) -> i32 {
    qsteer()
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("no signal")
}

#[test]
fn analyze_steerable_test_state() {
    let report = run_json(&[
        "analyze", "--family", "test_state", "--V", "0.6", "--theta", "0.39269908169872414",
    ]);
    assert_eq!(report["avn"]["steerable"], true);
    let dir = report["avn"]["direction"].as_array().unwrap();
    assert!(dir[0].as_f64().unwrap().abs() > 0.99, "direction should be near x");
    // invisible to the ten-setting linear inequality
    for key in ["AtoB", "BtoA"] {
        let violation = report["linear_inequality"][key]["violation"].as_f64().unwrap();
        assert!(violation <= 0.0, "{key}: {violation}");
    }
    // one-way: no hidden-state model for Bob, one for Alice
    assert_eq!(report["lhs"]["results"]["AtoB"]["feasible"], false);
    assert_eq!(report["lhs"]["results"]["BtoA"]["feasible"], true);
    assert_eq!(report["equivalence"]["all_agree"], true);
}

#[test]
fn analyze_bell_state_violation() {
    let report = run_json(&[
        "analyze", "--family", "test_state", "--V", "1.0", "--theta", "0.7853981633974483",
    ]);
    assert_eq!(report["avn"]["steerable"], true);
    let violation = report["avn_inequality"]["violation"].as_f64().unwrap();
    assert!((violation - 0.25).abs() < 1e-9, "violation {violation}");
}

#[test]
fn analyze_maximally_mixed_not_steerable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.json");
    let entries: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|i| (0..4).map(|j| [if i == j { 0.25 } else { 0.0 }, 0.0]).collect())
        .collect();
    std::fs::write(&path, serde_json::to_string(&serde_json::json!({ "matrix": entries })).unwrap())
        .unwrap();
    let report = run_json(&["analyze", "--state", path.to_str().unwrap()]);
    assert_eq!(report["avn"]["steerable"], false);
    for key in ["AtoB", "BtoA"] {
        assert!(report["linear_inequality"][key]["violation"].as_f64().unwrap() <= 0.0);
        assert_eq!(report["lhs"]["results"][key]["feasible"], true);
    }
}

#[test]
fn analyze_echo_round_trips() {
    let report = run_json(&[
        "analyze", "--family", "color_noise", "--V", "0.6", "--theta", "0.3", "--echo",
    ]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("echo.json");
    let mut f = std::fs::File::create(&path).unwrap();
    write!(f, "{}", serde_json::to_string(&report["state"]).unwrap()).unwrap();
    drop(f);

    let again = run_json(&["analyze", "--state", path.to_str().unwrap(), "--echo"]);
    let a = report["state"]["matrix"].as_array().unwrap();
    let b = again["state"]["matrix"].as_array().unwrap();
    for i in 0..4 {
        for j in 0..4 {
            for part in 0..2 {
                let x = a[i][j][part].as_f64().unwrap();
                let y = b[i][j][part].as_f64().unwrap();
                assert!((x - y).abs() <= 1e-12, "entry ({i},{j})");
            }
        }
    }
}

#[test]
fn exit_codes_follow_error_class() {
    // invalid parameter values: 2
    assert_eq!(
        exit_code(&["analyze", "--family", "test_state", "--V", "1.5", "--theta", "0.3"]),
        2
    );
    assert_eq!(
        exit_code(&["analyze", "--family", "no_such_family", "--V", "0.5", "--theta", "0.3"]),
        2
    );

    // invalid state matrix (not PSD): 2
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let entries: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| {
                    let d = [1.1, 0.0, 0.0, -0.1][i];
                    [if i == j { d } else { 0.0 }, 0.0]
                })
                .collect()
        })
        .collect();
    std::fs::write(&bad, serde_json::json!({ "matrix": entries }).to_string()).unwrap();
    assert_eq!(exit_code(&["analyze", "--state", bad.to_str().unwrap()]), 2);

    // parse failures: 3
    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(exit_code(&["analyze", "--state", garbled.to_str().unwrap()]), 3);
    assert_eq!(
        exit_code(&["scan", "--family", "color_noise", "--grid", "abc"]),
        3
    );
}

#[test]
fn scan_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let status = qsteer()
            .args([
                "scan", "--family", "color_noise", "--grid", "7x5", "--analyses", "avn,ineq3",
                "--search-grid", "512", "--seed", "1", "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "scan output must be byte-identical across runs");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# qsteer "));
    let header = lines.next().unwrap();
    assert!(header.starts_with("V,theta,avn_steerable,"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 35);
    let n_fields = header.split(',').count();
    for row in rows {
        assert_eq!(row.split(',').count(), n_fields);
    }
}

#[test]
fn lhs_subcommand_reports_one_way_steering() {
    let report = run_json(&[
        "lhs", "--family", "test_state", "--V", "0.6", "--theta", "0.39269908169872414",
        "--pairs", "6", "--seed", "5",
    ]);
    assert_eq!(report["any_a_to_b_infeasible"], true);
    assert_eq!(report["all_b_to_a_feasible"], true);
    assert_eq!(report["one_way_steering_witnessed"], true);
    assert_eq!(report["outcomes"].as_array().unwrap().len(), 6);
}

#[test]
fn ineq_subcommand_matches_closed_form() {
    let report = run_json(&[
        "ineq", "--family", "color_noise", "--V", "0.6", "--theta", "0.39269908169872414",
    ]);
    let violation = report["avn_inequality"]["violation"].as_f64().unwrap();
    let expected = 0.5 * 0.6 * (std::f64::consts::FRAC_PI_8).sin().powi(2);
    assert!((violation - expected).abs() < 1e-10, "violation {violation}");
    let c_lhs = report["avn_inequality"]["c_lhs"].as_f64().unwrap();
    let expected_c = (1.0 + 0.6 * (std::f64::consts::FRAC_PI_4).cos()) / 4.0;
    assert!((c_lhs - expected_c).abs() < 1e-10);
}

#[test]
fn directions_validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();

    let good = dir.path().join("good.json");
    std::fs::write(&good, "[[1.0,0.0,0.0],[0.0,0.0,1.0]]").unwrap();
    assert_eq!(exit_code(&["directions-validate", "--directions", good.to_str().unwrap()]), 0);

    let dup = dir.path().join("dup.json");
    std::fs::write(&dup, "[[0.0,0.0,1.0],[0.0,0.0,-1.0]]").unwrap();
    assert_eq!(exit_code(&["directions-validate", "--directions", dup.to_str().unwrap()]), 2);

    let nonunit = dir.path().join("nonunit.json");
    std::fs::write(&nonunit, "[[0.5,0.0,0.0]]").unwrap();
    assert_eq!(exit_code(&["directions-validate", "--directions", nonunit.to_str().unwrap()]), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "oops").unwrap();
    assert_eq!(exit_code(&["directions-validate", "--directions", bad.to_str().unwrap()]), 3);
}
