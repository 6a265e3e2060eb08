//! Behavioral tests of the command-line interface.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bessel-ibpf"))
}

#[test]
fn check_specfun_quick_passes() {
    let out = bin().args(["check-specfun", "--quick"]).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("contiguous-relation"));
    assert!(text.contains("PASS"));
}

#[test]
fn check_specfun_corrupted_tolerance_fails() {
    let out = bin()
        .args(["check-specfun", "--quick", "--rel-tol", "1e-30"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL"));
}

#[test]
fn verify_jump_passes_and_reports() {
    let out = bin()
        .args([
            "verify",
            "--claim",
            "jump",
            "--delta",
            "3",
            "--s",
            "0.5",
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["claim_id"], "jump");
    assert_eq!(json["passed"], true);
    assert!((json["lhs"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!(json.get("runtime_ms").is_none());
}

#[test]
fn verify_rejects_invalid_dimension() {
    let out = bin()
        .args(["verify", "--claim", "jump", "--delta", "-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_rejects_unknown_claim() {
    let out = bin()
        .args(["verify", "--claim", "nonsense"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn tabulate_symmetric_with_diagonal() {
    let out = bin()
        .args(["tabulate", "--delta", "3", "--grid", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        rows.push((cells[0], cells[1], cells[2]));
    }
    assert_eq!(rows.len(), 9);
    // diagonal entries are delta s (1-s); matrix is symmetric bit-for-bit
    for &(s, r, v) in &rows {
        if s == r {
            assert!((v - 3.0 * s * (1.0 - s)).abs() < 1e-12);
        }
        let mirror = rows.iter().find(|&&(a, b, _)| a == r && b == s).unwrap();
        assert_eq!(v, mirror.2);
    }
}

#[test]
fn verify_ibpf_end_to_end() {
    let out = bin()
        .args([
            "verify",
            "--claim",
            "ibpf",
            "--delta",
            "3",
            "--phi",
            "const:1",
            "--h",
            "bump:0.2,0.8",
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let json: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(json["passed"], true);
}

#[test]
fn unknown_flags_rejected() {
    let out = bin()
        .args(["verify", "--claim", "jump", "--bogus-flag", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn mc_rejects_fractional_dimension() {
    let out = bin()
        .args([
            "mc",
            "--delta-int",
            "2.5",
            "--paths",
            "10",
            "--out",
            "/tmp/nope.csv",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn mc_rejects_zero_dimension() {
    let out = bin()
        .args([
            "mc",
            "--delta-int",
            "0",
            "--paths",
            "10",
            "--out",
            "/tmp/should_not_exist.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_malformed_config_is_a_usage_error() {
    let dir = std::env::temp_dir().join("bessel_ibpf_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad_config.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = bin()
        .args(["sweep", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("malformed"));
}

#[test]
fn sweep_empty_battery_passes_with_zero_cells() {
    let dir = std::env::temp_dir().join("bessel_ibpf_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("empty_config.json");
    std::fs::write(&path, r#"{"claims": []}"#).unwrap();
    let out = bin()
        .args([
            "sweep",
            "--config",
            path.to_str().unwrap(),
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("total: 0/0 cells passed"));
}
