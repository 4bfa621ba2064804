use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-eit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn preset_list_names_every_preset() {
    let o = bin(&["preset", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for id in ["fig2a", "fig2c", "fig2e", "fig3a", "fig3b", "fig3c", "fig3d", "fig4"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing");
    }
}

#[test]
fn spectrum_csv_from_config_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig2a.json");
    let o = bin(&["preset", "fig2a"]);
    fs::write(&cfg, &o.stdout).unwrap();

    let from_preset = bin(&["spectrum", "--preset", "fig2a", "--points", "41", "--range=-0.1,0.1"]);
    let from_config = bin(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--points",
        "41",
        "--range=-0.1,0.1",
    ]);
    assert_eq!(from_preset.status.code(), Some(0));
    assert_eq!(from_config.status.code(), Some(0));
    let text = stdout(&from_preset);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "delta_bar_over_omega_m,mu,nu,re_t,im_t,T_power,phase_unwrapped,tau_g_s"
    );
    assert_eq!(lines.len(), 42);
    // config files round-trip through MHz, so compare to a few ulps via parsed values
    let parse = |s: &str| -> Vec<Vec<f64>> {
        s.lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    };
    for (a, b) in parse(&text).iter().zip(parse(&stdout(&from_config)).iter()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-12), "{x} vs {y}");
        }
    }
}

#[test]
fn csv_precision_env_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_hybrid-eit"))
        .args(["spectrum", "--preset", "fig3c", "--points", "3"])
        .env("EIT_CSV_DIGITS", "12")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("-2.00000000000e-1,"), "{row}");

    let bad = Command::new(env!("CARGO_BIN_EXE_hybrid-eit"))
        .args(["spectrum", "--preset", "fig3c", "--points", "3"])
        .env("EIT_CSV_DIGITS", "4")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bin(&["spectrum"]).status.code(), Some(2));
    assert_eq!(bin(&["spectrum", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        bin(&["spectrum", "--config", "/nonexistent.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"omega_m": 100, "kappa": -4}"#).unwrap();
    let o = bin(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn singular_system_exits_3() {
    // lossless atoms driven on resonance make the steady-state denominator vanish
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("singular.json");
    fs::write(
        &cfg,
        r#"{"omega_m": 100, "Q": 6700, "kappa": 4, "Delta_c": 100, "Delta_1": 0, "Delta_2": 0,
            "g": 1, "g1": 4, "g2": 0, "gamma_1": 0, "gamma_2": 0, "Omega_l": 20}"#,
    )
    .unwrap();
    let o = bin(&["spectrum", "--config", cfg.to_str().unwrap(), "--points", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn windows_json_for_fig3c() {
    let o = bin(&["windows", "--preset", "fig3c"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 1);
    assert_eq!(v["minima"].as_array().unwrap().len(), 1);
}

#[test]
fn delay_eval_points() {
    let center = bin(&["delay", "--preset", "fig4", "--powers", "1e-12"]);
    let literal = bin(&["delay", "--preset", "fig4", "--powers", "1e-12", "--paper-literal-eval"]);
    let explicit = bin(&[
        "delay",
        "--preset",
        "fig4",
        "--powers",
        "1e-12",
        "--eval-delta-bar",
        "0",
    ]);
    for o in [&center, &literal, &explicit] {
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(stdout(&center), stdout(&explicit));
    assert_ne!(stdout(&center), stdout(&literal));
    assert_eq!(stdout(&center).lines().count(), 2);
}

#[test]
fn run_writes_manifest_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["run", "--preset", "fig2a", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("fig2a_run.json")).unwrap()).unwrap();
    assert_eq!(meta["conventions"]["eta"], 0.5);
    assert_eq!(meta["conventions"]["lambda_l_m"], 1.064e-6);
    assert!(meta["code_version"].is_string());
}

#[test]
fn validate_negative_control_exits_1() {
    let o = bin(&[
        "validate",
        "--skip-time-domain",
        "--b-factor",
        "paper-literal",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["criteria"][0]["id"], 1);
    assert_eq!(v["criteria"][0]["passed"], false);
}

#[test]
fn trajectory_dump_columns() {
    let o = bin(&["trajectory", "--preset", "fig3c", "--stride", "100000", "--from-start"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,Q,P,re_c,im_c,re_a,im_a,re_b,im_b");
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 9);
}
