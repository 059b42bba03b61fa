use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn photonlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photonlab"))
        .args(args)
        .env_remove("PHOTONLAB_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// `(tau_ps, value)` rows of a CSV table with a comment header.
fn table(file: &Path) -> Vec<(i64, f64)> {
    std::fs::read_to_string(file)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("tau"))
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().parse().unwrap(), f.next().unwrap().parse().unwrap())
        })
        .collect()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

const SHORT_CW: &str = r#"{"seed": 2, "duration_s": 1.0,
    "emitter": {"kind": "two_level_cw", "pump_rate": 1e8, "decay_rate": 1e8, "quantum_efficiency": 0.01},
    "scan": {"kind": "fixed"}}"#;

#[test]
fn simulate_writes_bundle_with_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cw.json", SHORT_CW);
    let out = tmp.path().join("out");
    let o = photonlab(&["simulate", "--config", &path(&cfg), "--out", &path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let hash = summary(&out)["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for name in [
        "histogram.csv",
        "g2.csv",
        "fringe.csv",
        "histogram.svg",
        "g2.svg",
        "fringe.svg",
        "config.json",
    ] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(text.contains(&hash), "{name} lacks the config hash");
    }
}

#[test]
fn fig3b_cw_is_antibunched() {
    let tmp = tempfile::tempdir().unwrap();
    let o = photonlab(&["simulate", "--preset", "fig3b_cw", "--out", &path(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(tmp.path());
    assert!(s["g2_zero"].as_f64().unwrap() < 0.1, "{s}");
    assert_eq!(s["verdict"], "single_photon");
}

#[test]
fn fig3a_laser_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let o = photonlab(&["simulate", "--preset", "fig3a_laser", "--out", &path(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(tmp.path());
    assert!((s["g2_zero"].as_f64().unwrap() - 1.0).abs() < 0.05, "{s}");
    // Averages over 6.6 ns blocks.
    let g2 = table(&tmp.path().join("g2.csv"));
    for block in g2.chunks(g2.len() / 10) {
        let mean = block.iter().map(|r| r.1).sum::<f64>() / block.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "block at {} ps: {mean}", block[0].0);
    }
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"emitter": {"kind": "coherent", "rate": 1e5},"#,
    );
    let out = tmp.path().join("out");
    let o = photonlab(&["simulate", "--config", &path(&cfg), "--out", &path(&out)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line"), "{err}");
    assert!(!out.exists());

    let cfg = write_config(
        tmp.path(),
        "typo.json",
        r#"{"emitter": {"kind": "coherent", "rate": 1e5}, "durration_s": 1}"#,
    );
    let o = photonlab(&["simulate", "--config", &path(&cfg), "--out", &path(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("durration_s"));
    assert!(!out.exists());
}

#[test]
fn invalid_values_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "neg.json",
        r#"{"emitter": {"kind": "coherent", "rate": -5.0}}"#,
    );
    let out = tmp.path().join("out");
    let o = photonlab(&["simulate", "--config", &path(&cfg), "--out", &path(&out)]);
    assert_eq!(code(&o), 3);
    assert!(!out.exists());
    let o = photonlab(&["validate-config", &path(&cfg)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&photonlab(&[])), 2);
    assert_eq!(code(&photonlab(&["simulate", "--preset", "nope", "--out", "x"])), 2);
    assert_eq!(code(&photonlab(&["oracle", "--model", "laser", "--tau", "0"])), 2);
    assert_eq!(code(&photonlab(&["--help"])), 0);
}

#[test]
fn validate_config_accepts_presets_and_prints_schema() {
    let o = photonlab(&["validate-config", "--preset", "fig4_pulsed"]);
    assert_eq!(code(&o), 0);
    let o = photonlab(&["validate-config", "--schema"]);
    assert_eq!(code(&o), 0);
    let schema: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(schema["properties"]["emitter"].is_object());
}

#[test]
fn correlate_simulated_coherent_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "laser.json",
        r#"{"seed": 4, "duration_s": 4.0, "emitter": {"kind": "coherent", "rate": 2e5},
            "scan": {"kind": "fixed"}}"#,
    );
    let sim = tmp.path().join("sim");
    let o = photonlab(&[
        "simulate",
        "--config",
        &path(&cfg),
        "--timestamps",
        "--out",
        &path(&sim),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let corr = tmp.path().join("corr");
    let a = path(&sim.join("channel_a.csv"));
    let b = path(&sim.join("channel_b.csv"));
    let o = photonlab(&[
        "correlate",
        &a,
        &b,
        "--mode",
        "all-pairs",
        "--bin-width-ps",
        "1000",
        "--out",
        &path(&corr),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g2 = table(&corr.join("g2.csv"));
    let mean = g2.iter().map(|r| r.1).sum::<f64>() / g2.len() as f64;
    assert!((mean - 1.0).abs() < 0.02, "{mean}");

    // Default 37 ps bins.
    let o = photonlab(&["correlate", &a, &b, "--out", &path(&corr)]);
    assert_eq!(code(&o), 0);
    let h = table(&corr.join("histogram.csv"));
    assert_eq!(h[1].0 - h[0].0, 37);
}

#[test]
fn correlate_with_empty_file_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "a.csv", "100\n2000\n50000\n");
    let b = write_config(tmp.path(), "b.csv", "");
    let out = tmp.path().join("out");
    let o = photonlab(&["correlate", &path(&a), &path(&b), "--out", &path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(table(&out.join("histogram.csv")).iter().all(|r| r.1 == 0.0));
}

#[test]
fn correlate_rejects_unsorted_input() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "a.csv", "100\n50\n");
    let b = write_config(tmp.path(), "b.csv", "10\n");
    let out = tmp.path().join("out");
    assert_eq!(
        code(&photonlab(&["correlate", &path(&a), &path(&b), "--out", &path(&out)])),
        2
    );
    let missing = tmp.path().join("missing.csv");
    assert_eq!(
        code(&photonlab(&[
            "correlate",
            &path(&missing),
            &path(&b),
            "--out",
            &path(&out)
        ])),
        2
    );
}

fn oracle_rows(args: &[&str]) -> Vec<Vec<f64>> {
    let o = photonlab(args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && l.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-'))
        .map(|l| l.split(',').filter_map(|f| f.parse().ok()).collect())
        .collect()
}

#[test]
fn oracle_reference_values() {
    let rows = oracle_rows(&["oracle", "--model", "coherent", "--tau", "0,1e-9,-5e-8"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] == 1.0));

    let rows = oracle_rows(&["oracle", "--line", "lorentzian", "--linewidth", "1e9", "--tau", "1e-9"]);
    assert!((rows[0][1] - (-1f64).exp()).abs() < 1e-12, "{rows:?}");

    let o = photonlab(&["oracle", "--model", "fock", "--n", "1", "--integrated"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let value: f64 = text
        .lines()
        .next_back()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(value, 0.0, "{text}");
}

#[test]
fn seed_flag_changes_output_and_env_matches_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = path(&write_config(tmp.path(), "cw.json", SHORT_CW));
    let run = |dir: &str, seed: Option<&str>, env: Option<&str>| {
        let out = tmp.path().join(dir);
        let mut c = Command::new(env!("CARGO_BIN_EXE_photonlab"));
        c.args(["simulate", "--config", &cfg, "--out", &path(&out)])
            .env_remove("PHOTONLAB_SEED");
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        if let Some(s) = env {
            c.env("PHOTONLAB_SEED", s);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read(out.join("histogram.csv")).unwrap()
    };
    let flag = run("flag", Some("9"), None);
    assert_eq!(flag, run("env", None, Some("9")));
    assert_ne!(flag, run("other", Some("10"), None));
}
