use std::path::Path;
use std::process::{Command, Output};

use qsuppress::format::{protocol_to_json, read_protocol};
use qsuppress_core::channel::depolarizing;
use qsuppress_core::fidelity::average_fidelity_exact;
use qsuppress_core::protocol::average_operation;
use qsuppress_core::random::random_protocol;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn qsuppress(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsuppress"))
        .args(args)
        .env_remove("QSUPPRESS_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_default_passes() {
    let out = qsuppress(&["verify"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 8);
    let commutation = checks
        .iter()
        .find(|c| c["name"] == "commutation-through-depolarizing")
        .unwrap();
    assert!(commutation["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["config"]["seed"], 0);
}

#[test]
fn broken_convention_is_caught() {
    let out = qsuppress(&["verify", "--instances", "5", "--inject-broken-convention"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("check failed: choi-apply-vs-kraus"), "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["passed"], false);
}

fn csv_rows(bytes: &[u8]) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().clone();
    let rows = r.records().map(|x| x.unwrap()).collect();
    (header, rows)
}

fn field(header: &csv::StringRecord, row: &csv::StringRecord, name: &str) -> String {
    let k = header.iter().position(|h| h == name).unwrap();
    row[k].to_string()
}

#[test]
fn qubit_sweep_crosses_over_between_six_and_seven_tenths() {
    let out = qsuppress(&["--seed", "3", "sweep", "--restarts", "10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = csv_rows(&out.stdout);
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["epsilon", "best_F", "dn_F", "dr_F", "winner", "penalty_residual", "restarts", "seed", "config"]
    );
    assert_eq!(rows.len(), 11);
    for (k, row) in rows.iter().enumerate() {
        let eps: f64 = field(&header, row, "epsilon").parse().unwrap();
        assert_eq!(eps, k as f64 / 10.0);
        let best: f64 = field(&header, row, "best_F").parse().unwrap();
        assert!(best <= (1.0 - eps / 2.0).max(2.0 / 3.0) + 1e-6);
        assert_eq!(field(&header, row, "seed"), "3");
        let config: Value = serde_json::from_str(&field(&header, row, "config")).unwrap();
        assert_eq!(config["anneal"]["restarts"], 10);
        let restarts = field(&header, row, "restarts");
        assert_eq!(restarts == "0", k == 0 || k == 10);
    }
    assert_eq!(field(&header, &rows[6], "winner"), "DN");
    assert_eq!(field(&header, &rows[7], "winner"), "DR");
    // the numeric column has 17 significant digits
    assert_eq!(field(&header, &rows[10], "dr_F"), "6.6666666666666663e-1");
}

#[test]
fn qutrit_sweep_reprepare_column_is_one_half() {
    let args = ["sweep", "-d", "3", "--points", "5", "--restarts", "2", "--steps", "2000"];
    let out = qsuppress(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 5);
    for row in &rows {
        assert_eq!(field(&header, row, "dr_F").parse::<f64>().unwrap(), 0.5);
    }
    assert_eq!(field(&header, &rows[3], "winner"), "both");
    // same seed, same bytes
    let again = qsuppress(&args);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn sweep_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let out = qsuppress(&[
        "sweep", "--grid", "0,1", "--format", "json", "-o", path_str(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["best_F"], 1.0);
    assert_eq!(rows[1]["winner"], "DR");
    assert_eq!(doc["config"]["grid"], serde_json::json!([0.0, 1.0]));
}

fn optimize_and_reload(eps: &str, target: f64, winner: &str) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.json");
    let out = qsuppress(&["optimize", "-e", eps, "-o", path_str(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let f = doc["fidelity"].as_f64().unwrap();
    assert!((f - target).abs() < 5e-3, "{f}");
    assert_eq!(doc["winner"], winner);
    assert!(doc["restart"].is_u64());

    let p = read_protocol(&path).unwrap();
    p.validate(1e-8).unwrap();
    let noise = depolarizing(eps.parse().unwrap(), 2);
    let again = average_fidelity_exact(&average_operation(&p, &noise).unwrap());
    assert!((again - f).abs() < 1e-12);
}

#[test]
fn optimize_high_noise_prefers_reprepare() {
    optimize_and_reload("0.9", 2.0 / 3.0, "DR");
}

#[test]
fn optimize_low_noise_does_nothing() {
    optimize_and_reload("0.1", 0.95, "DN");
}

#[test]
fn optimize_endpoint_is_exact() {
    let out = qsuppress(&["optimize", "-e", "0", "-d", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["fidelity"], 1.0);
    assert!(doc["restart"].is_null());
}

fn z_of(out: &Output) -> f64 {
    json(out)["z_score"].as_f64().unwrap()
}

#[test]
fn montecarlo_named_protocols() {
    let out = qsuppress(&["montecarlo", "--protocol", "dn", "-e", "0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert!((report["estimate"].as_f64().unwrap() - 0.75).abs() < 0.01);
    assert_eq!(report["exact"], 0.75);
    assert!(z_of(&out).abs() < 3.0);

    let out = qsuppress(&["montecarlo", "--protocol", "dr", "-d", "3", "-e", "0.3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!((json(&out)["exact"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(z_of(&out).abs() < 3.0);
}

#[test]
fn montecarlo_loaded_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("random.json");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let p = random_protocol(3, 3, &mut rng);
    std::fs::write(&path, protocol_to_json(&p)).unwrap();
    let out = qsuppress(&["montecarlo", "--protocol-file", path_str(&path), "-e", "0.4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    let exact = average_fidelity_exact(&average_operation(&p, &depolarizing(0.4, 3)).unwrap());
    assert_eq!(report["exact"].as_f64().unwrap(), exact);
    assert_eq!(report["dim"], 3);
    assert!(z_of(&out).abs() < 3.0);
}

#[test]
fn montecarlo_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"dim": 2, "branches": [{"instrument": [[[1, 0]]]}]}"#).unwrap();
    let out = qsuppress(&["montecarlo", "--protocol-file", path_str(&path)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    // well-formed but not a valid protocol: the instrument is not trace preserving
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = random_protocol(2, 2, &mut rng);
    let half = qsuppress_core::Protocol::new(2, p.branches()[..1].to_vec()).unwrap();
    std::fs::write(&path, protocol_to_json(&half)).unwrap();
    let out = qsuppress(&["montecarlo", "--protocol-file", path_str(&path)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let missing = dir.path().join("missing.json");
    let out = qsuppress(&["montecarlo", "--protocol-file", path_str(&missing)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"seed": 4, "instances": 1}"#).unwrap();
    let seed_of = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qsuppress"));
        cmd.env_remove("QSUPPRESS_SEED");
        if let Some(v) = env {
            cmd.env("QSUPPRESS_SEED", v);
        }
        cmd.args(["--config", path_str(&config), "verify"]);
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        let out = cmd.output().unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        json(&out)["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(None, None), 4);
    assert_eq!(seed_of(Some("5"), None), 5);
    assert_eq!(seed_of(Some("5"), Some("6")), 6);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"epsilon": 0.2, "samples": 1000, "protocol": "dr"}"#).unwrap();
    let out = qsuppress(&["--config", path_str(&config), "montecarlo", "-n", "2000"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["samples"], 2000);
    assert_eq!(report["epsilon"], 0.2);
    assert_eq!(report["protocol"], "dr");
}

#[test]
fn usage_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"dimension": 2}"#).unwrap();
    assert_eq!(code(&qsuppress(&["--config", path_str(&config), "verify"])), 2);
    std::fs::write(&config, r#"{"anneal": {"restarts": 0}}"#).unwrap();
    assert_eq!(code(&qsuppress(&["--config", path_str(&config), "optimize"])), 2);
    assert_eq!(code(&qsuppress(&["optimize", "-e", "1.5"])), 2);
    assert_eq!(code(&qsuppress(&["sweep", "--grid", "0.5,-0.1"])), 2);
    assert_eq!(code(&qsuppress(&["montecarlo", "-d", "1"])), 2);
    assert_eq!(code(&qsuppress(&["bogus"])), 2);
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&qsuppress(&["--config", path_str(&missing), "verify"])), 3);
    let unwritable = dir.path().join("no/such/dir/out.csv");
    let out = qsuppress(&["sweep", "--grid", "0,1", "-o", path_str(&unwritable)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}
