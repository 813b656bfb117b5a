//! End-to-end runs of the `ciblp` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ciblp::cli::table::{parse_real, Table};

const SER_CONFIG: &str = r#"
k = 2
n_t = 3
n_block = 4
modulation = "qpsk"
snr_db = [0.0, 10.0]
n_channels = 20
schemes = ["ci-blp", "zf"]
seed = 11
"#;

fn ciblp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ciblp")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_ok(args: &[&str]) {
    let out = ciblp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ser_sweep_writes_table_plot_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ser.toml", SER_CONFIG);
    let out = dir.path().join("run");
    run_ok(&["ser-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);

    let table = Table::read(&out.join("ser_sweep.csv")).unwrap();
    assert_eq!(table.header, ["scheme", "snr_db", "symbols", "errors", "ser", "mean_solve_ms"]);
    assert_eq!(table.rows.len(), 4);
    let (sym, err, ser) =
        (table.column("symbols").unwrap(), table.column("errors").unwrap(), table.column("ser").unwrap());
    for row in &table.rows {
        let symbols: f64 = row[sym].parse().unwrap();
        let errors: f64 = row[err].parse().unwrap();
        assert_eq!(symbols, 2.0 * 4.0 * 20.0);
        assert!((parse_real(&row[ser]).unwrap() - errors / symbols).abs() < 1e-6);
    }

    let svg = fs::read_to_string(out.join("ser_sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"), "{svg}");
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"ser-sweep\"") && manifest.contains("seed = 11"), "{manifest}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ser.toml", SER_CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["ser-sweep", "--config", &cfg, "--out", a.to_str().unwrap()]);
    run_ok(&["--threads", "1", "ser-sweep", "--config", &cfg, "--out", b.to_str().unwrap()]);
    assert_eq!(fs::read(a.join("ser_sweep.csv")).unwrap(), fs::read(b.join("ser_sweep.csv")).unwrap());

    let c = dir.path().join("c");
    run_ok(&["ser-sweep", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(fs::read(a.join("ser_sweep.csv")).unwrap(), fs::read(c.join("ser_sweep.csv")).unwrap());
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = SER_CONFIG.replace("modulation = \"qpsk\"\n", "");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = ciblp(&["ser-sweep", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("modulation"));
}

#[test]
fn unknown_scheme_and_bad_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("scheme.toml", SER_CONFIG.replace("\"zf\"", "\"mmse\"")),
        ("users.toml", SER_CONFIG.replace("n_t = 3", "n_t = 1")),
        ("psk.toml", SER_CONFIG.replace("\"qpsk\"", "\"bpsk\"")),
        ("extra.toml", format!("{SER_CONFIG}colour = 1\n")),
    ] {
        let cfg = write_config(dir.path(), name, &text);
        let out = ciblp(&["ser-sweep", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn block_sweep_starts_at_single_slot_precoding() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
k = 2
n_t = 2
n_block = [1, 2, 4]
modulation = "8psk"
snr_db = 12.0
n_channels = 30
schemes = ["ci-blp", "ci-slp"]
seed = 4
"#;
    let cfg = write_config(dir.path(), "block.toml", text);
    let out = dir.path().join("run");
    run_ok(&["block-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);

    let table = Table::read(&out.join("block_sweep.csv")).unwrap();
    assert_eq!(table.rows.len(), 6);
    let (scheme, n, errors) =
        (table.column("scheme").unwrap(), table.column("n_block").unwrap(), table.column("errors").unwrap());
    let at_one: Vec<&str> = table.rows.iter().filter(|r| r[n] == "1").map(|r| r[errors].as_str()).collect();
    assert_eq!(at_one.len(), 2);
    assert_eq!(at_one[0], at_one[1], "N = 1 block and slot precoding differ");
    assert!(table.rows.iter().any(|r| r[scheme] == "ci-slp"));
    assert!(fs::metadata(out.join("block_sweep.svg")).unwrap().len() > 0);
}

#[test]
fn timing_reports_every_system_and_block_length() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
k = 2
n_t = 2
n_block = [2, 4]
modulation = "qpsk"
n_channels = 3
seed = 1
systems = [[2, 2], [3, 3]]
"#;
    let cfg = write_config(dir.path(), "timing.toml", text);
    let out = dir.path().join("run");
    run_ok(&["timing", "--config", &cfg, "--out", out.to_str().unwrap()]);

    let table = Table::read(&out.join("timing.csv")).unwrap();
    assert_eq!(table.header, ["k", "n_t", "n_block", "scheme", "mean_solve_ms", "std_solve_ms"]);
    // 2 systems × 2 block lengths × {ci-blp, ci-slp, ci-slp-slot}.
    assert_eq!(table.rows.len(), 12);
    let mean = table.column("mean_solve_ms").unwrap();
    for row in &table.rows {
        assert!(parse_real(&row[mean]).unwrap() > 0.0, "{row:?}");
    }
    assert!(out.join("timing.svg").exists());
}

#[test]
fn validate_passes_and_catches_a_planted_fault() {
    let dir = tempfile::tempdir().unwrap();
    let out = ciblp(&["validate", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("0 failed"), "{stdout}");
    assert!(dir.path().join("validate.txt").exists());

    let bad = ciblp(&["validate", "--inject-fault", "asymmetric-u"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL u-symmetric-psd"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(ciblp(&["ser-sweep"]).status.code(), Some(2));
    assert_eq!(ciblp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ciblp(&["--version"]).status.code(), Some(0));
}
