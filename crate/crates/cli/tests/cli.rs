use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poincare"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("poincare-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(dir: &PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn malformed_oracle_csv_exits_with_validation_message() {
    let dir = scratch("bad-csv");
    let csv = dir.join("phi.csv");
    fs::write(&csv, "word,value\ne,1\na,0.5\nA,not-a-number\n").unwrap();
    let out = run(&["--out", dir.join("out").to_str().unwrap(), "--oracle", &format!("table:{}", csv.display()), "psd"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("validation failed"), "{err}");
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn ragged_oracle_csv_exits_2() {
    let dir = scratch("ragged-csv");
    let csv = dir.join("phi.csv");
    fs::write(&csv, "e,1\na,0.5,0.1\n").unwrap();
    let out = run(&["--out", dir.join("out").to_str().unwrap(), "--oracle", &format!("table:{}", csv.display()), "exponent"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = scratch("bad-config");
    let cfg = dir.join("run.toml");
    fs::write(&cfg, "[gns]\ndepht = 3\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap(), "exponent"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("depht"));
}

#[test]
fn exponent_of_haagerup_family() {
    let dir = scratch("exponent");
    let out = run(&["--out", dir.to_str().unwrap(), "--oracle", "haagerup-s:0.75", "exponent"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir);
    let s_hat = r["result"]["oracles"][0]["estimate"]["s_hat"].as_f64().unwrap();
    assert!((s_hat - 0.75).abs() <= 1e-12, "{s_hat}");
    assert_eq!(r["command"], "exponent");
}

#[test]
fn artifacts_reference_each_other() {
    let dir = scratch("artifacts");
    let cfg = dir.join("run.toml");
    fs::write(&cfg, "seed = 5\n[series]\nsigmas = [2.0, 1.5]\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "series"]);
    assert!(out.status.success());
    let r = report(&dir);
    assert_eq!(r["seed"], 5);
    let plot = fs::read_to_string(dir.join("plot.gp")).unwrap();
    for t in r["tables"].as_array().unwrap() {
        let name = t.as_str().unwrap();
        assert!(dir.join(name).exists());
        assert!(plot.contains(&format!("'{name}'")));
    }
}

#[test]
fn seed_flag_overrides_config_and_reports_are_stable() {
    let a = scratch("seed-a");
    let b = scratch("seed-b");
    for d in [&a, &b] {
        let out = run(&["--out", d.to_str().unwrap(), "--seed", "11", "--threads", "1", "norms"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_eq!(report(&a)["seed"], 11);
}

#[test]
fn verify_all_is_byte_reproducible() {
    let a = scratch("verify-a");
    let b = scratch("verify-b");
    let first = run(&["--out", a.to_str().unwrap(), "verify-all"]);
    let table = String::from_utf8_lossy(&first.stdout);
    print!("{table}");
    assert_eq!(first.status.code(), Some(0), "{table}");
    assert_eq!(table.lines().filter(|l| l.contains("PASS")).count(), 15);
    let second = run(&["--out", b.to_str().unwrap(), "verify-all"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_eq!(fs::read(a.join("acceptance.csv")).unwrap(), fs::read(b.join("acceptance.csv")).unwrap());
}
