use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "name = \"cli-test\"\nseed = 11\n[synth]\ndays = 7\n";

fn h2grid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h2grid")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = h2grid(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("run.toml"), CONFIG).unwrap();
    d
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn compare_is_byte_identical() {
    let d = workspace();
    let m1 = ok(d.path(), &["compare", "--config", "run.toml", "--out", "a"]);
    let m2 = ok(d.path(), &["compare", "--config", "run.toml", "--out", "b"]);
    assert_eq!(m1, m2);
    let (a, b) = (files(&d.path().join("a")), files(&d.path().join("b")));
    assert!(a.contains_key("compare.csv") && a.contains_key("manifest.json"));
    assert_eq!(a, b);
    let table = String::from_utf8(a["compare.csv"].clone()).unwrap();
    assert!(table.starts_with("method,cost_usd,dg_mwh,lol_mwh,rmse_pct,step_ms\n"));
    let methods: Vec<String> = rows(&table).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(methods, ["M0", "M1", "M2", "M3", "M4"]);
}

#[test]
fn phi_sweep_lowers_rmse() {
    let d = workspace();
    ok(d.path(), &["sweep", "--config", "run.toml", "--out", "s", "--param", "phi", "--values", "0,0.5,5,50"]);
    let text = std::fs::read_to_string(d.path().join("s/sweep.csv")).unwrap();
    assert!(text.starts_with("param,value,method,cost_usd,dg_mwh,lol_mwh,rmse_pct\n"));
    let rmse: Vec<f64> = rows(&text).iter().map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(rmse.len(), 4);
    assert!(rmse.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{rmse:?}");
}

#[test]
fn stored_references_reproduce_the_run() {
    let d = workspace();
    ok(d.path(), &["gen-refs", "--config", "run.toml", "--out", "r1", "--perturb", "R5"]);
    ok(d.path(), &["gen-refs", "--config", "run.toml", "--out", "r2", "--perturb", "R5"]);
    let refs = std::fs::read(d.path().join("r1/references.csv")).unwrap();
    assert_eq!(refs, std::fs::read(d.path().join("r2/references.csv")).unwrap());
    // four library years plus their perturbed copies
    let labels: std::collections::BTreeSet<String> = rows(&String::from_utf8(refs).unwrap()).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(labels.len(), 8);
    ok(d.path(), &["simulate", "--config", "r1/run.toml", "--out", "sim", "--method", "M1"]);
    let table = std::fs::read_to_string(d.path().join("sim/simulate.csv")).unwrap();
    assert_eq!(rows(&table).len(), 2);
}

#[test]
fn exit_codes() {
    let d = workspace();
    assert_eq!(h2grid(d.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(h2grid(d.path(), &["simulate", "--config", "run.toml", "--method", "M9"]).status.code(), Some(3));
    assert_eq!(h2grid(d.path(), &["compare", "--config", "missing.toml"]).status.code(), Some(3));
    std::fs::write(d.path().join("bad.toml"), "[prices]\nc_x = 1.0\n").unwrap();
    assert_eq!(h2grid(d.path(), &["compare", "--config", "bad.toml"]).status.code(), Some(3));
}

#[test]
fn small_commands_write_their_files() {
    let d = workspace();
    ok(d.path(), &["fit-curves", "--out", "fit", "--segments", "4"]);
    let fit = std::fs::read_to_string(d.path().join("fit/fit.csv")).unwrap();
    assert!(d.path().join("fit/curves.csv").exists());
    assert!(!rows(&fit).is_empty());

    ok(d.path(), &["bench-regret", "--out", "reg", "--horizons", "64,128", "--dim", "2"]);
    let reg = std::fs::read_to_string(d.path().join("reg/regret.csv")).unwrap();
    assert_eq!(rows(&reg).len(), 2);

    ok(d.path(), &["synth-data", "--out", "syn", "--days", "3", "--seed", "5"]);
    let syn = std::fs::read_to_string(d.path().join("syn/synthetic-5.csv")).unwrap();
    assert_eq!(syn.lines().count(), 1 + 72);
}
