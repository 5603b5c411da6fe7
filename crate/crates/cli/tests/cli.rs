use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn tsu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsu")).args(args).output().expect("run tsu")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tsu-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn summary_lod(out: &str) -> f64 {
    let line = out.lines().find(|l| l.starts_with("lod_db")).expect("lod line");
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn classical_benchmarks_from_preset() {
    let o = tsu(&["lod", "--circuit", "classical", "--preset", "paper-start"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary_lod(&stdout(&o)), -68.3369);

    let o = tsu(&["lod", "--circuit", "classical", "--preset", "paper-start", "--eta", "0.8"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary_lod(&stdout(&o)), -67.8524);
}

#[test]
fn vacuum_lod_exits_3_with_variance() {
    let o = tsu(&["lod", "--circuit", "vacuum", "--preset", "paper-start"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("variance") && !l.ends_with(" 0")), "{out}");
    assert!(out.contains("undefined"));
}

#[test]
fn config_errors_exit_2() {
    let dir = scratch("badkey");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "r = 1.0\nsqueeze = 3\n").unwrap();
    let o = tsu(&["lod", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("squeeze"));

    assert_eq!(tsu(&["lod", "--eta", "1.5"]).status.code(), Some(2));
    assert_eq!(tsu(&["lod", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(tsu(&["sweep"]).status.code(), Some(2));
    assert_eq!(tsu(&["lod", "--circuit", "mzi"]).status.code(), Some(2));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unwritable_output_exits_2() {
    let o = tsu(&["lodi", "--out", "/nonexistent-dir/x.csv", "--precision", "30"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = scratch("override");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "# classical benchmark at lower transmission\ncircuit = classical\neta = 0.8\n").unwrap();
    let o = tsu(&["lod", "--config", cfg.to_str().unwrap()]);
    assert_eq!(summary_lod(&stdout(&o)), -67.8524);
    let o = tsu(&["lod", "--config", cfg.to_str().unwrap(), "--eta", "1"]);
    assert_eq!(summary_lod(&stdout(&o)), -68.3369);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn lodi_sweep_writes_csv_and_sidecar() {
    let dir = scratch("sweep");
    let out = dir.join("r.csv");
    let o = tsu(&[
        "sweep", "--axis", "r:0:2.5:11", "--eta", "1", "--target", "lodi", "--precision", "40", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.split("\r\n").filter(|l| !l.is_empty());
    assert_eq!(lines.next().unwrap(), "r,phi_p,phi_c,lod_quantum_db,lod_classical_db,lodi_db,error");
    let lodi: Vec<f64> = lines.map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(lodi.len(), 11);
    for w in lodi.windows(2) {
        assert!(w[1] <= w[0], "{lodi:?}");
    }
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    assert_eq!(side["command"], "sweep");
    assert_eq!(side["params"]["r"], "0.88");
    assert_eq!(side["params"]["precision"], 40);
    assert_eq!(side["details"]["axes"][0]["count"], 11);
    assert!(side["engine_version"].is_string());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let dir = scratch("det");
    let run = |name: &str| {
        let out = dir.join(name);
        let o = tsu(&["lodi", "--axis", "eta:0.5:1:3", "--precision", "40", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        (fs::read(&out).unwrap(), fs::read(out.with_extension("json")).unwrap())
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn optimize_prints_json() {
    let o = tsu(&["optimize", "--preset", "paper-start", "--grid", "8", "--precision", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lodi: f64 = v["lodi_db"].as_str().unwrap().parse().unwrap();
    assert!(lodi < -3.0, "{v}");
    assert!(v["phi_p"].as_str().unwrap().parse::<f64>().unwrap().abs() < 0.1);
    assert_eq!(v["converged"], true);
}

#[test]
fn vacuum_map_reports_minima() {
    let dir = scratch("vac");
    let out = dir.join("vac.csv");
    let o = tsu(&["vacuum", "--axis", "phi_p:-3.141592653589793:3.141592653589793:37", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("vac.json")).unwrap()).unwrap();
    let minima = side["details"]["minima"].as_array().unwrap();
    assert_eq!(minima.len(), 1);
    assert_eq!(side["params"]["alpha"], "0");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn high_gain_preset_single_point() {
    let o = tsu(&["lodi", "--preset", "g15", "--eta", "0.92", "--precision", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let row = csv.split("\r\n").nth(1).unwrap();
    let lodi: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    // engine value at the paper's starting phases; the quoted figure is −5.29
    assert!(lodi < -5.0 && lodi > -5.5, "{lodi}");
}
