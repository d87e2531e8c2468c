use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use noisy_duel::solver::TTable;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisy-duel"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn solve_three_shots(dir: &Path, out: &str) -> Output {
    run(
        dir,
        &["solve", "--p1", "power:1", "--p2", "power:1", "--a", "1", "--m", "3", "--a0", "0.05", "--h", "0.01", "--out", out],
    )
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_writes_ordered_curves_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve_three_shots(dir.path(), "t.csv");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,T_1,T_2,T_3"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(1.0 >= v[1] && v[1] > v[2] && v[2] > v[3] && v[3] > 0.0, "{line}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    assert!(outputs.iter().all(|o| o["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn solve_is_byte_for_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    assert!(solve_three_shots(dir.path(), "a.csv").status.success());
    assert!(solve_three_shots(dir.path(), "b.csv").status.success());
    for ext in ["csv", "json"] {
        let a = fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext} differs");
    }
}

#[test]
fn no_shots_gives_the_gunners_prize() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve", "--m", "0", "--a", "1", "--a1", "2", "--out", "z.csv"]);
    assert!(o.status.success());
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("z.json")).unwrap()).unwrap();
    assert_eq!(side["values"][0]["product"], 2.0);
    assert_eq!(side["values"].as_array().unwrap().len(), 1);
    assert_eq!(fs::read_to_string(dir.path().join("z.csv")).unwrap().lines().next(), Some("x"));
}

#[test]
fn verify_accepts_a_fresh_table_and_rejects_a_perturbed_one() {
    let dir = tempfile::tempdir().unwrap();
    assert!(solve_three_shots(dir.path(), "t.csv").status.success());
    let o = run(dir.path(), &["verify", "--table", "t.csv", "--report", "report.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("report.manifest.json").exists());

    let bad = TTable::read(&dir.path().join("t.csv")).unwrap().perturbed(0.01).unwrap();
    bad.write(&dir.path().join("bad.csv")).unwrap();
    let o = run(dir.path(), &["verify", "--table", "bad.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL equilibrium_residual"), "{}", stdout(&o));
}

#[test]
fn simulated_t_play_earns_the_value() {
    let dir = tempfile::tempdir().unwrap();
    assert!(solve_three_shots(dir.path(), "t.csv").status.success());
    let o = run(dir.path(), &["simulate", "--table", "t.csv", "--gunner", "T", "--sniper", "T", "--out", "tr.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tr: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("tr.json")).unwrap()).unwrap();
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    let payoff = tr["payoff"].as_f64().unwrap();
    let value = side["values"][3]["product"].as_f64().unwrap();
    assert!((payoff - value).abs() <= 1e-4, "{payoff} vs {value}");
    assert!(!tr["events"].as_array().unwrap().is_empty());
}

#[test]
fn scripted_sniper_from_json() {
    let dir = tempfile::tempdir().unwrap();
    assert!(solve_three_shots(dir.path(), "t.csv").status.success());
    fs::write(dir.path().join("s.json"), r#"{"moments": [1.0, 1.0, 1.0]}"#).unwrap();
    let o = run(dir.path(), &["simulate", "--table", "t.csv", "--sniper", "s.json", "--out", "tr.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(dir.path().join("bad.json"), r#"{"moments": [0.5, 0.2, 1.0]}"#).unwrap();
    let o = run(dir.path(), &["simulate", "--table", "t.csv", "--sniper", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn value_prints_both_forms() {
    let dir = tempfile::tempdir().unwrap();
    assert!(solve_three_shots(dir.path(), "t.csv").status.success());
    let o = run(dir.path(), &["value", "--table", "t.csv", "--k", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("product 0.2202691"), "{out}");
    assert!(out.contains("exponential"));
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--p1", "power:-1"],
        vec!["solve", "--p2", "quadratic"],
        vec!["solve", "--a0", "2", "--a", "1"],
        vec!["value", "--table", "missing.csv"],
        vec!["solve", "--h", "0.1", "--points", "10"],
    ] {
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!dir.path().join("table.csv").exists());
}

#[test]
fn oracle_compare_writes_the_convergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["oracle-compare", "--m", "1", "--sizes", "50,100", "--out", "c.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "N,Q,discrete,solver,gap");
    assert_eq!(lines.len(), 3);
    let gap = |l: &str| l.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!(gap(lines[2]) < gap(lines[1]));
}
