use std::process::{Command, Output};

fn circlaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circlaw"))
        .args(args)
        .env_remove("CIRCLAW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sample_is_reproducible() {
    let a = circlaw(&["sample", "--n", "8", "--seed", "3"]);
    let b = circlaw(&["sample", "--n", "8", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 8);
}

#[test]
fn discrepancy_brackets() {
    let o = circlaw(&["discrepancy", "--n", "32", "--seed", "1", "--metric", "bulk", "--tau", "0.2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (lo, hi) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
}

#[test]
fn exact_table_and_limit_density() {
    let o = circlaw(&["ginibre-exact", "--n", "10,100", "--radii", "0.5,1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = circlaw(&["limit-density", "--re", "-0.5", "--points", "11"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("x,rho"));
}

#[test]
fn rate_sweep_writes_csv() {
    let dir = std::env::temp_dir().join(format!("circlaw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("sweep.csv");
    let o = circlaw(&["rate-sweep", "--n", "8,16,32", "--trials", "2", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes() {
    assert_eq!(circlaw(&["sample", "--kind", "nope"]).status.code(), Some(2));
    assert_eq!(circlaw(&["local-law", "--n", "20", "--s", "0.9"]).status.code(), Some(2));
    assert_eq!(circlaw(&["discrepancy", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(circlaw(&["frobnicate"]).status.code(), Some(2));
}
