use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nbrw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbrw")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nbrw-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn invalid_input_exits_with_two() {
    let odd = nbrw(&["predict", "--counts", "3=3"]);
    assert_eq!(odd.status.code(), Some(2));
    assert!(!odd.stderr.is_empty());

    let small = nbrw(&["predict", "--counts", "2=10,3=10"]);
    assert_eq!(small.status.code(), Some(2));

    let budget = nbrw(&["curve", "--counts", "3=1000,4=1000", "--budget", "100"]);
    assert_eq!(budget.status.code(), Some(2));

    let odd_t = nbrw(&["exposure", "--t", "3"]);
    assert_eq!(odd_t.status.code(), Some(2));

    let unparsable = nbrw(&["curve", "--counts", "three=1"]);
    assert_eq!(unparsable.status.code(), Some(2));
}

#[test]
fn passing_run_exits_with_zero_and_reports_summary() {
    let out = nbrw(&["coupling", "--replicates", "2000", "--seed", "1", "--format", "jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["N"], 10_000);
    assert_eq!(record["pass"], true);
    let summary = String::from_utf8(out.stderr).unwrap();
    let summary: serde_json::Value = serde_json::from_str(summary.trim()).unwrap();
    assert_eq!(summary["command"], "coupling");
    assert_eq!(summary["pass"], true);
}

#[test]
fn failed_bound_exits_with_one() {
    // Tiny sizes are far from the asymptotic profile.
    let out = nbrw(&["profile", "--sizes", "20,40", "--seeds", "2", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_matches_equivalent_flags() {
    let dir = scratch("config");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"degree_spec": {"counts": {"3": 400, "4": 400}}, "seed": 17, "starts": 5, "t_max": 30}"#,
    )
    .unwrap();
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    let from_file = nbrw(&["curve", "--config", path(&cfg), "--out", path(&a), "--threads", "1"]);
    let from_flags = nbrw(&[
        "curve", "--counts", "3=400,4=400", "--seed", "17", "--starts", "5", "--t-max", "30", "--out", path(&b),
        "--threads", "1",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_flags.status.code(), Some(0));
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);

    // Flags win over the file.
    let c = dir.join("c.csv");
    nbrw(&["curve", "--config", path(&cfg), "--seed", "18", "--out", path(&c), "--threads", "1"]);
    assert_ne!(std::fs::read(c).unwrap(), a);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn curve_csv_has_one_row_per_step() {
    let out = nbrw(&["curve", "--counts", "3=100,4=100", "--t-max", "12", "--starts", "0,5,9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,d_max,d_mean,phi_pred,d_0,d_1,d_2");
    assert_eq!(lines.count(), 13);
}

#[test]
fn gen_degrees_feeds_back_into_curve() {
    let dir = scratch("gen");
    let file = dir.join("degrees.txt");
    let gen = nbrw(&["gen-degrees", "--pmf", "3=0.6,5=0.4", "--n", "300", "--seed", "4", "--out", path(&file)]);
    assert_eq!(gen.status.code(), Some(0));
    let degrees = std::fs::read_to_string(&file).unwrap();
    assert_eq!(degrees.lines().count(), 300);
    let predict = nbrw(&["predict", "--degrees-file", path(&file), "--format", "jsonl"]);
    assert_eq!(predict.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&predict.stdout).unwrap();
    assert!(record["t_star"].as_f64().unwrap() > 0.0);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn exposure_writes_the_first_forest() {
    let dir = scratch("forest");
    let forest = dir.join("forest.jsonl");
    let out = nbrw(&["exposure", "--runs", "3", "--seed", "9", "--forest-out", path(&forest), "--format", "jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let nodes: Vec<serde_json::Value> = std::fs::read_to_string(&forest)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(nodes.len() >= 2);
    assert!(nodes.iter().all(|n| n.get("node").is_some() && n.get("weight").is_some()));
    std::fs::remove_dir_all(dir).ok();
}
