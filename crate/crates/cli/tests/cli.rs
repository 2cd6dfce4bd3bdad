use std::process::{Command, Output};

fn depauw(args: &[&str]) -> Output {
    let out = std::env::temp_dir().join(format!("depauw-cli-test-{}", std::process::id()));
    Command::new(env!("CARGO_BIN_EXE_depauw"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_owned()
}

#[test]
fn field_eval_prints_two_numbers() {
    let o = depauw(&["field-eval", "w", "0.25", "0.1", "--t", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0 1");
    let o = depauw(&["field-eval", "bdp", "0.3", "-0.7", "--t", "2"]);
    assert_eq!(stdout(&o), "0 0");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(depauw(&["experiment", "no-such-experiment"]).status.code(), Some(2));
    assert_eq!(depauw(&["field-eval", "nonsense:1", "0", "0"]).status.code(), Some(2));
    assert_eq!(depauw(&["--k", "8,4", "config"]).status.code(), Some(2));
    assert_eq!(depauw(&["solve", "ivp", "--datum", "blob:1", "--times", "0.5"]).status.code(), Some(2));
}

#[test]
fn exact_flow_from_time_zero_hits_the_level_cap() {
    let o = depauw(&["solve", "ivp", "--datum", "chessboard:0", "--times", "0.5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn boundary_problem_writes_one_file_per_time() {
    let o = depauw(&["solve", "bvp", "--datum", "zeta:1:1", "--s", "1", "--times", "0.5,0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let listing = stdout(&o);
    let files: Vec<&str> = listing.lines().collect();
    assert_eq!(files.len(), 2);
    for f in files {
        let csv = std::fs::read_to_string(f).unwrap();
        assert!(csv.lines().count() > 1, "{f}");
    }
}

#[test]
fn config_round_trips_through_json() {
    let o = depauw(&["--seed", "7", "config"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["ks"], serde_json::json!([4, 8, 16]));
}
