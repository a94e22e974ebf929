use std::fs;
use std::process::{Command, Output};

const HEADER: &str = "M,scenario,R,R_prime,I,gamma_star_db,gamma_b_db,tau_star,r_b_db,sqrtM_rb";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-bpf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn budget_prints_sum() {
    let o = run(&["budget", "--mar-db", "-15", "--excess-db", "31.5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "46.5");
}

#[test]
fn sweep_writes_table_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.cfg");
    fs::write(
        &config,
        "scenario = imperfect\nM = 40, 80, 160\nR_prime = 9, 9.5\nI = 2\n",
    )
    .unwrap();
    let mut bodies = Vec::new();
    for n in 0..2 {
        let out = dir.path().join(format!("rows{n}.csv"));
        let o = run(&[
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(fs::read_to_string(&out).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let lines: Vec<_> = bodies[0].lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("40,imperfect,10.0,9.0,2,"));
    assert!(lines[6].starts_with("160,imperfect,10.0,9.5,2,"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.cfg");
    fs::write(&config, "scenario = perfect\nM = 40\n").unwrap();
    let o = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "-M",
        "80,160",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("\"M\"").count(), 2);
    assert!(text.contains("\"M\": 160"));
}

#[test]
fn infeasible_rows_fail_the_run() {
    let o = run(&["sweep", "--scenario", "perfect", "-M", "10,160"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("\n10,perfect,10.0,9.0,2,,,,,\n"), "{text}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("M=10"));
}

#[test]
fn mar_needs_single_point() {
    let o = run(&["mar", "-M", "40,80"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["mar", "--scenario", "perfect", "-M", "320"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some(HEADER));
    assert!(text.lines().nth(1).unwrap().starts_with("320,perfect,"));
}

#[test]
fn solve_reports_training_length() {
    let o = run(&["solve", "--scenario", "imperfect", "-M", "160"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let fields: Vec<_> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[0], "160");
    assert!(fields[5].parse::<usize>().is_ok());
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    fs::write(&config, "M = 40\nwhat = 3\n").unwrap();
    let o = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn validate_prints_one_line_per_checkpoint() {
    let o = run(&[
        "validate",
        "-M",
        "16",
        "-K",
        "2",
        "--uplink-len",
        "12",
        "--coherence-len",
        "24",
        "--betas",
        "1,0.6",
        "-R",
        "5",
        "--rate-prime",
        "4.5",
        "-I",
        "2",
        "--trials",
        "20000",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
