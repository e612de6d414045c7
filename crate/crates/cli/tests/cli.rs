//! End-to-end tests of the `diffgame` binary: exit-code contract, output
//! shapes, cache round-trips, and byte-identical reports.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diffgame"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_prints_the_pursuit_value_and_exits_zero() {
    let out = run(&[
        "solve",
        "--game",
        "pursuit-line",
        "--slices",
        "25",
        "--nodes",
        "151",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("lower       V-(t0, x0) = 0.500000000000"), "{text}");
    assert!(text.contains("upper       V+(t0, x0) = 0.500000000000"), "{text}");
    assert!(text.contains("gap"), "{text}");
}

#[test]
fn missing_config_file_exits_two_and_names_the_path() {
    let out = run(&["solve", "--config", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/definitely/not/here.toml"));
}

#[test]
fn unknown_builtin_exits_two_and_lists_the_games() {
    let out = run(&["solve", "--game", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("pursuit-line"), "{}", stderr(&out));
}

#[test]
fn refused_precondition_exits_three() {
    let out = run(&["verify", "lemma1", "--game", "coupled-uv", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("precondition"), "{}", stderr(&out));
}

#[test]
fn verify_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let json_a = dir.path().join("a.json");
    let json_b = dir.path().join("b.json");
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for (json, csv) in [(&json_a, &csv_a), (&json_b, &csv_b)] {
        let out = run(&[
            "verify",
            "lemma1",
            "--game",
            "sum",
            "--trials",
            "25",
            "--report",
            json.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        assert!(stdout(&out).contains("violations  0"));
    }
    assert_eq!(
        std::fs::read(&json_a).unwrap(),
        std::fs::read(&json_b).unwrap(),
        "JSON reports differ between identically seeded runs"
    );
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap(),
        "CSV reports differ between identically seeded runs"
    );
}

#[test]
fn convergence_prints_a_fitted_exponent() {
    let out = run(&[
        "verify",
        "convergence",
        "--game",
        "pursuit-line",
        "--meshes",
        "0.1,0.05",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("exponent"), "{}", stdout(&out));
}

#[test]
fn cache_round_trip_feeds_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("still.grid");
    let csv = dir.path().join("traj.csv");

    let out = run(&[
        "solve",
        "--game",
        "still",
        "--cache",
        cache.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(cache.is_file());

    let out = run(&[
        "simulate",
        "--game",
        "still",
        "--cache",
        cache.to_str().unwrap(),
        "--u-index",
        "0",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    // Motionless dynamics: the play ends exactly at the start state, so the
    // payoff equals the tracked level g(x₀) = 0.3.
    let text = stdout(&out);
    assert!(text.contains("payoff      g(x(1))    = 0.300000000000"), "{text}");

    let rows = std::fs::read_to_string(&csv).unwrap();
    let mut lines = rows.lines();
    assert_eq!(lines.next(), Some("t,x0,u_index,v_index"));
    assert!(lines.next().unwrap().starts_with("0,0.3,0,"));
}

#[test]
fn wrong_horizon_u_control_is_rejected(){
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.json");
    std::fs::write(&u, r#"{"times":[0.0,0.5],"indices":[0]}"#).unwrap();
    let out = run(&[
        "simulate",
        "--game",
        "still",
        "--u-file",
        u.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("u-control spans"), "{}", stderr(&out));
}

#[test]
fn gap_reports_the_coupled_witness() {
    let out = run(&["gap", "--game", "coupled-uv", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("max gap     2.000000e0"), "{text}");
}

#[test]
fn thread_flag_and_env_are_honored() {
    let out = bin()
        .args(["verify", "lemma1", "--game", "sum", "--trials", "5", "--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let out = bin()
        .args(["verify", "lemma1", "--game", "sum", "--trials", "5"])
        .env("DIFFGAME_THREADS", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("DIFFGAME_THREADS"), "{}", stderr(&out));
}

#[test]
fn custom_toml_config_solves() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("game.toml");
    std::fs::write(
        &path,
        r#"
[game]
builtin = "pursuit-line"

[state]
x0 = [0.1]

[grid]
slices = 20
nodes = 121
"#,
    )
    .unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    // Closed form x₀ + (1−t₀)/2 = 0.6 for the shifted start.
    assert!(stdout(&out).contains("0.600000000000"), "{}", stdout(&out));
}
