//! End-to-end tests of the `lockstep` binary: the full
//! design -> simulate -> verify -> plot pipeline plus the exit-code
//! contract (0 ok, 2 config error, 3 infeasible, 4 verification failure).

use std::path::Path;
use std::process::{Command, Output};

fn lockstep(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lockstep"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const PAIR_CONFIG: &str = r#"{
    "topology": "two_agent",
    "a_i": 1.0, "a_k": 1.8,
    "tau_i0": 2.5, "tau_k0": 0.0,
    "c": 0.1, "d": 0.2, "mu": 0.833,
    "horizon": {"j_max": 240}
}"#;

#[test]
fn design_simulate_verify_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();

    let out = lockstep(
        &["design", "--c", "0.1", "--d", "0.2", "--mu", "0.833", "-o", "cert.json"],
        dir,
    );
    assert!(out.status.success(), "design: {}", stderr(&out));
    assert!(stdout(&out).contains("contraction_ok  true"));
    let cert_text = std::fs::read_to_string(dir.join("cert.json")).unwrap();
    assert!(cert_text.contains("\"sigma\""), "certificate JSON has the factor fields");

    std::fs::write(dir.join("scenario.json"), PAIR_CONFIG).unwrap();
    let out = lockstep(
        &["simulate", "--config", "scenario.json", "--cert", "cert.json", "-o", "traj.csv"],
        dir,
    );
    assert!(out.status.success(), "simulate: {}", stderr(&out));
    assert!(stdout(&out).contains("all applicable checks pass"));
    let head = std::fs::read_to_string(dir.join("traj.csv")).unwrap();
    assert!(head.starts_with("t,j,p,q,tau,tau_i,tau_k,a_i,a_k,eps_tau,eps_a,V\n"));

    let out = lockstep(&["verify", "--traj", "traj.csv", "--cert", "cert.json"], dir);
    assert!(out.status.success(), "verify: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("eps_consistency"));
    assert!(text.contains("bound_envelope"));
    assert!(text.contains("all applicable checks pass"));

    let out = lockstep(&["plot", "--traj", "traj.csv", "-o", "run"], dir);
    assert!(out.status.success(), "plot: {}", stderr(&out));
    let errors = std::fs::read_to_string(dir.join("run_errors.csv")).unwrap();
    assert!(errors.starts_with("t,abs_eps_tau,abs_eps_a\n"));
    let lyap = std::fs::read_to_string(dir.join("run_lyapunov.csv")).unwrap();
    assert!(lyap.starts_with("t,j,V\n"));
    assert!(lyap.lines().count() > 1, "certified run populates the V series");
}

#[test]
fn swapped_delays_exit_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let bad = PAIR_CONFIG.replace("\"c\": 0.1, \"d\": 0.2", "\"c\": 0.3, \"d\": 0.2");
    std::fs::write(dir.join("bad.json"), bad).unwrap();
    let out = lockstep(&["simulate", "--config", "bad.json", "-o", "traj.csv"], dir);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("c \u{2264} d violated"));
}

#[test]
fn missing_config_file_exits_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = lockstep(&["simulate", "--config", "absent.json", "-o", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_gain_exits_with_the_infeasible_code() {
    let dir = tempfile::tempdir().unwrap();
    // mu = 2 / gamma2 puts the post-correction rate factor on the unit
    // circle: no quadratic certificate exists.
    let out = lockstep(
        &[
            "design",
            "--c",
            "0.1",
            "--d",
            "0.2",
            "--mu",
            "3.3333333333333330",
            "-o",
            "cert.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}

#[test]
fn gain_mismatch_fails_verification_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("scenario.json"), PAIR_CONFIG).unwrap();
    let out = lockstep(&["simulate", "--config", "scenario.json", "-o", "traj.csv"], dir);
    assert!(out.status.success(), "simulate: {}", stderr(&out));

    // Deadbeat-gain certificate: same delays, different mu. The correction
    // map recorded in the trajectory cannot match it.
    let out = lockstep(
        &["design", "--c", "0.1", "--d", "0.2", "--mu", "1.6666666666666665", "-o", "dead.json"],
        dir,
    );
    assert!(out.status.success(), "design: {}", stderr(&out));
    let out = lockstep(&["verify", "--traj", "traj.csv", "--cert", "dead.json"], dir);
    assert_eq!(out.status.code(), Some(4), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("verification failure"));
}

#[test]
fn divergent_scenario_reports_failure_from_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let hot = PAIR_CONFIG.replace("\"mu\": 0.833", "\"mu\": 4.166666666666666");
    std::fs::write(dir.join("hot.json"), hot).unwrap();
    let out = lockstep(&["simulate", "--config", "hot.json", "-o", "traj.csv"], dir);
    assert_eq!(out.status.code(), Some(4), "stdout: {}", stdout(&out));
    assert!(
        dir.join("traj.csv").exists(),
        "the trajectory is still written for inspection"
    );
}

#[test]
fn multi_scenarios_simulate_and_plot_but_do_not_verify() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let cfg = r#"{
        "topology": "multi_agent",
        "n": 2,
        "a_r": 1.0, "a_s": [0.62, 1.41],
        "tau_r0": 0.3, "tau_s0": [1.7, -0.9],
        "c": 0.1, "d": 0.2, "mu": 0.833,
        "horizon": {"j_max": 96}
    }"#;
    std::fs::write(dir.join("multi.json"), cfg).unwrap();

    let out = lockstep(
        &["design", "--c", "0.1", "--d", "0.2", "--mu", "0.833", "--multi", "-o", "cycle.json"],
        dir,
    );
    assert!(out.status.success(), "design --multi: {}", stderr(&out));

    let out = lockstep(
        &["simulate", "--config", "multi.json", "--cert", "cycle.json", "-o", "multi.csv"],
        dir,
    );
    assert!(out.status.success(), "simulate: {}", stderr(&out));
    let head = std::fs::read_to_string(dir.join("multi.csv")).unwrap();
    assert!(head.starts_with("t,j,p,q,active,tau,tau_R,tau_S_1,tau_S_2,"));

    let out = lockstep(&["verify", "--traj", "multi.csv", "--cert", "cycle.json"], dir);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("pair layout"));

    let out = lockstep(&["plot", "--traj", "multi.csv", "-o", "multi"], dir);
    assert!(out.status.success(), "plot: {}", stderr(&out));
    let errors = std::fs::read_to_string(dir.join("multi_errors.csv")).unwrap();
    assert!(errors.starts_with("t,abs_eps_tau_1,abs_eps_a_1,abs_eps_tau_2,abs_eps_a_2\n"));
}
