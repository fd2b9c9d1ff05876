//! Scenario execution: config to initial state to engine run to report.
//!
//! `run_scenario` is the one-call path behind the CLI: it builds the
//! cold-start state for the configured topology, runs the matching engine
//! with the configured disturbances, fills the `V` column when a
//! certificate is supplied, and verifies the result. It does not write any
//! files; pair `write_trajectory` with the config's `output` path for that.

use std::path::Path;

use crate::certificate::{lyapunov_value, Certificate};
use crate::engine::{run, SimState};
use crate::error::{Error, Result};
use crate::error_model::{Eps, SyncParams};
use crate::harness::config::{ScenarioConfig, Topology};
use crate::harness::verify::{verify_multi, verify_pair, VerificationReport};
use crate::multi::{run_multi, run_multi_certified, MultiState};
use crate::trajectory::TrajectoryFile;

/// Runs a validated scenario and verifies the result.
///
/// When the config names a certificate file, the certificate is loaded,
/// its `(c, d, mu)` must match the config's, and every sample row carries
/// the Lyapunov value; without one, the Lyapunov and envelope checks
/// report `NotApplicable`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(TrajectoryFile, VerificationReport)> {
    cfg.validate()?;
    let params = cfg.params()?;
    let cert = match &cfg.certificate {
        Some(path) => Some(load_matching_certificate(path, &params)?),
        None => None,
    };
    let noise = cfg.noise.spec();
    let seed = cfg.noise.seed;
    let horizon = cfg.horizon.to_horizon();

    match cfg.topology {
        Topology::TwoAgent => {
            let initial = SimState::cold_start(
                cfg.tau_i0.expect("validated pair config"),
                cfg.tau_k0.expect("validated pair config"),
                cfg.a_i.expect("validated pair config"),
                cfg.a_k.expect("validated pair config"),
                params.c,
            );
            let mut traj = run(initial, &params, horizon, &noise, seed)?;
            if let Some(cert) = &cert {
                for s in &mut traj.samples {
                    s.v = Some(lyapunov_value(
                        Eps::new(s.eps_tau, s.eps_a),
                        s.tau,
                        s.p,
                        s.q,
                        &cert.p,
                        cert.c,
                        cert.d,
                    ));
                }
            }
            let report = verify_pair(&traj, &params, cert.as_ref())?;
            Ok((TrajectoryFile::Pair(traj), report))
        }
        Topology::MultiAgent => {
            let tau_s0 = cfg.tau_s0.as_deref().expect("validated multi config");
            let a_s = cfg.a_s.as_deref().expect("validated multi config");
            let initial = MultiState::cold_start(
                cfg.tau_r0.expect("validated multi config"),
                tau_s0,
                cfg.a_r.expect("validated multi config"),
                a_s,
                &params,
            )?;
            let traj = match &cert {
                Some(cert) => {
                    run_multi_certified(initial, &params, horizon, &noise, seed, &cert.p)?
                }
                None => run_multi(initial, &params, horizon, &noise, seed)?,
            };
            let report = verify_multi(
                &traj,
                noise.delay_jitter.is_some(),
                noise.rate_noise.is_some(),
                cert.is_some(),
            );
            Ok((TrajectoryFile::Multi(traj), report))
        }
    }
}

/// Loads a certificate and requires it to share the scenario's parameters.
fn load_matching_certificate(path: &Path, params: &SyncParams) -> Result<Certificate> {
    let cert = Certificate::load(path)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    if !(close(params.c, cert.c) && close(params.d, cert.d) && close(params.mu, cert.mu)) {
        return Err(Error::VerifyInputMismatch(format!(
            "scenario parameters (c, d, mu) = ({}, {}, {}) do not match the certificate's \
             ({}, {}, {})",
            params.c, params.d, params.mu, cert.c, cert.d, cert.mu
        )));
    }
    Ok(cert)
}

/// Writes a trajectory of either layout as CSV.
pub fn write_trajectory(traj: &TrajectoryFile, path: impl AsRef<Path>) -> Result<()> {
    match traj {
        TrajectoryFile::Pair(t) => t.write_csv(path),
        TrajectoryFile::Multi(t) => t.write_csv(path),
    }
}

// =========================================================================
// Tests
// =========================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::{convergence_factors, design_p};
    use crate::harness::config::HorizonConfig;
    use crate::harness::verify::CheckOutcome;
    use crate::noise::NoiseModel;
    use crate::trajectory::read_trajectory_file;

    fn temp_dir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("lockstep-scn-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn pair_config() -> ScenarioConfig {
        ScenarioConfig {
            topology: Topology::TwoAgent,
            a_i: Some(1.0),
            a_k: Some(1.8),
            tau_i0: Some(2.5),
            tau_k0: Some(0.0),
            n: None,
            a_r: None,
            a_s: None,
            tau_r0: None,
            tau_s0: None,
            c: 0.1,
            d: 0.2,
            mu: 0.833,
            horizon: HorizonConfig { t_max: None, j_max: Some(120) },
            noise: NoiseModel::default(),
            certificate: None,
            output: None,
        }
    }

    fn save_reference_cert(name: &str) -> std::path::PathBuf {
        let params = SyncParams::new(0.1, 0.2, 0.833).unwrap();
        let cert =
            convergence_factors(&design_p(&params, 1.0).unwrap(), &params).unwrap();
        let path = temp_dir().join(name);
        cert.save(&path).unwrap();
        path
    }

    #[test]
    fn pair_scenario_without_certificate_skips_lyapunov_checks() {
        let (traj, report) = run_scenario(&pair_config()).unwrap();
        let TrajectoryFile::Pair(traj) = traj else {
            panic!("pair topology must produce the pair layout")
        };
        assert!(traj.samples.iter().all(|s| s.v.is_none()));
        assert!(matches!(report.eps_consistency, CheckOutcome::Pass { .. }));
        assert!(matches!(
            report.v_flow_behavior,
            CheckOutcome::NotApplicable { .. }
        ));
        assert!(report.all_applicable_pass());
    }

    #[test]
    fn pair_scenario_with_certificate_fills_v_and_passes() {
        let mut cfg = pair_config();
        cfg.certificate = Some(save_reference_cert("pair-cert.json"));
        let (traj, report) = run_scenario(&cfg).unwrap();
        let TrajectoryFile::Pair(traj) = traj else { panic!("pair layout") };
        assert!(traj.samples.iter().all(|s| s.v.is_some()));
        for (name, outcome) in report.checks() {
            assert!(
                matches!(outcome, CheckOutcome::Pass { .. }),
                "{name} should pass, got {outcome}"
            );
        }
    }

    #[test]
    fn certificate_parameter_mismatch_is_rejected() {
        let mut cfg = pair_config();
        cfg.mu = 0.9;
        cfg.certificate = Some(save_reference_cert("pair-cert-mismatch.json"));
        let err = run_scenario(&cfg).unwrap_err();
        assert!(matches!(err, Error::VerifyInputMismatch(_)), "got {err}");
    }

    #[test]
    fn multi_scenario_runs_and_reports() {
        let cfg = ScenarioConfig {
            topology: Topology::MultiAgent,
            a_i: None,
            a_k: None,
            tau_i0: None,
            tau_k0: None,
            n: Some(2),
            a_r: Some(1.0),
            a_s: Some(vec![0.62, 1.41]),
            tau_r0: Some(0.3),
            tau_s0: Some(vec![1.7, -0.9]),
            c: 0.1,
            d: 0.2,
            mu: 0.833,
            horizon: HorizonConfig { t_max: None, j_max: Some(96) },
            noise: NoiseModel::default(),
            certificate: None,
            output: None,
        };
        let (traj, report) = run_scenario(&cfg).unwrap();
        let TrajectoryFile::Multi(traj) = traj else {
            panic!("multi topology must produce the multi layout")
        };
        assert_eq!(traj.n, 2);
        assert!(traj.samples.iter().all(|s| s.v.is_none()));
        assert!(matches!(report.eps_consistency, CheckOutcome::Pass { .. }));
        assert!(matches!(
            report.m_membership_after_first_cycle,
            CheckOutcome::NotApplicable { .. }
        ));
        assert!(report.all_applicable_pass());

        // With a multi-cycle certificate the V column appears and behaves.
        let params = SyncParams::new(0.1, 0.2, 0.833).unwrap();
        let p_mat = crate::certificate::design_p_multi(&params, 1.0).unwrap();
        let cert = crate::certificate::convergence_factors_multi(&p_mat, &params).unwrap();
        let cert_path = temp_dir().join("multi-cert.json");
        cert.save(&cert_path).unwrap();
        let cfg = ScenarioConfig { certificate: Some(cert_path), ..cfg };
        let (traj, report) = run_scenario(&cfg).unwrap();
        let TrajectoryFile::Multi(traj) = traj else { panic!("multi layout") };
        assert!(traj.samples.iter().all(|s| s.v.is_some()));
        assert!(matches!(report.v_flow_behavior, CheckOutcome::Pass { .. }));
        assert!(matches!(report.v_jump_decrement, CheckOutcome::Pass { .. }));
        assert!(report.all_applicable_pass());
    }

    #[test]
    fn written_trajectories_round_trip_through_the_layout_detector() {
        let (traj, _) = run_scenario(&pair_config()).unwrap();
        let path = temp_dir().join("pair-run.csv");
        write_trajectory(&traj, &path).unwrap();
        let back = read_trajectory_file(&path).unwrap();
        match (&traj, &back) {
            (TrajectoryFile::Pair(a), TrajectoryFile::Pair(b)) => {
                assert_eq!(a.samples, b.samples)
            }
            _ => panic!("layout detection must return the pair layout"),
        }
    }
}
