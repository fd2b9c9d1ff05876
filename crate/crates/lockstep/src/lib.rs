//! Exact event-driven simulation and Lyapunov certification of an
//! adaptive sender–receiver clock-synchronization loop.
//!
//! Two clocks drift apart at constant (unknown) rates. They synchronize by
//! a six-event stamp exchange: the sender opens with a timestamped
//! message, the receiver replies, the sender closes, and at the final
//! event the receiver corrects its clock offset and adapts its rate from
//! the five buffered stamps. Each exchange alternates residence waits of
//! length `c` and propagation delays of length `d`:
//!
//! ```text
//! event p:     0     1     2     3     4     5 (correction)
//! timer:         d     c     d     c     d     c
//! mode q:        1     0     1     0     1     0
//! ```
//!
//! Everything is event-driven and exact: flows are affine in the elapsed
//! time, so the engine advances clocks in closed form between events and
//! never integrates numerically. The synchronization error
//! `eps = (tau_i - tau_k, a_i - a_k)` then obeys, at corrections, the
//! exact linear recursion `eps^+ = A_g eps` with
//!
//! ```text
//! A_g = [0, gamma1; 0, 1 - mu*gamma2],   gamma1 = (3c + 4d)/2,
//!                                        gamma2 = 2(c + d),
//! ```
//!
//! which is the basis for both the certificate design (a 2x2 Lyapunov
//! matrix `P` solving a discrete LMI in closed form) and the verifier
//! (recomputing every claimed invariant from trajectory files alone).
//!
//! # Module map
//!
//! | module        | contents                                             |
//! |---------------|------------------------------------------------------|
//! | [`error_model`] | parameters, error coordinates, exact round map     |
//! | [`laws`]      | offset/rate correction laws from the stamp buffer    |
//! | [`engine`]    | pair hybrid automaton: flows, jumps, buffer classes  |
//! | [`multi`]     | one sender, N receivers, round-robin exchanges       |
//! | [`certificate`] | Lyapunov design, LMI checks, convergence factors   |
//! | [`noise`]     | delay jitter and truncated-Gaussian rate noise       |
//! | [`trajectory`] | CSV sample schemas for both topologies              |
//! | [`harness`]   | scenario configs, end-to-end runs, verification      |
//! | [`linalg`]    | tiny fixed-size symmetric/general 2x2 matrices       |
//!
//! # Quick start
//!
//! ```
//! use lockstep::{
//!     convergence_factors, design_p, run, verify_trajectory, Horizon, NoiseSpec, SimState,
//!     SyncParams,
//! };
//!
//! // Residence c, propagation d, adaptation gain mu.
//! let params = SyncParams::new(0.1, 0.2, 0.833)?;
//!
//! // Design a certificate and simulate 20 exchanges from a cold start.
//! let cert = convergence_factors(&design_p(&params, 1.0)?, &params)?;
//! let initial = SimState::cold_start(2.5, 0.0, 1.0, 1.8, params.c);
//! let traj = run(initial, &params, Horizon::jumps(120), &NoiseSpec::NONE, 0)?;
//!
//! // Every certified claim is re-checked from the samples alone.
//! let report = verify_trajectory(&traj, &cert)?;
//! assert!(report.all_applicable_pass());
//! # Ok::<(), lockstep::Error>(())
//! ```

pub mod certificate;
pub mod engine;
pub mod error;
pub mod error_model;
pub mod harness;
pub mod laws;
pub mod linalg;
pub mod multi;
pub mod noise;
pub mod trajectory;

// =========================================================================
// Re-exports: the shared types downstream crates actually touch
// =========================================================================

pub use certificate::{
    check_lmi, convergence_factors, convergence_factors_multi, design_p, design_p_multi,
    lyapunov_value, theoretical_bound, Certificate, LmiReport,
};
pub use engine::{apply_jump, memory_class, run, Horizon, MemoryClass, SimState};
pub use error::{Error, Result};
pub use error_model::{a_g, exp_af, round_map, spectral_radius_round, Eps, SyncParams};
pub use harness::{
    emit_plot_data, parse_config, run_scenario, verify_trajectory, write_trajectory,
    CheckOutcome, ScenarioConfig, Topology, VerificationReport,
};
pub use laws::{k_offset, k_rate};
pub use linalg::{Mat2, SymMat2};
pub use multi::{check_lmi_multi, lyapunov_value_multi, run_multi, MultiState};
pub use noise::{NoiseModel, NoiseSpec, RateNoise};
pub use trajectory::{
    read_trajectory_file, MultiSample, MultiTrajectory, Sample, Trajectory, TrajectoryFile,
};
