//! One sender serving N receivers in round-robin exchanges.
//!
//! The sender R runs the same six-event exchange as the pair engine, but
//! against one receiver at a time: receiver `active` completes a full
//! exchange (ending with its clock and rate correction), then the sender
//! immediately opens an exchange with receiver `active + 1 mod N`. Each
//! receiver `l` keeps a cycle timer `tau_cycle[l]` that flows with slope -1
//! and is reloaded to one exchange length `L = 3(c+d)` at the moment `l`
//! itself is corrected; receivers are staggered at start (`tau_cycle[l] =
//! (l+1) L`) so that the timer of the receiver being corrected reads zero
//! exactly at its correction. Between visits a timer keeps flowing and dips
//! below zero for N >= 2 — it is bookkeeping for the Lyapunov weighting,
//! not a constraint on the dynamics.
//!
//! The summed Lyapunov function
//!
//! ```text
//! V(x) = sum_l eps_l^T E(tau_cycle[l])^T P E(tau_cycle[l]) eps_l
//! eps_l = (tau_r - tau_s[l], a_r - a_s[l])
//! ```
//!
//! is exactly constant along every flow interval (each weight's slope -1
//! cancels the error flow) and drops at corrections whenever `P` satisfies
//! the cycle LMI `B^T P B - P < 0` with `B = E(L) A_g`; see
//! [`crate::certificate::design_p_multi`]. With a single receiver the
//! dynamics reduce bit-exactly to the pair engine.

use crate::certificate::{cycle_weight_horizon, LmiReport};
use crate::engine::{check_flow_step, shift_in, stamp_over, Horizon, TIMER_EXPIRY_TOL};
use crate::error::{Error, Result};
use crate::error_model::{exp_af, Eps, SyncParams};
use crate::laws::{k_offset, k_rate};
use crate::linalg::SymMat2;
use crate::noise::{NoiseSampler, NoiseSpec};
use crate::trajectory::{MultiSample, MultiTrajectory};

// =========================================================================
// State
// =========================================================================

/// The full hybrid state of one sender and N receivers.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiState {
    /// Sender clock.
    pub tau_r: f64,
    /// Receiver clocks.
    pub tau_s: Vec<f64>,
    /// Sender rate.
    pub a_r: f64,
    /// Receiver rates.
    pub a_s: Vec<f64>,
    /// Countdown timer to the next event.
    pub tau: f64,
    /// Event counter within the current exchange, 0..=5.
    pub p: u8,
    /// Mode bit: 1 while a message is in flight, 0 during residence.
    pub q: u8,
    /// Index of the receiver currently engaged.
    pub active: usize,
    /// Per-receiver cycle timers driving the Lyapunov weighting.
    pub tau_cycle: Vec<f64>,
    /// Sender-side stamp buffer, newest first.
    pub mem_r: [f64; 5],
    /// Per-receiver stamp buffers, newest first.
    pub mem_s: Vec<[f64; 5]>,
}

impl MultiState {
    /// Cold-start state: exchange with receiver 0 about to open, timer `c`,
    /// zeroed buffers, cycle timers staggered at `(l+1) * 3(c+d)`.
    pub fn cold_start(
        tau_r0: f64,
        tau_s0: &[f64],
        a_r: f64,
        a_s: &[f64],
        params: &SyncParams,
    ) -> Result<Self> {
        params.validate()?;
        let n = tau_s0.len();
        if n == 0 {
            return Err(Error::InvalidParams(
                "at least one receiver is required".to_string(),
            ));
        }
        if a_s.len() != n {
            return Err(Error::InvalidParams(format!(
                "{} receiver clocks but {} receiver rates",
                n,
                a_s.len()
            )));
        }
        let round = params.round_length();
        Ok(Self {
            tau_r: tau_r0,
            tau_s: tau_s0.to_vec(),
            a_r,
            a_s: a_s.to_vec(),
            tau: params.c,
            p: 0,
            q: 0,
            active: 0,
            tau_cycle: (1..=n).map(|l| l as f64 * round).collect(),
            mem_r: [0.0; 5],
            mem_s: vec![[0.0; 5]; n],
        })
    }

    /// Number of receivers.
    #[must_use]
    pub fn n(&self) -> usize {
        self.tau_s.len()
    }

    /// Synchronization error of receiver `l` against the sender.
    #[must_use]
    pub fn eps_of(&self, l: usize) -> Eps {
        Eps::new(self.tau_r - self.tau_s[l], self.a_r - self.a_s[l])
    }

    fn check_phase(&self) -> Result<()> {
        if self.p > 5 {
            return Err(Error::CorruptPhase(format!(
                "event counter p = {} out of range 0..=5",
                self.p
            )));
        }
        if self.q > 1 {
            return Err(Error::CorruptPhase(format!(
                "mode bit q = {} out of range 0..=1",
                self.q
            )));
        }
        if self.active >= self.n() {
            return Err(Error::CorruptPhase(format!(
                "active receiver {} out of range 0..{}",
                self.active,
                self.n()
            )));
        }
        Ok(())
    }
}

// =========================================================================
// Flow and jumps
// =========================================================================

/// Flows the state forward by `delta` with the stored rates.
pub fn advance_multi(state: &mut MultiState, delta: f64) -> Result<()> {
    let a_r = state.a_r;
    let a_s = state.a_s.clone();
    advance_multi_with_rates(state, delta, a_r, &a_s)
}

/// Flows the state forward by `delta` with explicit effective clock rates
/// (the rate-noise hook; stored rates remain untouched). All cycle timers
/// and the countdown timer flow with slope -1.
pub fn advance_multi_with_rates(
    state: &mut MultiState,
    delta: f64,
    rate_r: f64,
    rates_s: &[f64],
) -> Result<()> {
    if rates_s.len() != state.n() {
        return Err(Error::InvalidParams(format!(
            "{} effective receiver rates for {} receivers",
            rates_s.len(),
            state.n()
        )));
    }
    check_flow_step(delta, state.tau)?;
    state.tau_r += rate_r * delta;
    for (clock, rate) in state.tau_s.iter_mut().zip(rates_s) {
        *clock += rate * delta;
    }
    state.tau -= delta;
    for cyc in &mut state.tau_cycle {
        *cyc -= delta;
    }
    Ok(())
}

/// Applies the event selected by the counter `p` to the active exchange.
///
/// Identical to the pair jump map, with the active receiver in the receiver
/// role; additionally the correcting event reloads the active receiver's
/// cycle timer to `3(c+d)` and hands the token to the next receiver.
pub fn jump_multi(state: &mut MultiState, params: &SyncParams, delay: Option<f64>) -> Result<()> {
    params.validate()?;
    state.check_phase()?;
    if state.tau > TIMER_EXPIRY_TOL {
        return Err(Error::NotInJumpSet { remaining: state.tau });
    }
    let starts_propagation = state.p.is_multiple_of(2);
    let next_timer = match (starts_propagation, delay) {
        (true, Some(draw)) => {
            if !draw.is_finite() || draw <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "delay draw {draw} must be finite and > 0"
                )));
            }
            draw
        }
        (true, None) => params.d,
        (false, None) => params.c,
        (false, Some(_)) => {
            return Err(Error::InvalidParams(
                "delay draw supplied for a residence event".to_string(),
            ))
        }
    };

    let l = state.active;
    match state.p {
        0 => state.mem_r = shift_in(&state.mem_r, state.tau_r),
        1 => state.mem_s[l] = stamp_over(&state.mem_r, state.tau_s[l]),
        2 => state.mem_s[l] = shift_in(&state.mem_s[l], state.tau_s[l]),
        3 => state.mem_r = stamp_over(&state.mem_s[l], state.tau_r),
        4 => state.mem_r = shift_in(&state.mem_r, state.tau_r),
        5 => {
            let offset_corr = k_offset(&state.mem_r);
            let rate_corr = k_rate(&state.mem_r, state.tau_s[l], params.mu)?;
            state.mem_s[l] = stamp_over(&state.mem_r, state.tau_s[l]);
            state.tau_s[l] -= offset_corr;
            state.a_s[l] += rate_corr;
            state.tau_cycle[l] = params.round_length();
            state.active = (l + 1) % state.n();
        }
        _ => unreachable!("check_phase keeps p in 0..=5"),
    }

    state.q = if starts_propagation { 1 } else { 0 };
    state.tau = next_timer;
    state.p = (state.p + 1) % 6;
    Ok(())
}

// =========================================================================
// Lyapunov evaluation and cycle LMI
// =========================================================================

/// The summed Lyapunov value
/// `sum_l eps_l^T E(tau_cycle[l])^T P E(tau_cycle[l]) eps_l`.
#[must_use]
pub fn lyapunov_value_multi(state: &MultiState, p_mat: &SymMat2) -> f64 {
    (0..state.n())
        .map(|l| {
            let w = exp_af(state.tau_cycle[l]).mul_vec(state.eps_of(l).to_array());
            p_mat.quadratic_form(w)
        })
        .sum()
}

/// Tests the cycle LMI `B^T P B - P < 0` with `B = E(3(c+d)) A_g`.
pub fn check_lmi_multi(p_mat: &SymMat2, params: &SyncParams) -> Result<LmiReport> {
    crate::certificate::check_lmi_at(p_mat, params, cycle_weight_horizon(params))
}

// =========================================================================
// Run loop
// =========================================================================

/// Runs the multi-receiver simulation; the row schedule, horizon handling,
/// and disturbance draw order match [`crate::engine::run`] (rate offsets:
/// sender first, then receivers in index order).
pub fn run_multi(
    initial: MultiState,
    params: &SyncParams,
    horizon: Horizon,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<MultiTrajectory> {
    run_multi_inner(initial, params, horizon, noise, seed, None)
}

/// Like [`run_multi`], but also evaluates the summed Lyapunov function
/// under `p_mat` at every row and records it in the `V` column. The clock
/// and error columns are bit-identical to an uncertified run: the weight
/// evaluation only reads state.
pub fn run_multi_certified(
    initial: MultiState,
    params: &SyncParams,
    horizon: Horizon,
    noise: &NoiseSpec,
    seed: u64,
    p_mat: &SymMat2,
) -> Result<MultiTrajectory> {
    run_multi_inner(initial, params, horizon, noise, seed, Some(p_mat))
}

fn run_multi_inner(
    initial: MultiState,
    params: &SyncParams,
    horizon: Horizon,
    noise: &NoiseSpec,
    seed: u64,
    p_mat: Option<&SymMat2>,
) -> Result<MultiTrajectory> {
    params.validate()?;
    initial.check_phase()?;
    let mut sampler = NoiseSampler::new(*noise, seed)?;
    let mut traj = MultiTrajectory::new(initial.n());
    let mut state = initial;
    let mut t = 0.0_f64;
    let mut j = 0_u64;
    let v_of = |s: &MultiState| p_mat.map(|p| lyapunov_value_multi(s, p));

    push_row(&mut traj, t, j, &state, v_of(&state));
    let mut rates = draw_rates(&mut sampler, &state);

    while j < horizon.j_max {
        let dt = state.tau;
        let t_next = t + dt;
        if t_next > horizon.t_max + horizon.time_slack() {
            let remaining = horizon.t_max - t;
            if remaining > 0.0 {
                advance_multi_with_rates(&mut state, remaining, rates.0, &rates.1)?;
                push_row(&mut traj, horizon.t_max, j, &state, v_of(&state));
            }
            return Ok(traj);
        }

        if dt > 0.0 {
            for f in crate::engine::FLOW_SAMPLE_FRACTIONS {
                let mut peek = state.clone();
                advance_multi_with_rates(&mut peek, f * dt, rates.0, &rates.1)?;
                push_row(&mut traj, t + f * dt, j, &peek, v_of(&peek));
            }
        }
        advance_multi_with_rates(&mut state, dt, rates.0, &rates.1)?;
        push_row(&mut traj, t_next, j, &state, v_of(&state));

        let delay = if state.p.is_multiple_of(2) && sampler.has_delay_jitter() {
            Some(sampler.draw_delay(params.d))
        } else {
            None
        };
        jump_multi(&mut state, params, delay)?;
        j += 1;
        push_row(&mut traj, t_next, j, &state, v_of(&state));

        rates = draw_rates(&mut sampler, &state);
        t = t_next;
    }
    Ok(traj)
}

fn draw_rates(sampler: &mut NoiseSampler, state: &MultiState) -> (f64, Vec<f64>) {
    let rate_r = state.a_r + sampler.draw_rate_offset();
    let rates_s = state
        .a_s
        .iter()
        .map(|a| a + sampler.draw_rate_offset())
        .collect();
    (rate_r, rates_s)
}

fn push_row(traj: &mut MultiTrajectory, t: f64, j: u64, state: &MultiState, v: Option<f64>) {
    let n = state.n();
    let mut eps_tau = Vec::with_capacity(n);
    let mut eps_a = Vec::with_capacity(n);
    for l in 0..n {
        let e = state.eps_of(l);
        eps_tau.push(e.tau);
        eps_a.push(e.a);
    }
    traj.samples.push(MultiSample {
        t,
        j,
        p: state.p,
        q: state.q,
        active: state.active,
        tau: state.tau,
        tau_r: state.tau_r,
        tau_s: state.tau_s.clone(),
        eps_tau,
        eps_a,
        v,
    });
}

// =========================================================================
// Tests
// =========================================================================
