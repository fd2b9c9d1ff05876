//! Exact event-driven simulation of one sender/receiver exchange loop.
//!
//! The synchronization protocol is a hybrid automaton. Between events the
//! continuous state flows with constant derivatives; at events the state
//! jumps. Because the flow is affine and event times are dictated by a
//! countdown timer with slope -1, every event time is known in closed form
//! and the simulation advances event-to-event with no integration error
//! beyond f64 rounding: there is no step-size control and no root finding.
//!
//! Continuous state and flow:
//!
//! ```text
//! tau_i' = a_i     sender clock
//! tau_k' = a_k     receiver clock
//! tau'   = -1      countdown timer to the next event
//! ```
//!
//! Discrete state: the event counter `p in 0..=5`, the mode bit `q` (1 =
//! message in flight, 0 = residence wait), and two five-slot stamp buffers.
//! The six events of one exchange, numbered by the value of `p` when the
//! event fires:
//!
//! ```text
//! p=0  sender stamps and sends the opening message        q->1, tau:=d
//! p=1  receiver stamps its arrival                        q->0, tau:=c
//! p=2  receiver stamps and sends the reply                q->1, tau:=d
//! p=3  sender stamps its arrival                          q->0, tau:=c
//! p=4  sender stamps and sends the closing message        q->1, tau:=d
//! p=5  receiver stamps, then corrects clock and rate      q->0, tau:=c
//! ```
//!
//! At the correcting event the receiver applies [`crate::laws::k_offset`]
//! and [`crate::laws::k_rate`] to the buffer carried by the closing message
//! together with its own pre-correction clock. A cold start (`p=0`, `q=0`,
//! `tau=c`, zeroed buffers) therefore produces events at `c, c+d, 2c+d, ...`
//! and one correction every `3c+3d` time units.

use crate::error::{Error, Result};
use crate::error_model::{Eps, SyncParams};
use crate::laws::{k_offset, k_rate};
use crate::noise::{NoiseSampler, NoiseSpec};
use crate::trajectory::{Sample, Trajectory};

/// Absolute slack when deciding that the countdown timer has expired.
///
/// Nominal event-to-event stepping lands on zero exactly; the tolerance
/// absorbs the few-ulp drift of externally computed step sizes.
pub const TIMER_EXPIRY_TOL: f64 = 1e-9;

/// Interior sampling points of each flow interval, as fractions of the
/// interval length.
pub const FLOW_SAMPLE_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

// =========================================================================
// State
// =========================================================================

/// The full hybrid state of one sender/receiver pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimState {
    /// Sender clock.
    pub tau_i: f64,
    /// Receiver clock.
    pub tau_k: f64,
    /// Sender rate.
    pub a_i: f64,
    /// Receiver rate.
    pub a_k: f64,
    /// Countdown timer to the next event.
    pub tau: f64,
    /// Event counter, 0..=5.
    pub p: u8,
    /// Mode bit: 1 while a message is in flight, 0 during residence.
    pub q: u8,
    /// Sender-side stamp buffer, newest first.
    pub mem_i: [f64; 5],
    /// Receiver-side stamp buffer, newest first.
    pub mem_k: [f64; 5],
}

impl SimState {
    /// Cold-start state: residence mode, counter zero, timer `c`, zeroed
    /// buffers. The first event fires after `c` time units.
    #[must_use]
    pub fn cold_start(tau_i0: f64, tau_k0: f64, a_i: f64, a_k: f64, c: f64) -> Self {
        Self {
            tau_i: tau_i0,
            tau_k: tau_k0,
            a_i,
            a_k,
            tau: c,
            p: 0,
            q: 0,
            mem_i: [0.0; 5],
            mem_k: [0.0; 5],
        }
    }

    /// The synchronization error `(tau_i - tau_k, a_i - a_k)`.
    #[must_use]
    pub fn eps(&self) -> Eps {
        Eps::new(self.tau_i - self.tau_k, self.a_i - self.a_k)
    }

    /// Checks that the discrete state is in range.
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
        Ok(())
    }
}

/// Time remaining until the next event (the countdown timer).
#[must_use]
pub fn next_event(state: &SimState) -> f64 {
    state.tau
}

// =========================================================================
// Flow
// =========================================================================

/// Flows the state forward by `delta` with the stored rates.
///
/// Errors with [`Error::FlowDomainViolation`] when `delta` is negative,
/// non-finite, or overruns the countdown timer (beyond [`TIMER_EXPIRY_TOL`]).
pub fn advance_flow(state: &mut SimState, delta: f64) -> Result<()> {
    let (a_i, a_k) = (state.a_i, state.a_k);
    advance_flow_with_rates(state, delta, a_i, a_k)
}

/// Flows the state forward by `delta` with explicit effective clock rates.
///
/// This is the rate-noise hook: the clocks integrate `rate_i` / `rate_k`
/// while the stored rates `a_i` / `a_k` (used by the correction law) remain
/// untouched. With `rate_i = a_i` and `rate_k = a_k` it is exactly
/// [`advance_flow`].
pub fn advance_flow_with_rates(
    state: &mut SimState,
    delta: f64,
    rate_i: f64,
    rate_k: f64,
) -> Result<()> {
    check_flow_step(delta, state.tau)?;
    state.tau_i += rate_i * delta;
    state.tau_k += rate_k * delta;
    state.tau -= delta;
    Ok(())
}

/// Shared flow-step domain check: `0 <= delta <= remaining + slack`.
pub(crate) fn check_flow_step(delta: f64, remaining: f64) -> Result<()> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::FlowDomainViolation(format!(
            "step {delta} is negative or non-finite"
        )));
    }
    if delta > remaining + TIMER_EXPIRY_TOL {
        return Err(Error::FlowDomainViolation(format!(
            "step {delta} overruns the countdown timer ({remaining} remaining)"
        )));
    }
    Ok(())
}

// =========================================================================
// Jumps
// =========================================================================

/// Shifts a stamp into a newest-first buffer, dropping the oldest slot.
#[must_use]
pub(crate) fn shift_in(mem: &[f64; 5], stamp: f64) -> [f64; 5] {
    [stamp, mem[0], mem[1], mem[2], mem[3]]
}

/// Cross-copy: own stamp plus the first four slots of the peer's buffer.
#[must_use]
pub(crate) fn stamp_over(peer: &[f64; 5], stamp: f64) -> [f64; 5] {
    [stamp, peer[0], peer[1], peer[2], peer[3]]
}

/// Applies the event selected by the current counter `p`.
///
/// The timer must have expired (within [`TIMER_EXPIRY_TOL`]), otherwise
/// [`Error::NotInJumpSet`]. Events with even `p` start a propagation and
/// install `delay` (the jittered draw) or the nominal `d`; events with odd
/// `p` start a residence and always install `c`. Passing a `delay` for a
/// residence event is rejected as [`Error::InvalidParams`]. The counter
/// advances modulo six.
pub fn apply_jump(state: &mut SimState, params: &SyncParams, delay: Option<f64>) -> Result<()> {
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

    match state.p {
        // Sender stamps and sends the opening message.
        0 => state.mem_i = shift_in(&state.mem_i, state.tau_i),
        // Receiver stamps the arrival over the sender's buffer.
        1 => state.mem_k = stamp_over(&state.mem_i, state.tau_k),
        // Receiver stamps and sends the reply.
        2 => state.mem_k = shift_in(&state.mem_k, state.tau_k),
        // Sender stamps the arrival over the receiver's buffer.
        3 => state.mem_i = stamp_over(&state.mem_k, state.tau_i),
        // Sender stamps and sends the closing message.
        4 => state.mem_i = shift_in(&state.mem_i, state.tau_i),
        // Receiver stamps, then corrects clock and rate. Both laws and the
        // stamp read the pre-correction clock.
        5 => {
            let offset_corr = k_offset(&state.mem_i);
            let rate_corr = k_rate(&state.mem_i, state.tau_k, params.mu)?;
            state.mem_k = stamp_over(&state.mem_i, state.tau_k);
            state.tau_k -= offset_corr;
            state.a_k += rate_corr;
        }
        _ => unreachable!("check_phase keeps p in 0..=5"),
    }

    state.q = if starts_propagation { 1 } else { 0 };
    state.tau = next_timer;
    state.p = (state.p + 1) % 6;
    Ok(())
}

// =========================================================================
// Buffer-consistency classes
// =========================================================================

/// The six buffer-consistency classes, one per value of the event counter.
///
/// Class `Mk` holds exactly when the state looks like the protocol has just
/// executed event `k-1` of a clean exchange: the counter reads `k-1`, the
/// mode bit matches, the timer is inside its range, and every buffer slot
/// that the exchange has written so far equals the clock stamp it should
/// carry (back-computed from the current clocks and rates).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryClass {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
}

impl MemoryClass {
    /// The class index, 1..=6.
    #[must_use]
    pub fn index(&self) -> u8 {
        match self {
            MemoryClass::M1 => 1,
            MemoryClass::M2 => 2,
            MemoryClass::M3 => 3,
            MemoryClass::M4 => 4,
            MemoryClass::M5 => 5,
            MemoryClass::M6 => 6,
        }
    }

    /// The class whose index is `p + 1`.
    #[must_use]
    fn from_counter(p: u8) -> Option<Self> {
        match p {
            0 => Some(MemoryClass::M1),
            1 => Some(MemoryClass::M2),
            2 => Some(MemoryClass::M3),
            3 => Some(MemoryClass::M4),
            4 => Some(MemoryClass::M5),
            5 => Some(MemoryClass::M6),
            _ => None,
        }
    }
}

impl std::fmt::Display for MemoryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M{}", self.index())
    }
}

/// Absolute tolerance for the buffer-consistency predicates.
pub const MEMORY_TOL: f64 = 1e-9;

/// Classifies a state into its buffer-consistency class, or `None` when the
/// state is not consistent with any clean exchange.
///
/// Back-computation: a stamp taken `beta` time units before the last event
/// must equal the present clock minus the rate times (time since the last
/// event plus `beta`), where time since the last event is `c - tau` in
/// residence mode and `d - tau` in flight mode. All comparisons use the
/// absolute tolerance [`MEMORY_TOL`].
#[must_use]
pub fn memory_class(state: &SimState, params: &SyncParams) -> Option<MemoryClass> {
    if state.check_phase().is_err() || params.validate().is_err() {
        return None;
    }
    let class = MemoryClass::from_counter(state.p)?;
    // Mode bit follows the counter parity: events 0,2,4 started flights.
    if state.q != state.p % 2 {
        return None;
    }
    // Timer within its installed range.
    let span = if state.q == 1 { params.d } else { params.c };
    if state.tau < -MEMORY_TOL || state.tau > span + MEMORY_TOL {
        return None;
    }
    let elapsed = span - state.tau;
    // Back-computed stamps on each clock.
    let stamp_i = |beta: f64| state.tau_i - state.a_i * (elapsed + beta);
    let stamp_k = |beta: f64| state.tau_k - state.a_k * (elapsed + beta);
    let close = |have: f64, want: f64| (have - want).abs() <= MEMORY_TOL;

    let (c, d) = (params.c, params.d);
    let ok = match class {
        // Nothing written yet this exchange.
        MemoryClass::M1 => true,
        // Opening message in flight: sender stamped at the event.
        MemoryClass::M2 => close(state.mem_i[0], stamp_i(0.0)),
        // Opening message arrived: receiver stamp, then the sender's opening
        // stamp taken one propagation earlier.
        MemoryClass::M3 => {
            close(state.mem_k[0], stamp_k(0.0)) && close(state.mem_k[1], stamp_i(d))
        }
        // Reply in flight.
        MemoryClass::M4 => {
            close(state.mem_k[0], stamp_k(0.0))
                && close(state.mem_k[1], stamp_k(c))
                && close(state.mem_k[2], stamp_i(c + d))
        }
        // Reply arrived at the sender.
        MemoryClass::M5 => {
            close(state.mem_i[0], stamp_i(0.0))
                && close(state.mem_i[1], stamp_k(d))
                && close(state.mem_i[2], stamp_k(c + d))
                && close(state.mem_i[3], stamp_i(2.0 * d + c))
        }
        // Closing message in flight: the full five-stamp history.
        MemoryClass::M6 => {
            close(state.mem_i[0], stamp_i(0.0))
                && close(state.mem_i[1], stamp_i(c))
                && close(state.mem_i[2], stamp_k(c + d))
                && close(state.mem_i[3], stamp_k(2.0 * c + d))
                && close(state.mem_i[4], stamp_i(2.0 * c + 2.0 * d))
        }
    };
    ok.then_some(class)
}

// =========================================================================
// Run loop
// =========================================================================

/// Stopping rule for a run: wall-clock limit and event-count limit,
/// whichever binds first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Horizon {
    pub t_max: f64,
    pub j_max: u64,
}

impl Horizon {
    /// Default event budget when a configuration does not set one.
    pub const DEFAULT_J_MAX: u64 = 600;

    /// Horizon limited only by an event count.
    #[must_use]
    pub fn jumps(j_max: u64) -> Self {
        Self { t_max: f64::INFINITY, j_max }
    }

    /// Relative slack applied to `t_max` when deciding whether the next
    /// event still fits: absorbs the ulp drift of summed event times.
    #[must_use]
    pub fn time_slack(&self) -> f64 {
        1e-9 * self.t_max.abs().max(1.0)
    }
}

impl Default for Horizon {
    fn default() -> Self {
        Self::jumps(Self::DEFAULT_J_MAX)
    }
}

/// Runs the simulation from `initial` until the horizon binds, sampling
/// every flow interval and every event.
///
/// Row schedule: one row for the initial state, then per flow interval
/// three interior rows (at the [`FLOW_SAMPLE_FRACTIONS`]), one pre-event
/// row, and one post-event row. Interior rows are computed on a copy of the
/// state so that the state itself flows each interval in a single exact
/// step. If `t_max` truncates a flow interval, the run flows to `t_max`,
/// emits one final row, and stops.
///
/// Disturbances follow the draw-order contract in [`crate::noise`]: rate
/// offsets are drawn before the first interval and after every event
/// (sender first, then receiver); a delay is drawn at every event that
/// starts a propagation. The Lyapunov column of every row is left empty.
pub fn run(
    initial: SimState,
    params: &SyncParams,
    horizon: Horizon,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Trajectory> {
    params.validate()?;
    initial.check_phase()?;
    let mut sampler = NoiseSampler::new(*noise, seed)?;
    let mut traj = Trajectory::new();
    let mut state = initial;
    let mut t = 0.0_f64;
    let mut j = 0_u64;

    push_row(&mut traj, t, j, &state);
    let mut rates = draw_rates(&mut sampler, &state);

    while j < horizon.j_max {
        let dt = next_event(&state);
        let t_next = t + dt;
        if t_next > horizon.t_max + horizon.time_slack() {
            // The horizon truncates this flow interval: flow to t_max, emit
            // one final row, and stop.
            let remaining = horizon.t_max - t;
            if remaining > 0.0 {
                advance_flow_with_rates(&mut state, remaining, rates.0, rates.1)?;
                push_row(&mut traj, horizon.t_max, j, &state);
            }
            return Ok(traj);
        }

        if dt > 0.0 {
            for f in FLOW_SAMPLE_FRACTIONS {
                let mut peek = state;
                advance_flow_with_rates(&mut peek, f * dt, rates.0, rates.1)?;
                push_row(&mut traj, t + f * dt, j, &peek);
            }
        }
        advance_flow_with_rates(&mut state, dt, rates.0, rates.1)?;
        push_row(&mut traj, t_next, j, &state);

        let delay = if state.p.is_multiple_of(2) && sampler.has_delay_jitter() {
            Some(sampler.draw_delay(params.d))
        } else {
            None
        };
        apply_jump(&mut state, params, delay)?;
        j += 1;
        push_row(&mut traj, t_next, j, &state);

        rates = draw_rates(&mut sampler, &state);
        t = t_next;
    }
    Ok(traj)
}

/// Effective rates for the next flow interval: stored rates plus one
/// truncated-Gaussian offset each (sender drawn first).
fn draw_rates(sampler: &mut NoiseSampler, state: &SimState) -> (f64, f64) {
    let n_i = sampler.draw_rate_offset();
    let n_k = sampler.draw_rate_offset();
    (state.a_i + n_i, state.a_k + n_k)
}

fn push_row(traj: &mut Trajectory, t: f64, j: u64, state: &SimState) {
    let eps = state.eps();
    traj.samples.push(Sample {
        t,
        j,
        p: state.p,
        q: state.q,
        tau: state.tau,
        tau_i: state.tau_i,
        tau_k: state.tau_k,
        a_i: state.a_i,
        a_k: state.a_k,
        eps_tau: eps.tau,
        eps_a: eps.a,
        v: None,
    });
}

// =========================================================================
// Tests
// =========================================================================
