//! Reduced error model for one sender/receiver pair.
//!
//! The full simulation tracks two clocks, two rates, a countdown timer, an
//! event counter, and two stamp buffers. For analysis everything collapses
//! onto the synchronization error
//!
//! ```text
//! eps = (eps_tau, eps_a),   eps_tau = tau_i - tau_k,   eps_a = a_i - a_k
//! ```
//!
//! Between events the error flows linearly,
//!
//! ```text
//! d/dt eps = A_f eps,   A_f = [0 1; 0 0],
//! exp(A_f t) = [1 t; 0 1]                       (nilpotent, so exact)
//! ```
//!
//! and the correction applied at the end of each six-event exchange maps the
//! pre-correction error through
//!
//! ```text
//! A_g = [0 gamma1; 0 1 - mu*gamma2]
//! gamma1 = (3c + 4d) / 2        residual offset coupling
//! gamma2 = 2 (c + d)            rate-measurement horizon
//! ```
//!
//! where `c` is the residence delay a node waits before acting on a received
//! message and `d` is the propagation delay of a message in flight. Because
//! the first column of `A_g` is zero, `A_g * exp(A_f t) = A_g` for every `t`:
//! the post-correction error depends only on the error at the previous
//! correction, never on where inside the exchange it is observed. Iterating
//! gives the exact per-round recursion `eps^+ = A_g eps`, whose spectral
//! radius `|1 - mu*gamma2|` decides convergence.

use crate::error::{Error, Result};
use crate::linalg::Mat2;

// =========================================================================
// Parameters
// =========================================================================

/// The three scalar parameters of a sender/receiver exchange.
///
/// Valid when `0 < c <= d`, `mu > 0`, all finite. `c` is the residence time
/// between receiving a message and sending the next one, `d` the propagation
/// delay, `mu` the rate-correction gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncParams {
    pub c: f64,
    pub d: f64,
    pub mu: f64,
}

impl SyncParams {
    /// Builds and validates a parameter set.
    pub fn new(c: f64, d: f64, mu: f64) -> Result<Self> {
        let p = Self { c, d, mu };
        p.validate()?;
        Ok(p)
    }

    /// Checks `0 < c <= d`, `mu > 0`, all finite.
    pub fn validate(&self) -> Result<()> {
        if !self.c.is_finite() || !self.d.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidParams(format!(
                "non-finite parameter: c={}, d={}, mu={}",
                self.c, self.d, self.mu
            )));
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidParams(format!("c = {} must be > 0", self.c)));
        }
        if self.c > self.d {
            return Err(Error::InvalidParams(format!(
                "c = {} must not exceed d = {}",
                self.c, self.d
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParams(format!("mu = {} must be > 0", self.mu)));
        }
        Ok(())
    }

    /// Residual offset coupling `gamma1 = (3c + 4d) / 2`.
    #[must_use]
    pub fn gamma1(&self) -> f64 {
        0.5 * (3.0 * self.c + 4.0 * self.d)
    }

    /// Rate-measurement horizon `gamma2 = 2 (c + d)`.
    #[must_use]
    pub fn gamma2(&self) -> f64 {
        2.0 * (self.c + self.d)
    }

    /// Duration of one full six-event exchange, `3c + 3d`.
    #[must_use]
    pub fn round_length(&self) -> f64 {
        3.0 * (self.c + self.d)
    }
}

// =========================================================================
// Error coordinates
// =========================================================================

/// The synchronization error vector `(eps_tau, eps_a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eps {
    /// Clock offset `tau_i - tau_k`.
    pub tau: f64,
    /// Rate mismatch `a_i - a_k`.
    pub a: f64,
}

impl Eps {
    /// Builds an error vector from its two components.
    #[must_use]
    pub const fn new(tau: f64, a: f64) -> Self {
        Self { tau, a }
    }

    /// Euclidean norm.
    #[must_use]
    pub fn norm(&self) -> f64 {
        self.tau.hypot(self.a)
    }

    /// Components as an array `[eps_tau, eps_a]`.
    #[must_use]
    pub const fn to_array(self) -> [f64; 2] {
        [self.tau, self.a]
    }

    /// Builds from an array `[eps_tau, eps_a]`.
    #[must_use]
    pub const fn from_array(v: [f64; 2]) -> Self {
        Self { tau: v[0], a: v[1] }
    }
}

// =========================================================================
// Flow and jump matrices
// =========================================================================

/// The exact matrix exponential `exp(A_f t) = [1 t; 0 1]`.
///
/// `A_f` is nilpotent, so the series terminates and the result is exact for
/// every `t`, including negative values.
#[must_use]
pub fn exp_af(t: f64) -> Mat2 {
    Mat2::new(1.0, t, 0.0, 1.0)
}

/// The per-round error jump matrix `A_g = [0 gamma1; 0 1 - mu*gamma2]`.
pub fn a_g(params: &SyncParams) -> Result<Mat2> {
    params.validate()?;
    Ok(Mat2::new(
        0.0,
        params.gamma1(),
        0.0,
        1.0 - params.mu * params.gamma2(),
    ))
}

/// Applies one correction round to an error vector: `eps^+ = A_g eps`.
///
/// Because `A_g exp(A_f t) = A_g`, this is the exact map between consecutive
/// post-correction errors no matter how much flow time separates them.
pub fn round_map(eps: Eps, params: &SyncParams) -> Result<Eps> {
    let m = a_g(params)?;
    Ok(Eps::from_array(m.mul_vec(eps.to_array())))
}

/// Spectral radius of the per-round map, `|1 - mu*gamma2|`.
///
/// The round converges (error contracts geometrically) exactly when this is
/// below one; `mu = 1/gamma2` gives deadbeat behaviour (radius zero).
pub fn spectral_radius_round(params: &SyncParams) -> Result<f64> {
    params.validate()?;
    Ok((1.0 - params.mu * params.gamma2()).abs())
}

// =========================================================================
// Tests
// =========================================================================

#[cfg(test)]
mod tests {
    use super::*;

    fn p_short() -> SyncParams {
        SyncParams::new(0.1, 0.2, 0.833).expect("valid params")
    }

    #[test]
    fn validation_rejects_out_of_range_parameters() {
        assert!(SyncParams::new(0.3, 0.2, 0.5).is_err(), "c > d must fail");
        assert!(SyncParams::new(0.0, 0.2, 0.5).is_err(), "c = 0 must fail");
        assert!(SyncParams::new(0.1, 0.2, 0.0).is_err(), "mu = 0 must fail");
        assert!(SyncParams::new(0.1, 0.2, -1.0).is_err(), "mu < 0 must fail");
        assert!(SyncParams::new(0.1, f64::NAN, 0.5).is_err(), "NaN must fail");
        assert!(SyncParams::new(0.5, 0.5, 0.25).is_ok(), "c = d is allowed");
    }

    #[test]
    fn gamma_coefficients_match_closed_forms() {
        let p = p_short();
        assert!((p.gamma1() - 0.55).abs() < 1e-15, "gamma1 = (3c+4d)/2");
        assert!((p.gamma2() - 0.6).abs() < 1e-15, "gamma2 = 2(c+d)");
        assert!((p.round_length() - 0.9).abs() < 1e-15, "round = 3(c+d)");

        let q = SyncParams::new(0.5, 0.5, 0.25).unwrap();
        assert_eq!(q.gamma1(), 1.75);
        assert_eq!(q.gamma2(), 2.0);
        assert_eq!(q.round_length(), 3.0);
    }

    #[test]
    fn exp_af_is_the_unit_upper_triangular_family() {
        assert_eq!(exp_af(0.0), Mat2::identity(), "exp(0) = I");
        let m = exp_af(0.25);
        assert_eq!((m.m11, m.m12, m.m21, m.m22), (1.0, 0.25, 0.0, 1.0));
        // Group property holds exactly whenever s + t is exact in f64.
        assert_eq!(exp_af(0.25).mul(&exp_af(0.5)), exp_af(0.75));
        assert_eq!(exp_af(1.5).mul(&exp_af(-1.5)), Mat2::identity());
    }

    #[test]
    fn a_g_matches_frozen_reference_values() {
        let m = a_g(&p_short()).unwrap();
        assert_eq!(m.m11, 0.0);
        assert_eq!(m.m21, 0.0);
        assert!((m.m12 - 0.55).abs() < 1e-12, "m12 = gamma1 = 0.55");
        assert!((m.m22 - 0.5002).abs() < 1e-12, "m22 = 1 - mu*gamma2");
    }

    #[test]
    fn a_g_absorbs_flow_on_the_right() {
        // The zero first column makes A_g * exp(A_f t) = A_g exactly.
        let m = a_g(&p_short()).unwrap();
        for t in [0.0, 0.1, 3.7, -2.0] {
            assert_eq!(m.mul(&exp_af(t)), m, "A_g exp(A_f {t}) must equal A_g");
        }
    }

    #[test]
    fn round_map_matches_frozen_reference_values() {
        let out = round_map(Eps::new(1.0, 0.5), &p_short()).unwrap();
        assert!((out.tau - 0.275).abs() < 1e-12, "eps_tau' = gamma1 * eps_a");
        assert!((out.a - 0.2501).abs() < 1e-12, "eps_a' = (1-mu*gamma2) eps_a");
    }

    #[test]
    fn spectral_radius_tracks_the_rate_eigenvalue() {
        assert!((spectral_radius_round(&p_short()).unwrap() - 0.5002).abs() < 1e-12);
        // Deadbeat gain: radius is zero.
        let q = SyncParams::new(0.5, 0.5, 0.5).unwrap(); // mu = 1/gamma2
        assert_eq!(spectral_radius_round(&q).unwrap(), 0.0);
        // Boundary gain: radius is one (c = d = 0.5 makes gamma2 exact).
        let b = SyncParams::new(0.5, 0.5, 1.0).unwrap(); // mu = 2/gamma2
        assert_eq!(spectral_radius_round(&b).unwrap(), 1.0);
    }

    #[test]
    fn eps_norm_is_euclidean() {
        assert_eq!(Eps::new(3.0, 4.0).norm(), 5.0);
        assert_eq!(Eps::new(-3.0, 4.0).norm(), 5.0);
    }
}
