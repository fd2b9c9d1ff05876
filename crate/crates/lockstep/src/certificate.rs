//! Lyapunov certificates: design, checking, and the convergence envelope.
//!
//! Convergence of the exchange loop is certified by a quadratic function of
//! the synchronization error with a time-varying weight,
//!
//! ```text
//! V(x) = eps^T E(r)^T P E(r) eps,     E(r) = exp(A_f r) = [1 r; 0 1]
//! r(tau, p, q) = tau * h(q) + d * (5 - p),    h(1) = 1,  h(0) = d/c
//! ```
//!
//! `r` counts down the weighted time left until the next correction: it hits
//! `0` exactly at the correcting event and restarts at `6d` right after it.
//! Along in-flight intervals (`q = 1`) `r` has slope -1, which makes `V`
//! exactly constant there; along residence intervals (`q = 0`) the slope is
//! `-d/c` and `V` can grow at a bounded exponential rate.
//!
//! Across one whole exchange the post-correction error obeys
//! `eps^+ = A_g eps`, so `V` measured at fresh post-correction states (where
//! `r = 6d`) contracts whenever the linear matrix inequality
//!
//! ```text
//! M = B^T P B - P < 0,      B = E(H) A_g,   H = 6d
//! ```
//!
//! holds. `design_p` produces the diagonal-`Q` solution of that LMI in
//! closed form; `check_lmi` tests an arbitrary candidate. The scalar factors
//! `sigma, alpha1, alpha2, gamma, eta, rho` condense the LMI margin, the
//! equivalence of `V` with `|eps|^2`, and the worst-case flow growth into
//! the per-event envelope implemented by `theoretical_bound`.
//!
//! For the one-sender-N-receiver loop the same machinery applies with the
//! weighting horizon `H = 3(c + d)` (one exchange) instead of `6d`; the
//! summed Lyapunov function is exactly flow-constant there, so its `gamma`
//! is zero and `rho` is one.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_model::{a_g, exp_af, Eps, SyncParams};
use crate::linalg::SymMat2;

// =========================================================================
// Weighting
// =========================================================================

/// Weighting horizon of the sender/receiver pair: the value of `r` at a
/// fresh post-correction state, `6d`.
#[must_use]
pub fn pair_weight_horizon(params: &SyncParams) -> f64 {
    6.0 * params.d
}

/// Weighting horizon of the multi-receiver cycle: one exchange, `3(c+d)`.
#[must_use]
pub fn cycle_weight_horizon(params: &SyncParams) -> f64 {
    params.round_length()
}

/// The weight `r(tau, p, q) = tau * h(q) + d * (5 - p)` with `h(1) = 1` and
/// `h(0) = d/c`.
#[must_use]
pub fn r_weight(tau: f64, p: u8, q: u8, c: f64, d: f64) -> f64 {
    let h = 1.0 + ((1.0 - f64::from(q)) * (d - c)) / c;
    tau * h + d * f64::from(5 - p.min(5))
}

/// Evaluates `V = eps^T E(r)^T P E(r) eps` at a state `(tau, p, q)`.
#[must_use]
pub fn lyapunov_value(eps: Eps, tau: f64, p: u8, q: u8, p_mat: &SymMat2, c: f64, d: f64) -> f64 {
    let r = r_weight(tau, p, q, c, d);
    let w = exp_af(r).mul_vec(eps.to_array());
    p_mat.quadratic_form(w)
}

// =========================================================================
// LMI check and closed-form design
// =========================================================================

/// Result of testing the contraction LMI `B^T P B - P < 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmiReport {
    /// Whether the LMI holds strictly (largest eigenvalue below zero).
    pub holds: bool,
    /// Smallest eigenvalue of `M = B^T P B - P`.
    pub lambda_min: f64,
    /// Largest eigenvalue of `M`.
    pub lambda_max: f64,
}

fn require_pd(p_mat: &SymMat2, what: &str) -> Result<()> {
    if !p_mat.is_positive_definite() {
        return Err(Error::InvalidCertificateInput(format!(
            "{what} must be symmetric positive definite, got p11={}, p12={}, p22={}",
            p_mat.p11, p_mat.p12, p_mat.p22
        )));
    }
    Ok(())
}

/// The LMI matrix `M = B^T P B - P` with `B = E(horizon) A_g`.
pub fn lmi_matrix(p_mat: &SymMat2, params: &SyncParams, horizon: f64) -> Result<SymMat2> {
    require_pd(p_mat, "candidate P")?;
    let b = exp_af(horizon).mul(&a_g(params)?);
    Ok(p_mat.congruence(&b).sub(p_mat))
}

/// Tests the pair LMI (horizon `6d`) for a candidate `P`.
pub fn check_lmi(p_mat: &SymMat2, params: &SyncParams) -> Result<LmiReport> {
    check_lmi_at(p_mat, params, pair_weight_horizon(params))
}

/// Tests the LMI at an explicit weighting horizon.
pub fn check_lmi_at(p_mat: &SymMat2, params: &SyncParams, horizon: f64) -> Result<LmiReport> {
    let m = lmi_matrix(p_mat, params, horizon)?;
    let (lambda_min, lambda_max) = m.eigenvalues();
    Ok(LmiReport {
        holds: lambda_max < 0.0,
        lambda_min,
        lambda_max,
    })
}

/// Designs the diagonal-residual solution of the pair LMI: the unique
/// `P = diag(q_scale, p22)` with `B^T P B - P = -q_scale * I`.
///
/// With `B = E(H) A_g = [0 b12; 0 b22]`, `b22 = 1 - mu*gamma2` and
/// `b12 = gamma1 + H*b22`, the closed form is
///
/// ```text
/// p22 = q_scale * (1 + b12^2) / (1 - b22^2)
/// ```
///
/// which exists exactly when `|b22| < 1`, i.e. when the per-round rate
/// recursion contracts. Otherwise the design is [`Error::Infeasible`].
pub fn design_p(params: &SyncParams, q_scale: f64) -> Result<SymMat2> {
    design_p_at(params, q_scale, pair_weight_horizon(params))
}

/// Designs the diagonal-residual solution of the multi-receiver LMI
/// (horizon `3(c+d)`).
pub fn design_p_multi(params: &SyncParams, q_scale: f64) -> Result<SymMat2> {
    design_p_at(params, q_scale, cycle_weight_horizon(params))
}

/// Closed-form design at an explicit weighting horizon.
pub fn design_p_at(params: &SyncParams, q_scale: f64, horizon: f64) -> Result<SymMat2> {
    params.validate()?;
    if !q_scale.is_finite() || q_scale <= 0.0 {
        return Err(Error::InvalidCertificateInput(format!(
            "q_scale = {q_scale} must be finite and > 0"
        )));
    }
    let b22 = 1.0 - params.mu * params.gamma2();
    if b22.abs() >= 1.0 {
        return Err(Error::Infeasible(format!(
            "per-round rate contraction |1 - mu*gamma2| = {} is not below 1",
            b22.abs()
        )));
    }
    let b12 = params.gamma1() + horizon * b22;
    let p22 = q_scale * (1.0 + b12 * b12) / (1.0 - b22 * b22);
    Ok(SymMat2::new(q_scale, 0.0, p22))
}

/// The contraction margin `sigma = -lambda_max(M)` of the pair LMI.
///
/// Errors with [`Error::NoCertificate`] when the LMI does not hold.
pub fn sigma_of(p_mat: &SymMat2, params: &SyncParams) -> Result<f64> {
    sigma_at(p_mat, params, pair_weight_horizon(params))
}

fn sigma_at(p_mat: &SymMat2, params: &SyncParams, horizon: f64) -> Result<f64> {
    let rep = check_lmi_at(p_mat, params, horizon)?;
    if !rep.holds {
        return Err(Error::NoCertificate(format!(
            "LMI does not hold: largest eigenvalue {} is not negative",
            rep.lambda_max
        )));
    }
    Ok(-rep.lambda_max)
}

// =========================================================================
// Scalar factors
// =========================================================================

/// Extremal eigenvalues of the weighted quadratic over one pair cycle:
/// `alpha1 <= eig(E(r)^T P E(r)) <= alpha2` for all `r in [0, 6d]`.
pub fn alpha_bounds(p_mat: &SymMat2, c: f64, d: f64) -> Result<(f64, f64)> {
    alpha_bounds_at(p_mat, 6.0 * d, c, d)
}

/// Extremal eigenvalues of `E(r)^T P E(r)` over `r in [0, horizon]`.
///
/// Endpoints suffice: `det` is constant in `r` (unit-determinant
/// congruence) while `trace` is an upward-opening quadratic in `r`, so the
/// largest eigenvalue is maximal, and the smallest minimal, at `r = 0` or
/// `r = horizon`.
pub fn alpha_bounds_at(p_mat: &SymMat2, horizon: f64, c: f64, d: f64) -> Result<(f64, f64)> {
    SyncParams::new(c, d, 1.0)?; // validates the delays only
    require_pd(p_mat, "certificate P")?;
    let at_zero = *p_mat;
    let at_end = p_mat.congruence(&exp_af(horizon));
    let alpha1 = at_zero.lambda_min().min(at_end.lambda_min());
    let alpha2 = at_zero.lambda_max().max(at_end.lambda_max());
    Ok((alpha1, alpha2))
}

/// Worst-case residence-flow growth coefficient
///
/// ```text
/// gamma = (|alpha|/2) * p11 * eps*,  alpha = 2(c - d)/c
/// eps*  = (beta + sqrt(beta^2 + p11^2)) / p11,   beta = 6d*p11 - p12
/// ```
///
/// used by the envelope factors; exactly zero when `c = d` (then `r` has
/// slope -1 everywhere and `V` never grows).
pub fn gamma_of(p_mat: &SymMat2, c: f64, d: f64) -> Result<f64> {
    SyncParams::new(c, d, 1.0)?;
    require_pd(p_mat, "certificate P")?;
    if c == d {
        return Ok(0.0);
    }
    let alpha = 2.0 * (c - d) / c;
    let beta = 6.0 * d * p_mat.p11 - p_mat.p12;
    let eps_star = (beta + (beta * beta + p_mat.p11 * p_mat.p11).sqrt()) / p_mat.p11;
    Ok(alpha.abs() * p_mat.p11 * eps_star / 2.0)
}

/// The exact supremum of `d(ln V)/dt` along residence (`q = 0`) flow.
///
/// On residence intervals the weighted error `w = E(r) eps` obeys
/// `dw/dt = ((c-d)/c) A_f w`, so
///
/// ```text
/// d(ln V)/dt <= g = max over generalized eigenvalues lambda of
///                   (S, P) of ((c-d)/c) * lambda,
/// S = A_f^T P + P A_f = [0 p11; p11 2*p12]
/// ```
///
/// and the bound is attained. This is the tight per-segment growth rate the
/// verifier enforces pointwise; zero when `c = d`.
pub fn flow_growth_rate(p_mat: &SymMat2, c: f64, d: f64) -> Result<f64> {
    SyncParams::new(c, d, 1.0)?;
    require_pd(p_mat, "certificate P")?;
    if c == d {
        return Ok(0.0);
    }
    let half_alpha = (c - d) / c;
    let s = SymMat2::new(0.0, p_mat.p11, 2.0 * p_mat.p12);
    let (g_lo, g_hi) = s.generalized_eigenvalues(p_mat);
    Ok((half_alpha * g_lo).max(half_alpha * g_hi))
}

// =========================================================================
// Certificate
// =========================================================================

/// A complete convergence certificate, serializable as flat JSON.
///
/// `P` is stored row-major (`[p11, p12, p21, p22]`); the file is rejected
/// on load when the two off-diagonal entries disagree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub c: f64,
    pub d: f64,
    pub mu: f64,
    #[serde(rename = "P", with = "p_row_major")]
    pub p: SymMat2,
    /// Contraction margin of the LMI: `-lambda_max(B^T P B - P)`.
    pub sigma: f64,
    /// Lower equivalence constant: `alpha1 |eps|^2 <= V`.
    pub alpha1: f64,
    /// Upper equivalence constant: `V <= alpha2 |eps|^2`.
    pub alpha2: f64,
    /// Residence-flow growth coefficient (see [`gamma_of`]).
    pub gamma: f64,
    /// Per-correction decay factor of `V`: `|1 - sigma/alpha2|`.
    pub eta: f64,
    /// Per-event flow-growth factor: `exp(gamma c / (2 alpha2))`.
    pub rho: f64,
    /// Whether the per-event envelope factor `eta^(1/6) * rho` is below one.
    pub contraction_ok: bool,
}

mod p_row_major {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::linalg::SymMat2;

    pub fn serialize<S: Serializer>(p: &SymMat2, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::Serialize;
        [p.p11, p.p12, p.p12, p.p22].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<SymMat2, D::Error> {
        let a = <[f64; 4]>::deserialize(d)?;
        let scale = a[1].abs().max(a[2].abs()).max(1.0);
        if (a[1] - a[2]).abs() > 1e-12 * scale {
            return Err(D::Error::custom(format!(
                "P is not symmetric: p12 = {} but p21 = {}",
                a[1], a[2]
            )));
        }
        Ok(SymMat2::new(a[0], 0.5 * (a[1] + a[2]), a[3]))
    }
}

impl Certificate {
    /// The parameter triple this certificate was built for.
    pub fn params(&self) -> Result<SyncParams> {
        SyncParams::new(self.c, self.d, self.mu)
    }

    /// Leading coefficient of the envelope,
    /// `sqrt((alpha2/alpha1) * exp(gamma c / alpha2))`.
    #[must_use]
    pub fn envelope_coefficient(&self) -> f64 {
        ((self.alpha2 / self.alpha1) * (self.gamma * self.c / self.alpha2).exp()).sqrt()
    }

    /// Per-event envelope factor `eta^(1/6) * rho`.
    #[must_use]
    pub fn per_event_factor(&self) -> f64 {
        self.eta.powf(1.0 / 6.0) * self.rho
    }

    /// Structural validation: parameters in range, `P` positive definite,
    /// factors finite and consistently signed.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        require_pd(&self.p, "certificate P")?;
        let fields = [
            ("sigma", self.sigma),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("rho", self.rho),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidCertificateInput(format!(
                    "{name} = {v} is not finite"
                )));
            }
        }
        if self.sigma <= 0.0 || self.alpha1 <= 0.0 || self.alpha2 < self.alpha1 {
            return Err(Error::InvalidCertificateInput(format!(
                "factors out of range: sigma = {}, alpha1 = {}, alpha2 = {}",
                self.sigma, self.alpha1, self.alpha2
            )));
        }
        if self.gamma < 0.0 || self.rho < 1.0 || self.eta < 0.0 {
            return Err(Error::InvalidCertificateInput(format!(
                "factors out of range: gamma = {}, eta = {}, rho = {}",
                self.gamma, self.eta, self.rho
            )));
        }
        Ok(())
    }

    /// Writes the certificate as pretty-printed JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        let mut f = File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Reads and validates a certificate from JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = File::open(path)?;
        let cert: Certificate = serde_json::from_reader(f)?;
        cert.validate()?;
        Ok(cert)
    }
}

/// Assembles the full certificate for the sender/receiver pair.
///
/// Errors with [`Error::NoCertificate`] when the LMI fails outright; a
/// certificate whose envelope factor is not contractive is still returned,
/// with `contraction_ok = false`.
pub fn convergence_factors(p_mat: &SymMat2, params: &SyncParams) -> Result<Certificate> {
    factors_at(p_mat, params, pair_weight_horizon(params), false)
}

/// Assembles the certificate for the one-sender-N-receiver cycle
/// (horizon `3(c+d)`; the summed `V` is exactly flow-constant, so
/// `gamma = 0` and `rho = 1`).
pub fn convergence_factors_multi(p_mat: &SymMat2, params: &SyncParams) -> Result<Certificate> {
    factors_at(p_mat, params, cycle_weight_horizon(params), true)
}

fn factors_at(
    p_mat: &SymMat2,
    params: &SyncParams,
    horizon: f64,
    flow_constant: bool,
) -> Result<Certificate> {
    params.validate()?;
    let sigma = sigma_at(p_mat, params, horizon)?;
    let (alpha1, alpha2) = alpha_bounds_at(p_mat, horizon, params.c, params.d)?;
    let gamma = if flow_constant {
        0.0
    } else {
        gamma_of(p_mat, params.c, params.d)?
    };
    let eta = (1.0 - sigma / alpha2).abs();
    let rho = (gamma * params.c / (2.0 * alpha2)).exp();
    let contraction_ok = eta.powf(1.0 / 6.0) * rho < 1.0;
    Ok(Certificate {
        c: params.c,
        d: params.d,
        mu: params.mu,
        p: *p_mat,
        sigma,
        alpha1,
        alpha2,
        gamma,
        eta,
        rho,
        contraction_ok,
    })
}

/// The certified error envelope after `j` events:
///
/// ```text
/// |eps(t, j)| <= sqrt((alpha2/alpha1) exp(gamma c/alpha2))
///                * (eta^(1/6) rho)^j * |eps(0, 0)|
/// ```
///
/// Errors with [`Error::NoCertificate`] when the certificate does not
/// establish contraction.
pub fn theoretical_bound(j: u64, eps0_norm: f64, cert: &Certificate) -> Result<f64> {
    if !cert.contraction_ok {
        return Err(Error::NoCertificate(
            "certificate does not establish contraction (eta^(1/6) * rho >= 1)".to_string(),
        ));
    }
    if !(eps0_norm.is_finite() && eps0_norm >= 0.0) {
        return Err(Error::InvalidCertificateInput(format!(
            "initial error norm {eps0_norm} must be finite and >= 0"
        )));
    }
    let j_f = j as f64;
    Ok(cert.envelope_coefficient() * cert.per_event_factor().powf(j_f) * eps0_norm)
}

// =========================================================================
// Tests
// =========================================================================
