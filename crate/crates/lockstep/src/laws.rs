//! Correction laws evaluated at the end of a six-event exchange.
//!
//! One exchange produces six clock stamps. The first five accumulate in the
//! initiator's buffer and are handed to the receiver together with the final
//! message; the sixth is the receiver's own clock at the correction instant.
//! The buffer is a newest-first shift register `m = (m1, ..., m5)`:
//!
//! ```text
//! m1  initiator clock when it sent the closing message
//! m2  initiator clock when the reply arrived
//! m3  receiver  clock when it sent the reply
//! m4  receiver  clock when the opening message arrived
//! m5  initiator clock when it sent the opening message
//! ```
//!
//! The offset law pairs the two message directions symmetrically and the
//! rate law compares elapsed time on the two clocks over the exchange:
//!
//! ```text
//! k_offset(m)          = ((m4 - m5) + (m3 - m2)) / 2
//! k_rate(m, tau_k, mu) = mu * ((m1 - m5) - (tau_k - m4))
//! ```
//!
//! On stamps generated by an actual exchange these reduce exactly to
//!
//! ```text
//! k_offset = -eps_tau + gamma1 * eps_a
//! k_rate   =  mu * gamma2 * eps_a
//! ```
//!
//! evaluated at the correction instant, which is what makes the corrected
//! error follow the linear round map `A_g` (see [`crate::error_model`]).
//! Both laws are pure functions of their arguments.

use crate::error::{Error, Result};

/// Offset correction `((m4 - m5) + (m3 - m2)) / 2`.
///
/// Subtracting the receiver's clock by this amount cancels the clock offset
/// up to the rate-mismatch residual `gamma1 * eps_a`.
#[must_use]
pub fn k_offset(mem: &[f64; 5]) -> f64 {
    0.5 * ((mem[3] - mem[4]) + (mem[2] - mem[1]))
}

/// Rate correction `mu * ((m1 - m5) - (tau_k - m4))`.
///
/// `m1 - m5` is the exchange duration on the initiator's clock and
/// `tau_k - m4` the same duration on the receiver's clock; their difference
/// is `gamma2 * eps_a`. Scaling by `mu` and adding to the receiver's rate
/// contracts the rate mismatch by `1 - mu*gamma2` per round.
///
/// Errors with [`Error::InvalidGain`] when `mu` is not finite and positive.
pub fn k_rate(mem: &[f64; 5], tau_k: f64, mu: f64) -> Result<f64> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidGain { mu });
    }
    Ok(mu * ((mem[0] - mem[4]) - (tau_k - mem[3])))
}

// =========================================================================
// Tests
// =========================================================================

#[cfg(test)]
mod tests {
    use super::*;

    // Stamps from an exchange between two ideal unit-rate clocks that differ
    // by a constant offset of 2.5 (c = d = 0.5, both clocks started at the
    // exchange start): the offset law must recover exactly -2.5.
    #[test]
    fn k_offset_recovers_a_pure_clock_offset_exactly() {
        let mem = [4.5, 4.0, 1.0, 0.5, 2.5];
        assert_eq!(k_offset(&mem), -2.5, "pure offset must be recovered");
    }

    #[test]
    fn k_offset_ignores_symmetric_propagation_delay() {
        // Adding the same delay to both directions leaves the law unchanged:
        // (m4 - m5) gains +delta, (m3 - m2) gains -delta.
        let base = [4.5, 4.0, 1.0, 0.5, 2.5];
        let delta = 0.125;
        let skewed = [
            base[0],
            base[1] + delta,
            base[2],
            base[3] + delta,
            base[4],
        ];
        assert_eq!(
            k_offset(&skewed),
            k_offset(&base),
            "equal delays in both directions must cancel"
        );
    }

    // Same geometry but the receiver runs at rate 0.8: over the exchange the
    // initiator advances 2.0, the receiver 1.6, so the rate law reads
    // mu * (2.0 - 1.6) = 0.25 * 0.4 = 0.1 (up to one rounding step).
    #[test]
    fn k_rate_measures_elapsed_time_mismatch() {
        let mem = [4.5, 4.0, 0.8, 0.4, 2.5];
        let got = k_rate(&mem, 2.0, 0.25).expect("valid gain");
        assert!(
            (got - 0.1).abs() < 1e-15,
            "expected ~0.1, got {got}"
        );
    }

    #[test]
    fn k_rate_is_zero_for_equal_rates() {
        // Both clocks advance by the same amount over the exchange.
        let mem = [4.5, 4.0, 1.0, 0.5, 2.5];
        assert_eq!(k_rate(&mem, 2.5, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn k_rate_rejects_non_positive_or_non_finite_gain() {
        let mem = [0.0; 5];
        for mu in [0.0, -0.25, f64::NAN, f64::INFINITY] {
            let err = k_rate(&mem, 0.0, mu).expect_err("gain must be rejected");
            assert!(
                matches!(err, Error::InvalidGain { .. }),
                "mu = {mu} must raise InvalidGain, got {err}"
            );
        }
    }

    #[test]
    fn laws_are_pure_functions_of_their_arguments() {
        let mem = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(k_offset(&mem), k_offset(&mem.clone()));
        assert_eq!(
            k_rate(&mem, 6.0, 0.5).unwrap(),
            k_rate(&mem.clone(), 6.0, 0.5).unwrap()
        );
    }
}
