//! Perturbation models and their deterministic sampler.
//!
//! Two disturbances can be layered onto a nominal run:
//!
//! ```text
//! delay jitter   each propagation delay is drawn uniformly from [d1, d2]
//!                (inclusive) instead of being the nominal d; residence
//!                times c are never jittered
//! rate noise     each clock's effective rate over one flow interval is its
//!                stored rate plus a truncated-Gaussian draw: zero mean,
//!                given std, rejected until |x| < bound; draws are
//!                independent per clock and per interval (zero-order hold,
//!                redrawn after every event)
//! ```
//!
//! Sampling is driven by a ChaCha8 stream cipher seeded with a caller
//! supplied integer, so a run is a pure function of (initial state,
//! parameters, noise model, seed). When both disturbances are absent no
//! random numbers are consumed at all and the output is seed-independent.
//!
//! Draw order contract (what makes replays byte-identical): the simulation
//! loop asks for rate offsets once before the first flow interval and once
//! after every jump, always in a fixed clock order (sender first, then each
//! receiver in index order), and asks for one delay draw at every event that
//! starts a propagation.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// =========================================================================
// Model description
// =========================================================================

/// Truncated-Gaussian rate perturbation: std deviation and hard bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateNoise {
    pub std: f64,
    pub bound: f64,
}

impl RateNoise {
    /// Checks `std >= 0`, `bound > 0`, both finite.
    pub fn validate(&self) -> Result<()> {
        if !self.std.is_finite() || self.std < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "rate_noise.std = {} must be finite and >= 0",
                self.std
            )));
        }
        if !self.bound.is_finite() || self.bound <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "rate_noise.bound = {} must be finite and > 0",
                self.bound
            )));
        }
        Ok(())
    }
}

/// The disturbances applied during a run (without the seed).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NoiseSpec {
    /// Uniform propagation-delay band `[d1, d2]`, inclusive.
    pub delay_jitter: Option<(f64, f64)>,
    /// Truncated-Gaussian per-interval rate perturbation.
    pub rate_noise: Option<RateNoise>,
}

impl NoiseSpec {
    /// The nominal (disturbance-free) spec.
    pub const NONE: NoiseSpec = NoiseSpec {
        delay_jitter: None,
        rate_noise: None,
    };

    /// True when no disturbance is configured.
    #[must_use]
    pub fn is_nominal(&self) -> bool {
        self.delay_jitter.is_none() && self.rate_noise.is_none()
    }

    /// Checks band and noise parameters: `0 < d1 <= d2`, finite; rate noise
    /// as in [`RateNoise::validate`].
    pub fn validate(&self) -> Result<()> {
        if let Some((d1, d2)) = self.delay_jitter {
            if !d1.is_finite() || !d2.is_finite() || d1 <= 0.0 || d1 > d2 {
                return Err(Error::ConfigInvalid(format!(
                    "delay_jitter = [{d1}, {d2}] must satisfy 0 < d1 <= d2"
                )));
            }
        }
        if let Some(rn) = &self.rate_noise {
            rn.validate()?;
        }
        Ok(())
    }
}

/// The serializable noise section of a scenario configuration: the
/// disturbance spec plus the seed that drives it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_jitter: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_noise: Option<RateNoise>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    /// The disturbance spec without the seed.
    #[must_use]
    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            delay_jitter: self.delay_jitter.map(|b| (b[0], b[1])),
            rate_noise: self.rate_noise,
        }
    }
}

// =========================================================================
// Sampler
// =========================================================================

/// Deterministic sampler for one run.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl NoiseSampler {
    /// Builds a sampler for a validated spec and a seed.
    pub fn new(spec: NoiseSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// One propagation delay: a uniform draw from the jitter band, or the
    /// nominal delay when jitter is off (consuming no randomness).
    pub fn draw_delay(&mut self, nominal_d: f64) -> f64 {
        match self.spec.delay_jitter {
            Some((d1, d2)) => Uniform::new_inclusive(d1, d2).sample(&mut self.rng),
            None => nominal_d,
        }
    }

    /// One additive rate offset: a truncated-Gaussian draw, or zero when
    /// rate noise is off (consuming no randomness).
    ///
    /// Rejection sampling: redraw until `|x| < bound`. With `std = 0` the
    /// draw is exactly zero (one sample is still consumed so that stream
    /// positions stay aligned with `std > 0` configurations).
    pub fn draw_rate_offset(&mut self) -> f64 {
        match self.spec.rate_noise {
            Some(RateNoise { std, bound }) => {
                let normal = Normal::new(0.0, std)
                    .expect("validated std is finite and non-negative");
                loop {
                    let x = normal.sample(&mut self.rng);
                    if x.abs() < bound {
                        return x;
                    }
                }
            }
            None => 0.0,
        }
    }

    /// Whether any disturbance is active.
    #[must_use]
    pub fn is_nominal(&self) -> bool {
        self.spec.is_nominal()
    }

    /// Whether delay jitter is active.
    #[must_use]
    pub fn has_delay_jitter(&self) -> bool {
        self.spec.delay_jitter.is_some()
    }

    /// Whether rate noise is active.
    #[must_use]
    pub fn has_rate_noise(&self) -> bool {
        self.spec.rate_noise.is_some()
    }
}

// =========================================================================
// Tests
// =========================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_bands_and_noise() {
        let bad_band = NoiseSpec {
            delay_jitter: Some((0.6, 0.4)),
            rate_noise: None,
        };
        assert!(bad_band.validate().is_err(), "d1 > d2 must fail");

        let zero_lo = NoiseSpec {
            delay_jitter: Some((0.0, 0.4)),
            rate_noise: None,
        };
        assert!(zero_lo.validate().is_err(), "d1 = 0 must fail");

        let bad_bound = NoiseSpec {
            delay_jitter: None,
            rate_noise: Some(RateNoise { std: 0.1, bound: 0.0 }),
        };
        assert!(bad_bound.validate().is_err(), "bound = 0 must fail");

        assert!(NoiseSpec::NONE.validate().is_ok());
    }

    #[test]
    fn nominal_sampler_consumes_no_randomness() {
        let mut s = NoiseSampler::new(NoiseSpec::NONE, 7).unwrap();
        assert_eq!(s.draw_delay(0.5), 0.5, "no jitter returns nominal d");
        assert_eq!(s.draw_rate_offset(), 0.0, "no rate noise returns zero");
        // Two nominal samplers with different seeds behave identically.
        let mut t = NoiseSampler::new(NoiseSpec::NONE, 12345).unwrap();
        assert_eq!(s.draw_delay(0.3), t.draw_delay(0.3));
    }

    #[test]
    fn delay_draws_stay_inside_the_band() {
        let spec = NoiseSpec {
            delay_jitter: Some((0.49, 0.51)),
            rate_noise: None,
        };
        let mut s = NoiseSampler::new(spec, 42).unwrap();
        for _ in 0..1000 {
            let v = s.draw_delay(0.5);
            assert!((0.49..=0.51).contains(&v), "draw {v} left band");
        }
    }

    #[test]
    fn rate_draws_respect_the_truncation_bound() {
        let spec = NoiseSpec {
            delay_jitter: None,
            rate_noise: Some(RateNoise { std: 0.2, bound: 0.1 }),
        };
        let mut s = NoiseSampler::new(spec, 42).unwrap();
        // std > bound forces frequent rejections; every accepted draw must
        // still lie strictly inside the bound.
        for _ in 0..1000 {
            let v = s.draw_rate_offset();
            assert!(v.abs() < 0.1, "draw {v} escaped truncation bound");
        }
    }

    #[test]
    fn same_seed_reproduces_the_draw_stream() {
        let spec = NoiseSpec {
            delay_jitter: Some((0.4, 0.6)),
            rate_noise: Some(RateNoise { std: 0.05, bound: 0.2 }),
        };
        let mut a = NoiseSampler::new(spec, 99).unwrap();
        let mut b = NoiseSampler::new(spec, 99).unwrap();
        for _ in 0..100 {
            assert_eq!(a.draw_delay(0.5), b.draw_delay(0.5));
            assert_eq!(a.draw_rate_offset(), b.draw_rate_offset());
        }
    }

    #[test]
    fn noise_model_round_trips_through_json() {
        let m = NoiseModel {
            delay_jitter: Some([0.49, 0.51]),
            rate_noise: Some(RateNoise { std: 0.06, bound: 0.3 }),
            seed: 17,
        };
        let text = serde_json::to_string(&m).unwrap();
        let back: NoiseModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
