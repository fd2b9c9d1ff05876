//! Scenario configuration: JSON schema, parsing, validation, defaults.
//!
//! A scenario file is a flat JSON object. Two topologies share the schema;
//! each uses its own initial-state fields:
//!
//! ```text
//! {
//!   "topology": "two_agent",            or "multi_agent"
//!   "a_i": 1.0, "a_k": 1.8,             pair rates
//!   "tau_i0": 2.5, "tau_k0": 0.0,       pair initial clocks
//!   "n": 2,                             multi: receiver count
//!   "a_r": 1.0, "a_s": [..],            multi rates
//!   "tau_r0": 0.3, "tau_s0": [..],      multi initial clocks
//!   "c": 0.1, "d": 0.2, "mu": 0.833,
//!   "horizon": {"t_max": 30.0, "j_max": 600},        optional
//!   "noise": {"delay_jitter": [d1, d2],
//!             "rate_noise": {"std": s, "bound": b},
//!             "seed": 7},                            optional
//!   "certificate": "cert.json",                      optional path
//!   "output": "trajectory.csv"                       optional path
//! }
//! ```
//!
//! Defaults: no noise, seed 0, `t_max` unbounded, `j_max = 600`. Paths are
//! used as given (relative paths resolve against the working directory).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::Horizon;
use crate::error::{Error, Result};
use crate::error_model::SyncParams;
use crate::noise::NoiseModel;

/// Which simulation topology a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    TwoAgent,
    MultiAgent,
}

/// Optional horizon section; missing fields fall back to the defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<u64>,
}

impl HorizonConfig {
    /// The engine horizon this section denotes.
    #[must_use]
    pub fn to_horizon(&self) -> Horizon {
        Horizon {
            t_max: self.t_max.unwrap_or(f64::INFINITY),
            j_max: self.j_max.unwrap_or(Horizon::DEFAULT_J_MAX),
        }
    }
}

/// A parsed scenario configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: Topology,
    // Pair topology fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_i0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_k0: Option<f64>,
    // Multi topology fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s0: Option<Vec<f64>>,
    // Shared parameters.
    pub c: f64,
    pub d: f64,
    pub mu: f64,
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    /// The validated parameter triple.
    pub fn params(&self) -> Result<SyncParams> {
        SyncParams::new(self.c, self.d, self.mu)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Full validation of parameters, topology fields, horizon, and noise.
    pub fn validate(&self) -> Result<()> {
        // Delay ordering first, with the canonical message.
        if self.c > self.d {
            return Err(Error::ConfigInvalid("c \u{2264} d violated".to_string()));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "c = {} must be finite and > 0",
                self.c
            )));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "d = {} must be finite and > 0",
                self.d
            )));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "mu = {} must be finite and > 0",
                self.mu
            )));
        }
        self.validate_topology_fields()?;
        self.validate_horizon()?;
        self.validate_noise()?;
        Ok(())
    }

    fn validate_topology_fields(&self) -> Result<()> {
        let require = |name: &str, v: Option<f64>| -> Result<f64> {
            v.ok_or_else(|| Error::ConfigInvalid(format!("missing field `{name}`")))
        };
        let rate = |name: &str, v: f64| -> Result<()> {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ConfigInvalid(format!(
                    "{name} = {v} must be finite and > 0"
                )));
            }
            Ok(())
        };
        match self.topology {
            Topology::TwoAgent => {
                rate("a_i", require("a_i", self.a_i)?)?;
                rate("a_k", require("a_k", self.a_k)?)?;
                require("tau_i0", self.tau_i0)?;
                require("tau_k0", self.tau_k0)?;
                for name in ["n", "a_r", "tau_r0"] {
                    let set = match name {
                        "n" => self.n.is_some(),
                        "a_r" => self.a_r.is_some() || self.a_s.is_some(),
                        _ => self.tau_r0.is_some() || self.tau_s0.is_some(),
                    };
                    if set {
                        return Err(Error::ConfigInvalid(format!(
                            "field `{name}` is only valid for the multi_agent topology"
                        )));
                    }
                }
            }
            Topology::MultiAgent => {
                let n = self
                    .n
                    .ok_or_else(|| Error::ConfigInvalid("missing field `n`".to_string()))?;
                if n == 0 {
                    return Err(Error::ConfigInvalid("n must be >= 1".to_string()));
                }
                rate("a_r", require("a_r", self.a_r)?)?;
                require("tau_r0", self.tau_r0)?;
                let a_s = self
                    .a_s
                    .as_ref()
                    .ok_or_else(|| Error::ConfigInvalid("missing field `a_s`".to_string()))?;
                let tau_s0 = self
                    .tau_s0
                    .as_ref()
                    .ok_or_else(|| Error::ConfigInvalid("missing field `tau_s0`".to_string()))?;
                if a_s.len() != n || tau_s0.len() != n {
                    return Err(Error::ConfigInvalid(format!(
                        "a_s has {} entries and tau_s0 has {}, expected n = {n}",
                        a_s.len(),
                        tau_s0.len()
                    )));
                }
                for (l, v) in a_s.iter().enumerate() {
                    rate(&format!("a_s[{l}]"), *v)?;
                }
                if self.a_i.is_some()
                    || self.a_k.is_some()
                    || self.tau_i0.is_some()
                    || self.tau_k0.is_some()
                {
                    return Err(Error::ConfigInvalid(
                        "pair fields (a_i, a_k, tau_i0, tau_k0) are only valid for the \
                         two_agent topology"
                            .to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_horizon(&self) -> Result<()> {
        if let Some(t_max) = self.horizon.t_max {
            if t_max.is_nan() || t_max <= 0.0 {
                return Err(Error::ConfigInvalid(format!(
                    "horizon.t_max = {t_max} must be > 0"
                )));
            }
        }
        if let Some(j_max) = self.horizon.j_max {
            if j_max == 0 {
                return Err(Error::ConfigInvalid("horizon.j_max must be >= 1".to_string()));
            }
        }
        Ok(())
    }

    fn validate_noise(&self) -> Result<()> {
        self.noise.spec().validate()?;
        // The jitter band must bracket the nominal propagation delay.
        if let Some([d1, d2]) = self.noise.delay_jitter {
            if !(d1 <= self.d && self.d <= d2) {
                return Err(Error::ConfigInvalid(format!(
                    "delay_jitter = [{d1}, {d2}] must bracket d = {}",
                    self.d
                )));
            }
        }
        Ok(())
    }
}

/// Reads and validates a scenario configuration from a JSON file.
///
/// Missing or empty files are I/O errors; malformed JSON and out-of-range
/// fields are [`Error::ConfigInvalid`].
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path.as_ref())?;
    if text.trim().is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("config file {} is empty", path.as_ref().display()),
        )));
    }
    let cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| Error::ConfigInvalid(format!("malformed config JSON: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

// =========================================================================
// Tests
// =========================================================================

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_json() -> String {
        r#"{
            "topology": "two_agent",
            "a_i": 1.0, "a_k": 1.8,
            "tau_i0": 2.5, "tau_k0": 0.0,
            "c": 0.1, "d": 0.2, "mu": 0.833
        }"#
        .to_string()
    }

    fn write_temp(name: &str, contents: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("lockstep-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn parses_the_reference_pair_config_with_defaults() {
        let path = write_temp("pair.json", &pair_json());
        let cfg = parse_config(&path).unwrap();
        assert_eq!(cfg.topology, Topology::TwoAgent);
        assert_eq!((cfg.a_i, cfg.a_k), (Some(1.0), Some(1.8)));
        let horizon = cfg.horizon.to_horizon();
        assert_eq!(horizon.j_max, 600, "default event budget");
        assert!(horizon.t_max.is_infinite(), "default time budget unbounded");
        assert!(cfg.noise.spec().is_nominal(), "default is noise-free");
        assert_eq!(cfg.noise.seed, 0, "default seed");
    }

    #[test]
    fn delay_ordering_violation_has_the_canonical_message() {
        let text = pair_json().replace("\"c\": 0.1, \"d\": 0.2", "\"c\": 0.3, \"d\": 0.2");
        let path = write_temp("swapped.json", &text);
        let err = parse_config(&path).unwrap_err();
        match err {
            Error::ConfigInvalid(msg) => assert_eq!(msg, "c \u{2264} d violated"),
            other => panic!("expected ConfigInvalid, got {other}"),
        }
    }

    #[test]
    fn missing_and_empty_files_are_io_errors() {
        assert!(matches!(
            parse_config("/nonexistent/scenario.json"),
            Err(Error::Io(_))
        ));
        let path = write_temp("empty.json", "  \n");
        assert!(matches!(parse_config(&path), Err(Error::Io(_))));
    }

    #[test]
    fn malformed_json_and_bad_gain_are_config_errors() {
        let path = write_temp("broken.json", "{ not json");
        assert!(matches!(parse_config(&path), Err(Error::ConfigInvalid(_))));

        let text = pair_json().replace("\"mu\": 0.833", "\"mu\": 0.0");
        let path = write_temp("zero-mu.json", &text);
        let err = parse_config(&path).unwrap_err();
        assert!(
            matches!(&err, Error::ConfigInvalid(msg) if msg.contains("mu")),
            "message must name the field, got {err}"
        );
    }

    #[test]
    fn multi_config_requires_matching_lengths() {
        let text = r#"{
            "topology": "multi_agent",
            "n": 2,
            "a_r": 1.0, "a_s": [0.62],
            "tau_r0": 0.3, "tau_s0": [1.7, -0.9],
            "c": 0.1, "d": 0.2, "mu": 0.833
        }"#;
        let path = write_temp("multi-short.json", text);
        let err = parse_config(&path).unwrap_err();
        assert!(matches!(&err, Error::ConfigInvalid(msg) if msg.contains("a_s")));
    }

    #[test]
    fn topology_fields_must_not_mix() {
        let text = pair_json().replace("\"a_i\": 1.0,", "\"a_i\": 1.0, \"n\": 2,");
        let path = write_temp("mixed.json", &text);
        let err = parse_config(&path).unwrap_err();
        assert!(matches!(&err, Error::ConfigInvalid(msg) if msg.contains('n')));
    }

    #[test]
    fn jitter_band_must_bracket_the_nominal_delay() {
        let text = pair_json().replace(
            "\"mu\": 0.833",
            "\"mu\": 0.833, \"noise\": {\"delay_jitter\": [0.25, 0.3]}",
        );
        let path = write_temp("offband.json", &text);
        let err = parse_config(&path).unwrap_err();
        assert!(matches!(&err, Error::ConfigInvalid(msg) if msg.contains("bracket")));
    }

    #[test]
    fn config_round_trips_through_json() {
        let path = write_temp("pair2.json", &pair_json());
        let cfg = parse_config(&path).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
