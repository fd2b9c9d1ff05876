//! Trajectory records and their CSV serialization.
//!
//! A trajectory is the sampled output of one run of the hybrid simulation:
//! a sequence of rows indexed by hybrid time `(t, j)` where `t` is physical
//! time and `j` counts events so far. For every inter-event flow interval
//! the engine emits three interior samples (at 1/4, 1/2, 3/4 of the
//! interval), one pre-event row, and one post-event row; pre and post rows
//! share `t` and differ in `j` by one, which is how readers re-identify the
//! events.
//!
//! Column contracts (header spellings are part of the file format):
//!
//! ```text
//! sender/receiver pair:
//!   t,j,p,q,tau,tau_i,tau_k,a_i,a_k,eps_tau,eps_a,V
//! one sender, N receivers:
//!   t,j,p,q,active,tau,tau_R,tau_S_1..tau_S_N,
//!                      eps_tau_1..eps_tau_N,eps_a_1..eps_a_N,V
//! ```
//!
//! Numbers are written with Rust's shortest round-trip `f64` formatting, so
//! reading a file back reproduces the exact bit patterns and rewriting it
//! reproduces the exact bytes. The `V` column holds the Lyapunov value when
//! a certificate was attached to the run and is empty otherwise.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

// =========================================================================
// Sender/receiver pair trajectories
// =========================================================================

/// Header of the pair-trajectory CSV format.
pub const PAIR_HEADER: [&str; 12] = [
    "t", "j", "p", "q", "tau", "tau_i", "tau_k", "a_i", "a_k", "eps_tau", "eps_a", "V",
];

/// One sampled row of a pair run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    /// Physical time.
    pub t: f64,
    /// Number of events that have occurred.
    pub j: u64,
    /// Event counter 0..=5 of the state at this row.
    pub p: u8,
    /// Mode bit: 1 while a message is in flight, 0 during residence.
    pub q: u8,
    /// Countdown timer to the next event.
    pub tau: f64,
    /// Sender clock.
    pub tau_i: f64,
    /// Receiver clock.
    pub tau_k: f64,
    /// Stored sender rate.
    pub a_i: f64,
    /// Stored receiver rate.
    pub a_k: f64,
    /// Clock offset `tau_i - tau_k`.
    pub eps_tau: f64,
    /// Rate mismatch `a_i - a_k`.
    pub eps_a: f64,
    /// Lyapunov value, when a certificate was attached.
    pub v: Option<f64>,
}

/// A full sampled pair run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// An empty trajectory.
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of rows.
    #[must_use]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when no rows were recorded.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Indices `(pre, post)` of consecutive rows that bracket an event:
    /// equal `t`, `j` incremented by one.
    #[must_use]
    pub fn event_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for w in 0..self.samples.len().saturating_sub(1) {
            let (a, b) = (&self.samples[w], &self.samples[w + 1]);
            if b.j == a.j + 1 {
                out.push((w, w + 1));
            }
        }
        out
    }

    /// Serializes to CSV bytes.
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(PAIR_HEADER)?;
        for s in &self.samples {
            w.write_record([
                fmt_f64(s.t),
                s.j.to_string(),
                s.p.to_string(),
                s.q.to_string(),
                fmt_f64(s.tau),
                fmt_f64(s.tau_i),
                fmt_f64(s.tau_k),
                fmt_f64(s.a_i),
                fmt_f64(s.a_k),
                fmt_f64(s.eps_tau),
                fmt_f64(s.eps_a),
                fmt_opt(s.v),
            ])?;
        }
        Ok(w.into_inner().expect("writing to Vec cannot fail"))
    }

    /// Writes the CSV file at `path`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.to_csv_bytes()?;
        File::create(path)?.write_all(&bytes)?;
        Ok(())
    }

    /// Parses CSV bytes produced by [`Trajectory::to_csv_bytes`].
    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        check_header(r.headers()?, &PAIR_HEADER)?;
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != PAIR_HEADER.len() {
                return Err(bad_row(&rec));
            }
            samples.push(Sample {
                t: parse_f64(&rec, 0)?,
                j: parse_u64(&rec, 1)?,
                p: parse_u8(&rec, 2)?,
                q: parse_u8(&rec, 3)?,
                tau: parse_f64(&rec, 4)?,
                tau_i: parse_f64(&rec, 5)?,
                tau_k: parse_f64(&rec, 6)?,
                a_i: parse_f64(&rec, 7)?,
                a_k: parse_f64(&rec, 8)?,
                eps_tau: parse_f64(&rec, 9)?,
                eps_a: parse_f64(&rec, 10)?,
                v: parse_opt(&rec, 11)?,
            });
        }
        Ok(Self { samples })
    }

    /// Reads the CSV file at `path`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_csv_bytes(&bytes)
    }
}

// =========================================================================
// One-sender-N-receiver trajectories
// =========================================================================

/// One sampled row of a multi-receiver run.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSample {
    pub t: f64,
    pub j: u64,
    pub p: u8,
    pub q: u8,
    /// Index of the receiver currently engaged in an exchange.
    pub active: usize,
    pub tau: f64,
    /// Sender clock.
    pub tau_r: f64,
    /// Receiver clocks, index 0..N.
    pub tau_s: Vec<f64>,
    /// Per-receiver clock offsets `tau_r - tau_s[l]`.
    pub eps_tau: Vec<f64>,
    /// Per-receiver rate mismatches `a_r - a_s[l]`.
    pub eps_a: Vec<f64>,
    /// Summed Lyapunov value, when a certificate was attached.
    pub v: Option<f64>,
}

/// A full sampled multi-receiver run.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiTrajectory {
    /// Number of receivers.
    pub n: usize,
    pub samples: Vec<MultiSample>,
}

/// Builds the multi-trajectory header for `n` receivers.
#[must_use]
pub fn multi_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "j", "p", "q", "active", "tau", "tau_R"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for l in 1..=n {
        h.push(format!("tau_S_{l}"));
    }
    for l in 1..=n {
        h.push(format!("eps_tau_{l}"));
    }
    for l in 1..=n {
        h.push(format!("eps_a_{l}"));
    }
    h.push("V".to_string());
    h
}

impl MultiTrajectory {
    /// An empty trajectory for `n` receivers.
    #[must_use]
    pub fn new(n: usize) -> Self {
        Self { n, samples: Vec::new() }
    }

    /// Number of rows.
    #[must_use]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when no rows were recorded.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Serializes to CSV bytes.
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(multi_header(self.n))?;
        for s in &self.samples {
            let mut rec: Vec<String> = vec![
                fmt_f64(s.t),
                s.j.to_string(),
                s.p.to_string(),
                s.q.to_string(),
                s.active.to_string(),
                fmt_f64(s.tau),
                fmt_f64(s.tau_r),
            ];
            rec.extend(s.tau_s.iter().map(|v| fmt_f64(*v)));
            rec.extend(s.eps_tau.iter().map(|v| fmt_f64(*v)));
            rec.extend(s.eps_a.iter().map(|v| fmt_f64(*v)));
            rec.push(fmt_opt(s.v));
            w.write_record(&rec)?;
        }
        Ok(w.into_inner().expect("writing to Vec cannot fail"))
    }

    /// Writes the CSV file at `path`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.to_csv_bytes()?;
        File::create(path)?.write_all(&bytes)?;
        Ok(())
    }

    /// Parses CSV bytes produced by [`MultiTrajectory::to_csv_bytes`].
    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let headers = r.headers()?.clone();
        let n = multi_receiver_count(&headers).ok_or_else(|| {
            Error::VerifyInputMismatch(
                "csv header does not match the multi-trajectory layout".to_string(),
            )
        })?;
        let expected = multi_header(n);
        check_header(&headers, &expected.iter().map(String::as_str).collect::<Vec<_>>())?;
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != expected.len() {
                return Err(bad_row(&rec));
            }
            let base = 7;
            samples.push(MultiSample {
                t: parse_f64(&rec, 0)?,
                j: parse_u64(&rec, 1)?,
                p: parse_u8(&rec, 2)?,
                q: parse_u8(&rec, 3)?,
                active: parse_u64(&rec, 4)? as usize,
                tau: parse_f64(&rec, 5)?,
                tau_r: parse_f64(&rec, 6)?,
                tau_s: parse_f64_run(&rec, base, n)?,
                eps_tau: parse_f64_run(&rec, base + n, n)?,
                eps_a: parse_f64_run(&rec, base + 2 * n, n)?,
                v: parse_opt(&rec, base + 3 * n)?,
            });
        }
        Ok(Self { n, samples })
    }

    /// Reads the CSV file at `path`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_csv_bytes(&bytes)
    }
}

/// Receiver count implied by a multi-trajectory header, or None when the
/// header is not in the multi layout.
#[must_use]
fn multi_receiver_count(headers: &csv::StringRecord) -> Option<usize> {
    // Layout: 7 fixed + 3n per-receiver + V  ->  len = 8 + 3n.
    let len = headers.len();
    if len < 11 || !(len - 8).is_multiple_of(3) {
        return None;
    }
    if headers.get(4) != Some("active") {
        return None;
    }
    Some((len - 8) / 3)
}

// =========================================================================
// Either layout
// =========================================================================

/// A trajectory file of either layout.
#[derive(Clone, Debug, PartialEq)]
pub enum TrajectoryFile {
    Pair(Trajectory),
    Multi(MultiTrajectory),
}

/// Reads a trajectory file, detecting the layout from its header.
pub fn read_trajectory_file(path: impl AsRef<Path>) -> Result<TrajectoryFile> {
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let headers = r.headers()?;
    if headers.iter().eq(PAIR_HEADER) {
        Ok(TrajectoryFile::Pair(Trajectory::from_csv_bytes(&bytes)?))
    } else if multi_receiver_count(headers).is_some() {
        Ok(TrajectoryFile::Multi(MultiTrajectory::from_csv_bytes(&bytes)?))
    } else {
        Err(Error::VerifyInputMismatch(format!(
            "unrecognized trajectory header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )))
    }
}

// =========================================================================
// Field formatting and parsing
// =========================================================================

/// Shortest round-trip decimal form of an `f64`.
#[must_use]
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn check_header(got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if !got.iter().eq(want.iter().copied()) {
        return Err(Error::VerifyInputMismatch(format!(
            "csv header mismatch: expected `{}`, found `{}`",
            want.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn bad_row(rec: &csv::StringRecord) -> Error {
    Error::VerifyInputMismatch(format!(
        "csv row has {} fields, which does not match the header",
        rec.len()
    ))
}

fn field(rec: &csv::StringRecord, idx: usize) -> Result<&str> {
    rec.get(idx)
        .ok_or_else(|| Error::VerifyInputMismatch(format!("missing csv field {idx}")))
}

fn parse_f64(rec: &csv::StringRecord, idx: usize) -> Result<f64> {
    let s = field(rec, idx)?;
    s.parse::<f64>().map_err(|e| {
        Error::VerifyInputMismatch(format!("bad float `{s}` in csv field {idx}: {e}"))
    })
}

fn parse_f64_run(rec: &csv::StringRecord, start: usize, n: usize) -> Result<Vec<f64>> {
    (start..start + n).map(|i| parse_f64(rec, i)).collect()
}

fn parse_u64(rec: &csv::StringRecord, idx: usize) -> Result<u64> {
    let s = field(rec, idx)?;
    s.parse::<u64>().map_err(|e| {
        Error::VerifyInputMismatch(format!("bad integer `{s}` in csv field {idx}: {e}"))
    })
}

fn parse_u8(rec: &csv::StringRecord, idx: usize) -> Result<u8> {
    let s = field(rec, idx)?;
    s.parse::<u8>().map_err(|e| {
        Error::VerifyInputMismatch(format!("bad integer `{s}` in csv field {idx}: {e}"))
    })
}

fn parse_opt(rec: &csv::StringRecord, idx: usize) -> Result<Option<f64>> {
    let s = field(rec, idx)?;
    if s.is_empty() {
        Ok(None)
    } else {
        Ok(Some(parse_f64(rec, idx)?))
    }
}

// =========================================================================
// Tests
// =========================================================================
