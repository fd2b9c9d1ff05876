//! Plot-ready CSV exports: error magnitudes and the Lyapunov series.
//!
//! `emit_plot_data` writes two small files next to each other:
//!
//! ```text
//! <prefix>_errors.csv     t,abs_eps_tau,abs_eps_a          (pair)
//!                         t,abs_eps_tau_1,abs_eps_a_1,...  (multi)
//! <prefix>_lyapunov.csv   t,j,V   — only rows that carry a V value
//! ```
//!
//! Both use the same shortest round-trip number format as the trajectory
//! files, so they are grep- and plot-tool friendly. An empty trajectory
//! produces header-only files.

use std::path::Path;

use crate::error::Result;
use crate::trajectory::{fmt_f64, TrajectoryFile};

/// Writes `<prefix>_errors.csv` and `<prefix>_lyapunov.csv`.
pub fn emit_plot_data(traj: &TrajectoryFile, prefix: impl AsRef<Path>) -> Result<()> {
    let prefix = prefix.as_ref();
    let errors_path = sibling(prefix, "_errors.csv");
    let lyapunov_path = sibling(prefix, "_lyapunov.csv");

    let mut errors = csv::Writer::from_path(&errors_path)?;
    let mut lyapunov = csv::Writer::from_path(&lyapunov_path)?;
    lyapunov.write_record(["t", "j", "V"])?;

    match traj {
        TrajectoryFile::Pair(t) => {
            errors.write_record(["t", "abs_eps_tau", "abs_eps_a"])?;
            for s in &t.samples {
                errors.write_record([
                    fmt_f64(s.t),
                    fmt_f64(s.eps_tau.abs()),
                    fmt_f64(s.eps_a.abs()),
                ])?;
                if let Some(v) = s.v {
                    lyapunov.write_record([fmt_f64(s.t), s.j.to_string(), fmt_f64(v)])?;
                }
            }
        }
        TrajectoryFile::Multi(t) => {
            let mut header = vec!["t".to_string()];
            for l in 1..=t.n {
                header.push(format!("abs_eps_tau_{l}"));
                header.push(format!("abs_eps_a_{l}"));
            }
            errors.write_record(&header)?;
            for s in &t.samples {
                let mut rec = vec![fmt_f64(s.t)];
                for l in 0..t.n {
                    rec.push(fmt_f64(s.eps_tau[l].abs()));
                    rec.push(fmt_f64(s.eps_a[l].abs()));
                }
                errors.write_record(&rec)?;
                if let Some(v) = s.v {
                    lyapunov.write_record([fmt_f64(s.t), s.j.to_string(), fmt_f64(v)])?;
                }
            }
        }
    }
    errors.flush()?;
    lyapunov.flush()?;
    Ok(())
}

/// `prefix` + suffix, preserving the directory part of the prefix.
fn sibling(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    std::path::PathBuf::from(name)
}

// =========================================================================
// Tests
// =========================================================================
