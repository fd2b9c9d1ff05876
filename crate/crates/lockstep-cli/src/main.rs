//! `lockstep` — design, simulate, verify, and export clock-sync runs.
//!
//! ```text
//! lockstep design   --c 0.1 --d 0.2 --mu 0.833 -o cert.json
//! lockstep simulate --config scenario.json [--cert cert.json] -o traj.csv
//! lockstep verify   --traj traj.csv --cert cert.json
//! lockstep plot     --traj traj.csv -o prefix
//! ```
//!
//! Exit codes: 0 success; 2 configuration/input error; 3 certificate
//! infeasible; 4 verification failure (an applicable check failed); 1
//! anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lockstep::{
    convergence_factors, convergence_factors_multi, design_p, design_p_multi, emit_plot_data,
    parse_config, run_scenario, verify_trajectory, write_trajectory, Certificate, Error,
    SyncParams, TrajectoryFile, VerificationReport,
};

#[derive(Parser)]
#[command(
    name = "lockstep",
    version,
    about = "Exact simulation and Lyapunov certification of adaptive clock synchronization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a Lyapunov certificate for the given parameters.
    Design {
        /// Residence delay between exchange events (seconds).
        #[arg(long)]
        c: f64,
        /// Nominal propagation delay (seconds).
        #[arg(long)]
        d: f64,
        /// Rate-adaptation gain.
        #[arg(long)]
        mu: f64,
        /// Scale of the prescribed LMI residual (-q_scale * I).
        #[arg(long, default_value_t = 1.0)]
        q_scale: f64,
        /// Certify the multi-receiver cycle map instead of the pair map.
        #[arg(long)]
        multi: bool,
        /// Certificate output path (JSON).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a scenario config, write the trajectory, and report checks.
    Simulate {
        /// Scenario configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Certificate path; overrides the config's `certificate` field.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Trajectory output path; overrides the config's `output` field.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-check a written pair trajectory against a certificate.
    Verify {
        /// Trajectory CSV produced by `simulate`.
        #[arg(long)]
        traj: PathBuf,
        /// Certificate JSON produced by `design`.
        #[arg(long)]
        cert: PathBuf,
    },
    /// Export plot-ready error and Lyapunov series.
    Plot {
        /// Trajectory CSV produced by `simulate` (either layout).
        #[arg(long)]
        traj: PathBuf,
        /// Output prefix: writes <prefix>_errors.csv, <prefix>_lyapunov.csv.
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Design { c, d, mu, q_scale, multi, output } => {
            let params = SyncParams::new(c, d, mu)?;
            let cert = if multi {
                convergence_factors_multi(&design_p_multi(&params, q_scale)?, &params)?
            } else {
                convergence_factors(&design_p(&params, q_scale)?, &params)?
            };
            cert.save(&output)?;
            print_certificate(&cert, &output);
            Ok(0)
        }
        Command::Simulate { config, cert, output } => {
            let mut cfg = parse_config(&config)?;
            if let Some(cert) = cert {
                cfg.certificate = Some(cert);
            }
            if let Some(output) = output {
                cfg.output = Some(output);
            }
            let Some(out_path) = cfg.output.clone() else {
                return Err(Error::ConfigInvalid(
                    "no output path: pass -o or set `output` in the config".to_string(),
                ));
            };
            let (traj, report) = run_scenario(&cfg)?;
            write_trajectory(&traj, &out_path)?;
            let rows = match &traj {
                TrajectoryFile::Pair(t) => t.len(),
                TrajectoryFile::Multi(t) => t.len(),
            };
            println!("wrote {} ({rows} rows)", out_path.display());
            print_report(&report)
        }
        Command::Verify { traj, cert } => {
            let cert = Certificate::load(&cert)?;
            match lockstep::read_trajectory_file(&traj)? {
                TrajectoryFile::Pair(t) => print_report(&verify_trajectory(&t, &cert)?),
                TrajectoryFile::Multi(_) => Err(Error::VerifyInputMismatch(
                    "verify operates on the pair layout; multi-receiver runs are checked \
                     during simulate"
                        .to_string(),
                )),
            }
        }
        Command::Plot { traj, output } => {
            let traj = lockstep::read_trajectory_file(&traj)?;
            emit_plot_data(&traj, &output)?;
            println!(
                "wrote {0}_errors.csv and {0}_lyapunov.csv",
                output.display()
            );
            Ok(0)
        }
    }
}

fn print_certificate(cert: &Certificate, path: &std::path::Path) {
    println!("wrote {}", path.display());
    println!("sigma           {}", cert.sigma);
    println!("alpha1, alpha2  {}, {}", cert.alpha1, cert.alpha2);
    println!("gamma           {}", cert.gamma);
    println!("eta, rho        {}, {}", cert.eta, cert.rho);
    println!("contraction_ok  {}", cert.contraction_ok);
    if !cert.contraction_ok {
        println!("note: the per-event factors do not establish contraction for these parameters");
    }
}

fn print_report(report: &VerificationReport) -> Result<u8, Error> {
    print!("{report}");
    if report.all_applicable_pass() {
        println!("result: all applicable checks pass");
        Ok(0)
    } else {
        println!("result: verification failure");
        Ok(4)
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) | Error::NoCertificate(_) => 3,
        Error::ConfigInvalid(_)
        | Error::VerifyInputMismatch(_)
        | Error::InvalidParams(_)
        | Error::InvalidCertificateInput(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => 2,
        _ => 1,
    }
}
