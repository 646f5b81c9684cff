//! Command-line front end: `eval-x`, `solve`, `oracle` and `verify`.
//!
//! Exit codes: 0 on success, 1 on a numerical or verification failure, 2 on
//! a configuration problem (unreadable file, parse error, invalid values).

use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, OutputMode, RunConfig};
use crate::delayed::DelayedPerturbation;
use crate::error::Error;
use crate::oracle::oracle_solve;
use crate::solver::{Solver, Trajectory};
use crate::verify::run_verification;

#[derive(Debug, Parser)]
#[command(name = "fracdelay", version, about = "Linear fractional delay equations via delayed Mittag-Leffler matrix functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Override `numerics.series_tol`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Override `numerics.mesh`.
    #[arg(long, global = true)]
    pub mesh: Option<f64>,

    /// Override `numerics.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate X_{h,α,β}(t) at a list of times.
    EvalX {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated times, e.g. `-0.5,0,1.25`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        times: Vec<f64>,
    },
    /// Closed-form solution on `[-h, T]`.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Destination CSV; falls back to `output.path`, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// L1 time-stepping solution, resampled on the output mesh.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit the oracle's own grid instead of the output mesh.
        #[arg(long)]
        raw: bool,
    },
    /// Run the verification suite and print the report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Treat skipped checks as failures.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Math(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Loads the config named on the command line and applies the global overrides.
pub fn load_config(path: &Path, cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(tol) = cli.tol {
        cfg.numerics.series_tol = tol;
    }
    if let Some(mesh) = cli.mesh {
        cfg.numerics.mesh = mesh;
    }
    if let Some(seed) = cli.seed {
        cfg.numerics.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Executes a parsed command; report and CSV text go to `stdout` unless a file
/// destination applies.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::EvalX { config, times } => {
            let cfg = load_config(config, cli)?;
            let p = &cfg.problem;
            let x = DelayedPerturbation::new(cfg.a()?, cfg.b()?, p.h, p.alpha, cfg.series()?)?;
            let n = x.n();
            let mut header = vec!["t".to_string()];
            for i in 1..=n {
                for j in 1..=n {
                    header.push(format!("entry_{i}_{j}"));
                }
            }
            let mut rows = Vec::with_capacity(times.len());
            for &t in times {
                let m = x.eval(p.beta, t).map_err(|e| e.at(t))?;
                rows.push((t, m.as_slice().to_vec()));
            }
            write_csv(stdout, None, OutputMode::Overwrite, &header, &rows)
        }
        Command::Solve { config, out } => {
            let cfg = load_config(config, cli)?;
            let spec = cfg.to_problem()?;
            let solver = Solver::new(&spec, cfg.quadrature(), cfg.series()?)?;
            let traj = solver.trajectory(cfg.numerics.mesh)?;
            emit_trajectory(stdout, &cfg, out.as_deref(), &traj)
        }
        Command::Oracle { config, out, raw } => {
            let cfg = load_config(config, cli)?;
            let spec = cfg.to_problem()?;
            let grid = oracle_solve(&spec, &cfg.oracle())?;
            let traj = if *raw {
                grid
            } else {
                // same sample times as `solve`, with exact history rows
                let times = output_times(spec.h, spec.t_end, cfg.numerics.mesh);
                let values = times
                    .iter()
                    .map(|&t| {
                        if t <= 0.0 {
                            Ok((spec.history)(t))
                        } else {
                            grid.interpolate(t)
                                .ok_or_else(|| Error::InvalidArgument(format!("t = {t} outside the oracle grid")))
                        }
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                Trajectory {
                    times,
                    values,
                    meta: grid.meta.clone(),
                }
            };
            emit_trajectory(stdout, &cfg, out.as_deref(), &traj)
        }
        Command::Verify { config, strict } => {
            let cfg = load_config(config, cli)?;
            let report = run_verification(&cfg)?;
            stdout
                .write_all(report.render().as_bytes())
                .map_err(|source| CliError::Output {
                    path: "<stdout>".into(),
                    source,
                })?;
            if report.passed(*strict) {
                Ok(())
            } else {
                Err(CliError::VerificationFailed)
            }
        }
    }
}

/// Sample times of a solution on `[-h, T]` at spacing at most `mesh`.
pub fn output_times(h: f64, t_end: f64, mesh: f64) -> Vec<f64> {
    let hist = (h / mesh - 1e-9).ceil() as usize;
    let steps = (t_end / mesh - 1e-9).ceil() as usize;
    let mut times: Vec<f64> = (0..hist).map(|k| -h + h * k as f64 / hist as f64).collect();
    times.push(0.0);
    times.extend((1..=steps).map(|k| t_end * k as f64 / steps as f64));
    times
}

fn emit_trajectory(stdout: &mut dyn Write, cfg: &RunConfig, out: Option<&Path>, traj: &Trajectory) -> Result<(), CliError> {
    let n = traj.values.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("y_{i}")));
    let rows: Vec<(f64, Vec<f64>)> = traj.times.iter().copied().zip(traj.values.iter().cloned()).collect();
    let dest = out.map(Path::to_path_buf).or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    write_csv(stdout, dest.as_deref(), cfg.output.mode, &header, &rows)
}

/// 17 significant digits; negative zero is printed as zero.
pub fn format_number(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn write_csv(
    stdout: &mut dyn Write,
    dest: Option<&Path>,
    mode: OutputMode,
    header: &[String],
    rows: &[(f64, Vec<f64>)],
) -> Result<(), CliError> {
    let name = dest.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string());
    let io_err = |source: io::Error| CliError::Output {
        path: name.clone(),
        source,
    };
    let sink: Box<dyn Write + '_> = match dest {
        Some(path) => {
            let mut opts = OpenOptions::new();
            opts.write(true);
            match mode {
                OutputMode::Overwrite => opts.create(true).truncate(true),
                OutputMode::CreateNew => opts.create_new(true),
            };
            Box::new(io::BufWriter::new(opts.open(path).map_err(io_err)?))
        }
        None => Box::new(&mut *stdout),
    };
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(source),
        other => io_err(io::Error::other(format!("{other:?}"))),
    };
    w.write_record(header).map_err(csv_err)?;
    for (t, v) in rows {
        let record = std::iter::once(format_number(*t)).chain(v.iter().map(|&x| format_number(x)));
        w.write_record(record).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(-0.0), "0.0000000000000000e0");
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn times_parse_with_negatives() {
        let cli = Cli::try_parse_from(["fracdelay", "eval-x", "--config", "c.toml", "--times", "-0.5,0,1.25"]).unwrap();
        match cli.command {
            Command::EvalX { times, .. } => assert_eq!(times, vec![-0.5, 0.0, 1.25]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn global_overrides_after_subcommand() {
        let cli = Cli::try_parse_from(["fracdelay", "verify", "--config", "c.toml", "--seed", "7", "--strict"]).unwrap();
        assert_eq!(cli.seed, Some(7));
        assert!(matches!(cli.command, Command::Verify { strict: true, .. }));
    }

    #[test]
    fn output_times_match_solver_mesh() {
        let t = output_times(1.0, 2.0, 0.25);
        assert_eq!(t.first(), Some(&-1.0));
        assert_eq!(t.len(), 4 + 1 + 8);
        assert!(t.contains(&0.0) && t.last() == Some(&2.0));
    }
}
