//! Command-line front end: `check`, `scan` and `simulate`.
//!
//! Exit codes: 0 success (or oscillatory for `check`), 3 inconclusive, 1 any
//! input or I/O error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::load_equation;
use crate::criteria::{check_all, limsup_profile, CheckOptions, Overall, DEFAULT_LIMSUP_GRID};
use crate::error::{Error, Result};
use crate::kernel::{IntegralKind, Kernel, DEFAULT_TOL};
use crate::sim::{integrate, History};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dde-osc", version, about = "Oscillation criteria for periodic linear delay equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every criterion and print a JSON report.
    Check {
        config: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=crate::kernel::MAX_DEPTH as u64))]
        r: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Grid points per period for the limsup scans.
        #[arg(long, default_value_t = DEFAULT_LIMSUP_GRID)]
        grid: usize,
    },
    /// Write the F profile over one steady-state period as CSV.
    Scan {
        config: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=crate::kernel::MAX_DEPTH as u64))]
        r: u64,
        #[arg(long, default_value_t = IntegralKind::Inner)]
        kind: IntegralKind,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_LIMSUP_GRID)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the equation and write the trajectory as CSV.
    Simulate {
        config: PathBuf,
        /// const:C, exp:MU or file:PATH (CSV rows `t,x`).
        #[arg(long, default_value = "const:1")]
        history: HistorySpec,
        #[arg(long, default_value_t = 150.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum HistorySpec {
    Constant(f64),
    Exponential(f64),
    File(PathBuf),
}

impl FromStr for HistorySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("expected const:C, exp:MU or file:PATH, got {s:?}"))?;
        let number = || {
            arg.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{arg:?} is not a finite number"))
        };
        match kind {
            "const" => number().map(HistorySpec::Constant),
            "exp" => number().map(HistorySpec::Exponential),
            "file" if !arg.is_empty() => Ok(HistorySpec::File(arg.into())),
            _ => Err(format!("unknown history {s:?}; expected const:C, exp:MU or file:PATH")),
        }
    }
}

impl HistorySpec {
    pub fn load(&self) -> Result<History> {
        match self {
            HistorySpec::Constant(c) => Ok(History::Constant(*c)),
            HistorySpec::Exponential(mu) => Ok(History::Exponential(*mu)),
            HistorySpec::File(path) => History::tabulated(read_samples(path)?),
        }
    }
}

fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let pair = (cols.next(), cols.next(), cols.next());
        let parsed = match pair {
            (Some(t), Some(x), None) => t.parse::<f64>().ok().zip(x.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => out.push(p),
            // a header row is allowed
            None if out.is_empty() && n == 0 => {}
            None => {
                return Err(Error::InvalidEquation(format!(
                    "{}: line {}: expected `t,x`",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    Ok(out)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct ScanSummary {
    kind: IntegralKind,
    r: usize,
    rows: usize,
    scan_start: f64,
    max: f64,
    argmax_mod_period: f64,
    out: String,
}

#[derive(Serialize)]
struct SimulateSummary {
    sign_changes: usize,
    first_sign_change: Option<f64>,
    t_end: f64,
    step: f64,
    out: String,
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())))
    })
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T, pretty: bool) -> Result<()> {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("report serializes");
    writeln!(out, "{text}")?;
    Ok(())
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Check { config, r, tol, grid } => {
            let eq = load_equation(&config)?;
            let opts = CheckOptions {
                r: r as usize,
                tol,
                limsup_grid: grid,
                ..CheckOptions::default()
            };
            let report = check_all(&eq, &opts)?;
            json_line(stdout, &report, true)?;
            Ok(match report.overall {
                Overall::Oscillatory => EXIT_OK,
                Overall::Inconclusive => EXIT_INCONCLUSIVE,
            })
        }
        Command::Scan { config, r, kind, tol, grid, out } => {
            let eq = load_equation(&config)?;
            let kernel = Kernel::new(&eq, tol)?;
            let profile = limsup_profile(&kernel, r as usize, kind, grid)?;
            let period = eq.period();
            let start = profile.times[0];
            let mut csv = String::from("t,F\n");
            for (&t, &v) in profile.times.iter().zip(&profile.values) {
                // start is a whole number of periods, so this stays monotone
                let _ = writeln!(csv, "{},{}", num((t - start).rem_euclid(period)), num(v));
            }
            write_file(&out, &csv)?;
            let summary = ScanSummary {
                kind,
                r: r as usize,
                rows: profile.times.len(),
                scan_start: start,
                max: profile.max.value,
                argmax_mod_period: profile.max.at.rem_euclid(period),
                out: out.display().to_string(),
            };
            json_line(stdout, &summary, false)?;
            Ok(EXIT_OK)
        }
        Command::Simulate { config, history, t_end, step, out } => {
            let eq = load_equation(&config)?;
            let history = history.load()?;
            let traj = integrate(&eq, &history, t_end, step)?;
            let mut csv = String::with_capacity(48 * traj.times().len() + 4);
            csv.push_str("t,x\n");
            for (&t, &x) in traj.times().iter().zip(traj.values()) {
                let _ = writeln!(csv, "{},{}", num(t), num(x));
            }
            write_file(&out, &csv)?;
            let summary = SimulateSummary {
                sign_changes: traj.sign_changes().len(),
                first_sign_change: traj.first_sign_change(),
                t_end: traj.end(),
                step,
                out: out.display().to_string(),
            };
            json_line(stdout, &summary, false)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_ERROR
                }
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
