//! `sl2c`: evaluate, inspect, verify and fit spherical functions of SL(2,C).
//!
//! Exit codes: 0 pass, 1 tolerance failure, 2 usage error, 3 exceptional
//! parameter, 4 mismatch against the tabulated recursion.

mod commands;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use sl2c_spherical::Error;
use std::io::{self, Write};
use std::process::ExitCode;

/// A command failure mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Exceptional(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::OutOfDomain(_) => Failure::Usage(e.to_string()),
            Error::DegenerateEigenvector { .. }
            | Error::DegenerateDenominator { .. }
            | Error::IntegerTwoP(_)
            | Error::PrintedPole(_)
            | Error::RecursionPole(_)
            | Error::IllConditioned(_)
            | Error::PoleBeforeTermination { .. } => Failure::Exceptional(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Numerical(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Exceptional(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Exceptional(m) | Failure::Numerical(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Residual,
    Limits,
    Connection,
    Oracle,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Residual => "residual",
            Suite::Limits => "limits",
            Suite::Connection => "connection",
            Suite::Oracle => "oracle",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Parse `re[,im]`.
fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    let z = match parts.as_slice() {
        [re] => Complex64::new(num(re)?, 0.0),
        [re, im] => Complex64::new(num(re)?, num(im)?),
        _ => return Err(format!("expected re[,im], got `{s}`")),
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(format!("non-finite value `{s}`"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "sl2c", version, about = "Spherical functions on SL(2,C) of arbitrary K-type")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Spectral {
    /// K-type (dimension ell + 1).
    #[arg(long)]
    ell: usize,
    /// Spectral parameter as re[,im].
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    p: Complex64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate H(t) on a list or range of t.
    Eval {
        #[command(flatten)]
        sp: Spectral,
        #[arg(long)]
        k: usize,
        /// Comma-separated t values in (0, 1).
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["tmin", "tmax", "n"])]
        t: Vec<f64>,
        #[arg(long, requires_all = ["tmax", "n"])]
        tmin: Option<f64>,
        #[arg(long, requires_all = ["tmin", "n"])]
        tmax: Option<f64>,
        #[arg(long, requires_all = ["tmin", "tmax"])]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the metadata of one family.
    Family {
        #[command(flatten)]
        sp: Spectral,
        #[arg(long)]
        k: usize,
    },
    /// Run verification suites; exit 1 when a check exceeds its tolerance.
    Verify {
        #[command(flatten)]
        sp: Spectral,
        /// Single family; all k when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Residual grid size on [0.05, 0.95].
        #[arg(long, default_value_t = 40)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Fit the three-term recursion in p.
    Bispectral {
        #[command(flatten)]
        sp: Spectral,
        /// Compare with the tabulated matrices (ell in {0, 1, 3, 4}).
        #[arg(long)]
        compare_paper: bool,
        /// Number of Chebyshev fitting points on [0.2, 0.9].
        #[arg(long, default_value_t = 40)]
        fit_grid: usize,
    },
}

fn t_values(t: Vec<f64>, tmin: Option<f64>, tmax: Option<f64>, n: Option<usize>) -> Result<Vec<f64>, Failure> {
    let ts = match (tmin, tmax, n) {
        (Some(a), Some(b), Some(n)) if n >= 1 => sl2c_spherical::verify::linear_grid(a, b, n),
        (Some(_), Some(_), Some(_)) => return Err(Failure::Usage("--n must be at least 1".into())),
        _ => t,
    };
    if ts.is_empty() {
        return Err(Failure::Usage("no t values given (use --t or --tmin/--tmax/--n)".into()));
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Failure::Usage(format!("t = {t} outside (0, 1)")));
    }
    Ok(ts)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let io_err = |e: io::Error| Failure::Numerical(format!("write failed: {e}"));
    match cli.command {
        Command::Eval { sp, k, t, tmin, tmax, n, format } => {
            let ts = t_values(t, tmin, tmax, n)?;
            let (rec, rows) = commands::eval(sp.ell, k, sp.p, &ts)?;
            for w in &rec.warnings {
                eprintln!("warning: {w}");
            }
            match format {
                Format::Json => rec.write_json(&mut out).map_err(io_err)?,
                Format::Csv => output::write_csv(&mut out, sp.ell, &rows)
                    .map_err(|e| Failure::Numerical(format!("write failed: {e}")))?,
            }
            Ok(0)
        }
        Command::Family { sp, k } => {
            commands::family(sp.ell, k, sp.p)?.write_json(&mut out).map_err(io_err)?;
            Ok(0)
        }
        Command::Verify { sp, k, grid, tol, suite } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Failure::Usage("--tol must be positive".into()));
            }
            let (rec, ok) = commands::verify(sp.ell, sp.p, k, grid, tol, suite)?;
            rec.write_json(&mut out).map_err(io_err)?;
            if ok {
                Ok(0)
            } else {
                let worst = &rec.to_value()["result"]["worst_offender"];
                eprintln!("verification failed; worst offender: {}", output::to_string(worst));
                Ok(1)
            }
        }
        Command::Bispectral { sp, compare_paper, fit_grid } => {
            let (rec, status) = commands::bispectral(sp.ell, sp.p, compare_paper, fit_grid)?;
            for w in &rec.warnings {
                eprintln!("warning: {w}");
            }
            rec.write_json(&mut out).map_err(io_err)?;
            Ok(match status {
                commands::BispectralStatus::Pass => 0,
                commands::BispectralStatus::FitFailed => {
                    eprintln!("recursion residual exceeds {:e}", commands::BISPECTRAL_TOL);
                    1
                }
                commands::BispectralStatus::PaperMismatch => {
                    eprintln!("fitted matrices deviate from the table by more than {:e}", commands::BISPECTRAL_TOL);
                    4
                }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    };
    let _ = io::stdout().flush();
    ExitCode::from(code)
}
