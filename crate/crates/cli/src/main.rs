use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sldgeom::geometry::geometry_report;
use sldgeom::grid::{self, Grid, Quantity, Sampling};
use sldgeom::kernel::read_matrix_file;
use sldgeom::metrology::{tradeoff_audit, CLAMP_SLACK};
use sldgeom::models::{self, DiffMethod, DiffScheme, ParamPoint, ParametricModel, DEFAULT_STEP};
use sldgeom::selftest;
use sldgeom::state::Povm;
use sldgeom::Error;

const EXIT_SELFTEST: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "sldgeom", version, about = "Quantum geometric tensor, SLD curvature and metrology trade-offs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometry report (QFI, QGT, curvature, residuals) at one point, as JSON.
    Report {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        diff: DiffArgs,
        /// Emit JSON (the only format for reports).
        #[arg(long)]
        json: bool,
    },
    /// Evaluate one report entry over a (theta, phi) grid and write CSV.
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        diff: DiffArgs,
        /// theta=lo:hi:n,phi=lo:hi:n
        #[arg(long)]
        grid: String,
        /// Table entry, e.g. curvature[0][1], qfi[0][0], qgt_re[0][1], qgt_im[0][1].
        #[arg(long, default_value = "curvature[0][1]")]
        quantity: String,
        #[arg(long, value_enum, default_value_t = SamplingArg::Mid)]
        sampling: SamplingArg,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit CSV (the only format for scans).
        #[arg(long)]
        csv: bool,
    },
    /// Integrate the (theta, phi) curvature over the sphere chart, divided by 2π.
    Chern {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        diff: DiffArgs,
        /// Midpoint cells per axis.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long)]
        json: bool,
    },
    /// Audit the regret trade-off inequalities for a POVM at one point.
    Tradeoff {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        diff: DiffArgs,
        /// POVM file: JSON list of matrix objects.
        #[arg(long)]
        povm: PathBuf,
        /// Parameter pair, e.g. 0,1.
        #[arg(long, default_value = "0,1")]
        axes: String,
        #[arg(long)]
        json: bool,
    },
    /// Run the seeded property and oracle suite.
    Selftest {
        #[arg(long, default_value_t = selftest::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = selftest::DEFAULT_TRIALS)]
        trials: usize,
        /// Replace every property tolerance with this value.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// pure-bloch, mixed-bloch, unitary-family or embedded-qubit.
    #[arg(long)]
    model: String,
    /// Model parameter as key=value (r for mixed-bloch; n and r for embedded-qubit).
    #[arg(long = "model-arg", value_name = "KEY=VALUE")]
    model_args: Vec<String>,
    /// Base state file for unitary-family.
    #[arg(long)]
    rho0: Option<PathBuf>,
    /// First generator file for unitary-family.
    #[arg(long)]
    g1: Option<PathBuf>,
    /// Second generator file for unitary-family.
    #[arg(long)]
    g2: Option<PathBuf>,
}

/// For unitary-family, --theta and --phi are the two rotation angles.
#[derive(Args)]
struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    phi: f64,
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::Central)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Difference numerically even when a closed-form derivative exists.
    #[arg(long)]
    numeric: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Central,
    Richardson,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Node,
    Mid,
}

#[derive(Debug)]
enum Failure {
    Input(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

impl ModelArgs {
    fn build(&self) -> CliResult<Box<dyn ParametricModel>> {
        let mut args = BTreeMap::new();
        for kv in &self.model_args {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| Error::Parse(format!("--model-arg {kv:?} is not key=value")))?;
            args.insert(k.trim().to_string(), v.trim().to_string());
        }
        let unitary = match (&self.rho0, &self.g1, &self.g2) {
            (None, None, None) => None,
            (Some(r), Some(a), Some(b)) => Some((read_matrix(r)?, read_matrix(a)?, read_matrix(b)?)),
            _ => return Err(Error::Parse("--rho0, --g1 and --g2 must be given together".into()).into()),
        };
        if unitary.is_some() && self.model != "unitary-family" {
            return Err(
                Error::Parse(format!("matrix files are only used by unitary-family, not {}", self.model)).into()
            );
        }
        Ok(models::from_spec(&self.model, &args, unitary)?)
    }
}

fn read_matrix(path: &Path) -> CliResult<sldgeom::kernel::ComplexMatrix> {
    read_matrix_file(path).map_err(|e| match e {
        Error::Io(io) => Failure::Io(path.to_path_buf(), io),
        other => Failure::Input(other),
    })
}

impl PointArgs {
    fn point(&self) -> CliResult<ParamPoint> {
        Ok(ParamPoint::new(vec![self.theta, self.phi])?)
    }
}

impl DiffArgs {
    fn scheme(&self) -> CliResult<DiffScheme> {
        let method = match self.scheme {
            SchemeArg::Central => DiffMethod::Central,
            SchemeArg::Richardson => DiffMethod::Richardson,
        };
        let s = DiffScheme::new(method, self.step)?;
        Ok(if self.numeric { s.numeric() } else { s })
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn parse_axes(text: &str) -> CliResult<(usize, usize)> {
    let bad = || Error::Parse(format!("--axes {text:?} must be two indices like 0,1"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Report { model, point, diff, json: _ } => {
            let m = model.build()?;
            let report = geometry_report(m.as_ref(), &point.point()?, &diff.scheme()?)?;
            print_json(&report.to_json());
            Ok(0)
        }
        Command::Scan { model, diff, grid, quantity, sampling, out, csv: _ } => {
            let m = model.build()?;
            let grid: Grid = grid.parse()?;
            let quantity: Quantity = quantity.parse()?;
            let sampling = match sampling {
                SamplingArg::Node => Sampling::Node,
                SamplingArg::Mid => Sampling::Mid,
            };
            // everything is computed before any file is created
            let rows = grid::scan(m.as_ref(), &grid, sampling, quantity, &diff.scheme()?)?;
            match out {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| Failure::Io(path.clone(), e))?;
                    let mut w = BufWriter::new(file);
                    grid::write_csv(&rows, &mut w).and_then(|_| w.flush()).map_err(|e| Failure::Io(path.clone(), e))?;
                }
                None => {
                    let stdout = std::io::stdout();
                    grid::write_csv(&rows, stdout.lock()).map_err(|e| Failure::Io("<stdout>".into(), e))?;
                }
            }
            Ok(0)
        }
        Command::Chern { model, diff, resolution, json } => {
            let m = model.build()?;
            let value = grid::chern(m.as_ref(), resolution, &diff.scheme()?)?;
            if json {
                print_json(&json!({ "model": m.name(), "resolution": resolution, "chern": value }));
            } else {
                println!("{value:.16e}");
            }
            Ok(0)
        }
        Command::Tradeoff { model, point, diff, povm, axes, json: _ } => {
            let m = model.build()?;
            let povm = Povm::read(&povm).map_err(|e| match e {
                Error::Io(io) => Failure::Io(povm.clone(), io),
                other => Failure::Input(other),
            })?;
            let audit = tradeoff_audit(m.as_ref(), &povm, &point.point()?, parse_axes(&axes)?, &diff.scheme()?)?;
            print_json(&audit.to_json());
            for flag in &audit.flags {
                log::warn!("{flag}");
            }
            if audit.min_slack() < -CLAMP_SLACK {
                eprintln!("inequality violated: minimum slack {:e}", audit.min_slack());
                return Ok(EXIT_VIOLATION);
            }
            Ok(0)
        }
        Command::Selftest { seed, trials, tol, json } => {
            if let Some(t) = tol {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(Error::OutOfRange(format!("--tol {t}")).into());
                }
            }
            let report = selftest::run(seed, trials, tol);
            if report.is_vacuous() {
                log::warn!("no trials requested; every property passes vacuously");
            }
            if json {
                let rows: Vec<_> = report
                    .results
                    .iter()
                    .map(|r| {
                        json!({
                            "name": r.name, "passed": r.passed(), "trials": r.trials,
                            "failures": r.failures, "max_residual": r.max_residual,
                            "tolerance": r.tolerance, "error": r.error,
                        })
                    })
                    .collect();
                print_json(&json!({ "seed": seed, "trials": trials, "passed": report.passed(), "properties": rows }));
            } else {
                print!("{}", report.render());
                println!("{}", if report.passed() { "all properties passed" } else { "FAILURES" });
            }
            Ok(if report.passed() { 0 } else { EXIT_SELFTEST })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Io(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(EXIT_INPUT)
        }
    }
}
