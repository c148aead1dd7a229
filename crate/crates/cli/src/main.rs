//! `evflex`: aggregate flexibility sets, robust sets and Monte Carlo
//! certification from JSON scenario files.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evflex::aggregate::{self, decompose, AggregateFlexSet};
use evflex::ambiguity::{robust_set, robust_set_for_beta, RobustOptions};
use evflex::harness::{envelope_constants, fit_constants, run_trials_with, ExecutionMode};
use evflex::model::DEFAULT_TOLERANCE;
use evflex::scenario::{self, parse_scenario, RadiusTarget, Scenario, ScenarioError};
use thiserror::Error;

use evflex_cli::output::{AggregateSummary, FitSummary, MemberSummary, RobustSummary};

#[derive(Parser, Debug)]
#[command(
    name = "evflex",
    version,
    about = "Aggregate and distributionally robust EV flexibility sets"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed for all randomness. Generated and reported when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Absolute tolerance for membership and inclusion tests.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Aggregate bounds and spliced vertices of the scenario's population.
    Aggregate { scenario: PathBuf },
    /// Test whether a profile can be tracked by the scenario's population.
    Member {
        scenario: PathBuf,
        /// Comma-separated profile; overrides the scenario's `profile`.
        #[arg(long, value_delimiter = ',')]
        profile: Option<Vec<f64>>,
        /// Emit a per-vehicle decomposition or an infeasibility cut.
        #[arg(long)]
        witness: bool,
    },
    /// Distributionally robust aggregate set for the scenario's distribution.
    Robust {
        scenario: PathBuf,
        /// Ball radius; overrides the scenario's `robust` target.
        #[arg(long, conflicts_with = "beta")]
        epsilon: Option<f64>,
        /// Confidence complement; needs `c1` and `c2` in the scenario.
        #[arg(long)]
        beta: Option<f64>,
        /// Population size; overrides `robust.n`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Monte Carlo violation rates as CSV.
    Montecarlo {
        scenario: PathBuf,
        /// Trials per radius; overrides `harness.trials`.
        #[arg(long)]
        trials: Option<u64>,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Fit concentration constants to a Monte Carlo CSV.
    FitConstants {
        csv: PathBuf,
        /// Also report the smallest `c1` that covers every row's upper confidence bound.
        #[arg(long)]
        envelope: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Infeasible(_) => 1,
            CliError::Scenario(e) if e.is_parse() => 2,
            CliError::Io(_) => 2,
            CliError::Scenario(_) | CliError::Invalid(_) => 3,
        }
    }
}

impl From<evflex::Error> for CliError {
    fn from(e: evflex::Error) -> Self {
        use evflex::Error as E;
        match e {
            E::BudgetInfeasible {
                epsilon,
                projection_cost,
            } => CliError::Infeasible(format!(
                "radius {epsilon} is below the projection cost eps0 = {projection_cost}"
            )),
            E::BudgetAccounting { .. } | E::InsufficientData(_) => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

fn require<'a, T>(value: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| {
        CliError::Scenario(ScenarioError::Validation {
            field: field.into(),
            message: "is required by this command".into(),
        })
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let Common {
        seed,
        out,
        tolerance,
    } = cli.common;
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(CliError::Invalid(format!(
            "tolerance must be non-negative, got {tolerance}"
        )));
    }
    let out = out.as_deref();
    match cli.command {
        Command::Aggregate { scenario } => {
            let s = parse_scenario(&scenario)?;
            let pop = require(&s.population, "population")?;
            emit_json(
                out,
                &AggregateSummary::new(&AggregateFlexSet::from_population(pop)),
            )
        }
        Command::Member {
            scenario,
            profile,
            witness,
        } => {
            let s = parse_scenario(&scenario)?;
            let pop = require(&s.population, "population")?;
            let u = match profile {
                Some(u) => u,
                None => require(&s.profile, "profile")?.clone(),
            };
            let member = aggregate::contains(pop, &u, tolerance)?;
            let certificate = if witness {
                Some(decompose(pop, &u, tolerance)?)
            } else {
                None
            };
            emit_json(out, &MemberSummary::new(u, certificate, member))
        }
        Command::Robust {
            scenario,
            epsilon,
            beta,
            n,
        } => {
            let s = parse_scenario(&scenario)?;
            robust(&s, epsilon, beta, n, tolerance, out)
        }
        Command::Montecarlo {
            scenario,
            trials,
            sequential,
        } => {
            let s = parse_scenario(&scenario)?;
            let seed = match seed.or(s.harness.as_ref().and_then(|h| h.seed)) {
                Some(v) => v,
                None => {
                    let v = rand::random::<u64>();
                    eprintln!("seed={v}");
                    v
                }
            };
            let mut cfg = s.trial_config(Some(seed))?;
            cfg.tolerance = tolerance;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let mode = if sequential {
                ExecutionMode::Sequential
            } else {
                ExecutionMode::Parallel
            };
            let report = run_trials_with(&cfg, mode)?;
            for skipped in &report.skipped {
                eprintln!(
                    "warning: radius {} skipped: {}",
                    skipped.epsilon, skipped.reason
                );
            }
            let mut buf = Vec::new();
            scenario::write_csv(&mut buf, seed, &report.rows)
                .map_err(|e| CliError::Io(e.to_string()))?;
            emit(out, &String::from_utf8(buf).expect("CSV output is ASCII"))
        }
        Command::FitConstants { csv, envelope } => {
            let file =
                File::open(&csv).map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
            let (_, rows) = scenario::read_csv(BufReader::new(file), &csv)?;
            let fit = fit_constants(&rows)?;
            let envelope_c1 = if envelope {
                Some(envelope_constants(&fit, &rows)?.c1())
            } else {
                None
            };
            emit_json(out, &FitSummary::new(&fit, envelope_c1))
        }
    }
}

fn robust(
    s: &Scenario,
    epsilon: Option<f64>,
    beta: Option<f64>,
    n: Option<usize>,
    tolerance: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let p = require(&s.distribution, "distribution")?;
    let spec = s.robust.as_ref();
    let n = n
        .or(spec.map(|r| r.n))
        .ok_or_else(|| CliError::Invalid("population size: pass --n or set robust.n".into()))?;
    let options = RobustOptions {
        normalize: spec.is_some_and(|r| r.normalize),
        tolerance,
    };
    let target = match (epsilon, beta, spec.map(|r| r.target)) {
        (Some(e), _, _) => RadiusTarget::Epsilon(e),
        (None, Some(b), Some(RadiusTarget::Beta { constants, .. })) => {
            RadiusTarget::Beta { beta: b, constants }
        }
        (None, Some(_), _) => {
            return Err(CliError::Invalid(
                "--beta needs robust.c1 and robust.c2 in the scenario".into(),
            ))
        }
        (None, None, Some(t)) => t,
        (None, None, None) => {
            return Err(CliError::Invalid(
                "no radius: pass --epsilon or --beta or set `robust`".into(),
            ))
        }
    };
    let result = match target {
        RadiusTarget::Epsilon(e) => robust_set(p, n, e, s.grid, s.power, options)?,
        RadiusTarget::Beta { beta, constants } => {
            robust_set_for_beta(p, n, beta, constants, s.grid, s.power, options)?
        }
    };
    if result.empty {
        eprintln!("warning: the robust set is empty");
    }
    emit_json(out, &RobustSummary::from(&result))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
