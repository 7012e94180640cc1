//! `conekit` command-line front end.
//!
//! Exit codes: `verify` 0 strictly path-positive, 2 path-positive,
//! 1 not path-positive; `find-cone` 0 contracting cone found, 3 invariant
//! cone with a weaker ratio, 1 no such cone, 4 inconclusive; 64 bad flags or
//! problem file; 70 numerical failure; 74 unwritable output.

mod commands;
mod error;
mod problem;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conekit::cone::Tolerances;
use conekit::linalg::EigenOptions;
use conekit::search::SearchConfig;
use conekit::sim::SimConfig;

use commands::{CommandOutput, SimulateSettings};
use error::CliError;
use problem::{Problem, ProblemFile};

#[derive(Debug, Parser)]
#[command(name = "conekit", version, about = "Polyhedral cone certificates for switched linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check (strict) path-complete positivity of the given cones and emit a certificate.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Search for a common cone on which every matrix contracts by the target ratio.
    FindCone {
        #[command(flatten)]
        common: CommonArgs,
        /// Target contraction ratio, strictly between 0 and 1.
        #[arg(long, value_parser = parse_gamma)]
        gamma: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Longest matrix product applied to the eigenvectors for the seed cone.
        #[arg(long)]
        seed_depth: Option<usize>,
        /// Write the per-iteration trace (CSV) here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Simulate trajectory pairs under random admissible switching (CSV).
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random pairs drawn when the problem gives no initial vectors.
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Dump Perron-Frobenius data of the automaton's simple cycles (JSON).
    PfCycles {
        #[command(flatten)]
        common: CommonArgs,
        /// Longest cycle to enumerate; defaults to the number of states.
        #[arg(long)]
        max_len: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Absolute tolerance for containment and rank decisions.
    #[arg(long, value_parser = parse_positive)]
    tol: Option<f64>,
    /// Margin a point needs to count as interior.
    #[arg(long, value_parser = parse_positive)]
    strict_eps: Option<f64>,
    /// Write the primary output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if g > 0.0 && g < 1.0 {
        Ok(g)
    } else {
        Err(format!("gamma must lie strictly between 0 and 1, got {g}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

fn tolerances(common: &CommonArgs, problem: &ProblemFile) -> Tolerances {
    let defaults = Tolerances::default();
    Tolerances {
        tol: common.tol.or(problem.config.tol.map(f64::from)).unwrap_or(defaults.tol),
        strict_eps: common
            .strict_eps
            .or(problem.config.strict_eps.map(f64::from))
            .unwrap_or(defaults.strict_eps),
    }
}

fn load(common: &CommonArgs) -> Result<(Problem, Tolerances), CliError> {
    let file = ProblemFile::load(&common.problem)?;
    let tols = tolerances(common, &file);
    Ok((file.resolve(tols.tol)?, tols))
}

fn run(command: &Command) -> Result<(CommandOutput, Option<&Path>, Option<&Path>), CliError> {
    match command {
        Command::Verify { common } => {
            let (problem, tols) = load(common)?;
            Ok((commands::verify(&problem, &tols)?, common.out.as_deref(), None))
        }
        Command::FindCone {
            common,
            gamma,
            max_iters,
            seed_depth,
            trace,
        } => {
            let (problem, tols) = load(common)?;
            let gamma = match gamma.or(problem.config.gamma.map(f64::from)) {
                Some(g) => parse_gamma(&g.to_string()).map_err(CliError::Usage)?,
                None => return Err(CliError::Usage("find-cone needs --gamma".into())),
            };
            let mut cfg = SearchConfig::new(gamma);
            cfg.tols = tols;
            cfg.eig.tol = tols.tol;
            if let Some(m) = max_iters.or(problem.config.max_iters) {
                cfg.max_iters = m;
            }
            if let Some(d) = seed_depth.or(problem.config.seed_depth) {
                cfg.seed_depth = d;
            }
            Ok((commands::find_cone(&problem, &cfg)?, common.out.as_deref(), trace.as_deref()))
        }
        Command::Simulate {
            common,
            steps,
            seed,
            pairs,
        } => {
            let (problem, tols) = load(common)?;
            let defaults = SimConfig::default();
            let settings = SimulateSettings {
                sim: SimConfig {
                    steps: steps.or(problem.config.steps).unwrap_or(defaults.steps),
                    seed: seed.or(problem.config.seed).unwrap_or(defaults.seed),
                    start_state: None,
                    tol: tols.tol,
                },
                pairs: pairs.or(problem.config.pairs).unwrap_or(1),
            };
            Ok((commands::simulate(&problem, &settings)?, common.out.as_deref(), None))
        }
        Command::PfCycles { common, max_len } => {
            let (problem, tols) = load(common)?;
            let max_len = max_len
                .or(problem.config.max_len)
                .unwrap_or(problem.automaton.states().len());
            let eig = EigenOptions {
                tol: tols.tol,
                ..EigenOptions::default()
            };
            Ok((commands::pf_cycles(&problem, max_len, &eig)?, common.out.as_deref(), None))
        }
    }
}

fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CONEKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CONEKIT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failure(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| {
        let (output, out, trace_path) = run(&cli.command)?;
        write(out, &output.body)?;
        if let (Some(path), Some(trace)) = (trace_path, &output.trace) {
            write(Some(path), trace)?;
        }
        Ok(output.code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("conekit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
