//! Subcommand implementations. Each returns its primary output as a string
//! together with the exit code, so the dispatcher alone touches the
//! filesystem and the process status.

use conekit::cone::Tolerances;
use conekit::hilbert::Extended;
use conekit::linalg::EigenOptions;
use conekit::search::{find_contracting_cone, SearchConfig, SearchError, SearchStatus};
use conekit::sim::{simulate_pair, simulate_random_pairs, SimConfig, SimError, TrajectoryPair};
use conekit::verify::{check_path_positive, cycle_pf, Verdict, VerifyError};
use serde::Serialize;

use crate::error::CliError;
use crate::problem::Problem;

/// Primary output of a command plus optional per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub code: i32,
    pub body: String,
    pub trace: Option<String>,
}

/// Exit codes of the `verify` command by verdict.
pub fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::StrictlyPathPositive => 0,
        Verdict::PathPositive => 2,
        Verdict::NotPathPositive => 1,
    }
}

/// Exit codes of the `find-cone` command by status.
pub fn status_code(s: SearchStatus) -> i32 {
    match s {
        SearchStatus::FoundGammaContracting => 0,
        SearchStatus::FoundDeltaInvariant => 3,
        SearchStatus::No => 1,
        SearchStatus::Inconclusive => 4,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn verify_error(e: VerifyError) -> CliError {
    match e {
        VerifyError::Hilbert(h) => CliError::Failure(h.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Collapsed(_) => CliError::Failure(e.to_string()),
        SimError::Verify(v) => verify_error(v),
        other => CliError::Input(other.to_string()),
    }
}

/// Checks (strict) path-complete positivity of the problem's cone
/// assignment and returns the certificate.
pub fn verify(problem: &Problem, tols: &Tolerances) -> Result<CommandOutput, CliError> {
    let cones = problem
        .cones
        .as_ref()
        .ok_or_else(|| CliError::Input("verify needs \"cones\" or \"cone\" in the problem file".into()))?;
    let cert = check_path_positive(&problem.system, &problem.automaton, cones, tols).map_err(verify_error)?;
    if let Some(bad) = cert.transitions.iter().find(|t| t.check.witness.is_some()) {
        log::info!(
            "transition {} -{}-> {} fails: {:?}",
            bad.from,
            bad.sym,
            bad.to,
            bad.check.inclusion
        );
    }
    Ok(CommandOutput {
        code: verdict_code(cert.verdict),
        body: to_json(&cert)?,
        trace: None,
    })
}

/// Searches for a common cone; the trace is CSV with one row per iteration.
pub fn find_cone(problem: &Problem, cfg: &SearchConfig) -> Result<CommandOutput, CliError> {
    let outcome = find_contracting_cone(&problem.system, cfg).map_err(|e| match e {
        SearchError::InvalidGamma(_) => CliError::Usage(e.to_string()),
        SearchError::Verify(v) => verify_error(v),
        other => CliError::Failure(other.to_string()),
    })?;
    let mut trace = csv::Writer::from_writer(Vec::new());
    for row in &outcome.trace {
        trace.serialize(row).map_err(|e| CliError::Output(e.to_string()))?;
    }
    let trace = csv_string(trace)?;
    Ok(CommandOutput {
        code: status_code(outcome.status),
        body: to_json(&outcome)?,
        trace: Some(trace),
    })
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    pair: usize,
    step: usize,
    symbol: &'a str,
    state: &'a str,
    hilbert_d: String,
    normalized_gap: f64,
    log_scale: f64,
}

/// Settings of the `simulate` command.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSettings {
    pub sim: SimConfig,
    pub pairs: usize,
}

/// Simulates trajectory pairs under random admissible switching and
/// returns their traces as CSV, one block of rows per pair.
pub fn simulate(problem: &Problem, settings: &SimulateSettings) -> Result<CommandOutput, CliError> {
    let mut cfg = settings.sim.clone();
    let trajectories: Vec<TrajectoryPair> = match &problem.initial {
        Some((x, y, state)) => {
            if cfg.start_state.is_none() {
                cfg.start_state = state.clone();
            }
            vec![simulate_pair(&problem.system, &problem.automaton, problem.cones.as_ref(), x, y, &cfg)
                .map_err(sim_error)?]
        }
        None => {
            let cones = problem.cones.as_ref().ok_or_else(|| {
                CliError::Input("simulate needs \"initial\" vectors or cones to draw them from".into())
            })?;
            simulate_random_pairs(&problem.system, &problem.automaton, cones, settings.pairs, &cfg)
                .map_err(sim_error)?
        }
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for (pair, t) in trajectories.iter().enumerate() {
        for r in &t.rows {
            w.serialize(CsvRow {
                pair,
                step: r.step,
                symbol: r.symbol.as_deref().unwrap_or(""),
                state: &r.state,
                hilbert_d: match r.hilbert_d {
                    Some(Extended::Finite(d)) => d.to_string(),
                    Some(Extended::Infinite) => "inf".into(),
                    None => String::new(),
                },
                normalized_gap: r.normalized_gap,
                log_scale: r.log_scale,
            })
            .map_err(|e| CliError::Output(e.to_string()))?;
        }
    }
    Ok(CommandOutput {
        code: 0,
        body: csv_string(w)?,
        trace: None,
    })
}

fn names<'a>(idx: &[usize], table: &'a [String]) -> Vec<&'a str> {
    idx.iter().map(|&i| table[i].as_str()).collect()
}

/// Dumps the Perron-Frobenius data of every simple cycle up to `max_len`.
pub fn pf_cycles(problem: &Problem, max_len: usize, eig: &EigenOptions) -> Result<CommandOutput, CliError> {
    let outcomes = cycle_pf(&problem.system, &problem.automaton, problem.cones.as_ref(), max_len, eig)
        .map_err(verify_error)?;
    #[derive(Serialize)]
    #[serde(untagged)]
    enum Record<'a> {
        Pf(&'a conekit::verify::CyclePf),
        Failed {
            states: Vec<&'a str>,
            labels: Vec<&'a str>,
            error: String,
        },
    }
    let records: Vec<Record> = outcomes
        .iter()
        .map(|o| match &o.result {
            Ok(pf) => Record::Pf(pf),
            Err(e) => Record::Failed {
                states: names(&o.cycle.states, problem.automaton.states()),
                labels: names(&o.cycle.symbols, problem.automaton.alphabet()),
                error: e.to_string(),
            },
        })
        .collect();
    Ok(CommandOutput {
        code: 0,
        body: to_json(&records)?,
        trace: None,
    })
}
