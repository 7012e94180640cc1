//! Problem-file schema shared by all subcommands.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "matrices": {"0": [[5, 0], [0, 1]], "1": [[1, 0], [0, 3]]},
//!   "automaton": {"states": ["q0", "q1"], "alphabet": ["0", "1"],
//!                 "transitions": [["q0", "0", "q1"], ["q1", "0", "q1"], ["q1", "1", "q0"]]},
//!   "cones": {"q0": {"generators": [[1, 1], [1, -1]]}, "q1": {"facets": [[1, 4], [1, -4]]}},
//!   "initial": {"x": [1, 0.5], "y": [1, -0.5]},
//!   "config": {"gamma": 0.9, "tol": 1e-9}
//! }
//! ```
//!
//! Numbers may also be given as decimal strings. Without an automaton the
//! system switches arbitrarily on a single state named [`SINGLE_STATE`]. A
//! single `"cone"` entry assigns the same cone to every state.

use std::collections::BTreeMap;
use std::path::Path;

use conekit::automaton::{Automaton, RawAutomaton};
use conekit::cone::{ConeSpec, PolyhedralCone};
use conekit::linalg::{SquareMatrix, Vector};
use conekit::num::{to_f64_vec, LenientF64};
use conekit::verify::{ConeAssignment, SwitchedSystem};
use serde::Deserialize;

use crate::error::CliError;

pub const SINGLE_STATE: &str = "q";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub matrices: BTreeMap<String, SquareMatrix>,
    #[serde(default)]
    pub automaton: Option<RawAutomaton>,
    #[serde(default)]
    pub cones: Option<BTreeMap<String, ConeSpec>>,
    #[serde(default)]
    pub cone: Option<ConeSpec>,
    #[serde(default)]
    pub initial: Option<InitialPair>,
    #[serde(default)]
    pub config: ConfigOverrides,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPair {
    pub x: Vec<LenientF64>,
    pub y: Vec<LenientF64>,
    #[serde(default)]
    pub state: Option<String>,
}

/// Defaults stored in the problem file; command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub gamma: Option<LenientF64>,
    pub tol: Option<LenientF64>,
    pub strict_eps: Option<LenientF64>,
    pub max_iters: Option<usize>,
    pub seed_depth: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
    pub max_len: Option<usize>,
}

/// A problem file with every cross-reference resolved.
#[derive(Debug)]
pub struct Problem {
    pub system: SwitchedSystem,
    pub automaton: Automaton,
    pub cones: Option<ConeAssignment>,
    pub initial: Option<(Vector, Vector, Option<String>)>,
    pub config: ConfigOverrides,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid problem file: {e}")))
    }

    /// Validates the file and builds the domain objects. `tol` is the
    /// tolerance used for cone conversions.
    pub fn resolve(self, tol: f64) -> Result<Problem, CliError> {
        let input = |msg: String| CliError::Input(msg);
        if self.dim == 0 {
            return Err(input("dim must be positive".into()));
        }
        for (sym, a) in &self.matrices {
            if a.dim() != self.dim {
                return Err(input(format!(
                    "matrix {sym:?} is {0}x{0}, expected {1}x{1}",
                    a.dim(),
                    self.dim
                )));
            }
        }
        let system = SwitchedSystem::new(self.matrices).map_err(|e| input(e.to_string()))?;
        let automaton = match &self.automaton {
            Some(raw) => Automaton::validate(raw).map_err(|e| input(format!("automaton: {e}")))?,
            None => Automaton::arbitrary_switching(SINGLE_STATE, &system.symbols())
                .map_err(|e| input(format!("automaton: {e}")))?,
        };
        for sym in automaton.alphabet() {
            if system.get(sym).is_err() {
                return Err(input(format!("automaton symbol {sym:?} has no matrix")));
            }
        }

        let build = |name: &str, spec: ConeSpec| -> Result<PolyhedralCone, CliError> {
            let k = spec.build(tol).map_err(|e| input(format!("cone {name:?}: {e}")))?;
            if k.dim() != self.dim {
                return Err(input(format!("cone {name:?} has dimension {}, expected {}", k.dim(), self.dim)));
            }
            Ok(k)
        };
        let cones = match (self.cones, self.cone) {
            (Some(_), Some(_)) => return Err(input("give either \"cones\" or \"cone\", not both".into())),
            (Some(map), None) => {
                let mut out = BTreeMap::new();
                for (state, spec) in map {
                    if automaton.state_index(&state).is_none() {
                        return Err(input(format!("cone given for unknown state {state:?}")));
                    }
                    out.insert(state.clone(), build(&state, spec)?);
                }
                if let Some(missing) = automaton.states().iter().find(|s| !out.contains_key(*s)) {
                    return Err(input(format!("no cone for state {missing:?}")));
                }
                Some(ConeAssignment::new(out))
            }
            (None, Some(spec)) => Some(ConeAssignment::common(&automaton, &build("cone", spec)?)),
            (None, None) => None,
        };

        let initial = match self.initial {
            Some(p) => {
                let x = Vector::from_vec(to_f64_vec(p.x));
                let y = Vector::from_vec(to_f64_vec(p.y));
                for (name, v) in [("x", &x), ("y", &y)] {
                    if v.len() != self.dim {
                        return Err(input(format!("initial {name} has length {}, expected {}", v.len(), self.dim)));
                    }
                }
                if let Some(s) = &p.state {
                    if automaton.state_index(s).is_none() {
                        return Err(input(format!("initial state {s:?} is not an automaton state")));
                    }
                }
                Some((x, y, p.state))
            }
            None => None,
        };

        Ok(Problem {
            system,
            automaton,
            cones,
            initial,
            config: self.config,
        })
    }
}
