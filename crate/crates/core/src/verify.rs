//! Positivity and path-complete positivity certificates.
//!
//! A transition `i --s--> j` is checked by mapping the generators of `K_i`
//! through `A_s` and classifying them against `K_j`. Strict transitions get a
//! finite projective diameter `D` and the Birkhoff ratio `tanh(D/4)`; all
//! other transitions report `D = inf` and ratio 1.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{Automaton, Cycle};
use crate::cone::{ConeRecord, Inclusion, PolyhedralCone, Tolerances, Witness};
use crate::hilbert::{contraction_ratio, pairwise_diameter, Extended, HilbertError};
use crate::linalg::{dominant_eigenpair, matrix_product, EigenOptions, LinalgError, SquareMatrix, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("inconsistent dimensions: expected {expected}, {what} has {found}")]
    InconsistentDimensions {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("no cone assigned to state {0:?}")]
    MissingCone(String),
    #[error("no matrix for symbol {0:?}")]
    MissingMatrix(String),
    #[error("cone for state {0:?} is not solid")]
    NotSolid(String),
    #[error("switched system has no matrices")]
    EmptySystem,
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Symbol-indexed matrices of one common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    dim: usize,
    matrices: BTreeMap<String, SquareMatrix>,
}

impl SwitchedSystem {
    pub fn new(matrices: BTreeMap<String, SquareMatrix>) -> Result<Self, VerifyError> {
        let dim = matrices.values().next().ok_or(VerifyError::EmptySystem)?.dim();
        for (sym, m) in &matrices {
            if m.dim() != dim {
                return Err(VerifyError::InconsistentDimensions {
                    what: format!("matrix {sym:?}"),
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        Ok(Self { dim, matrices })
    }

    pub fn from_pairs<S: Into<String>>(pairs: Vec<(S, SquareMatrix)>) -> Result<Self, VerifyError> {
        Self::new(pairs.into_iter().map(|(s, m)| (s.into(), m)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &BTreeMap<String, SquareMatrix> {
        &self.matrices
    }

    pub fn symbols(&self) -> Vec<String> {
        self.matrices.keys().cloned().collect()
    }

    pub fn get(&self, symbol: &str) -> Result<&SquareMatrix, VerifyError> {
        self.matrices
            .get(symbol)
            .ok_or_else(|| VerifyError::MissingMatrix(symbol.to_string()))
    }
}

/// One cone per automaton state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConeAssignment {
    cones: BTreeMap<String, PolyhedralCone>,
}

impl ConeAssignment {
    pub fn new(cones: BTreeMap<String, PolyhedralCone>) -> Self {
        Self { cones }
    }

    /// The same cone for every state of `automaton`.
    pub fn common(automaton: &Automaton, cone: &PolyhedralCone) -> Self {
        Self {
            cones: automaton
                .states()
                .iter()
                .map(|s| (s.clone(), cone.clone()))
                .collect(),
        }
    }

    pub fn get(&self, state: &str) -> Result<&PolyhedralCone, VerifyError> {
        self.cones
            .get(state)
            .ok_or_else(|| VerifyError::MissingCone(state.to_string()))
    }

    pub fn cones(&self) -> &BTreeMap<String, PolyhedralCone> {
        &self.cones
    }

    fn validate(&self, automaton: &Automaton, dim: usize) -> Result<(), VerifyError> {
        for state in automaton.states() {
            let k = self.get(state)?;
            if k.dim() != dim {
                return Err(VerifyError::InconsistentDimensions {
                    what: format!("cone of state {state:?}"),
                    expected: dim,
                    found: k.dim(),
                });
            }
            if !k.is_solid() {
                return Err(VerifyError::NotSolid(state.clone()));
            }
        }
        Ok(())
    }
}

/// Inclusion verdict and contraction data for one linear map between two cones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCheck {
    pub inclusion: Inclusion,
    pub diameter: Extended,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Checks `A K_src ⊆ K_dst` (strictly: into the interior).
pub fn check_map(
    a: &SquareMatrix,
    src: &PolyhedralCone,
    dst: &PolyhedralCone,
    tols: &Tolerances,
) -> Result<PositivityCheck, VerifyError> {
    for (what, d) in [("source cone", src.dim()), ("target cone", dst.dim())] {
        if d != a.dim() {
            return Err(VerifyError::InconsistentDimensions {
                what: what.into(),
                expected: a.dim(),
                found: d,
            });
        }
    }
    let images: Vec<Vector> = src.generators().iter().map(|g| a.apply(g)).collect();
    let report = dst.classify_rays(&images, tols);
    let diameter = match report.inclusion {
        Inclusion::Strict => pairwise_diameter(dst, &images, tols.tol)?,
        _ => Extended::Infinite,
    };
    Ok(PositivityCheck {
        inclusion: report.inclusion,
        diameter,
        gamma: contraction_ratio(diameter),
        witness: report.witness,
    })
}

/// `K`-positivity of a single matrix.
pub fn check_positive(
    a: &SquareMatrix,
    k: &PolyhedralCone,
    tols: &Tolerances,
) -> Result<PositivityCheck, VerifyError> {
    check_map(a, k, k, tols)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    NotPathPositive,
    PathPositive,
    StrictlyPathPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRecord {
    pub from: String,
    pub sym: String,
    pub to: String,
    #[serde(flatten)]
    pub check: PositivityCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCertificate {
    pub verdict: Verdict,
    /// Largest per-transition ratio.
    pub global_gamma: f64,
    pub transitions: Vec<TransitionRecord>,
    pub cones: BTreeMap<String, ConeRecord>,
}

/// Checks every transition of `automaton` against the assigned cones.
///
/// Transitions are processed in (source, symbol, target) order, so the first
/// reported witness does not depend on thread scheduling.
pub fn check_path_positive(
    sys: &SwitchedSystem,
    automaton: &Automaton,
    cones: &ConeAssignment,
    tols: &Tolerances,
) -> Result<PositivityCertificate, VerifyError> {
    cones.validate(automaton, sys.dim())?;
    for sym in automaton.alphabet() {
        sys.get(sym)?;
    }
    let mut transitions = automaton.transitions().to_vec();
    transitions.sort();
    let records: Vec<TransitionRecord> = transitions
        .par_iter()
        .map(|t| {
            let from = &automaton.states()[t.from];
            let to = &automaton.states()[t.to];
            let sym = &automaton.alphabet()[t.symbol];
            let check = check_map(sys.get(sym)?, cones.get(from)?, cones.get(to)?, tols)?;
            Ok(TransitionRecord {
                from: from.clone(),
                sym: sym.clone(),
                to: to.clone(),
                check,
            })
        })
        .collect::<Result<_, VerifyError>>()?;

    let worst = records
        .iter()
        .map(|r| r.check.inclusion)
        .min()
        .unwrap_or(Inclusion::Strict);
    let verdict = match worst {
        Inclusion::Strict => Verdict::StrictlyPathPositive,
        Inclusion::NonStrict => Verdict::PathPositive,
        Inclusion::No => Verdict::NotPathPositive,
    };
    let global_gamma = records.iter().map(|r| r.check.gamma).fold(0.0, f64::max);
    Ok(PositivityCertificate {
        verdict,
        global_gamma,
        transitions: records,
        cones: cones
            .cones()
            .iter()
            .map(|(s, k)| (s.clone(), k.to_record()))
            .collect(),
    })
}

/// Perron-Frobenius data of a cycle: the dominant eigenpair of the cycle
/// product and the periodic sequence of rays it induces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclePf {
    pub states: Vec<String>,
    pub labels: Vec<String>,
    pub lambda: f64,
    /// `rays[0]` is the dominant eigenvector of `A_{s_r} ... A_{s_1}`;
    /// `rays[k + 1]` is the normalized image of `rays[k]` under `A_{s_{k+1}}`.
    #[serde(serialize_with = "ser_rays")]
    pub rays: Vec<Vector>,
    /// Largest distance between `rays[k]` and the independently computed
    /// dominant eigenvector of the cycle rotated to start at position `k`.
    pub rotation_residual: f64,
    /// Largest relative spread of the dominant eigenvalue across rotations.
    pub lambda_spread: f64,
}

fn ser_rays<S: serde::Serializer>(rays: &[Vector], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(rays.iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutcome {
    pub cycle: Cycle,
    pub result: Result<CyclePf, LinalgError>,
}

fn cycle_product(sys: &SwitchedSystem, automaton: &Automaton, cycle: &Cycle) -> Result<SquareMatrix, VerifyError> {
    let mats: Vec<SquareMatrix> = cycle
        .symbols
        .iter()
        .map(|&s| sys.get(&automaton.alphabet()[s]).cloned())
        .collect::<Result<_, _>>()?;
    Ok(matrix_product(&mats).expect("system matrices share one dimension"))
}

/// Orients `v` into `cone` when one is given, otherwise keeps the
/// largest-magnitude component positive.
fn orient(v: Vector, cone: Option<&PolyhedralCone>) -> Vector {
    match cone {
        Some(k) if k.min_margin(&v) < k.min_margin(&-&v) => -v,
        Some(_) => v,
        None => {
            let i = v.iamax();
            if v[i] < 0.0 {
                -v
            } else {
                v
            }
        }
    }
}

fn pf_for_cycle(
    sys: &SwitchedSystem,
    automaton: &Automaton,
    cones: Option<&ConeAssignment>,
    cycle: &Cycle,
    opts: &EigenOptions,
) -> Result<Result<CyclePf, LinalgError>, VerifyError> {
    let cone_at = |state: usize| -> Result<Option<&PolyhedralCone>, VerifyError> {
        cones.map(|c| c.get(&automaton.states()[state])).transpose()
    };
    let product = cycle_product(sys, automaton, cycle)?;
    let split = match dominant_eigenpair(&product, opts) {
        Ok(s) => s,
        Err(e) => return Ok(Err(e)),
    };
    let mut rays = vec![orient(split.v.clone(), cone_at(cycle.states[0])?)];
    for &s in &cycle.symbols[..cycle.len() - 1] {
        let img = sys.get(&automaton.alphabet()[s])?.apply(rays.last().expect("non-empty"));
        let n = img.norm();
        if n == 0.0 {
            return Ok(Err(LinalgError::NoStrictDominance(
                "cycle ray is mapped to zero".into(),
            )));
        }
        rays.push(img / n);
    }

    let mut rotation_residual: f64 = 0.0;
    let mut lambda_spread: f64 = 0.0;
    for (k, ray) in rays.iter().enumerate().skip(1) {
        let rotated = cycle.rotated(k);
        let s = match dominant_eigenpair(&cycle_product(sys, automaton, &rotated)?, opts) {
            Ok(s) => s,
            Err(e) => return Ok(Err(e)),
        };
        let v = if s.v.dot(ray) < 0.0 { -s.v } else { s.v };
        rotation_residual = rotation_residual.max((v - ray).norm());
        lambda_spread = lambda_spread.max((s.lambda - split.lambda).abs() / split.lambda);
    }

    let name = |i: usize| automaton.states()[i].clone();
    Ok(Ok(CyclePf {
        states: cycle.states.iter().map(|&q| name(q)).collect(),
        labels: cycle
            .symbols
            .iter()
            .map(|&s| automaton.alphabet()[s].clone())
            .collect(),
        lambda: split.lambda,
        rays,
        rotation_residual,
        lambda_spread,
    }))
}

/// Cycle-dependent Perron-Frobenius eigenpairs for every simple cycle of
/// length at most `max_len`. Cycles without a strictly dominant eigenvalue
/// are reported individually rather than aborting the run.
pub fn cycle_pf(
    sys: &SwitchedSystem,
    automaton: &Automaton,
    cones: Option<&ConeAssignment>,
    max_len: usize,
    opts: &EigenOptions,
) -> Result<Vec<CycleOutcome>, VerifyError> {
    automaton
        .simple_cycles(max_len)
        .into_iter()
        .map(|cycle| {
            let result = pf_for_cycle(sys, automaton, cones, &cycle, opts)?;
            Ok(CycleOutcome { cycle, result })
        })
        .collect()
}
