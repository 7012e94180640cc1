//! Search for a common cone on which every matrix of a family contracts the
//! Hilbert metric by at least a target ratio `gamma`.
//!
//! The search keeps an inner approximation `K_t` of any such cone:
//!
//! 1. every matrix needs a strictly dominant eigenvalue whose eigenvector
//!    avoids the complementary invariant hyperplanes of all other matrices;
//! 2. the oriented dominant eigenvectors and their images under short
//!    products span the seed cone;
//! 3. each iteration adds the images `A K_t` and, for every pair of image
//!    vertices `y' = A y`, `x' = A x`, the inflated point
//!    `rho * mu * y' - x'`, where `rho = ((1 + gamma) / (1 - gamma))^2` and
//!    `mu` is the smallest ratio `w^T x' / w^T y'` over the hyperplane
//!    normals `w`. A cone on which the family contracts by `gamma` must
//!    contain that point, so `K_t` stays inside it;
//! 4. a `K_t` that touches one of the hyperplanes proves that no such cone
//!    exists.
//!
//! When the sound iteration stalls above the target, an optional relaxation
//! phase keeps inflating with a lowered internal target. Its cones are no
//! longer guaranteed inner bounds, so they are only reported after the
//! contraction check passes; relaxation never produces a negative answer.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cone::{ConeError, ConeRecord, Inclusion, PolyhedralCone, Tolerances};
use crate::hilbert::rho_for_gamma;
use crate::linalg::{dominant_eigenpair, orthogonal_complement, rank, EigenOptions, InvariantSplitting, Vector};
use crate::sim::angle;
use crate::verify::{check_positive, SwitchedSystem, VerifyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("target ratio must lie strictly between 0 and 1, got {0}")]
    InvalidGamma(f64),
    #[error("inflation needs two non-parallel points")]
    ParallelPoints,
    #[error("hyperplane scaling needs both points strictly on one side of the hyperplane")]
    DegenerateSigns,
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub gamma: f64,
    /// Longest matrix product applied to the eigenvectors when seeding.
    pub seed_depth: usize,
    pub max_iters: usize,
    pub tols: Tolerances,
    /// An iteration that moves no generator farther outside the previous
    /// cone than this fraction of its angular diameter counts as stagnant;
    /// candidate points closer to the cone are dropped.
    pub growth_eps: f64,
    /// Candidate points closer to each other than this fraction of the
    /// cone's angular diameter are merged, which keeps the generator count
    /// from exploding on curved limit cones.
    pub resolution: f64,
    /// Continue with a lowered internal target after the sound phase stalls.
    pub relax: bool,
    /// Optional cap on the number of generators, enforced by farthest-point
    /// thinning.
    pub max_generators: Option<usize>,
    pub eig: EigenOptions,
}

impl SearchConfig {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            seed_depth: 2,
            max_iters: 200,
            tols: Tolerances::default(),
            growth_eps: GROWTH_EPS,
            resolution: 1e-3,
            relax: true,
            max_generators: None,
            eig: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchStatus {
    FoundGammaContracting,
    FoundDeltaInvariant,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "failure", rename_all = "snake_case")]
pub enum BasicTestFailure {
    NoDominance { symbol: String, reason: String },
    EigenvectorInHyperplane {
        eigenvector_of: String,
        hyperplane_of: String,
        inner_product: f64,
    },
}

/// Why the search answered `No`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refutation {
    BasicTest(BasicTestFailure),
    /// The inner approximation reached the invariant hyperplane of `symbol`.
    MeetsHyperplane { iteration: usize, symbol: String },
    /// The inner approximation stopped being pointed.
    NotPointed { iteration: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sound,
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub generator_count: usize,
    /// Best contraction ratio achieved by a strictly invariant cone so far
    /// (1 until one is found).
    pub best_gamma: f64,
    pub verdict_flags: String,
}

fn ser_cone<S: Serializer>(cone: &Option<PolyhedralCone>, s: S) -> Result<S::Ok, S::Error> {
    cone.as_ref().map(PolyhedralCone::to_record).serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// The contracting (or invariant) cone found, or the refuting inner
    /// approximation for `No`.
    #[serde(serialize_with = "ser_cone")]
    pub cone: Option<PolyhedralCone>,
    /// Contraction ratio of a `FoundDeltaInvariant` cone.
    pub delta: Option<f64>,
    /// Per-matrix ratios on the returned cone, when it is strictly invariant.
    pub per_matrix_gamma: BTreeMap<String, f64>,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub refutation: Option<Refutation>,
    pub common_invariant_subspace_suspected: bool,
}

impl SearchOutcome {
    pub fn cone_record(&self) -> Option<ConeRecord> {
        self.cone.as_ref().map(PolyhedralCone::to_record)
    }
}

/// Dominant splittings of every matrix, in symbol order, provided no
/// dominant eigenvector lies in another matrix's invariant hyperplane.
pub fn basic_test(
    sys: &SwitchedSystem,
    eig: &EigenOptions,
    tol: f64,
) -> Result<Vec<(String, InvariantSplitting)>, BasicTestFailure> {
    let splits: Vec<(String, InvariantSplitting)> = sys
        .matrices()
        .iter()
        .map(|(sym, a)| {
            dominant_eigenpair(a, eig)
                .map(|s| (sym.clone(), s))
                .map_err(|e| BasicTestFailure::NoDominance {
                    symbol: sym.clone(),
                    reason: e.to_string(),
                })
        })
        .collect::<Result<_, _>>()?;
    for (si, s) in &splits {
        for (ti, t) in &splits {
            let ip = t.w.dot(&s.v) / (t.w.norm() * s.v.norm());
            if ip.abs() <= tol {
                return Err(BasicTestFailure::EigenvectorInHyperplane {
                    eigenvector_of: si.clone(),
                    hyperplane_of: ti.clone(),
                    inner_product: ip,
                });
            }
        }
    }
    Ok(splits)
}

/// Flips each dominant eigenvector onto the positive side of the first
/// matrix's hyperplane normal.
pub fn orient(splits: &[InvariantSplitting]) -> Vec<Vector> {
    let Some(first) = splits.first() else {
        return Vec::new();
    };
    splits
        .iter()
        .map(|s| if first.w.dot(&s.v) < 0.0 { -&s.v } else { s.v.clone() })
        .collect()
}

/// Hyperplane normals oriented to be positive on `reference`.
fn oriented_normals(splits: &[InvariantSplitting], reference: &Vector) -> Vec<Vector> {
    splits
        .iter()
        .map(|s| {
            let w = s.w.normalize();
            if w.dot(reference) < 0.0 {
                -w
            } else {
                w
            }
        })
        .collect()
}

/// Conic hull of `P v` over the given vectors and all products `P` of at
/// most `depth` matrices.
pub fn seed_cone(sys: &SwitchedSystem, vs: &[Vector], depth: usize, tol: f64) -> Result<PolyhedralCone, ConeError> {
    let mut layer: Vec<Vector> = vs.iter().map(|v| v.normalize()).collect();
    let mut all = layer.clone();
    for _ in 0..depth {
        layer = layer
            .iter()
            .flat_map(|v| sys.matrices().values().map(move |a| a.apply(v)))
            .filter_map(|v| {
                let n = v.norm();
                (n > 0.0).then(|| v / n)
            })
            .collect();
        all.extend(layer.iter().cloned());
    }
    PolyhedralCone::from_generators(&all, tol)
}

/// The point `y' + (y' - x') / (rho - 1)`.
pub fn inflate_point(x_img: &Vector, y_img: &Vector, rho: f64) -> Result<Vector, SearchError> {
    if !(rho > 1.0) {
        return Err(SearchError::InvalidGamma(rho));
    }
    if angle(x_img, y_img) <= 1e-12 {
        return Err(SearchError::ParallelPoints);
    }
    Ok(y_img + (y_img - x_img) / (rho - 1.0))
}

/// The factor `lambda = w^T y / w^T x`, for which `y - lambda x` lies on
/// the hyperplane `w^T z = 0`.
pub fn scale_to_hyperplane(x: &Vector, y: &Vector, w: &Vector) -> Result<f64, SearchError> {
    let (wx, wy) = (w.dot(x), w.dot(y));
    if wx == 0.0 || wy == 0.0 || wx.signum() != wy.signum() {
        return Err(SearchError::DegenerateSigns);
    }
    Ok(wy / wx)
}

fn orbit_rank<'a>(start: &Vector, maps: impl Iterator<Item = &'a nalgebra::DMatrix<f64>> + Clone, tol: f64) -> usize {
    let n = start.len();
    let mut basis = vec![start.normalize()];
    let mut frontier = basis.clone();
    while !frontier.is_empty() && basis.len() < n {
        let mut next = Vec::new();
        for v in &frontier {
            for m in maps.clone() {
                let img = m * v;
                let nrm = img.norm();
                if nrm == 0.0 {
                    continue;
                }
                let cand = img / nrm;
                let r = rank(basis.iter().chain(std::iter::once(&cand)), n, tol);
                if r > basis.len() {
                    basis.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    rank(basis.iter(), n, tol)
}

/// Heuristic for a nontrivial subspace invariant under every matrix: the
/// orbit of some dominant eigenvector (under the matrices) or of some left
/// eigenvector or random vector (under the transposes) fails to span.
pub fn common_invariant_subspace_suspected(sys: &SwitchedSystem, splits: &[InvariantSplitting], seed: u64) -> bool {
    let n = sys.dim();
    if n < 2 {
        return false;
    }
    let tol = 1e-8;
    let maps = || sys.matrices().values().map(|a| a.matrix());
    let transposed: Vec<nalgebra::DMatrix<f64>> = maps().map(|m| m.transpose()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let randoms: Vec<Vector> = (0..2)
        .map(|_| Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    splits.iter().any(|s| orbit_rank(&s.v, maps(), tol) < n)
        || splits.iter().any(|s| orbit_rank(&s.w, transposed.iter(), tol) < n)
        || randoms.iter().any(|r| orbit_rank(r, maps(), tol) < n || orbit_rank(r, transposed.iter(), tol) < n)
}

/// Largest angle between two of the rays.
fn angular_diameter(rays: &[Vector]) -> f64 {
    rays.iter()
        .enumerate()
        .flat_map(|(i, a)| rays[i + 1..].iter().map(move |b| angle(a, b)))
        .fold(0.0, f64::max)
}

/// Greedy farthest-point selection of at most `cap` generators.
fn thin(gens: &[Vector], cap: usize) -> Vec<Vector> {
    if gens.len() <= cap || cap == 0 {
        return gens.to_vec();
    }
    let mut chosen = vec![0usize];
    let mut dist: Vec<f64> = gens.iter().map(|g| angle(g, &gens[0])).collect();
    while chosen.len() < cap {
        let (i, _) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        chosen.push(i);
        for (j, g) in gens.iter().enumerate() {
            dist[j] = dist[j].min(angle(g, &gens[i]));
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| gens[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
struct Evaluation {
    all_strict: bool,
    worst: f64,
    per_matrix: BTreeMap<String, f64>,
}

/// Result of a single [`Search::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Continue,
    Done(Box<SearchOutcome>),
}

/// Iterative search state. [`find_contracting_cone`] drives it to the end;
/// tests can step through it and inspect the intermediate cones.
#[derive(Debug, Clone)]
pub struct Search<'a> {
    sys: &'a SwitchedSystem,
    cfg: SearchConfig,
    symbols: Vec<String>,
    normals: Vec<Vector>,
    cone: PolyhedralCone,
    iter: usize,
    phase: Phase,
    internal_gamma: f64,
    best: Option<(PolyhedralCone, Evaluation)>,
    trace: Vec<TraceRow>,
    suspected: bool,
    thinned: bool,
}

impl<'a> Search<'a> {
    /// Runs the basic test and builds the seed cone. Returns a finished
    /// outcome instead when the instance is refuted before iterating.
    pub fn new(sys: &'a SwitchedSystem, cfg: SearchConfig) -> Result<Result<Self, Box<SearchOutcome>>, SearchError> {
        rho_for_gamma(cfg.gamma).map_err(|_| SearchError::InvalidGamma(cfg.gamma))?;
        let refuted = |refutation: Refutation, cone: Option<PolyhedralCone>| {
            Ok(Err(Box::new(SearchOutcome {
                status: SearchStatus::No,
                cone,
                delta: None,
                per_matrix_gamma: BTreeMap::new(),
                iterations: 0,
                trace: Vec::new(),
                refutation: Some(refutation),
                common_invariant_subspace_suspected: false,
            })))
        };
        let named = match basic_test(sys, &cfg.eig, cfg.tols.tol) {
            Ok(s) => s,
            Err(f) => return refuted(Refutation::BasicTest(f), None),
        };
        let (symbols, splits): (Vec<String>, Vec<InvariantSplitting>) = named.into_iter().unzip();
        let suspected = common_invariant_subspace_suspected(sys, &splits, 0);
        if suspected {
            log::warn!("the matrices appear to share a nontrivial invariant subspace; the search may not decide");
        }
        let vs = orient(&splits);
        let normals = oriented_normals(&splits, &vs[0]);
        let cone = match seed_cone(sys, &vs, cfg.seed_depth, cfg.tols.tol) {
            Ok(c) => c,
            Err(ConeError::NotPointed) => return refuted(Refutation::NotPointed { iteration: 0 }, None),
            Err(e) => unreachable!("seed vectors are nonzero and finite: {e}"),
        };
        Ok(Ok(Self {
            sys,
            internal_gamma: cfg.gamma,
            cfg,
            symbols,
            normals,
            cone,
            iter: 0,
            phase: Phase::Sound,
            best: None,
            trace: Vec::new(),
            suspected,
            thinned: false,
        }))
    }

    pub fn cone(&self) -> &PolyhedralCone {
        &self.cone
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    /// Hyperplane normals, oriented positive on the seed cone, in symbol order.
    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }

    fn evaluate(&self, k: &PolyhedralCone) -> Result<Evaluation, SearchError> {
        let checks: Vec<(String, Inclusion, f64)> = self
            .sys
            .matrices()
            .par_iter()
            .map(|(s, a)| check_positive(a, k, &self.cfg.tols).map(|c| (s.clone(), c.inclusion, c.gamma)))
            .collect::<Result<_, _>>()?;
        Ok(Evaluation {
            all_strict: checks.iter().all(|c| c.1 == Inclusion::Strict),
            worst: checks.iter().map(|c| c.2).fold(0.0, f64::max),
            per_matrix: checks.into_iter().map(|(s, _, g)| (s, g)).collect(),
        })
    }

    fn hyperplane_hit(&self, k: &PolyhedralCone) -> Option<String> {
        self.normals
            .iter()
            .zip(&self.symbols)
            .find(|(w, _)| k.meets_hyperplane(w, self.cfg.tols.tol))
            .map(|(_, s)| s.clone())
    }

    fn best_gamma(&self) -> f64 {
        self.best.as_ref().map_or(1.0, |b| b.1.worst)
    }

    fn outcome(&self, status: SearchStatus, cone: Option<PolyhedralCone>, eval: Option<&Evaluation>, refutation: Option<Refutation>) -> Step {
        let delta = match status {
            SearchStatus::FoundDeltaInvariant => eval.map(|e| e.worst),
            _ => None,
        };
        Step::Done(Box::new(SearchOutcome {
            status,
            cone,
            delta,
            per_matrix_gamma: eval.map(|e| e.per_matrix.clone()).unwrap_or_default(),
            iterations: self.iter,
            trace: self.trace.clone(),
            refutation,
            common_invariant_subspace_suspected: self.suspected,
        }))
    }

    /// Best strictly invariant cone found so far, or `Inconclusive`.
    fn give_up(&self) -> Step {
        match &self.best {
            Some((k, e)) if e.worst < 1.0 => self.outcome(SearchStatus::FoundDeltaInvariant, Some(k.clone()), Some(e), None),
            _ => self.outcome(SearchStatus::Inconclusive, None, None, None),
        }
    }

    /// New points for the current cone: the images of its generators and
    /// the inflated points of every image against a spread-out set of up to
    /// `2n` companion images. Several companions surround each image on
    /// every side, which is what eventually puts it in the interior once
    /// `n > 2`. Points already inside the current cone are dropped.
    fn candidates(&self, rho: f64) -> Vec<Vector> {
        let per_matrix: Vec<Vec<Vector>> = self
            .sys
            .matrices()
            .par_iter()
            .map(|(_, a)| {
                let imgs: Vec<Vector> = self
                    .cone
                    .generators()
                    .iter()
                    .map(|g| a.apply(g))
                    .filter(|v| v.norm() > 0.0)
                    .map(|v| v.normalize())
                    .collect();
                let companions = thin(&imgs, 2 * self.sys.dim());
                let mut out = imgs.clone();
                for y in &imgs {
                    for x in companions.iter().filter(|x| angle(x, y) > 1e-12) {
                        let lambda = self
                            .normals
                            .iter()
                            .filter_map(|w| scale_to_hyperplane(x, y, w).ok())
                            .fold(f64::NEG_INFINITY, f64::max);
                        if lambda.is_finite() && lambda > 0.0 {
                            if let Ok(p) = inflate_point(&(x * lambda), y, rho) {
                                let p = match self.phase {
                                    Phase::Sound => p,
                                    Phase::Relaxed => self.keep_off_hyperplanes(y, &p),
                                };
                                out.push(p.normalize());
                            }
                        }
                    }
                }
                out
            })
            .collect();
        self.filter_candidates(per_matrix.into_iter().flatten().collect())
    }

    /// Keeps candidates that lie outside the current cone by more than the
    /// growth threshold, at most one per grid cell of the working
    /// resolution, preferring the point farthest outside. Any subset of the
    /// candidates is still an inner approximation, so this never costs
    /// soundness.
    fn filter_candidates(&self, points: Vec<Vector>) -> Vec<Vector> {
        let diameter = angular_diameter(self.cone.generators());
        let cell = (self.cfg.resolution * diameter).max(1e-12);
        let threshold = self.growth_threshold();
        let mut scored: Vec<(f64, Vector)> = points
            .into_iter()
            .map(|p| (self.cone.min_margin(&p), p))
            .filter(|(m, _)| *m < -threshold)
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut seen = std::collections::HashSet::new();
        scored
            .into_iter()
            .filter(|(_, p)| {
                let key: Vec<i64> = p.iter().map(|x| (x / cell).round() as i64).collect();
                seen.insert(key)
            })
            .map(|(_, p)| p)
            .collect()
    }

    /// Growth below which an iteration counts as stagnant.
    fn growth_threshold(&self) -> f64 {
        self.cfg.growth_eps * angular_diameter(self.cone.generators()).max(1e-6)
    }

    /// Smallest normalized distance of `v` to the positive side of the
    /// hyperplanes.
    fn hyperplane_margin(&self, v: &Vector) -> f64 {
        let n = v.norm();
        self.normals.iter().map(|w| w.dot(v) / n).fold(f64::INFINITY, f64::min)
    }

    /// Moves `p` back towards `y` until its hyperplane margin is at least
    /// half of the margin of `y`. Only used while relaxing, where crossing a
    /// hyperplane proves nothing and would just end the search.
    fn keep_off_hyperplanes(&self, y: &Vector, p: &Vector) -> Vector {
        let floor = 0.5 * self.hyperplane_margin(y);
        if self.hyperplane_margin(p) >= floor {
            return p.clone();
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if self.hyperplane_margin(&(y + (p - y) * mid)) >= floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        y + (p - y) * lo
    }

    /// Perturbs the center of a lower-dimensional cone into every missing
    /// direction, staying on the positive side of all hyperplanes.
    fn solidify(&self, k: &PolyhedralCone) -> Vec<Vector> {
        let n = k.dim();
        let center = k.generators().iter().fold(Vector::zeros(n), |acc, g| acc + g).normalize();
        let dirs = orthogonal_complement(k.generators(), n, self.cfg.tols.tol);
        let mut eps: f64 = 0.5;
        for w in &self.normals {
            let c = w.dot(&center);
            for u in &dirs {
                let s = w.dot(u).abs();
                if s > 0.0 {
                    eps = eps.min(0.5 * c / s);
                }
            }
        }
        let mut gens = k.generators().to_vec();
        for u in &dirs {
            gens.push((&center + u * eps).normalize());
            gens.push((&center - u * eps).normalize());
        }
        gens
    }

    fn push_trace(&mut self, eval: &Evaluation, flags: &[&str]) {
        let phase = match self.phase {
            Phase::Sound => "sound",
            Phase::Relaxed => "relaxed",
        };
        let inclusion = if eval.all_strict { "strict" } else { "not_strict" };
        let mut f = vec![phase, inclusion];
        f.extend_from_slice(flags);
        if self.thinned {
            f.push("thinned");
        }
        self.trace.push(TraceRow {
            iter: self.iter,
            generator_count: self.cone.generators().len(),
            best_gamma: self.best_gamma(),
            verdict_flags: f.join(";"),
        });
    }

    /// One iteration of the search.
    pub fn step(&mut self) -> Result<Step, SearchError> {
        let eval = self.evaluate(&self.cone)?;
        if eval.all_strict && eval.worst < self.best_gamma() {
            self.best = Some((self.cone.clone(), eval.clone()));
        }
        if eval.all_strict && eval.worst <= self.cfg.gamma {
            self.push_trace(&eval, &["found"]);
            return Ok(self.outcome(SearchStatus::FoundGammaContracting, Some(self.cone.clone()), Some(&eval), None));
        }
        if let Some(symbol) = self.hyperplane_hit(&self.cone) {
            self.push_trace(&eval, &["hyperplane"]);
            return Ok(match self.phase {
                Phase::Sound => self.outcome(
                    SearchStatus::No,
                    Some(self.cone.clone()),
                    None,
                    Some(Refutation::MeetsHyperplane { iteration: self.iter, symbol }),
                ),
                Phase::Relaxed => self.give_up(),
            });
        }
        if self.iter >= self.cfg.max_iters {
            self.push_trace(&eval, &["max_iters"]);
            return Ok(self.give_up());
        }

        let rho = rho_for_gamma(self.internal_gamma).map_err(|_| SearchError::InvalidGamma(self.internal_gamma))?;
        let mut gens = self.cone.generators().to_vec();
        gens.extend(self.candidates(rho));
        if let Some(cap) = self.cfg.max_generators {
            let before = gens.len();
            gens = thin(&gens, cap);
            self.thinned |= gens.len() < before;
        }
        let next = match PolyhedralCone::from_generators(&gens, self.cfg.tols.tol) {
            Ok(k) => k,
            Err(ConeError::NotPointed) => {
                self.push_trace(&eval, &["not_pointed"]);
                return Ok(match self.phase {
                    Phase::Sound => self.outcome(
                        SearchStatus::No,
                        None,
                        None,
                        Some(Refutation::NotPointed { iteration: self.iter }),
                    ),
                    Phase::Relaxed => self.give_up(),
                });
            }
            Err(e) => unreachable!("generators are nonzero and finite: {e}"),
        };
        let growth = next
            .generators()
            .iter()
            .map(|g| (-self.cone.min_margin(g)).max(0.0))
            .fold(0.0, f64::max);

        if growth <= self.growth_threshold() {
            self.push_trace(&eval, &["stagnant"]);
            if !self.cfg.relax || (self.phase == Phase::Relaxed && self.internal_gamma <= MIN_INTERNAL_GAMMA) {
                return Ok(self.give_up());
            }
            let delta = if eval.all_strict { eval.worst } else { 1.0 };
            let lowered = (self.internal_gamma * (self.cfg.gamma / delta).powi(2)).min(self.internal_gamma * 0.9);
            self.phase = Phase::Relaxed;
            self.internal_gamma = lowered.max(MIN_INTERNAL_GAMMA);
            log::debug!("search stalled at ratio {delta:.6}; internal target lowered to {:.6}", self.internal_gamma);
        } else {
            self.push_trace(&eval, &[]);
        }
        self.cone = if self.phase == Phase::Relaxed && !next.is_solid() {
            match PolyhedralCone::from_generators(&self.solidify(&next), self.cfg.tols.tol) {
                Ok(k) => k,
                Err(_) => return Ok(self.give_up()),
            }
        } else {
            next
        };
        self.iter += 1;
        Ok(Step::Continue)
    }
}

const MIN_INTERNAL_GAMMA: f64 = 1e-3;
const GROWTH_EPS: f64 = 1e-3;

/// Runs the search to completion.
pub fn find_contracting_cone(sys: &SwitchedSystem, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    let mut search = match Search::new(sys, cfg.clone())? {
        Ok(s) => s,
        Err(done) => return Ok(*done),
    };
    loop {
        if let Step::Done(out) = search.step()? {
            return Ok(*out);
        }
    }
}
