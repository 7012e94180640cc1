//! Simulation of `x(k+1) = A_{s(k)} x(k)` under admissible switching, with
//! projective convergence measurements.
//!
//! States are renormalized after every step; projective quantities do not
//! see the scale, and the accumulated log-scale is kept in the trace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::Automaton;
use crate::cone::PolyhedralCone;
use crate::hilbert::{distance, Extended, HilbertError};
use crate::linalg::Vector;
use crate::verify::{ConeAssignment, CyclePf, SwitchedSystem, VerifyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("initial state {which} is not in the cone of state {state:?}")]
    NotInCone { which: &'static str, state: String },
    #[error("no automaton state has a cone containing both initial vectors")]
    NoStartState,
    #[error("unknown start state {0:?}")]
    UnknownState(String),
    #[error("initial vector has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("trajectory collapsed to zero at step {0}")]
    Collapsed(usize),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub steps: usize,
    pub seed: u64,
    /// Start state; when absent, chosen uniformly among the states whose
    /// cone contains both initial vectors (or among all states without cones).
    pub start_state: Option<String>,
    pub tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps: 50,
            seed: 0,
            start_state: None,
            tol: 1e-9,
        }
    }
}

/// One row of a trajectory trace. `symbol` is the label applied to go from
/// step `k` to `k + 1`, so the last row has none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub step: usize,
    pub symbol: Option<String>,
    pub state: String,
    /// Distance in the cone of the current state; absent without cones or
    /// once a point has left the cone.
    pub hilbert_d: Option<Extended>,
    pub normalized_gap: f64,
    /// Accumulated `log |x(k)|` for the first trajectory.
    pub log_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPair {
    pub rows: Vec<SimRow>,
    /// Normalized states `x(k) / |x(k)|`.
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
}

impl TrajectoryPair {
    pub fn hilbert_series(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.hilbert_d.map(Extended::to_f64)).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.normalized_gap).collect()
    }
}

fn unit(v: &Vector, step: usize) -> Result<(Vector, f64), SimError> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(SimError::Collapsed(step));
    }
    Ok((v / n, n))
}

fn cone_distance(k: &PolyhedralCone, x: &Vector, y: &Vector, tol: f64) -> Option<Extended> {
    match distance(k, x, y, tol) {
        Ok(d) => Some(d),
        Err(HilbertError::NotInCone { .. }) => None,
        Err(e) => {
            log::debug!("distance unavailable: {e}");
            None
        }
    }
}

fn pick_start(
    automaton: &Automaton,
    cones: Option<&ConeAssignment>,
    x0: &Vector,
    y0: &Vector,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<usize, SimError> {
    if let Some(name) = &cfg.start_state {
        let q = automaton
            .state_index(name)
            .ok_or_else(|| SimError::UnknownState(name.clone()))?;
        if let Some(c) = cones {
            let k = c.get(name)?;
            for (which, v) in [("x0", x0), ("y0", y0)] {
                if !k.contains(v, cfg.tol) {
                    return Err(SimError::NotInCone {
                        which,
                        state: name.clone(),
                    });
                }
            }
        }
        return Ok(q);
    }
    let candidates: Vec<usize> = match cones {
        None => (0..automaton.states().len()).collect(),
        Some(c) => {
            let mut v = Vec::new();
            for (q, name) in automaton.states().iter().enumerate() {
                let k = c.get(name)?;
                if k.contains(x0, cfg.tol) && k.contains(y0, cfg.tol) {
                    v.push(q);
                }
            }
            v
        }
    };
    if candidates.is_empty() {
        return Err(SimError::NoStartState);
    }
    Ok(candidates[rng.gen_range(0..candidates.len())])
}

/// Simulates two trajectories driven by the same random admissible switching
/// signal. Seeded runs are reproducible.
pub fn simulate_pair(
    sys: &SwitchedSystem,
    automaton: &Automaton,
    cones: Option<&ConeAssignment>,
    x0: &Vector,
    y0: &Vector,
    cfg: &SimConfig,
) -> Result<TrajectoryPair, SimError> {
    for v in [x0, y0] {
        if v.len() != sys.dim() {
            return Err(SimError::DimensionMismatch {
                expected: sys.dim(),
                found: v.len(),
            });
        }
    }
    for sym in automaton.alphabet() {
        sys.get(sym)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = pick_start(automaton, cones, x0, y0, cfg, &mut rng)?;
    let walk = automaton.random_walk_from(start, cfg.steps, &mut rng);

    let (mut x, nx) = unit(x0, 0)?;
    let (mut y, _) = unit(y0, 0)?;
    let mut log_scale = nx.ln();
    let mut out = TrajectoryPair {
        rows: Vec::with_capacity(cfg.steps + 1),
        x: Vec::with_capacity(cfg.steps + 1),
        y: Vec::with_capacity(cfg.steps + 1),
    };
    for k in 0..=cfg.steps {
        let q = &automaton.states()[walk.states[k]];
        let hilbert_d = match cones {
            Some(c) => cone_distance(c.get(q)?, &x, &y, cfg.tol),
            None => None,
        };
        let symbol = walk.symbols.get(k).map(|&s| automaton.alphabet()[s].clone());
        out.rows.push(SimRow {
            step: k,
            symbol: symbol.clone(),
            state: q.clone(),
            hilbert_d,
            normalized_gap: (&x - &y).norm(),
            log_scale,
        });
        out.x.push(x.clone());
        out.y.push(y.clone());
        if let Some(sym) = symbol {
            let a = sys.get(&sym)?;
            let (nx_, sx) = unit(&a.apply(&x), k + 1)?;
            let (ny_, _) = unit(&a.apply(&y), k + 1)?;
            x = nx_;
            y = ny_;
            log_scale += sx.ln();
        }
    }
    Ok(out)
}

/// A random point in the interior of a solid cone: a combination of its
/// generators with weights in `[0.05, 1)`.
pub fn random_interior_point<R: Rng>(k: &PolyhedralCone, rng: &mut R) -> Vector {
    let mut p = Vector::zeros(k.dim());
    for g in k.generators() {
        p += g * rng.gen_range(0.05..1.0);
    }
    p
}

/// Runs `count` independent pairs in parallel. Pair `i` uses seed
/// `cfg.seed + i`; its initial vectors are drawn inside the cone of a
/// uniformly chosen state, so this needs a cone assignment.
pub fn simulate_random_pairs(
    sys: &SwitchedSystem,
    automaton: &Automaton,
    cones: &ConeAssignment,
    count: usize,
    cfg: &SimConfig,
) -> Result<Vec<TrajectoryPair>, SimError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let q = match &cfg.start_state {
                Some(s) => s.clone(),
                None => automaton.states()[rng.gen_range(0..automaton.states().len())].clone(),
            };
            let k = cones.get(&q)?;
            let x0 = random_interior_point(k, &mut rng);
            let y0 = random_interior_point(k, &mut rng);
            let run_cfg = SimConfig {
                seed,
                start_state: Some(q),
                ..cfg.clone()
            };
            simulate_pair(sys, automaton, Some(cones), &x0, &y0, &run_cfg)
        })
        .collect()
}

/// Angle between two nonzero vectors, computed stably as `2 asin(|u - v| / 2)`
/// on the normalized vectors.
pub fn angle(a: &Vector, b: &Vector) -> f64 {
    let d = (a.normalize() - b.normalize()).norm();
    2.0 * (d / 2.0).min(1.0).asin()
}

/// Drives `x0` around the cycle `periods` times, then returns the largest
/// angle between the trajectory and the cycle's rays over one more period.
pub fn cycle_attractor_check(
    sys: &SwitchedSystem,
    cycle: &CyclePf,
    x0: &Vector,
    periods: usize,
) -> Result<f64, SimError> {
    if x0.len() != sys.dim() {
        return Err(SimError::DimensionMismatch {
            expected: sys.dim(),
            found: x0.len(),
        });
    }
    let mats = cycle
        .labels
        .iter()
        .map(|l| sys.get(l))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut x, _) = unit(x0, 0)?;
    let mut step = 0;
    for _ in 0..periods {
        for a in &mats {
            step += 1;
            x = unit(&a.apply(&x), step)?.0;
        }
    }
    let mut worst: f64 = 0.0;
    for (a, ray) in mats.iter().zip(&cycle.rays) {
        worst = worst.max(angle(&x, ray));
        step += 1;
        x = unit(&a.apply(&x), step)?.0;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::RawAutomaton;
    use crate::linalg::{EigenOptions, SquareMatrix};
    use crate::verify::cycle_pf;
    use nalgebra::dvector;

    fn example() -> (SwitchedSystem, Automaton, ConeAssignment) {
        let s = |v: &str| v.to_string();
        let sys = SwitchedSystem::from_pairs(vec![
            ("0", SquareMatrix::diag(&[5.0, 1.0])),
            ("1", SquareMatrix::diag(&[1.0, 3.0])),
        ])
        .unwrap();
        let aut = Automaton::validate(&RawAutomaton {
            states: vec![s("q0"), s("q1")],
            alphabet: vec![s("0"), s("1")],
            transitions: vec![
                [s("q0"), s("0"), s("q1")],
                [s("q1"), s("0"), s("q1")],
                [s("q1"), s("1"), s("q0")],
            ],
        })
        .unwrap();
        let k0 = PolyhedralCone::from_generators(&[dvector![1.0, 1.0], dvector![1.0, -1.0]], 1e-9).unwrap();
        let k1 = PolyhedralCone::from_generators(&[dvector![4.0, 1.0], dvector![4.0, -1.0]], 1e-9).unwrap();
        (sys, aut, ConeAssignment::new([(s("q0"), k0), (s("q1"), k1)].into()))
    }

    #[test]
    fn pair_converges_projectively() {
        let (sys, aut, cones) = example();
        let cfg = SimConfig::default();
        let t = simulate_pair(&sys, &aut, Some(&cones), &dvector![1.0, 0.5], &dvector![1.0, -0.5], &cfg).unwrap();
        assert_eq!(t.rows.len(), 51);
        assert_eq!(t.rows[0].state, "q0");
        assert!(t.rows[50].normalized_gap < 1e-6);
        assert!(t.rows[50].symbol.is_none());
        for w in t.rows.windows(2) {
            assert!(aut
                .admissible(&[w[0].symbol.as_deref().unwrap()]));
        }
        let d = t.hilbert_series().unwrap();
        assert!(d[50] < d[0]);
    }

    #[test]
    fn identical_starts_and_zero_steps() {
        let (sys, aut, cones) = example();
        let cfg = SimConfig {
            steps: 10,
            ..Default::default()
        };
        let x = dvector![1.0, 0.2];
        let t = simulate_pair(&sys, &aut, Some(&cones), &x, &x, &cfg).unwrap();
        assert!(t.gaps().iter().all(|&g| g == 0.0));
        let cfg = SimConfig {
            steps: 0,
            ..Default::default()
        };
        let t = simulate_pair(&sys, &aut, None, &x, &x, &cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].hilbert_d, None);
    }

    #[test]
    fn seeded_runs_repeat() {
        let (sys, aut, cones) = example();
        let cfg = SimConfig {
            seed: 7,
            ..Default::default()
        };
        let a = simulate_random_pairs(&sys, &aut, &cones, 4, &cfg).unwrap();
        let b = simulate_random_pairs(&sys, &aut, &cones, 4, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn start_outside_every_cone() {
        let (sys, aut, cones) = example();
        let e = simulate_pair(&sys, &aut, Some(&cones), &dvector![1.0, 2.0], &dvector![1.0, 0.0], &SimConfig::default());
        assert_eq!(e, Err(SimError::NoStartState));
        let cfg = SimConfig {
            start_state: Some("q1".into()),
            ..Default::default()
        };
        let e = simulate_pair(&sys, &aut, Some(&cones), &dvector![1.0, 0.5], &dvector![1.0, 0.0], &cfg);
        assert!(matches!(e, Err(SimError::NotInCone { which: "x0", .. })));
    }

    #[test]
    fn attractor_on_cycle() {
        let (sys, aut, cones) = example();
        let out = cycle_pf(&sys, &aut, Some(&cones), 2, &EigenOptions::default()).unwrap();
        let pf = out.iter().find(|o| o.cycle.len() == 2).unwrap().result.clone().unwrap();
        let on_ray = cycle_attractor_check(&sys, &pf, &pf.rays[0], 0).unwrap();
        assert!(on_ray < 1e-12);
        let dev = cycle_attractor_check(&sys, &pf, &dvector![1.0, 0.7], 30).unwrap();
        assert!(dev < 1e-6, "{dev}");
        let start = cycle_attractor_check(&sys, &pf, &dvector![1.0, 0.7], 0).unwrap();
        assert!(start > dev);
    }

    #[test]
    fn angle_is_stable() {
        assert!((angle(&dvector![1.0, 0.0], &dvector![0.0, 2.0]) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(angle(&dvector![1.0, 1.0], &dvector![3.0, 3.0]) < 1e-15);
    }
}
