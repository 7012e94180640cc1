//! Path-positivity certificates checked against simulated trajectories, and
//! the reduction of path-positivity to plain positivity on one state.

mod common;

use std::collections::BTreeMap;

use common::*;
use conekit::automaton::{Automaton, RawAutomaton};
use conekit::cone::{Inclusion, PolyhedralCone, Tolerances};
use conekit::linalg::{SquareMatrix, Vector};
use conekit::sim::{simulate_random_pairs, SimConfig};
use conekit::verify::{check_path_positive, check_positive, ConeAssignment, SwitchedSystem, Verdict};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    system: SwitchedSystem,
    automaton: Automaton,
    cones: ConeAssignment,
}

fn two_state_diagonal() -> Instance {
    let s = |v: &str| v.to_string();
    let cone = |g: [[f64; 2]; 2]| {
        PolyhedralCone::from_generators(&[Vector::from_row_slice(&g[0]), Vector::from_row_slice(&g[1])], TOL).unwrap()
    };
    Instance {
        system: SwitchedSystem::from_pairs(vec![
            ("0", SquareMatrix::diag(&[5.0, 1.0])),
            ("1", SquareMatrix::diag(&[1.0, 3.0])),
        ])
        .unwrap(),
        automaton: Automaton::validate(&RawAutomaton {
            states: vec![s("q0"), s("q1")],
            alphabet: vec![s("0"), s("1")],
            transitions: vec![[s("q0"), s("0"), s("q1")], [s("q1"), s("0"), s("q1")], [s("q1"), s("1"), s("q0")]],
        })
        .unwrap(),
        cones: ConeAssignment::new(BTreeMap::from([
            (s("q0"), cone([[1.0, 1.0], [1.0, -1.0]])),
            (s("q1"), cone([[4.0, 1.0], [4.0, -1.0]])),
        ])),
    }
}

fn invertible(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let t = DMatrix::identity(n, n) + gaussian_matrix(n, rng).matrix() * 0.4;
        if t.determinant().abs() > 0.2 {
            return t;
        }
    }
}

/// Random automaton whose every state has an outgoing transition, one
/// symbol per transition, simplicial cones `T_q(orthant)` and matrices
/// `T_to P T_from^-1` with entrywise positive `P`: strictly path-positive
/// by construction.
fn random_path_positive(n: usize, states: usize, rng: &mut ChaCha8Rng) -> Instance {
    let frames: Vec<DMatrix<f64>> = (0..states).map(|_| invertible(n, rng)).collect();
    let names: Vec<String> = (0..states).map(|i| format!("s{i}")).collect();
    let mut transitions = Vec::new();
    let mut matrices = Vec::new();
    for from in 0..states {
        let outgoing = rng.gen_range(1..3);
        for _ in 0..outgoing {
            let to = rng.gen_range(0..states);
            let sym = format!("a{}", matrices.len());
            let p = positive_matrix(n, 0.1, 2.0, rng);
            let a = &frames[to] * p.matrix() * frames[from].clone().try_inverse().unwrap();
            matrices.push((sym.clone(), SquareMatrix::new(a).unwrap()));
            transitions.push([names[from].clone(), sym, names[to].clone()]);
        }
    }
    let alphabet = matrices.iter().map(|(s, _)| s.clone()).collect();
    let cones = names
        .iter()
        .zip(&frames)
        .map(|(name, t)| {
            let cols: Vec<Vector> = (0..n).map(|j| t.column(j).into_owned()).collect();
            (name.clone(), PolyhedralCone::from_generators(&cols, TOL).unwrap())
        })
        .collect();
    Instance {
        system: SwitchedSystem::from_pairs(matrices).unwrap(),
        automaton: Automaton::validate(&RawAutomaton {
            states: names,
            alphabet,
            transitions,
        })
        .unwrap(),
        cones: ConeAssignment::new(cones),
    }
}

/// Every step of every simulated pair contracts by the certificate's ratio.
fn assert_certificate_holds(inst: &Instance, pairs: usize, steps: usize, seed: u64) -> f64 {
    let cert = check_path_positive(&inst.system, &inst.automaton, &inst.cones, &Tolerances::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::StrictlyPathPositive);
    let gamma = cert.global_gamma;
    let cfg = SimConfig {
        steps,
        seed,
        ..SimConfig::default()
    };
    let runs = simulate_random_pairs(&inst.system, &inst.automaton, &inst.cones, pairs, &cfg).unwrap();
    for run in &runs {
        let d = run.hilbert_series().expect("trajectories stay in their cones");
        for k in 0..steps {
            assert!(d[k + 1] <= gamma * d[k] + 1e-9, "step {k}: {} > {gamma} * {}", d[k + 1], d[k]);
            assert!(d[k + 1] <= gamma.powi(k as i32 + 1) * d[0] + 1e-9);
        }
    }
    gamma
}

#[test]
fn two_state_certificate_bounds_every_trajectory() {
    let gamma = assert_certificate_holds(&two_state_diagonal(), 1000, 50, 11);
    assert!((gamma - 0.8).abs() < 1e-12);
}

#[test]
fn normalized_gap_settles_monotonically() {
    let inst = two_state_diagonal();
    let cfg = SimConfig {
        steps: 200,
        seed: 5,
        ..SimConfig::default()
    };
    for run in simulate_random_pairs(&inst.system, &inst.automaton, &inst.cones, 100, &cfg).unwrap() {
        let gaps = run.gaps();
        let tail = &gaps[gaps.len() * 3 / 4..];
        for w in tail.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} after {}", w[1], w[0]);
        }
        assert!(gaps[gaps.len() - 1] < 1e-12);
    }
}

#[test]
fn positive_matrices_settle_monotonically_on_the_orthant() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = rng.gen_range(2..5);
        let sys = SwitchedSystem::from_pairs(vec![
            ("a", positive_matrix(n, 0.1, 2.0, &mut rng)),
            ("b", positive_matrix(n, 0.1, 2.0, &mut rng)),
        ])
        .unwrap();
        let aut = Automaton::arbitrary_switching("q", &sys.symbols()).unwrap();
        let cones = ConeAssignment::common(&aut, &PolyhedralCone::orthant(n));
        let cfg = SimConfig {
            steps: 50,
            seed: rng.gen(),
            ..SimConfig::default()
        };
        for run in simulate_random_pairs(&sys, &aut, &cones, 20, &cfg).unwrap() {
            let gaps = run.gaps();
            for w in gaps[gaps.len() * 3 / 4..].windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn certificates_bound_random_trajectories(seed in any::<u64>(), n in 2usize..4, states in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_path_positive(n, states, &mut rng);
        let gamma = assert_certificate_holds(&inst, 40, 30, seed);
        prop_assert!(gamma < 1.0);
    }

    #[test]
    fn one_state_verdict_reduces_to_positivity(seed in any::<u64>(), n in 2usize..4, count in 1usize..4, positive in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tols = Tolerances::default();
        let k = if positive { PolyhedralCone::orthant(n) } else { random_cone(n, &mut rng) };
        let matrices: Vec<(String, SquareMatrix)> = (0..count)
            .map(|i| {
                let a = if positive {
                    positive_matrix(n, 0.0, 2.0, &mut rng)
                } else {
                    gaussian_matrix(n, &mut rng)
                };
                (format!("m{i}"), a)
            })
            .collect();
        let sys = SwitchedSystem::from_pairs(matrices).unwrap();
        let aut = Automaton::arbitrary_switching("q", &sys.symbols()).unwrap();
        let cert = check_path_positive(&sys, &aut, &ConeAssignment::common(&aut, &k), &tols).unwrap();
        let checks: Vec<_> = sys.matrices().values().map(|a| check_positive(a, &k, &tols).unwrap()).collect();
        let worst = checks.iter().map(|c| c.inclusion).min().unwrap();
        let expected = match worst {
            Inclusion::Strict => Verdict::StrictlyPathPositive,
            Inclusion::NonStrict => Verdict::PathPositive,
            Inclusion::No => Verdict::NotPathPositive,
        };
        prop_assert_eq!(cert.verdict, expected);
        let max_gamma = checks.iter().map(|c| c.gamma).fold(0.0, f64::max);
        prop_assert_eq!(cert.global_gamma, max_gamma);
    }
}
