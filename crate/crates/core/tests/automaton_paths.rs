//! Cycles and random walks of random automata are admissible words.

use conekit::automaton::{Automaton, RawAutomaton};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_automaton(seed: u64) -> Automaton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<String> = (0..rng.gen_range(1..6)).map(|i| format!("q{i}")).collect();
    let alphabet: Vec<String> = (0..rng.gen_range(1..4)).map(|i| format!("s{i}")).collect();
    let mut transitions = Vec::new();
    for from in &states {
        for _ in 0..rng.gen_range(1..4) {
            let sym = alphabet[rng.gen_range(0..alphabet.len())].clone();
            let to = states[rng.gen_range(0..states.len())].clone();
            transitions.push([from.clone(), sym, to]);
        }
    }
    transitions.sort();
    transitions.dedup();
    Automaton::validate(&RawAutomaton {
        states,
        alphabet,
        transitions,
    })
    .expect("every state has an outgoing transition")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn repeated_cycles_are_admissible(seed in any::<u64>(), max_len in 1usize..6, reps in 1usize..4) {
        let aut = random_automaton(seed);
        for c in aut.simple_cycles(max_len) {
            prop_assert!(c.len() <= max_len);
            let word: Vec<usize> = (0..reps).flat_map(|_| c.symbols.iter().copied()).collect();
            prop_assert!(aut.admissible_indices(&word));
            // Consecutive states are joined by the recorded symbols.
            for k in 0..c.len() {
                let (from, to) = (c.states[k], c.states[(k + 1) % c.len()]);
                prop_assert!(aut
                    .outgoing(from)
                    .any(|t| t.symbol == c.symbols[k] && t.to == to));
            }
        }
    }

    #[test]
    fn random_walks_are_admissible(seed in any::<u64>(), len in 0usize..40) {
        let aut = random_automaton(seed);
        let walk = aut.random_walk(len, seed ^ 1);
        prop_assert_eq!(walk.symbols.len(), len);
        prop_assert_eq!(walk.states.len(), len + 1);
        prop_assert!(aut.admissible_indices(&walk.symbols));
    }
}
