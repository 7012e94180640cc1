//! Labeled automata describing which switching sequences are admissible.
//!
//! No state is singled out as initial: a switching signal may start in any
//! state.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("automaton has no states")]
    NoStates,
    #[error("transition {index} references undeclared {kind} {name:?}")]
    DanglingReference {
        index: usize,
        kind: &'static str,
        name: String,
    },
    #[error("state {0:?} has no outgoing transition")]
    DeadState(String),
    #[error("{kind} {name:?} is declared twice")]
    Duplicate { kind: &'static str, name: String },
    #[error("transition {0:?} is listed twice")]
    DuplicateTransition([String; 3]),
}

/// Unvalidated JSON form:
/// `{"states": [...], "alphabet": [...], "transitions": [["q0", "0", "q1"], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAutomaton {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub transitions: Vec<[String; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: usize,
    pub symbol: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Automaton {
    states: Vec<String>,
    alphabet: Vec<String>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
}

/// A state path together with the labels read along it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub states: Vec<usize>,
    pub symbols: Vec<usize>,
}

/// A simple cycle: `states[k] --symbols[k]--> states[(k + 1) % len]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub states: Vec<usize>,
    pub symbols: Vec<usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The same cycle read from position `shift`.
    pub fn rotated(&self, shift: usize) -> Cycle {
        let r = self.len();
        Cycle {
            states: (0..r).map(|k| self.states[(k + shift) % r]).collect(),
            symbols: (0..r).map(|k| self.symbols[(k + shift) % r]).collect(),
        }
    }
}

fn index_names(names: &[String], kind: &'static str) -> Result<HashMap<String, usize>, AutomatonError> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i).is_some() {
            return Err(AutomatonError::Duplicate {
                kind,
                name: n.clone(),
            });
        }
    }
    Ok(map)
}

impl Automaton {
    pub fn validate(raw: &RawAutomaton) -> Result<Self, AutomatonError> {
        if raw.states.is_empty() {
            return Err(AutomatonError::NoStates);
        }
        let states = index_names(&raw.states, "state")?;
        let symbols = index_names(&raw.alphabet, "symbol")?;
        let lookup = |map: &HashMap<String, usize>, kind, name: &String, index| {
            map.get(name).copied().ok_or_else(|| AutomatonError::DanglingReference {
                index,
                kind,
                name: name.clone(),
            })
        };
        let mut seen = BTreeSet::new();
        let mut transitions = Vec::with_capacity(raw.transitions.len());
        for (index, [from, sym, to]) in raw.transitions.iter().enumerate() {
            let t = Transition {
                from: lookup(&states, "state", from, index)?,
                symbol: lookup(&symbols, "symbol", sym, index)?,
                to: lookup(&states, "state", to, index)?,
            };
            if !seen.insert(t) {
                return Err(AutomatonError::DuplicateTransition(raw.transitions[index].clone()));
            }
            transitions.push(t);
        }
        let mut outgoing = vec![Vec::new(); raw.states.len()];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.from].push(i);
        }
        if let Some(dead) = outgoing.iter().position(Vec::is_empty) {
            return Err(AutomatonError::DeadState(raw.states[dead].clone()));
        }
        Ok(Self {
            states: raw.states.clone(),
            alphabet: raw.alphabet.clone(),
            transitions,
            outgoing,
        })
    }

    /// One state named `state` with a self-loop per symbol: unconstrained switching.
    pub fn arbitrary_switching(state: &str, alphabet: &[String]) -> Result<Self, AutomatonError> {
        Self::validate(&RawAutomaton {
            states: vec![state.to_string()],
            alphabet: alphabet.to_vec(),
            transitions: alphabet
                .iter()
                .map(|s| [state.to_string(), s.clone(), state.to_string()])
                .collect(),
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|s| s == name)
    }

    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Transition> {
        self.outgoing[state].iter().map(move |&i| &self.transitions[i])
    }

    pub fn to_raw(&self) -> RawAutomaton {
        RawAutomaton {
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| {
                    [
                        self.states[t.from].clone(),
                        self.alphabet[t.symbol].clone(),
                        self.states[t.to].clone(),
                    ]
                })
                .collect(),
        }
    }

    /// Whether some state path reads `word` (symbol indices).
    pub fn admissible_indices(&self, word: &[usize]) -> bool {
        let mut current = vec![true; self.states.len()];
        for &sym in word {
            let mut next = vec![false; self.states.len()];
            for t in &self.transitions {
                if t.symbol == sym && current[t.from] {
                    next[t.to] = true;
                }
            }
            if !next.iter().any(|&b| b) {
                return false;
            }
            current = next;
        }
        true
    }

    /// Whether some state path reads `word`; unknown symbols make it inadmissible.
    pub fn admissible<S: AsRef<str>>(&self, word: &[S]) -> bool {
        let idx: Option<Vec<usize>> = word.iter().map(|s| self.symbol_index(s.as_ref())).collect();
        idx.is_some_and(|w| self.admissible_indices(&w))
    }

    /// Walk of `length` transitions from `start`, choosing uniformly among
    /// the outgoing transitions at every step.
    pub fn random_walk_from<R: Rng>(&self, start: usize, length: usize, rng: &mut R) -> Walk {
        let mut states = Vec::with_capacity(length + 1);
        let mut symbols = Vec::with_capacity(length);
        let mut q = start;
        states.push(q);
        for _ in 0..length {
            let &ti = self.outgoing[q]
                .choose(rng)
                .expect("validated automata have no dead states");
            let t = self.transitions[ti];
            symbols.push(t.symbol);
            q = t.to;
            states.push(q);
        }
        Walk { states, symbols }
    }

    /// Seeded walk from a uniformly chosen start state.
    pub fn random_walk(&self, length: usize, seed: u64) -> Walk {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = rng.gen_range(0..self.states.len());
        self.random_walk_from(start, length, &mut rng)
    }

    /// All simple cycles with at most `max_len` transitions. Each cycle is
    /// reported once, anchored at its smallest state index.
    pub fn simple_cycles(&self, max_len: usize) -> Vec<Cycle> {
        let mut out = Vec::new();
        if max_len == 0 {
            return out;
        }
        for start in 0..self.states.len() {
            let mut states = vec![start];
            let mut symbols = Vec::new();
            let mut on_path = vec![false; self.states.len()];
            on_path[start] = true;
            self.extend_cycles(start, max_len, &mut states, &mut symbols, &mut on_path, &mut out);
        }
        out
    }

    fn extend_cycles(
        &self,
        start: usize,
        max_len: usize,
        states: &mut Vec<usize>,
        symbols: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Cycle>,
    ) {
        let q = *states.last().expect("path is never empty");
        for &ti in &self.outgoing[q] {
            let t = self.transitions[ti];
            if t.to == start {
                let mut syms = symbols.clone();
                syms.push(t.symbol);
                out.push(Cycle {
                    states: states.clone(),
                    symbols: syms,
                });
            } else if t.to > start && !on_path[t.to] && symbols.len() + 1 < max_len {
                on_path[t.to] = true;
                states.push(t.to);
                symbols.push(t.symbol);
                self.extend_cycles(start, max_len, states, symbols, on_path, out);
                symbols.pop();
                states.pop();
                on_path[t.to] = false;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn tr(a: &str, b: &str, c: &str) -> [String; 3] {
        [a.into(), b.into(), c.into()]
    }

    fn arbitrary() -> Automaton {
        Automaton::arbitrary_switching("q", &s(&["0", "1"])).unwrap()
    }

    fn alternation() -> Automaton {
        Automaton::validate(&RawAutomaton {
            states: s(&["a", "b"]),
            alphabet: s(&["0", "1"]),
            transitions: vec![tr("a", "0", "b"), tr("b", "1", "a")],
        })
        .unwrap()
    }

    #[test]
    fn validation_errors() {
        let empty = RawAutomaton {
            states: s(&["a"]),
            alphabet: s(&["0"]),
            transitions: vec![],
        };
        assert_eq!(Automaton::validate(&empty), Err(AutomatonError::DeadState("a".into())));
        let dangling = RawAutomaton {
            states: s(&["a"]),
            alphabet: s(&["0"]),
            transitions: vec![tr("a", "0", "zz")],
        };
        assert!(matches!(
            Automaton::validate(&dangling),
            Err(AutomatonError::DanglingReference { kind: "state", .. })
        ));
        let dup = RawAutomaton {
            states: s(&["a"]),
            alphabet: s(&["0"]),
            transitions: vec![tr("a", "0", "a"), tr("a", "0", "a")],
        };
        assert!(matches!(Automaton::validate(&dup), Err(AutomatonError::DuplicateTransition(_))));
        let bad_sym = RawAutomaton {
            states: s(&["a"]),
            alphabet: s(&["0"]),
            transitions: vec![tr("a", "7", "a")],
        };
        assert!(matches!(
            Automaton::validate(&bad_sym),
            Err(AutomatonError::DanglingReference { kind: "symbol", .. })
        ));
    }

    #[test]
    fn admissibility() {
        let alt = alternation();
        assert!(alt.admissible(&["0", "1", "0", "1"]));
        assert!(alt.admissible(&["1", "0"]));
        assert!(!alt.admissible(&["0", "0", "1", "1"]));
        assert!(alt.admissible::<&str>(&[]));
        assert!(!alt.admissible(&["2"]));
        assert!(arbitrary().admissible(&["0", "0", "1", "1"]));
    }

    #[test]
    fn walks() {
        let w = alternation().random_walk(0, 3);
        assert_eq!(w.states.len(), 1);
        assert!(w.symbols.is_empty());

        let w = alternation().random_walk(20, 11);
        for pair in w.symbols.windows(2) {
            assert_ne!(pair[0], pair[1]);
        }
        assert_eq!(w, alternation().random_walk(20, 11));

        let w = arbitrary().random_walk(4000, 5);
        let ones = w.symbols.iter().filter(|&&x| x == 1).count();
        assert!((ones as f64 / 4000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn cycles() {
        let c = arbitrary().simple_cycles(1);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].symbols, vec![0]);
        assert_eq!(c[1].symbols, vec![1]);
        assert!(arbitrary().simple_cycles(0).is_empty());

        let alt = alternation();
        assert!(alt.simple_cycles(1).is_empty());
        let c = alt.simple_cycles(2);
        assert_eq!(c, vec![Cycle { states: vec![0, 1], symbols: vec![0, 1] }]);
        let r = c[0].rotated(1);
        assert_eq!(r.states, vec![1, 0]);
        assert_eq!(r.symbols, vec![1, 0]);
    }

    #[test]
    fn cycles_of_three_state_graph() {
        // a -> b -> c -> a, plus b -> a and a self-loop on c
        let a = Automaton::validate(&RawAutomaton {
            states: s(&["a", "b", "c"]),
            alphabet: s(&["x", "y"]),
            transitions: vec![
                tr("a", "x", "b"),
                tr("b", "x", "c"),
                tr("c", "y", "a"),
                tr("b", "y", "a"),
                tr("c", "x", "c"),
            ],
        })
        .unwrap();
        let c = a.simple_cycles(6);
        assert_eq!(c.len(), 3);
        assert_eq!(a.simple_cycles(2).len(), 2);
        for cyc in &c {
            let word: Vec<usize> = cyc.symbols.iter().cycle().take(cyc.len() * 3).copied().collect();
            assert!(a.admissible_indices(&word));
        }
    }
}
