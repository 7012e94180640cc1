//! Polyhedral-cone toolkit for positivity analysis of switched linear
//! systems.
//!
//! * [`cone`]: polyhedral cones in generator/facet form.
//! * [`hilbert`]: Hilbert projective metric and Birkhoff contraction ratios.
//! * [`automaton`]: labeled automata constraining the switching signal.
//! * [`verify`]: (strict) path-complete positivity certificates.
//! * [`search`]: search for a common contracting cone of a matrix family.
//! * [`sim`]: trajectory simulation and projective convergence measurements.

pub mod automaton;
pub mod cone;
pub mod hilbert;
pub mod linalg;
pub mod num;
pub mod search;
pub mod sim;
pub mod verify;
