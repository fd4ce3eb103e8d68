//! Maximum-a-posteriori inference of Boolean task specifications from
//! demonstrations.
//!
//! The pipeline: a [`ProbabilisticAutomaton`] describes the dynamics, a
//! [`DemoSet`] holds the demonstrations, a [`ConceptLattice`] organizes the
//! candidate past-time temporal formulas by subset inclusion, and the
//! [`infer`] module searches that lattice for the formula with the largest
//! information gain over a uniformly random agent.
//!
//! Numeric code is written against [`num_traits`] so the scoring maths run on
//! `f32` or `f64` and the counting backends can produce exact rationals.

pub mod automaton;
pub mod bdd;
pub mod concept;
mod error;
pub mod infer;
pub mod posterior;
pub mod ptltl;
pub mod reconstruction;
pub mod satprob;
pub mod scalar;

pub use automaton::{DemoSet, GridworldSpec, ProbabilisticAutomaton, Trace};
pub use concept::{ConceptLattice, GrammarConfig};
pub use error::{Error, Result};
pub use infer::InferenceResult;
pub use posterior::{SatStats, ScoreMode};
pub use ptltl::{Alphabet, Formula, Valuation};
pub use satprob::{Backend, SatQueryEngine};
pub use scalar::Weight;

/// Probabilities and scores used throughout the public API.
pub type Prob = f64;

/// Exact probabilities produced by the counting backends.
pub type ExactProb = num_rational::BigRational;

/// Satisfaction statistics in double precision.
pub type Stats = SatStats<f64>;

/// Satisfaction statistics in single precision.
pub type Stats32 = SatStats<f32>;
