//! Formal plane-geometry reasoning: a condition store, an algebra engine,
//! theorem application, solution hypergraphs, and predictor-guided search.

pub mod algebra;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod hypergraph;
pub mod lang;
pub mod reasoner;
pub mod scalar;
pub mod search;
pub mod store;

pub use error::{Error, Result};

/// Exact scalar used by default throughout the engine.
pub type Rational = num_rational::BigRational;

pub type ExactAlgebra = algebra::AlgebraSystem<Rational>;
pub type FloatAlgebra = algebra::AlgebraSystem<f64>;

pub type ExactState = reasoner::ProblemState<Rational>;
pub type FloatState = reasoner::ProblemState<f64>;

pub use corpus::{Corpus, Vocab};
pub use hypergraph::{SerializedGraph, SolutionHypergraph, StepSample, TheoremDag};
pub use lang::{FormalSystem, Problem, Term};
pub use reasoner::ProblemState;
pub use search::{pac_solve, SearchConfig, SearchResult, SearchStatus, Strategy};
