//! The formal language: terms, surface syntax, system and problem documents,
//! and the tokenizer.

pub mod problem;
pub mod syntax;
pub mod system;
pub mod term;
pub mod tokenizer;

pub use problem::{parse_problem, AnnotatedStep, Goal, GoalKind, Problem, ProblemDoc};
pub use system::{parse_system, DeclKind, FormalSystem, PredicateDef, Slot, SystemDoc, TheoremDef};
pub use term::Term;
pub use tokenizer::{detokenize, tokenize, Tokenizer};
