use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hypergraph::SerializedGraph;
use crate::lang::{detokenize, FormalSystem, Problem};
use crate::reasoner::ProblemState;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PredictorError {
    #[error("predictor connection: {0}")]
    Io(String),
    #[error("predictor protocol: {0}")]
    Protocol(String),
    #[error("expected {expected} scores, got {got}")]
    Length { expected: usize, got: usize },
}

impl From<std::io::Error> for PredictorError {
    fn from(e: std::io::Error) -> Self {
        PredictorError::Io(e.to_string())
    }
}

/// A state to score. `problem_id` is absent when the request came over the
/// wire.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub problem_id: Option<&'a str>,
    pub graph: &'a SerializedGraph,
}

/// Scores every theorem of the vocabulary for a state.
pub trait Predictor {
    fn score(&mut self, query: &Query<'_>) -> Result<Vec<f64>, PredictorError>;
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn score(&mut self, query: &Query<'_>) -> Result<Vec<f64>, PredictorError> {
        (**self).score(query)
    }
}

/// Independent uniform scores.
#[derive(Debug, Clone)]
pub struct RandomPredictor {
    m: usize,
    rng: ChaCha8Rng,
}

impl RandomPredictor {
    pub fn new(m: usize, seed: u64) -> Self {
        Self { m, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Predictor for RandomPredictor {
    fn score(&mut self, _: &Query<'_>) -> Result<Vec<f64>, PredictorError> {
        Ok((0..self.m).map(|_| self.rng.gen::<f64>()).collect())
    }
}

/// How often each theorem appears in annotated solutions.
#[derive(Debug, Clone)]
pub struct FrequencyPredictor {
    scores: Vec<f64>,
}

impl FrequencyPredictor {
    pub fn new(system: &FormalSystem, problems: &[Problem]) -> Self {
        let mut counts = vec![0usize; system.theorem_count()];
        for step in problems.iter().flat_map(|p| &p.theorem_seq) {
            if let Some(i) = system.theorem_index(&step.name) {
                counts[i] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let scores = counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect();
        Self { scores }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl Predictor for FrequencyPredictor {
    fn score(&mut self, _: &Query<'_>) -> Result<Vec<f64>, PredictorError> {
        Ok(self.scores.clone())
    }
}

/// Puts all mass on annotated theorems applicable in the queried state,
/// falling back to every annotated theorem.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    system: Arc<FormalSystem>,
    problems: BTreeMap<String, Problem>,
}

impl OraclePredictor {
    pub fn new(system: Arc<FormalSystem>, problems: &[Problem]) -> Self {
        Self { system, problems: problems.iter().map(|p| (p.id.clone(), p.clone())).collect() }
    }
}

impl Predictor for OraclePredictor {
    fn score(&mut self, query: &Query<'_>) -> Result<Vec<f64>, PredictorError> {
        let m = self.system.theorem_count();
        let problem = query
            .problem_id
            .and_then(|id| self.problems.get(id))
            .ok_or_else(|| PredictorError::Protocol("oracle needs a known problem id".into()))?;
        let annotated: BTreeSet<usize> =
            problem.theorem_seq.iter().filter_map(|s| self.system.theorem_index(&s.name)).collect();
        let bodies = query
            .graph
            .nodes
            .iter()
            .map(|tokens| detokenize(tokens, &self.system))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(|e| PredictorError::Protocol(e.to_string()))?;
        let state = ProblemState::<crate::Rational>::from_bodies(self.system.clone(), &bodies, problem.goal.clone())
            .map_err(|e| PredictorError::Protocol(e.to_string()))?;
        let applicable: BTreeSet<usize> = state.applicable_theorems().into_iter().collect();
        let hits: BTreeSet<usize> = annotated.intersection(&applicable).copied().collect();
        let chosen = if hits.is_empty() { &annotated } else { &hits };
        Ok((0..m).map(|i| if chosen.contains(&i) { 1.0 } else { 0.0 }).collect())
    }
}
