use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::Result;
use crate::lang::FormalSystem;
use crate::reasoner::ProblemState;
use crate::scalar::Scalar;

/// A search head: its state, cumulative probability and theorem history.
#[derive(Debug, Clone)]
pub struct Beam<S: Scalar = crate::Rational> {
    pub state: ProblemState<S>,
    pub prob: f64,
    pub history: Vec<String>,
    /// False when the last application changed nothing.
    pub alive: bool,
}

impl<S: Scalar> Beam<S> {
    pub fn root(state: ProblemState<S>) -> Self {
        Self { state, prob: 1.0, history: Vec::new(), alive: true }
    }
}

/// Scores rescaled to sum 1; negative or non-finite entries count as 0 and
/// an all-zero vector becomes uniform.
pub fn normalize(scores: &[f64]) -> Vec<f64> {
    let clean: Vec<f64> = scores.iter().map(|&s| if s.is_finite() && s > 0.0 { s } else { 0.0 }).collect();
    let total: f64 = clean.iter().sum();
    if total > 0.0 {
        clean.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / scores.len().max(1) as f64; scores.len()]
    }
}

/// A child candidate `(beam, theorem, p_beam · p_theorem)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub beam: usize,
    pub theorem: usize,
    pub prob: f64,
}

/// Candidate order: higher product first, then lower theorem index, then
/// lower beam index.
pub fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.prob.total_cmp(&a.prob).then(a.theorem.cmp(&b.theorem)).then(a.beam.cmp(&b.beam))
}

/// Every product of a beam probability and one of its theorem scores, best
/// first.
pub fn rank_candidates(beam_probs: &[f64], scores: &[Vec<f64>]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = beam_probs
        .iter()
        .zip(scores)
        .enumerate()
        .flat_map(|(beam, (&p, s))| s.iter().enumerate().map(move |(theorem, &q)| Candidate { beam, theorem, prob: p * q }))
        .collect();
    out.sort_by(candidate_order);
    out
}

fn expand<S: Scalar>(system: &Arc<FormalSystem>, beams: &[Beam<S>], c: &Candidate) -> Result<Beam<S>> {
    let parent = &beams[c.beam];
    let name = &system.theorems[c.theorem].name;
    let mut state = parent.state.clone();
    let applied = state.apply_theorem(name)?;
    let mut history = parent.history.clone();
    history.push(name.clone());
    Ok(Beam { state, prob: c.prob, history, alive: applied.changed() })
}

/// Plain beam search step: the `k` best products become children, dead or
/// alive.
pub fn beam_step<S: Scalar>(system: &Arc<FormalSystem>, beams: &[Beam<S>], scores: &[Vec<f64>], k: usize) -> Result<Vec<Beam<S>>> {
    let probs: Vec<f64> = beams.iter().map(|b| b.prob).collect();
    rank_candidates(&probs, scores).iter().take(k).map(|c| expand(system, beams, c)).collect()
}

/// Greedy beam step: inapplicable candidates are skipped until `k` live
/// children exist or candidates run out.
pub fn greedy_beam_step<S: Scalar>(
    system: &Arc<FormalSystem>,
    beams: &[Beam<S>],
    scores: &[Vec<f64>],
    k: usize,
) -> Result<Vec<Beam<S>>> {
    let probs: Vec<f64> = beams.iter().map(|b| b.prob).collect();
    let mut out = Vec::with_capacity(k);
    for c in rank_candidates(&probs, scores) {
        if out.len() == k {
            break;
        }
        let child = expand(system, beams, &c)?;
        if child.alive {
            out.push(child);
        }
    }
    Ok(out)
}
