//! The predict-apply cycle and its candidate-selection strategies.

pub mod beam;
pub mod predictor;
pub mod protocol;

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use beam::{beam_step, greedy_beam_step, normalize, rank_candidates, Beam, Candidate};
pub use predictor::{FrequencyPredictor, OraclePredictor, Predictor, PredictorError, Query, RandomPredictor};
pub use protocol::{Message, RemotePredictor};

use crate::error::{Error, Result};
use crate::hypergraph::{build_hypergraph, extract_theorem_dag, first_topological_sort, serialize_for_predictor};
use crate::lang::{FormalSystem, Problem, Tokenizer};
use crate::reasoner::ProblemState;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// A uniformly random applicable theorem per cycle.
    Rs,
    Bfs,
    Dfs,
    /// Beam search over cumulative probability products.
    Bs,
    /// Beam search that replaces inapplicable candidates.
    Gb,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rs" => Strategy::Rs,
            "bfs" => Strategy::Bfs,
            "dfs" => Strategy::Dfs,
            "bs" => Strategy::Bs,
            "gb" => Strategy::Gb,
            other => return Err(Error::Config(format!("unknown strategy `{other}`"))),
        })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Rs => "rs",
            Strategy::Bfs => "bfs",
            Strategy::Dfs => "dfs",
            Strategy::Bs => "bs",
            Strategy::Gb => "gb",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub strategy: Strategy,
    pub beam_size: usize,
    pub timeout: Duration,
    pub seed: u64,
    pub tokenizer: Tokenizer,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Gb,
            beam_size: 1,
            timeout: Duration::from_secs(600),
            seed: 0,
            tokenizer: Tokenizer::open(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchStatus {
    Solved,
    Unsolved,
    Timeout,
    PredictorError,
}

#[derive(Debug, Clone)]
pub struct SearchResult<S: Scalar = crate::Rational> {
    pub status: SearchStatus,
    /// Theorems of the goal's ancestor applications, in a replayable order.
    pub theorem_seqs: Vec<String>,
    pub elapsed: Duration,
    /// States whose successors were generated.
    pub expanded: usize,
    pub error: Option<String>,
    /// The solving state, when there is one.
    pub state: Option<ProblemState<S>>,
}

struct Run {
    start: Instant,
    deadline: Instant,
    expanded: usize,
}

impl Run {
    fn finish<S: Scalar>(&self, status: SearchStatus, state: Option<ProblemState<S>>) -> Result<SearchResult<S>> {
        let theorem_seqs = match (&state, status) {
            (Some(s), SearchStatus::Solved) => solution_sequence(s)?,
            _ => Vec::new(),
        };
        Ok(SearchResult {
            status,
            theorem_seqs,
            elapsed: self.start.elapsed(),
            expanded: self.expanded,
            error: None,
            state: if status == SearchStatus::Solved { state } else { None },
        })
    }

    fn timed_out(&self) -> bool {
        Instant::now() >= self.deadline
    }
}

/// Theorem names of the goal's ancestor applications in application order.
pub fn solution_sequence<S: Scalar>(state: &ProblemState<S>) -> Result<Vec<String>> {
    let dag = extract_theorem_dag(&build_hypergraph(state))?;
    Ok(first_topological_sort(&dag)?.into_iter().map(|v| dag.vertices[v].theorem.clone()).collect())
}

/// Runs one search for `problem`.
pub fn pac_solve<S: Scalar>(
    system: &Arc<FormalSystem>,
    problem: &Problem,
    predictor: &mut dyn Predictor,
    config: &SearchConfig,
) -> Result<SearchResult<S>> {
    if matches!(config.strategy, Strategy::Bs | Strategy::Gb) && config.beam_size < 1 {
        return Err(Error::Config("beam size must be at least 1".into()));
    }
    let start = Instant::now();
    let mut run = Run { start, deadline: start + config.timeout, expanded: 0 };
    let root = ProblemState::<S>::new(system.clone(), problem)?;
    if root.is_solved() {
        return run.finish(SearchStatus::Solved, Some(root));
    }
    match config.strategy {
        Strategy::Rs => random_search(system, root, config.seed, &mut run),
        Strategy::Bfs | Strategy::Dfs => exhaustive(system, root, config.strategy == Strategy::Bfs, &mut run),
        Strategy::Bs | Strategy::Gb => beam_search(system, problem, root, predictor, config, &mut run),
    }
}

fn random_search<S: Scalar>(system: &Arc<FormalSystem>, mut state: ProblemState<S>, seed: u64, run: &mut Run) -> Result<SearchResult<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if run.timed_out() {
            return run.finish(SearchStatus::Timeout, None);
        }
        let applicable = state.applicable_theorems();
        if applicable.is_empty() {
            return run.finish(SearchStatus::Unsolved, None);
        }
        let pick = applicable[rng.gen_range(0..applicable.len())];
        run.expanded += 1;
        state.apply_theorem(&system.theorems[pick].name)?;
        if state.is_solved() {
            return run.finish(SearchStatus::Solved, Some(state));
        }
    }
}

fn exhaustive<S: Scalar>(system: &Arc<FormalSystem>, root: ProblemState<S>, breadth_first: bool, run: &mut Run) -> Result<SearchResult<S>> {
    let mut seen: HashSet<u64> = [root.store().fingerprint()].into();
    let mut frontier: VecDeque<ProblemState<S>> = [root].into();
    let m = system.theorem_count();
    while let Some(state) = if breadth_first { frontier.pop_front() } else { frontier.pop_back() } {
        run.expanded += 1;
        let mut children = Vec::new();
        for t in 0..m {
            if run.timed_out() {
                return run.finish(SearchStatus::Timeout, None);
            }
            let mut child = state.clone();
            if !child.apply_theorem(&system.theorems[t].name)?.changed() {
                continue;
            }
            if child.is_solved() {
                return run.finish(SearchStatus::Solved, Some(child));
            }
            if seen.insert(child.store().fingerprint()) {
                children.push(child);
            }
        }
        if !breadth_first {
            // lowest theorem index is explored first
            children.reverse();
        }
        frontier.extend(children);
    }
    run.finish(SearchStatus::Unsolved, None)
}

fn beam_search<S: Scalar>(
    system: &Arc<FormalSystem>,
    problem: &Problem,
    root: ProblemState<S>,
    predictor: &mut dyn Predictor,
    config: &SearchConfig,
    run: &mut Run,
) -> Result<SearchResult<S>> {
    let m = system.theorem_count();
    let mut beams = vec![Beam::root(root)];
    loop {
        if let Some(b) = beams.iter().find(|b| b.state.is_solved()) {
            return run.finish(SearchStatus::Solved, Some(b.state.clone()));
        }
        if run.timed_out() {
            return run.finish(SearchStatus::Timeout, None);
        }
        let live: Vec<Beam<S>> = beams.into_iter().filter(|b| b.alive).collect();
        if live.is_empty() {
            return run.finish(SearchStatus::Unsolved, None);
        }
        let mut scores = Vec::with_capacity(live.len());
        for b in &live {
            let graph = serialize_for_predictor(&build_hypergraph(&b.state), &config.tokenizer);
            let raw = predictor
                .score(&Query { problem_id: Some(&problem.id), graph: &graph })
                .and_then(|s| if s.len() == m { Ok(s) } else { Err(PredictorError::Length { expected: m, got: s.len() }) });
            match raw {
                Ok(s) => scores.push(normalize(&s)),
                Err(e) => {
                    let mut out = run.finish::<S>(SearchStatus::PredictorError, None)?;
                    out.error = Some(e.to_string());
                    return Ok(out);
                }
            }
        }
        run.expanded += live.len();
        beams = match config.strategy {
            Strategy::Bs => beam_step(system, &live, &scores, config.beam_size)?,
            _ => greedy_beam_step(system, &live, &scores, config.beam_size)?,
        };
    }
}
