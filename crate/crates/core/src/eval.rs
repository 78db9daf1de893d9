//! Theorem prediction accuracy and problem-solving success rate.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{difficulty_level, Level, StepSample};
use crate::lang::{FormalSystem, Problem};
use crate::scalar::Scalar;
use crate::search::{pac_solve, Predictor, Query, SearchConfig, SearchStatus};

/// Indices of the `k` highest scores; ties go to the lower index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub total: usize,
    pub solved: usize,
    pub pssr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub solved: usize,
    pub timeouts: usize,
    pub predictor_errors: usize,
    pub pssr: Option<f64>,
    /// Levels with no problems are absent.
    pub per_level: BTreeMap<Level, LevelReport>,
    pub samples: usize,
    pub hits: usize,
    pub tpa: Option<f64>,
    pub wall_time_s: f64,
}

fn percent(n: usize, d: usize) -> f64 {
    100.0 * n as f64 / d as f64
}

impl EvalReport {
    fn refresh(&mut self) {
        self.pssr = (self.total > 0).then(|| percent(self.solved, self.total));
        self.tpa = (self.samples > 0).then(|| percent(self.hits, self.samples));
        for l in self.per_level.values_mut() {
            l.pssr = percent(l.solved, l.total);
        }
    }

    /// Combines reports over disjoint problem or sample shards.
    pub fn merge(&self, other: &EvalReport) -> EvalReport {
        let mut out = self.clone();
        out.total += other.total;
        out.solved += other.solved;
        out.timeouts += other.timeouts;
        out.predictor_errors += other.predictor_errors;
        out.samples += other.samples;
        out.hits += other.hits;
        out.wall_time_s += other.wall_time_s;
        for (level, r) in &other.per_level {
            let e = out.per_level.entry(*level).or_default();
            e.total += r.total;
            e.solved += r.solved;
        }
        out.refresh();
        out
    }
}

/// Percent of samples whose top-`k` theorems meet the truth set.
pub fn eval_tpa(system: &FormalSystem, samples: &[StepSample], predictor: &mut dyn Predictor, k: usize) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let start = Instant::now();
    let mut report = EvalReport::default();
    for s in samples {
        let scores = predictor
            .score(&Query { problem_id: Some(&s.problem_id), graph: &s.graph })
            .map_err(|e| Error::Config(e.to_string()))?;
        let hit = top_k(&scores, k).iter().any(|&i| s.truth.iter().any(|t| system.theorem_index(t) == Some(i)));
        report.samples += 1;
        report.hits += usize::from(hit);
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.refresh();
    Ok(report)
}

/// Runs the search on every problem and reports success overall and by
/// annotated difficulty.
pub fn eval_pssr<S: Scalar>(
    system: &Arc<FormalSystem>,
    problems: &[Problem],
    predictor: &mut dyn Predictor,
    config: &SearchConfig,
) -> Result<EvalReport> {
    let start = Instant::now();
    let mut report = EvalReport::default();
    for p in problems {
        let level = difficulty_level(p.annotated_length())?;
        let result = pac_solve::<S>(system, p, predictor, config)?;
        let solved = result.status == SearchStatus::Solved;
        report.total += 1;
        report.solved += usize::from(solved);
        report.timeouts += usize::from(result.status == SearchStatus::Timeout);
        report.predictor_errors += usize::from(result.status == SearchStatus::PredictorError);
        let l = report.per_level.entry(level).or_default();
        l.total += 1;
        l.solved += usize::from(solved);
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.refresh();
    Ok(report)
}
