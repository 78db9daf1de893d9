//! Solution hypergraphs, their predictor-facing serialization, theorem DAGs,
//! and step-sample generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{FormalSystem, Goal, GoalKind, Problem, Term, Tokenizer};
use crate::reasoner::ProblemState;
use crate::scalar::Scalar;
use crate::store::{Condition, EdgeLabel, HyperedgeLabel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperedge {
    pub label: EdgeLabel,
    pub premises: Vec<usize>,
    pub conclusions: Vec<usize>,
}

/// Conditions as hypernodes, one hyperedge per theorem application.
#[derive(Debug, Clone)]
pub struct SolutionHypergraph {
    pub nodes: Vec<Condition>,
    pub edges: Vec<Hyperedge>,
    pub goal: Goal,
    pub goal_node: Option<usize>,
}

pub fn build_hypergraph<S: Scalar>(state: &ProblemState<S>) -> SolutionHypergraph {
    let nodes = state.store().conditions().to_vec();
    let mut edges: Vec<Hyperedge> = Vec::new();
    let mut slot: BTreeMap<&EdgeLabel, usize> = BTreeMap::new();
    for c in &nodes {
        if c.theorem == EdgeLabel::Given {
            continue;
        }
        let i = *slot.entry(&c.theorem).or_insert_with(|| {
            edges.push(Hyperedge { label: c.theorem.clone(), premises: Vec::new(), conclusions: Vec::new() });
            edges.len() - 1
        });
        let e = &mut edges[i];
        e.conclusions.push(c.id);
        for &p in &c.premises {
            if !e.premises.contains(&p) {
                e.premises.push(p);
            }
        }
    }
    for e in &mut edges {
        e.premises.sort_unstable();
    }
    SolutionHypergraph { nodes, edges, goal: state.goal().clone(), goal_node: state.goal_node() }
}

/// One compressed adjacency row: the nonzero entries, their positions
/// `1..=len`, and their 1-based column indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub values: Vec<String>,
    pub pe: Vec<usize>,
    pub se: Vec<usize>,
}

impl EdgeRow {
    /// Compresses a dense row; `None` marks an empty cell.
    pub fn from_dense<T: AsRef<str>>(row: &[Option<T>]) -> Self {
        Self::from_sparse(row.iter().enumerate().filter_map(|(j, v)| v.as_ref().map(|v| (j, v.as_ref().to_string()))))
    }

    /// Builds a row from `(0-based column, token)` pairs in column order.
    pub fn from_sparse(entries: impl IntoIterator<Item = (usize, String)>) -> Self {
        let mut row = EdgeRow::default();
        for (j, v) in entries {
            row.values.push(v);
            row.pe.push(row.values.len());
            row.se.push(j + 1);
        }
        row
    }
}

/// The form predictors consume.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedGraph {
    pub nodes: Vec<Vec<String>>,
    pub edges: Vec<EdgeRow>,
    pub goal: Vec<String>,
}

/// Goal tokens: the goal kind followed by the target's tokens.
pub fn goal_tokens(goal: &Goal, tokenizer: &Tokenizer) -> Vec<String> {
    let mut out = vec![format!("{:?}", goal.kind)];
    out.extend(tokenizer.tokenize(&goal.target));
    out
}

pub fn serialize_for_predictor(h: &SolutionHypergraph, tokenizer: &Tokenizer) -> SerializedGraph {
    let n = h.nodes.len();
    let mut cells: Vec<BTreeMap<usize, &str>> = vec![BTreeMap::new(); n];
    for e in &h.edges {
        let token = e.label.token();
        for &p in &e.premises {
            for &c in &e.conclusions {
                cells[p].entry(c).or_insert(token);
                cells[c].entry(p).or_insert(token);
            }
        }
    }
    SerializedGraph {
        nodes: h.nodes.iter().map(|c| tokenizer.tokenize(&c.body)).collect(),
        edges: cells
            .into_iter()
            .map(|row| EdgeRow::from_sparse(row.into_iter().map(|(j, t)| (j, t.to_string()))))
            .collect(),
        goal: goal_tokens(&h.goal, tokenizer),
    }
}

/// Theorem applications with the hypernodes removed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TheoremDag {
    pub vertices: Vec<HyperedgeLabel>,
    pub arcs: BTreeSet<(usize, usize)>,
}

impl TheoremDag {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True when `order` lists every vertex once and respects every arc.
    pub fn is_topological(&self, order: &[usize]) -> bool {
        let mut pos = vec![usize::MAX; self.len()];
        for (i, &v) in order.iter().enumerate() {
            if v >= self.len() || pos[v] != usize::MAX {
                return false;
            }
            pos[v] = i;
        }
        order.len() == self.len() && self.arcs.iter().all(|&(u, v)| pos[u] < pos[v])
    }
}

/// Theorem applications the goal depends on, with condition-flow arcs.
pub fn extract_theorem_dag(h: &SolutionHypergraph) -> Result<TheoremDag> {
    let goal = h.goal_node.ok_or(Error::GoalNotReached)?;
    let mut seen = BTreeSet::new();
    let mut stack = vec![goal];
    while let Some(id) = stack.pop() {
        if seen.insert(id) {
            stack.extend(h.nodes[id].premises.iter().copied());
        }
    }
    let mut vertices: Vec<HyperedgeLabel> = Vec::new();
    let mut producer: BTreeMap<usize, usize> = BTreeMap::new();
    for &id in &seen {
        if let EdgeLabel::Theorem(label) = &h.nodes[id].theorem {
            let v = match vertices.iter().position(|l| l == label) {
                Some(v) => v,
                None => {
                    vertices.push(label.clone());
                    vertices.len() - 1
                }
            };
            producer.insert(id, v);
        }
    }
    let mut arcs = BTreeSet::new();
    for &id in &seen {
        let Some(&v) = producer.get(&id) else { continue };
        for p in &h.nodes[id].premises {
            if let Some(&u) = producer.get(p) {
                if u != v {
                    arcs.insert((u, v));
                }
            }
        }
    }
    Ok(TheoremDag { vertices, arcs })
}

fn kahn(dag: &TheoremDag, mut pick: impl FnMut(usize) -> usize) -> Result<Vec<usize>> {
    let n = dag.len();
    let mut indegree = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in &dag.arcs {
        indegree[v] += 1;
        succ[u].push(v);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let v = ready.remove(pick(ready.len()));
        order.push(v);
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                let at = ready.partition_point(|&r| r < w);
                ready.insert(at, w);
            }
        }
    }
    if order.len() != n {
        return Err(Error::Cycle);
    }
    Ok(order)
}

/// Linear extension choosing uniformly among ready vertices.
pub fn random_topological_sort(dag: &TheoremDag, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kahn(dag, |n| rng.gen_range(0..n))
}

/// Linear extension taking the earliest ready application first.
pub fn first_topological_sort(dag: &TheoremDag) -> Result<Vec<usize>> {
    kahn(dag, |_| 0)
}

/// One training pair: a state and every theorem applicable in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSample {
    pub problem_id: String,
    pub step: usize,
    #[serde(flatten)]
    pub graph: SerializedGraph,
    pub truth: Vec<String>,
}

/// Replays the annotated solution; errors if it does not reach the goal.
pub fn replay_annotation<S: Scalar>(system: &Arc<FormalSystem>, problem: &Problem) -> Result<ProblemState<S>> {
    let mut state = ProblemState::<S>::new(system.clone(), problem)?;
    for step in &problem.theorem_seq {
        if state.is_solved() {
            break;
        }
        state.apply_instance(&step.name, &step.binding)?;
    }
    if !state.is_solved() {
        return Err(Error::AnnotationMismatch(problem.id.clone()));
    }
    Ok(state)
}

/// Replays DAG vertices in `order`, one binding-level application each.
pub fn replay_order<S: Scalar>(
    system: &Arc<FormalSystem>,
    problem: &Problem,
    dag: &TheoremDag,
    order: &[usize],
    mut before_step: impl FnMut(usize, &ProblemState<S>),
) -> Result<ProblemState<S>> {
    let mut state = ProblemState::<S>::new(system.clone(), problem)?;
    for (i, &v) in order.iter().enumerate() {
        before_step(i, &state);
        let label = &dag.vertices[v];
        state.apply_instance(&label.theorem, &label.binding)?;
    }
    Ok(state)
}

pub fn generate_step_samples<S: Scalar>(
    system: &Arc<FormalSystem>,
    problem: &Problem,
    seed: u64,
    tokenizer: &Tokenizer,
) -> Result<Vec<StepSample>> {
    let solved = replay_annotation::<S>(system, problem)?;
    let dag = extract_theorem_dag(&build_hypergraph(&solved))?;
    let order = random_topological_sort(&dag, seed)?;
    let mut samples = Vec::with_capacity(order.len());
    let end = replay_order::<S>(system, problem, &dag, &order, |step, state| {
        samples.push(StepSample {
            problem_id: problem.id.clone(),
            step,
            graph: serialize_for_predictor(&build_hypergraph(state), tokenizer),
            truth: state.applicable_theorems().into_iter().map(|t| system.theorems[t].name.clone()).collect(),
        });
    })?;
    if !end.is_solved() {
        return Err(Error::AnnotationMismatch(problem.id.clone()));
    }
    Ok(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
}

impl Level {
    pub const ALL: [Level; 6] = [Level::L1, Level::L2, Level::L3, Level::L4, Level::L5, Level::L6];
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Difficulty by annotated solution length.
pub fn difficulty_level(l: usize) -> Result<Level> {
    Ok(match l {
        0 => return Err(Error::Config("annotated length must be at least 1".into())),
        1..=2 => Level::L1,
        3..=4 => Level::L2,
        5..=6 => Level::L3,
        7..=8 => Level::L4,
        9..=10 => Level::L5,
        _ => Level::L6,
    })
}

fn mentions_points(t: &Term) -> bool {
    match t {
        Term::Points(_) => true,
        Term::Num(_) => false,
        Term::App { args, .. } => args.iter().any(mentions_points),
    }
}

/// Numbered human-readable solution over the goal's ancestors.
pub fn render_solution(h: &SolutionHypergraph) -> Result<String> {
    let dag = extract_theorem_dag(h)?;
    let order = first_topological_sort(&dag)?;
    let bodies = |ids: &mut dyn Iterator<Item = usize>| ids.map(|i| h.nodes[i].body.to_string()).collect::<Vec<_>>().join("; ");
    let mut out = String::new();
    for (n, &v) in order.iter().enumerate() {
        let label = &dag.vertices[v];
        let edge = h
            .edges
            .iter()
            .find(|e| matches!(&e.label, EdgeLabel::Theorem(l) if l == label))
            .expect("dag vertices come from edges");
        let binding: Vec<String> = label.binding.iter().map(|(k, p)| format!("{k}={p}")).collect();
        out.push_str(&format!(
            "{}. By {} [{}], from ({}) we get ({})\n",
            n + 1,
            label.theorem,
            binding.join(","),
            bodies(&mut edge.premises.iter().copied()),
            bodies(&mut edge.conclusions.iter().copied()),
        ));
    }
    let goal = h.goal_node.expect("dag extraction checked the goal");
    match h.goal.kind {
        GoalKind::Value => {
            // operands of a canonical Equal are sorted, so the value may sit on either side
            let args = h.nodes[goal].body.args();
            let value = args.iter().find(|a| !mentions_points(a)).unwrap_or(&args[1]);
            out.push_str(&format!("Therefore {} = {}\n", h.goal.target, value));
        }
        GoalKind::Relation => out.push_str(&format!("Therefore {}\n", h.goal.target)),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_problem, parse_system};
    use crate::Rational;

    const SYSTEM: &str = r#"{
      "predicates": [
        {"name": "Parallel", "slots": [{"kind":"line","points":2},{"kind":"line","points":2}],
         "symmetries": [[[1,false],[0,false]], [[0,true],[1,true]]]},
        {"name": "Perpendicular", "slots": [{"kind":"line","points":2},{"kind":"line","points":2}],
         "symmetries": [[[1,false],[0,false]], [[0,true],[1,false]], [[0,false],[1,true]]]}
      ],
      "theorems": [
        {"name": "parallel_transitivity", "vars": ["A","B","C","D","E","F"],
         "premises": ["Parallel(AB,CD)", "Parallel(CD,EF)"], "conclusions": ["Parallel(AB,EF)"]},
        {"name": "perpendicular_of_parallel", "vars": ["A","B","C","D","E","F"],
         "premises": ["Parallel(AB,CD)", "Perpendicular(CD,EF)"], "conclusions": ["Perpendicular(AB,EF)"]}
      ]}"#;

    fn system() -> Arc<FormalSystem> {
        Arc::new(parse_system(SYSTEM).unwrap())
    }

    fn problem(sys: &FormalSystem, conds: &[&str], goal: &str, seq: &[&str]) -> Problem {
        let doc = serde_json::json!({
            "id": "t",
            "conditions": conds,
            "goal": {"kind": "Relation", "target": goal},
            "theorem_seq": seq.iter().map(|n| serde_json::json!({"name": n})).collect::<Vec<_>>(),
        });
        parse_problem(&doc.to_string(), sys).unwrap()
    }

    #[test]
    fn golden_row_compression() {
        let dense: Vec<Option<&str>> =
            ["a", "0", "0", "0", "b", "0", "0", "0", "c", "0", "0"].iter().map(|s| (*s != "0").then_some(*s)).collect();
        let row = EdgeRow::from_dense(&dense);
        assert_eq!(serde_json::to_string(&row).unwrap(), r#"{"values":["a","b","c"],"pe":[1,2,3],"se":[1,5,9]}"#);
        assert_eq!(EdgeRow::from_dense::<&str>(&[None, None]), EdgeRow::default());
        let single = EdgeRow::from_dense(&[None, None, None, Some("b")]);
        assert_eq!((single.pe, single.se), (vec![1], vec![4]));
    }

    #[test]
    fn given_nodes_are_isolated() {
        let sys = system();
        let p = problem(&sys, &["Parallel(AB,CD)", "Parallel(CD,EF)", "Parallel(GH,IJ)"], "Parallel(AB,EF)", &[]);
        let s = ProblemState::<Rational>::new(sys, &p).unwrap();
        let h = build_hypergraph(&s);
        assert_eq!((h.nodes.len(), h.edges.len()), (3, 0));
        let g = serialize_for_predictor(&h, &Tokenizer::open());
        assert!(g.edges.iter().all(|r| r.values.is_empty()));
        assert_eq!(g.goal, ["Relation", "Parallel", "A", "B", "E", "F"]);
    }

    #[test]
    fn one_application_is_one_edge() {
        let sys = system();
        let p = problem(&sys, &["Parallel(AB,CD)", "Parallel(CD,EF)"], "Parallel(AB,EF)", &["parallel_transitivity"]);
        let s = replay_annotation::<Rational>(&sys, &p).unwrap();
        let h = build_hypergraph(&s);
        assert_eq!(h.edges.len(), 1);
        assert_eq!((h.edges[0].premises.clone(), h.edges[0].conclusions.clone()), (vec![0, 1], vec![2]));
        let g = serialize_for_predictor(&h, &Tokenizer::open());
        assert_eq!(g.edges[0].se, vec![3]);
        assert_eq!(g.edges[2].se, vec![1, 2]);
        assert_eq!(g.edges[2].values, ["parallel_transitivity", "parallel_transitivity"]);
        let text = render_solution(&h).unwrap();
        assert_eq!(
            text,
            "1. By parallel_transitivity [A=A,B=B,C=C,D=D,E=E,F=F], from (Parallel(AB,CD); Parallel(CD,EF)) we get (Parallel(AB,EF))\n\
             Therefore Parallel(AB,EF)\n"
        );
    }

    #[test]
    fn pruning_drops_unrelated_applications() {
        let sys = system();
        // chain AB∥CD∥EF∥GH plus an unrelated perpendicular fact
        let p = problem(
            &sys,
            &["Parallel(AB,CD)", "Parallel(CD,EF)", "Parallel(EF,GH)", "Parallel(IJ,KL)", "Perpendicular(KL,MN)"],
            "Parallel(AB,GH)",
            &[],
        );
        let mut s = ProblemState::<Rational>::new(sys.clone(), &p).unwrap();
        s.apply_instance("perpendicular_of_parallel", &[('A', 'I')].into()).unwrap();
        s.apply_instance("parallel_transitivity", &[('A', 'A'), ('C', 'C'), ('E', 'E')].into()).unwrap();
        s.apply_instance("parallel_transitivity", &[('A', 'A'), ('C', 'E'), ('E', 'G')].into()).unwrap();
        assert!(s.is_solved());
        let h = build_hypergraph(&s);
        assert_eq!(h.edges.len(), 3);
        let dag = extract_theorem_dag(&h).unwrap();
        assert_eq!(dag.len(), 2);
        assert!(dag.vertices.iter().all(|v| v.theorem == "parallel_transitivity"));
        assert_eq!(dag.arcs, [(0, 1)].into());
        assert!(!render_solution(&h).unwrap().contains("perpendicular"));
    }

    fn all_orders(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in all_orders(n - 1) {
            for i in 0..=rest.len() {
                let mut o = rest.clone();
                o.insert(i, n - 1);
                out.push(o);
            }
        }
        out
    }

    fn dag(n: usize, arcs: &[(usize, usize)]) -> TheoremDag {
        let vertices = (0..n)
            .map(|i| HyperedgeLabel { theorem: format!("t{i}"), binding: Default::default(), instance: i })
            .collect();
        TheoremDag { vertices, arcs: arcs.iter().copied().collect() }
    }

    #[test]
    fn random_sorts_reach_exactly_the_linear_extensions() {
        let d = dag(3, &[(0, 2), (1, 2)]);
        let valid: BTreeSet<Vec<usize>> = all_orders(3).into_iter().filter(|o| d.is_topological(o)).collect();
        assert_eq!(valid.len(), 2);
        let seen: BTreeSet<Vec<usize>> = (0..200).map(|s| random_topological_sort(&d, s).unwrap()).collect();
        assert_eq!(seen, valid);
        assert_eq!(random_topological_sort(&d, 9).unwrap(), random_topological_sort(&d, 9).unwrap());
        let path = dag(3, &[(0, 1), (1, 2)]);
        assert!((0..20).all(|s| random_topological_sort(&path, s).unwrap() == [0, 1, 2]));
        let cyclic = dag(2, &[(0, 1), (1, 0)]);
        assert!(matches!(random_topological_sort(&cyclic, 0), Err(Error::Cycle)));
    }

    #[test]
    fn samples_follow_the_dag() {
        let sys = system();
        let p = problem(&sys, &["Parallel(AB,CD)", "Parallel(CD,EF)"], "Parallel(AB,EF)", &["parallel_transitivity"]);
        let samples = generate_step_samples::<Rational>(&sys, &p, 0, &Tokenizer::open()).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].truth, ["parallel_transitivity"]);
        let line = serde_json::to_string(&samples[0]).unwrap();
        assert!(line.starts_with(r#"{"problem_id":"t","step":0,"nodes":[["Parallel","A","B","C","D"]"#), "{line}");
        assert!(line.ends_with(r#""truth":["parallel_transitivity"]}"#));

        let missing = problem(&sys, &["Parallel(AB,CD)", "Parallel(CD,EF)"], "Parallel(AB,EF)", &["perpendicular_of_parallel"]);
        assert!(matches!(generate_step_samples::<Rational>(&sys, &missing, 0, &Tokenizer::open()), Err(Error::AnnotationMismatch(_))));
    }

    #[test]
    fn levels() {
        let got: Vec<Level> = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 40].iter().map(|&l| difficulty_level(l).unwrap()).collect();
        use Level::*;
        assert_eq!(got, [L1, L1, L2, L2, L3, L3, L4, L4, L5, L5, L6, L6]);
        assert!(difficulty_level(0).is_err());
    }
}
