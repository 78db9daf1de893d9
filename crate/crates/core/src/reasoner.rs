//! Problem state and theorem application.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use crate::algebra::{AlgebraSystem, Expr, Session, SolveStatus};
use crate::error::{Error, Result};
use crate::lang::{FormalSystem, Goal, GoalKind, Problem, Term, TheoremDef};
use crate::scalar::{Scalar, ValueRepr};
use crate::store::{Added, Binding, ConditionStore, ConditionType, EdgeLabel, HyperedgeLabel};

pub const PREMISE_BUDGET: Duration = Duration::from_millis(20);
pub const GOAL_BUDGET: Duration = Duration::from_millis(100);

/// One way a theorem's premises hold in the current state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub binding: Binding,
    /// Store ids the instantiated premises rest on.
    pub premises: BTreeSet<usize>,
    /// Canonical instantiated conclusions not yet in the store.
    pub conclusions: Vec<Term>,
}

/// What one theorem application changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Applied {
    pub edges: Vec<HyperedgeLabel>,
    pub added: Vec<usize>,
}

impl Applied {
    pub fn changed(&self) -> bool {
        !self.added.is_empty()
    }
}

/// A problem under construction: known conditions, their equations, the
/// goal, and the applications made so far.
#[derive(Debug, Clone)]
pub struct ProblemState<S: Scalar = crate::Rational> {
    system: Arc<FormalSystem>,
    store: ConditionStore,
    algebra: AlgebraSystem<S>,
    goal: Goal,
    goal_node: Option<usize>,
    answer: Option<S>,
    applied: Vec<HyperedgeLabel>,
    steps: usize,
    pub premise_budget: Duration,
    pub goal_budget: Duration,
}

impl<S: Scalar> ProblemState<S> {
    pub fn new(system: Arc<FormalSystem>, problem: &Problem) -> Result<Self> {
        Self::from_bodies(system, &problem.conditions, problem.goal.clone())
    }

    /// State whose conditions are all given.
    pub fn from_bodies(system: Arc<FormalSystem>, bodies: &[Term], goal: Goal) -> Result<Self> {
        let mut state = Self {
            store: ConditionStore::new(system.clone()),
            algebra: AlgebraSystem::new(system.clone()),
            system,
            goal,
            goal_node: None,
            answer: None,
            applied: Vec::new(),
            steps: 0,
            premise_budget: PREMISE_BUDGET,
            goal_budget: GOAL_BUDGET,
        };
        if state.goal.kind == GoalKind::Value {
            state.algebra.to_expr(&state.goal.target)?;
        }
        for body in bodies {
            let ctype = if body.is_equation() { ConditionType::Equation } else { ConditionType::GeometricRelation };
            state.insert(body, ctype, BTreeSet::new(), EdgeLabel::Given)?;
        }
        state.check_goal();
        Ok(state)
    }

    pub fn system(&self) -> &Arc<FormalSystem> {
        &self.system
    }

    pub fn store(&self) -> &ConditionStore {
        &self.store
    }

    pub fn algebra(&self) -> &AlgebraSystem<S> {
        &self.algebra
    }

    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    pub fn is_solved(&self) -> bool {
        self.goal_node.is_some()
    }

    /// Store id of the condition that closes the goal.
    pub fn goal_node(&self) -> Option<usize> {
        self.goal_node
    }

    /// Value of a solved value goal.
    pub fn answer(&self) -> Option<&S> {
        self.answer.as_ref()
    }

    /// Hyperedges added so far, in order.
    pub fn applied(&self) -> &[HyperedgeLabel] {
        &self.applied
    }

    /// Number of theorem applications attempted.
    pub fn steps(&self) -> usize {
        self.steps
    }

    fn insert(&mut self, body: &Term, ctype: ConditionType, premises: BTreeSet<usize>, label: EdgeLabel) -> Result<Added> {
        let added = self.store.add_condition(body, ctype, premises, label)?;
        if added.added && ctype == ConditionType::Equation {
            let canonical = self.store.conditions()[added.id].body.clone();
            self.algebra.add_equation(&canonical, added.id)?;
        }
        Ok(added)
    }

    pub fn match_theorem(&self, theorem: &TheoremDef) -> Vec<Match> {
        self.match_with(theorem, &Binding::new())
    }

    /// Matches whose binding extends `seed`.
    pub fn match_with(&self, theorem: &TheoremDef, seed: &Binding) -> Vec<Match> {
        let patterns: Vec<&Term> = theorem.geometric_premises().collect();
        let mut partials = Vec::new();
        self.unify(theorem.strict, &patterns, seed.clone(), BTreeSet::new(), &mut partials);
        let mut session = self.algebra.session(self.premise_budget);
        let mut out: BTreeMap<Binding, Match> = BTreeMap::new();
        for (binding, mut premises) in partials {
            if out.contains_key(&binding) {
                continue;
            }
            let bind = |c: char| binding.get(&c).copied().unwrap_or(c);
            let mut holds = true;
            for p in theorem.numeric_premises() {
                match self.equation_holds(&p.map_points(&bind), &mut session) {
                    Some(used) => premises.extend(used),
                    None => {
                        holds = false;
                        break;
                    }
                }
            }
            if !holds {
                continue;
            }
            let mut conclusions: Vec<Term> = Vec::new();
            for c in &theorem.conclusions {
                let inst = self.system.canonicalize(&c.map_points(&bind));
                let trivial = inst.is_equation() && inst.args()[0] == inst.args()[1];
                if !trivial && self.store.find_canonical(&inst).is_none() && !conclusions.contains(&inst) {
                    conclusions.push(inst);
                }
            }
            if !conclusions.is_empty() {
                out.insert(binding.clone(), Match { binding, premises, conclusions });
            }
        }
        out.into_values().collect()
    }

    fn unify(
        &self,
        strict: bool,
        patterns: &[&Term],
        binding: Binding,
        premises: BTreeSet<usize>,
        out: &mut Vec<(Binding, BTreeSet<usize>)>,
    ) {
        let Some((pattern, rest)) = patterns.split_first() else {
            out.push((binding, premises));
            return;
        };
        let vars = pattern.point_letters();
        let head = pattern.head().unwrap_or_default();
        for &id in self.store.ids_with_head(head) {
            let cond = &self.store.conditions()[id];
            for spelling in self.system.orbit_points(&cond.body) {
                if spelling.len() != vars.len() {
                    continue;
                }
                let mut b = binding.clone();
                let mut ok = true;
                for (&v, &p) in vars.iter().zip(&spelling) {
                    match b.get(&v) {
                        Some(&bound) if bound != p => ok = false,
                        Some(_) => {}
                        None if strict && b.values().any(|&q| q == p) => ok = false,
                        None => {
                            b.insert(v, p);
                        }
                    }
                    if !ok {
                        break;
                    }
                }
                if ok {
                    let mut prem = premises.clone();
                    prem.insert(id);
                    self.unify(strict, rest, b, prem, out);
                }
            }
        }
    }

    /// Ids establishing an instantiated `Equal` premise, if it holds.
    fn equation_holds(&self, eq: &Term, session: &mut Session<'_, S>) -> Option<BTreeSet<usize>> {
        if let Some(id) = self.store.find(eq) {
            return Some([id].into());
        }
        let [l, r] = eq.args() else { return None };
        let l = self.algebra.to_expr_existing(l).ok()??;
        let r = self.algebra.to_expr_existing(r).ok()??;
        let res = session.solve_expr(&Expr::sub(l, r).simplify());
        match (res.status, res.value) {
            (SolveStatus::Solved, Some(v)) if v.to_f64().abs() < 1e-9 => Some(res.used),
            _ => None,
        }
    }

    /// Theorem indices with at least one productive match.
    pub fn applicable_theorems(&self) -> Vec<usize> {
        self.system
            .theorems
            .iter()
            .enumerate()
            .filter(|(_, t)| !self.match_theorem(t).is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Applies every match of a theorem; each productive binding becomes
    /// one hyperedge.
    pub fn apply_theorem(&mut self, name: &str) -> Result<Applied> {
        self.apply_instance(name, &Binding::new())
    }

    /// Applies the matches whose binding extends `partial`.
    pub fn apply_instance(&mut self, name: &str, partial: &Binding) -> Result<Applied> {
        let theorem = self.system.theorem(name).ok_or_else(|| Error::UnknownTheorem(name.to_string()))?.clone();
        let matches = self.match_with(&theorem, partial);
        let instance = self.steps;
        self.steps += 1;
        let mut applied = Applied::default();
        for m in matches {
            let label = HyperedgeLabel { theorem: theorem.name.clone(), binding: m.binding, instance };
            let mut any = false;
            for c in &m.conclusions {
                let ctype = if c.is_equation() { ConditionType::Equation } else { ConditionType::GeometricRelation };
                let added = self.insert(c, ctype, m.premises.clone(), EdgeLabel::Theorem(label.clone()))?;
                if added.added {
                    applied.added.push(added.id);
                    any = true;
                }
            }
            if any {
                self.applied.push(label.clone());
                applied.edges.push(label);
            }
        }
        if applied.changed() {
            self.check_goal();
        }
        Ok(applied)
    }

    /// Tests the goal and, for a value goal, records the solved value.
    pub fn check_goal(&mut self) -> bool {
        if self.goal_node.is_some() {
            return true;
        }
        match self.goal.kind {
            GoalKind::Relation => {
                self.goal_node = self.store.find(&self.goal.target);
            }
            GoalKind::Value => {
                let res = self.algebra.solve_value(&self.goal.target, self.goal_budget);
                if let (SolveStatus::Solved, Some(value)) = (res.status, res.value) {
                    let body = Term::equal(self.goal.target.clone(), value_term(&value));
                    if let Ok(added) = self.insert(&body, ConditionType::SolvedValue, res.used, EdgeLabel::SolveEq) {
                        self.goal_node = Some(added.id);
                        self.answer = Some(value);
                    }
                }
            }
        }
        self.goal_node.is_some()
    }
}

/// Numeric literal term for a scalar.
pub fn value_term<S: Scalar>(value: &S) -> Term {
    match value.repr() {
        ValueRepr::Decimal(d) => Term::num(&d),
        ValueRepr::Fraction(n, d) => Term::app("Div", vec![Term::num(&n), Term::num(&d)]),
    }
}
