//! The monotone set of known conditions, stored as quintuples
//! `(id, type, body, premises, theorem)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{FormalSystem, Term};

pub type Binding = BTreeMap<char, char>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionType {
    GeometricRelation,
    Equation,
    SolvedValue,
}

/// One application of a theorem. Applications with different bindings, or
/// in different cycles, are different hyperedges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HyperedgeLabel {
    pub theorem: String,
    pub binding: Binding,
    /// Cycle in which the application happened.
    pub instance: usize,
}

impl fmt::Display for HyperedgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.theorem)?;
        for (i, (var, point)) in self.binding.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{var}={point}")?;
        }
        f.write_str("]")
    }
}

/// How a condition entered the store.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Given,
    SolveEq,
    Theorem(HyperedgeLabel),
}

impl EdgeLabel {
    /// Token naming this edge in serialized graphs.
    pub fn token(&self) -> &str {
        match self {
            EdgeLabel::Given => "given",
            EdgeLabel::SolveEq => "solve_eq",
            EdgeLabel::Theorem(l) => &l.theorem,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Theorem(l) => l.fmt(f),
            other => f.write_str(other.token()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub id: usize,
    pub ctype: ConditionType,
    pub body: Term,
    pub premises: BTreeSet<usize>,
    pub theorem: EdgeLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Added {
    pub added: bool,
    pub id: usize,
}

#[derive(Serialize)]
struct QuintupleRecord<'a> {
    id: usize,
    #[serde(rename = "type")]
    ctype: ConditionType,
    body: String,
    premises: Vec<usize>,
    theorem: &'a str,
}

/// Conditions keyed by canonical body; the first derivation of a body wins.
#[derive(Debug, Clone)]
pub struct ConditionStore {
    system: Arc<FormalSystem>,
    conditions: Vec<Condition>,
    index: HashMap<Term, usize>,
    by_head: HashMap<String, Vec<usize>>,
}

impl ConditionStore {
    pub fn new(system: Arc<FormalSystem>) -> Self {
        Self { system, conditions: Vec::new(), index: HashMap::new(), by_head: HashMap::new() }
    }

    pub fn system(&self) -> &Arc<FormalSystem> {
        &self.system
    }

    pub fn canonicalize(&self, body: &Term) -> Term {
        self.system.canonicalize(body)
    }

    pub fn add_condition(
        &mut self,
        body: &Term,
        ctype: ConditionType,
        premises: impl IntoIterator<Item = usize>,
        theorem: EdgeLabel,
    ) -> Result<Added> {
        let premises: BTreeSet<usize> = premises.into_iter().collect();
        if let Some(&missing) = premises.iter().find(|&&p| p >= self.conditions.len()) {
            return Err(Error::UnknownPremise(missing));
        }
        let body = self.canonicalize(body);
        if let Some(&id) = self.index.get(&body) {
            return Ok(Added { added: false, id });
        }
        let id = self.conditions.len();
        if let Some(head) = body.head() {
            self.by_head.entry(head.to_string()).or_default().push(id);
        }
        self.index.insert(body.clone(), id);
        self.conditions.push(Condition { id, ctype, body, premises, theorem });
        Ok(Added { added: true, id })
    }

    /// Conditions with the given head, in id order.
    pub fn query(&self, head: &str) -> Vec<&Condition> {
        self.ids_with_head(head).iter().map(|&i| &self.conditions[i]).collect()
    }

    pub fn ids_with_head(&self, head: &str) -> &[usize] {
        self.by_head.get(head).map_or(&[], Vec::as_slice)
    }

    /// Id of the stored condition equal to `body` after canonicalization.
    pub fn find(&self, body: &Term) -> Option<usize> {
        self.index.get(&self.canonicalize(body)).copied()
    }

    /// Lookup for a body that is already canonical.
    pub fn find_canonical(&self, body: &Term) -> Option<usize> {
        self.index.get(body).copied()
    }

    pub fn get(&self, id: usize) -> Option<&Condition> {
        self.conditions.get(id)
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// Order-independent digest of the stored bodies.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut bodies: Vec<String> = self.conditions.iter().map(|c| c.body.to_string()).collect();
        bodies.sort();
        let mut h = std::collections::hash_map::DefaultHasher::new();
        bodies.hash(&mut h);
        h.finish()
    }

    /// NDJSON dump, one quintuple per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for c in &self.conditions {
            let label = c.theorem.to_string();
            let rec = QuintupleRecord {
                id: c.id,
                ctype: c.ctype,
                body: c.body.to_string(),
                premises: c.premises.iter().copied().collect(),
                theorem: &label,
            };
            out.push_str(&serde_json::to_string(&rec).expect("quintuple serializes"));
            out.push('\n');
        }
        out
    }
}
