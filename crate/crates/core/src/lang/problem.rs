use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::system::{json_error, FormalSystem};
use super::term::Term;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalKind {
    Value,
    Relation,
}

/// What the problem asks for: a quantity or a relation to establish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub kind: GoalKind,
    pub target: Term,
}

impl std::fmt::Display for Goal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}({})", self.kind, self.target)
    }
}

/// One annotated solution step; an empty binding means "every match".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedStep {
    pub name: String,
    #[serde(default)]
    pub binding: BTreeMap<char, char>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub id: String,
    pub conditions: Vec<Term>,
    pub goal: Goal,
    pub theorem_seq: Vec<AnnotatedStep>,
    pub level: Option<String>,
}

impl Problem {
    /// Length `l` of the annotated solution.
    pub fn annotated_length(&self) -> usize {
        self.theorem_seq.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalDoc {
    pub kind: String,
    pub target: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub id: String,
    pub conditions: Vec<String>,
    pub goal: GoalDoc,
    #[serde(default)]
    pub theorem_seq: Vec<AnnotatedStep>,
    #[serde(default)]
    pub level: Option<String>,
}

/// Parses a problem document against an already parsed system.
pub fn parse_problem(text: &str, system: &FormalSystem) -> Result<Problem> {
    let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    problem_from_doc(&doc, system)
}

pub fn problem_from_doc(doc: &ProblemDoc, system: &FormalSystem) -> Result<Problem> {
    let conditions = doc.conditions.iter().map(|c| system.parse_condition(c)).collect::<Result<Vec<_>>>()?;
    let goal = match doc.goal.kind.as_str() {
        "Value" => Goal { kind: GoalKind::Value, target: system.parse_expression(&doc.goal.target)? },
        "Relation" => Goal { kind: GoalKind::Relation, target: system.parse_condition(&doc.goal.target)? },
        other => return Err(Error::Goal(format!("kind must be Value or Relation, found `{other}`"))),
    };
    for step in &doc.theorem_seq {
        let theorem = system.theorem(&step.name).ok_or_else(|| Error::UnknownTheorem(step.name.clone()))?;
        if let Some(v) = step.binding.keys().find(|v| !theorem.vars.contains(v)) {
            return Err(Error::UnboundVariable { theorem: step.name.clone(), var: *v });
        }
    }
    Ok(Problem {
        id: doc.id.clone(),
        conditions,
        goal,
        theorem_seq: doc.theorem_seq.clone(),
        level: doc.level.clone(),
    })
}
