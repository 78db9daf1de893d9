//! Corpus directories: `system.json` plus `problems/*.json`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lang::term::{FUNCTIONS, OPERATORS};
use crate::lang::tokenizer::split_tokens;
use crate::lang::{parse_problem, parse_system, FormalSystem, Problem, Term, Tokenizer};

#[derive(Debug, Clone)]
pub struct Corpus {
    pub system: Arc<FormalSystem>,
    pub problems: Vec<Problem>,
}

/// Token inventory shared with the neural side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub theorems: Vec<String>,
    pub tokens: Vec<String>,
    pub numerals: Vec<String>,
}

pub fn load_system(path: &Path) -> Result<FormalSystem> {
    parse_system(&fs::read_to_string(path)?)
}

pub fn load_problem(path: &Path, system: &FormalSystem) -> Result<Problem> {
    parse_problem(&fs::read_to_string(path)?, system)
}

fn collect_numerals(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Num(n) => {
            out.insert(n.clone());
        }
        Term::App { args, .. } => args.iter().for_each(|a| collect_numerals(a, out)),
        Term::Points(_) => {}
    }
}

impl Corpus {
    /// Loads `dir/system.json` and every `dir/problems/*.json`, sorted by
    /// file name.
    pub fn load(dir: &Path) -> Result<Self> {
        let system = Arc::new(load_system(&dir.join("system.json"))?);
        let mut paths: Vec<_> = fs::read_dir(dir.join("problems"))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
        paths.sort();
        let problems = paths.iter().map(|p| load_problem(p, &system)).collect::<Result<_>>()?;
        Ok(Self { system, problems })
    }

    /// Numerals written anywhere in the system or the problems.
    pub fn numerals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.system.theorems {
            t.premises.iter().chain(&t.conclusions).for_each(|c| collect_numerals(c, &mut out));
        }
        for p in &self.problems {
            p.conditions.iter().for_each(|c| collect_numerals(c, &mut out));
            collect_numerals(&p.goal.target, &mut out);
        }
        out
    }

    /// Tokenizer closed over the corpus numerals.
    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer::closed(self.numerals())
    }

    pub fn vocab(&self) -> Vocab {
        let numerals: Vec<String> = self.numerals().into_iter().collect();
        let mut tokens: BTreeSet<String> = BTreeSet::new();
        let sys = &self.system;
        tokens.extend(sys.predicates.iter().chain(&sys.attributes).map(|d| d.name.clone()));
        tokens.extend(sys.theorem_names());
        tokens.extend(["Equal", "Value", "Relation", "solve_eq"].map(String::from));
        tokens.extend(OPERATORS.iter().map(|(_, sym)| sym.to_string()));
        tokens.extend(FUNCTIONS.map(String::from));
        tokens.extend(('A'..='Z').map(String::from));
        tokens.extend(split_tokens());
        tokens.extend(numerals.iter().cloned());
        Vocab { theorems: sys.theorem_names(), tokens: tokens.into_iter().collect(), numerals }
    }
}
