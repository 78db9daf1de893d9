//! Formal-system documents: predicate and attribute declarations plus the
//! theorem knowledge base.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::syntax::{parse_raw, Raw};
use super::term::{is_function, is_point_letter, normalize_numeral, operator_symbol, Term, EQUAL};
use super::tokenizer::tokenize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub kind: String,
    pub points: usize,
}

/// One declared symmetry, in either of two spellings.
///
/// `[[1,false],[0,false]]` lists, for every output slot, the source slot and
/// whether its points are reversed. `"BCA"` / `"CD,AB"` permutes individual
/// points: letters name the positions of the identity pattern `AB,CD,...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymmetrySpec {
    Slots(Vec<(usize, bool)>),
    Pattern(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclDoc {
    pub name: String,
    pub slots: Vec<Slot>,
    #[serde(default)]
    pub symmetries: Vec<SymmetrySpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremDoc {
    pub name: String,
    pub vars: Vec<char>,
    pub premises: Vec<String>,
    pub conclusions: Vec<String>,
    #[serde(default = "default_strict")]
    pub strict: bool,
}

fn default_strict() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDoc {
    pub predicates: Vec<DeclDoc>,
    #[serde(default)]
    pub attributes: Vec<DeclDoc>,
    pub theorems: Vec<TheoremDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Predicate,
    Attribute,
}

/// A declared predicate or attribute with its symmetry group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub kind: DeclKind,
    pub slots: Vec<Slot>,
    /// Point permutations (`out[k] = in[perm[k]]`), closed under
    /// composition; the identity comes first.
    pub group: Vec<Vec<usize>>,
}

impl PredicateDef {
    pub fn point_count(&self) -> usize {
        self.slots.iter().map(|s| s.points).sum()
    }

    fn regroup(&self, flat: &[char]) -> Vec<Term> {
        let mut at = 0;
        self.slots
            .iter()
            .map(|s| {
                let p: String = flat[at..at + s.points].iter().collect();
                at += s.points;
                Term::Points(p)
            })
            .collect()
    }

    /// Flattened point tuples of every equivalent spelling of `args`.
    pub fn orbit_points(&self, args: &[Term]) -> Vec<Vec<char>> {
        let flat: Vec<char> = args.iter().flat_map(|a| a.point_letters()).collect();
        self.group.iter().map(|perm| perm.iter().map(|&i| flat[i]).collect()).collect()
    }

    pub fn with_points(&self, flat: &[char]) -> Term {
        Term::app(self.name.clone(), self.regroup(flat))
    }
}

/// A theorem: premise patterns and conclusion patterns over point variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremDef {
    pub name: String,
    pub vars: Vec<char>,
    pub premises: Vec<Term>,
    pub conclusions: Vec<Term>,
    /// Distinct variables must bind distinct points.
    pub strict: bool,
}

impl TheoremDef {
    /// Premises matched by unification against stored relations.
    pub fn geometric_premises(&self) -> impl Iterator<Item = &Term> {
        self.premises.iter().filter(|p| !p.is_equation())
    }

    /// `Equal` premises, decided by the algebra engine.
    pub fn numeric_premises(&self) -> impl Iterator<Item = &Term> {
        self.premises.iter().filter(|p| p.is_equation())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Condition,
    Expression,
}

/// The parsed knowledge base. Theorem order defines the theorem vocabulary.
#[derive(Debug, Clone)]
pub struct FormalSystem {
    pub predicates: Vec<PredicateDef>,
    pub attributes: Vec<PredicateDef>,
    pub theorems: Vec<TheoremDef>,
    decls: HashMap<String, (DeclKind, usize)>,
    theorem_index: HashMap<String, usize>,
}

fn json_offset(text: &str, err: &serde_json::Error) -> usize {
    let line = err.line().max(1);
    let upto: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    upto + err.column().saturating_sub(1)
}

pub(crate) fn json_error(text: &str, err: serde_json::Error) -> Error {
    if err.is_syntax() || err.is_eof() {
        Error::Syntax { pos: json_offset(text, &err), message: err.to_string() }
    } else {
        Error::Json(err)
    }
}

fn compile_symmetry(decl: &DeclDoc, spec: &SymmetrySpec) -> Result<Vec<usize>> {
    let bad = |why: &str| Error::Declaration(format!("symmetry of `{}`: {why}", decl.name));
    let offsets: Vec<usize> = decl
        .slots
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.points;
            Some(o)
        })
        .collect();
    let total: usize = decl.slots.iter().map(|s| s.points).sum();
    let perm = match spec {
        SymmetrySpec::Slots(entries) => {
            if entries.len() != decl.slots.len() {
                return Err(bad("one entry per slot required"));
            }
            let mut perm = Vec::with_capacity(total);
            for (out, &(src, reverse)) in entries.iter().enumerate() {
                let Some(src_slot) = decl.slots.get(src) else { return Err(bad("slot index out of range")) };
                if src_slot.points != decl.slots[out].points {
                    return Err(bad("slot sizes differ"));
                }
                let range = offsets[src]..offsets[src] + src_slot.points;
                if reverse {
                    perm.extend(range.rev());
                } else {
                    perm.extend(range);
                }
            }
            perm
        }
        SymmetrySpec::Pattern(p) => {
            let groups: Vec<&str> = p.split(',').collect();
            if groups.len() != decl.slots.len()
                || groups.iter().zip(&decl.slots).any(|(g, s)| g.chars().count() != s.points)
            {
                return Err(bad("pattern does not fit the slots"));
            }
            let mut perm = Vec::with_capacity(total);
            for c in groups.concat().chars() {
                let i = (c as usize).wrapping_sub('A' as usize);
                if !is_point_letter(c) || i >= total {
                    return Err(bad("pattern letter out of range"));
                }
                perm.push(i);
            }
            perm
        }
    };
    let distinct: BTreeSet<usize> = perm.iter().copied().collect();
    if distinct.len() != total {
        return Err(bad("not a permutation"));
    }
    Ok(perm)
}

fn close_group(n: usize, generators: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let identity: Vec<usize> = (0..n).collect();
    let mut group = vec![identity.clone()];
    let mut seen: BTreeSet<Vec<usize>> = [identity].into();
    let mut frontier = group.clone();
    while let Some(p) = frontier.pop() {
        for g in &generators {
            let composed: Vec<usize> = g.iter().map(|&k| p[k]).collect();
            if seen.insert(composed.clone()) {
                group.push(composed.clone());
                frontier.push(composed);
            }
        }
    }
    let head = group.remove(0);
    group.sort();
    group.insert(0, head);
    group
}

fn valid_decl_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_uppercase())
        && name.len() >= 2
        && name.chars().all(|c| c.is_ascii_alphanumeric())
        && name != EQUAL
        && operator_symbol(name).is_none()
        && !is_function(name)
}

impl FormalSystem {
    pub fn from_doc(doc: &SystemDoc) -> Result<Self> {
        let mut sys = FormalSystem {
            predicates: Vec::new(),
            attributes: Vec::new(),
            theorems: Vec::new(),
            decls: HashMap::new(),
            theorem_index: HashMap::new(),
        };
        for (kind, docs) in [(DeclKind::Predicate, &doc.predicates), (DeclKind::Attribute, &doc.attributes)] {
            for d in docs {
                if !valid_decl_name(&d.name) {
                    return Err(Error::Declaration(format!("invalid name `{}`", d.name)));
                }
                if d.slots.is_empty() || d.slots.iter().any(|s| s.points == 0) {
                    return Err(Error::Declaration(format!("`{}` needs non-empty slots", d.name)));
                }
                let n = d.slots.iter().map(|s| s.points).sum();
                let gens = d.symmetries.iter().map(|s| compile_symmetry(d, s)).collect::<Result<Vec<_>>>()?;
                let def = PredicateDef { name: d.name.clone(), kind, slots: d.slots.clone(), group: close_group(n, gens) };
                let list = match kind {
                    DeclKind::Predicate => &mut sys.predicates,
                    DeclKind::Attribute => &mut sys.attributes,
                };
                if sys.decls.insert(d.name.clone(), (kind, list.len())).is_some() {
                    return Err(Error::Declaration(format!("`{}` declared twice", d.name)));
                }
                list.push(def);
            }
        }
        for t in &doc.theorems {
            let def = sys.build_theorem(t)?;
            if sys.theorem_index.insert(def.name.clone(), sys.theorems.len()).is_some() {
                return Err(Error::Declaration(format!("theorem `{}` declared twice", def.name)));
            }
            sys.theorems.push(def);
        }
        Ok(sys)
    }

    fn build_theorem(&self, doc: &TheoremDoc) -> Result<TheoremDef> {
        if doc.name.is_empty() || !doc.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Declaration(format!("invalid theorem name `{}`", doc.name)));
        }
        let vars: BTreeSet<char> = doc.vars.iter().copied().collect();
        let premises = doc.premises.iter().map(|p| self.parse_condition(p)).collect::<Result<Vec<_>>>()?;
        let conclusions = doc.conclusions.iter().map(|c| self.parse_condition(c)).collect::<Result<Vec<_>>>()?;
        let def = TheoremDef {
            name: doc.name.clone(),
            vars: doc.vars.clone(),
            premises,
            conclusions,
            strict: doc.strict,
        };
        if def.geometric_premises().next().is_none() {
            return Err(Error::Declaration(format!("theorem `{}` needs a relational premise", def.name)));
        }
        let bound: BTreeSet<char> = def.geometric_premises().flat_map(|p| p.point_letters()).collect();
        for letter in def.premises.iter().chain(&def.conclusions).flat_map(|t| t.point_letters()) {
            if !vars.contains(&letter) || !bound.contains(&letter) {
                return Err(Error::UnboundVariable { theorem: def.name.clone(), var: letter });
            }
        }
        Ok(def)
    }

    pub fn decl(&self, name: &str) -> Option<&PredicateDef> {
        self.decls.get(name).map(|&(kind, i)| match kind {
            DeclKind::Predicate => &self.predicates[i],
            DeclKind::Attribute => &self.attributes[i],
        })
    }

    pub fn is_predicate(&self, name: &str) -> bool {
        matches!(self.decls.get(name), Some((DeclKind::Predicate, _)))
    }

    pub fn is_attribute(&self, name: &str) -> bool {
        matches!(self.decls.get(name), Some((DeclKind::Attribute, _)))
    }

    pub fn theorem(&self, name: &str) -> Option<&TheoremDef> {
        self.theorem_index(name).map(|i| &self.theorems[i])
    }

    pub fn theorem_index(&self, name: &str) -> Option<usize> {
        self.theorem_index.get(name).copied()
    }

    /// Theorem names in vocabulary order.
    pub fn theorem_names(&self) -> Vec<String> {
        self.theorems.iter().map(|t| t.name.clone()).collect()
    }

    pub fn theorem_count(&self) -> usize {
        self.theorems.len()
    }

    /// Parses a relation or equation such as `Parallel(AB,CD)`.
    pub fn parse_condition(&self, text: &str) -> Result<Term> {
        self.build(&parse_raw(text)?, Ctx::Condition)
    }

    /// Parses a quantity such as `MeasureOfAngle(ABC)` or `Add(...)`.
    pub fn parse_expression(&self, text: &str) -> Result<Term> {
        self.build(&parse_raw(text)?, Ctx::Expression)
    }

    fn build(&self, raw: &Raw, ctx: Ctx) -> Result<Term> {
        match raw {
            Raw::Atom { text, pos } => {
                if ctx == Ctx::Expression {
                    if let Some(n) = normalize_numeral(text) {
                        return Ok(Term::Num(n));
                    }
                }
                Err(Error::Syntax { pos: *pos, message: format!("unexpected atom `{text}`") })
            }
            Raw::Call { name, args, pos } => {
                let expect = |n: usize| -> Result<()> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(Error::Arity { head: name.clone(), message: format!("expected {n} arguments, found {}", args.len()) })
                    }
                };
                if name == EQUAL {
                    if ctx != Ctx::Condition {
                        return Err(Error::Syntax { pos: *pos, message: "Equal inside an expression".into() });
                    }
                    expect(2)?;
                    return Ok(Term::app(EQUAL, vec![self.build(&args[0], Ctx::Expression)?, self.build(&args[1], Ctx::Expression)?]));
                }
                if operator_symbol(name).is_some() || is_function(name) {
                    if ctx != Ctx::Expression {
                        return Err(Error::UndeclaredPredicate(name.clone()));
                    }
                    expect(if is_function(name) { 1 } else { 2 })?;
                    let built = args.iter().map(|a| self.build(a, Ctx::Expression)).collect::<Result<_>>()?;
                    return Ok(Term::app(name.clone(), built));
                }
                let decl = match (self.decls.get(name), ctx) {
                    (Some((DeclKind::Predicate, _)), Ctx::Condition) | (Some((DeclKind::Attribute, _)), Ctx::Expression) => {
                        self.decl(name).expect("declared")
                    }
                    (_, Ctx::Condition) => return Err(Error::UndeclaredPredicate(name.clone())),
                    (_, Ctx::Expression) => return Err(Error::UnknownAttribute(name.clone())),
                };
                expect(decl.slots.len())?;
                let mut out = Vec::with_capacity(args.len());
                for (arg, slot) in args.iter().zip(&decl.slots) {
                    match arg {
                        Raw::Atom { text, .. } if text.chars().all(is_point_letter) && text.len() == slot.points => {
                            out.push(Term::Points(text.clone()))
                        }
                        _ => {
                            return Err(Error::Arity {
                                head: name.clone(),
                                message: format!("slot `{}` takes {} point(s)", slot.kind, slot.points),
                            })
                        }
                    }
                }
                Ok(Term::app(name.clone(), out))
            }
        }
    }

    /// Token-list-minimal equivalent of `body` under the declared symmetries.
    /// `Equal`, `Add` and `Mul` additionally treat their operands as unordered.
    pub fn canonicalize(&self, body: &Term) -> Term {
        match body {
            Term::App { head, args } => {
                if let Some(decl) = self.decl(head) {
                    return decl
                        .orbit_points(args)
                        .into_iter()
                        .min()
                        .map(|flat| decl.with_points(&flat))
                        .unwrap_or_else(|| body.clone());
                }
                match head.as_str() {
                    EQUAL => {
                        let mut sides: Vec<Term> = args.iter().map(|a| self.canonicalize(a)).collect();
                        sides.sort_by_cached_key(tokenize);
                        Term::app(EQUAL, sides)
                    }
                    "Add" | "Mul" => {
                        let mut operands = Vec::new();
                        flatten_assoc(head, body, &mut operands);
                        let mut operands: Vec<Term> = operands.iter().map(|o| self.canonicalize(o)).collect();
                        operands.sort_by_cached_key(tokenize);
                        let mut it = operands.into_iter();
                        let first = it.next().expect("binary operator has operands");
                        it.fold(first, |acc, t| Term::app(head.clone(), vec![acc, t]))
                    }
                    _ => Term::app(head.clone(), args.iter().map(|a| self.canonicalize(a)).collect()),
                }
            }
            other => other.clone(),
        }
    }

    /// Equivalent spellings of a stored relation as flattened point tuples.
    pub fn orbit_points(&self, body: &Term) -> Vec<Vec<char>> {
        match body {
            Term::App { head, args } => match self.decl(head) {
                Some(decl) => decl.orbit_points(args),
                None => vec![body.point_letters()],
            },
            _ => vec![body.point_letters()],
        }
    }
}

fn flatten_assoc(op: &str, term: &Term, out: &mut Vec<Term>) {
    match term {
        Term::App { head, args } if head == op => args.iter().for_each(|a| flatten_assoc(op, a, out)),
        other => out.push(other.clone()),
    }
}

/// Parses a formal-system document.
pub fn parse_system(text: &str) -> Result<FormalSystem> {
    let doc: SystemDoc = serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    FormalSystem::from_doc(&doc)
}
