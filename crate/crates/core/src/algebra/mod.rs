//! Symbols for attribute quantities, equations gathered from `Equal`
//! conditions, and a budgeted solver that reports which equations it used.
//!
//! Solving runs to a fixpoint over three passes: substitution of solved
//! symbols, Gauss-Jordan elimination on the linear part, and isolation of a
//! single remaining unknown in a nonlinear equation. When the target is still
//! open, a depth-first substitution search explores the nonlinear equations
//! connected to it until it pins a new value or runs out of budget.

mod expr;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

pub use expr::{Expr, Linear};

use crate::error::{Error, Result};
use crate::lang::term::{is_function, Term};
use crate::lang::FormalSystem;
use crate::scalar::{Scalar, Trig};

/// Index of a registered attribute quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    Unknown,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<S> {
    pub status: SolveStatus,
    pub value: Option<S>,
    /// Source condition ids of every equation on the path to the value.
    pub used: BTreeSet<usize>,
}

impl<S> SolveResult<S> {
    fn failed(status: SolveStatus) -> Self {
        Self { status, value: None, used: BTreeSet::new() }
    }

    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }
}

/// A normalized equation `residual = 0` and the condition it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation<S> {
    pub residual: Expr<S>,
    pub source: usize,
}

#[derive(Debug)]
struct Timeout;

/// Equations over registered symbols for one problem state.
#[derive(Debug, Clone)]
pub struct AlgebraSystem<S: Scalar = crate::Rational> {
    system: Arc<FormalSystem>,
    syms: Vec<Term>,
    angle: Vec<bool>,
    index: HashMap<Term, usize>,
    equations: Vec<Equation<S>>,
    keys: HashSet<String>,
}

impl<S: Scalar> AlgebraSystem<S> {
    pub fn new(system: Arc<FormalSystem>) -> Self {
        Self {
            system,
            syms: Vec::new(),
            angle: Vec::new(),
            index: HashMap::new(),
            equations: Vec::new(),
            keys: HashSet::new(),
        }
    }

    /// Symbol for an attribute term; idempotent per canonical term.
    pub fn register(&mut self, term: &Term) -> Result<Sym> {
        let head = term.head().unwrap_or_default();
        let Some(decl) = self.system.decl(head).filter(|_| self.system.is_attribute(head)) else {
            return Err(Error::UnknownAttribute(term.to_string()));
        };
        let is_angle = decl.slots.first().is_some_and(|s| s.kind == "angle");
        let canonical = self.system.canonicalize(term);
        if let Some(&i) = self.index.get(&canonical) {
            return Ok(Sym(i));
        }
        let i = self.syms.len();
        self.index.insert(canonical.clone(), i);
        self.syms.push(canonical);
        self.angle.push(is_angle);
        Ok(Sym(i))
    }

    pub fn lookup(&self, term: &Term) -> Option<Sym> {
        self.index.get(&self.system.canonicalize(term)).map(|&i| Sym(i))
    }

    pub fn sym_term(&self, sym: Sym) -> &Term {
        &self.syms[sym.0]
    }

    pub fn sym_count(&self) -> usize {
        self.syms.len()
    }

    pub fn equations(&self) -> &[Equation<S>] {
        &self.equations
    }

    fn convert(&self, term: &Term, register: &mut dyn FnMut(&Term) -> Result<Option<usize>>) -> Result<Option<Expr<S>>> {
        let bx = Box::new;
        Ok(Some(match term {
            Term::Num(n) => Expr::Const(S::parse_numeral(n).ok_or_else(|| Error::UnexpectedToken(n.clone()))?),
            Term::Points(p) => return Err(Error::UnexpectedToken(p.clone())),
            Term::App { head, args } => {
                if self.system.is_attribute(head) {
                    return Ok(register(term)?.map(Expr::Var));
                }
                let mut sub = Vec::with_capacity(args.len());
                for a in args {
                    match self.convert(a, register)? {
                        Some(e) => sub.push(e),
                        None => return Ok(None),
                    }
                }
                let mut it = sub.into_iter();
                let mut next = || it.next().ok_or_else(|| Error::Arity { head: head.clone(), message: "missing operand".into() });
                match head.as_str() {
                    "Add" => Expr::Add(bx(next()?), bx(next()?)),
                    "Sub" => Expr::Sub(bx(next()?), bx(next()?)),
                    "Mul" => Expr::Mul(bx(next()?), bx(next()?)),
                    "Div" => Expr::Div(bx(next()?), bx(next()?)),
                    "Pow" => Expr::Pow(bx(next()?), bx(next()?)),
                    "Sqrt" => Expr::Sqrt(bx(next()?)),
                    "Sin" => Expr::Trig(Trig::Sin, bx(next()?)),
                    "Cos" => Expr::Trig(Trig::Cos, bx(next()?)),
                    "Tan" => Expr::Trig(Trig::Tan, bx(next()?)),
                    other if is_function(other) => unreachable!("all functions handled"),
                    other => return Err(Error::UnknownAttribute(other.to_string())),
                }
            }
        }))
    }

    /// Converts a quantity, registering any new attribute terms.
    pub fn to_expr(&mut self, term: &Term) -> Result<Expr<S>> {
        let mut this = self.clone();
        let out = {
            let mut reg = |t: &Term| this.register(t).map(|s| Some(s.0));
            self.convert(term, &mut reg)?
        };
        *self = this;
        Ok(out.expect("registration never declines"))
    }

    /// Converts without registering; `None` if an attribute is unknown here.
    pub fn to_expr_existing(&self, term: &Term) -> Result<Option<Expr<S>>> {
        let mut look = |t: &Term| Ok(self.lookup(t).map(|s| s.0));
        self.convert(term, &mut look)
    }

    /// Appends `lhs - rhs = 0` for an `Equal` body. Returns false for
    /// tautologies, contradictions and duplicates of an existing normal form.
    pub fn add_equation(&mut self, body: &Term, source: usize) -> Result<bool> {
        if !body.is_equation() {
            return Err(Error::NotAnEquation(body.to_string()));
        }
        let [lhs, rhs] = body.args() else { return Err(Error::NotAnEquation(body.to_string())) };
        let residual = Expr::sub(self.to_expr(lhs)?, self.to_expr(rhs)?).simplify();
        let key = match residual.linear() {
            Some(lin) => {
                let Some((_, lead)) = lin.coefs.iter().next() else { return Ok(false) };
                let inv = S::one() / lead.clone();
                let coefs: Vec<(usize, S)> = lin.coefs.iter().map(|(v, c)| (*v, c.clone() * inv.clone())).collect();
                format!("L{:?}{:?}", coefs, lin.constant.clone() * inv)
            }
            None => format!("N{residual:?}"),
        };
        if !self.keys.insert(key) {
            return Ok(false);
        }
        self.equations.push(Equation { residual, source });
        Ok(true)
    }

    /// Opens a solving session whose fixpoint is shared across queries.
    pub fn session(&self, budget: Duration) -> Session<'_, S> {
        Session { algebra: self, budget, base: None }
    }

    /// Solves for a quantity term within `budget`.
    pub fn solve_value(&self, target: &Term, budget: Duration) -> SolveResult<S> {
        self.session(budget).solve(target)
    }

    /// Solves for an expression over registered symbols within `budget`.
    pub fn solve_expr(&self, target: &Expr<S>, budget: Duration) -> SolveResult<S> {
        self.session(budget).solve_expr(target)
    }

    /// Symbols pinned by the three fixpoint passes.
    pub fn known_values(&self) -> BTreeMap<Sym, S> {
        let mut solver = self.solver(Instant::now() + Duration::from_secs(1));
        let _ = solver.fixpoint();
        solver.known.into_iter().filter(|(v, _)| *v < self.syms.len()).map(|(v, k)| (Sym(v), k.value)).collect()
    }

    /// Restriction to the equations whose source is in `sources`.
    pub fn restricted(&self, sources: &BTreeSet<usize>) -> Self {
        let mut out = self.clone();
        out.equations.retain(|e| sources.contains(&e.source));
        out
    }

    fn solver(&self, deadline: Instant) -> Solver<S> {
        Solver {
            eqs: self
                .equations
                .iter()
                .map(|e| Residual { expr: e.residual.clone(), used: [e.source].into() })
                .collect(),
            known: BTreeMap::new(),
            angle: self.angle.clone(),
            deadline,
        }
    }
}

/// Solver state shared by several queries against one algebra system.
pub struct Session<'a, S: Scalar> {
    algebra: &'a AlgebraSystem<S>,
    budget: Duration,
    base: Option<std::result::Result<Solver<S>, Timeout>>,
}

impl<S: Scalar> Session<'_, S> {
    pub fn solve(&mut self, target: &Term) -> SolveResult<S> {
        match self.algebra.to_expr_existing(target) {
            Ok(Some(e)) => self.solve_expr(&e),
            _ => SolveResult::failed(SolveStatus::Unknown),
        }
    }

    pub fn solve_expr(&mut self, target: &Expr<S>) -> SolveResult<S> {
        let start = Instant::now();
        let algebra = self.algebra;
        let budget = self.budget;
        let base = self.base.get_or_insert_with(|| {
            let mut s = algebra.solver(start + budget);
            s.fixpoint().map(|_| s)
        });
        let Ok(base) = base else { return SolveResult::failed(SolveStatus::Timeout) };
        let mut solver = base.clone();
        solver.deadline = Instant::now() + budget;
        match solver.solve_target(target) {
            Ok(Some((value, used))) => SolveResult { status: SolveStatus::Solved, value: Some(value), used },
            Ok(None) => SolveResult::failed(SolveStatus::Unknown),
            Err(Timeout) => SolveResult::failed(SolveStatus::Timeout),
        }
    }
}

#[derive(Debug, Clone)]
struct Residual<S> {
    expr: Expr<S>,
    used: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
struct Known<S> {
    value: S,
    used: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
struct Solver<S> {
    eqs: Vec<Residual<S>>,
    known: BTreeMap<usize, Known<S>>,
    angle: Vec<bool>,
    deadline: Instant,
}

type Hit<S> = (usize, S, BTreeSet<usize>);

impl<S: Scalar> Solver<S> {
    fn tick(&self) -> std::result::Result<(), Timeout> {
        if Instant::now() > self.deadline {
            Err(Timeout)
        } else {
            Ok(())
        }
    }

    /// Equation `i` with solved symbols substituted.
    fn reduced(&self, r: &Residual<S>) -> Residual<S> {
        let mut used = r.used.clone();
        for v in r.expr.vars() {
            if let Some(k) = self.known.get(&v) {
                used.extend(&k.used);
            }
        }
        let expr = r.expr.substitute(&|v| self.known.get(&v).map(|k| Expr::Const(k.value.clone())));
        Residual { expr, used }
    }

    fn in_domain(&self, var: usize, value: &S) -> bool {
        if self.angle.get(var).copied().unwrap_or(false) {
            let v = value.to_f64();
            v > 1e-9 && v < 180.0 - 1e-9
        } else {
            !value.is_negative() || value.is_negligible()
        }
    }

    fn learn(&mut self, var: usize, value: S, used: BTreeSet<usize>) -> bool {
        if self.known.contains_key(&var) {
            return false;
        }
        self.known.insert(var, Known { value, used });
        true
    }

    /// Value of the single unknown `var` in `expr = 0`.
    fn solve_single(&self, expr: &Expr<S>, var: usize) -> Option<S> {
        if let Some(p) = expr.poly(var) {
            let roots = match p.len() {
                2 => vec![-p[0].clone() / p[1].clone()],
                3 => {
                    let (c, b, a) = (p[0].clone(), p[1].clone(), p[2].clone());
                    let two_a = a.clone() + a.clone();
                    let four = S::from_ratio(4, 1);
                    let disc = b.clone() * b.clone() - four * a * c;
                    if disc.is_negligible() {
                        vec![-b / two_a]
                    } else {
                        let s = disc.sqrt_nonneg()?;
                        vec![(-b.clone() - s.clone()) / two_a.clone(), (-b + s) / two_a]
                    }
                }
                _ => return None,
            };
            let mut valid: Vec<S> = roots.into_iter().filter(|r| self.in_domain(var, r)).collect();
            valid.dedup();
            return match valid.as_slice() {
                [only] => Some(only.clone()),
                _ => None,
            };
        }
        let value = expr.isolate(Expr::Const(S::zero()), var)?;
        let value = value.as_const()?.clone();
        self.in_domain(var, &value).then_some(value)
    }

    fn fixpoint(&mut self) -> std::result::Result<(), Timeout> {
        loop {
            self.tick()?;
            let mut progress = false;
            // substitution: linear equations with one open symbol
            for i in 0..self.eqs.len() {
                let r = self.reduced(&self.eqs[i]);
                let vars = r.expr.vars();
                if vars.len() != 1 {
                    continue;
                }
                let Some(lin) = r.expr.linear() else { continue };
                let (&v, coef) = lin.coefs.iter().next().expect("one variable");
                let value = -lin.constant.clone() / coef.clone();
                progress |= self.learn(v, value, r.used);
            }
            progress |= self.eliminate()?;
            for i in 0..self.eqs.len() {
                self.tick()?;
                let r = self.reduced(&self.eqs[i]);
                let vars = r.expr.vars();
                if vars.len() != 1 || r.expr.linear().is_some() {
                    continue;
                }
                let v = *vars.iter().next().expect("one variable");
                if let Some(value) = self.solve_single(&r.expr, v) {
                    progress |= self.learn(v, value, r.used);
                }
            }
            if !progress {
                return Ok(());
            }
        }
    }

    /// Gauss-Jordan over the linear equations, pivoting on the lowest
    /// symbol index first. Rows carry the union of their sources.
    fn eliminate(&mut self) -> std::result::Result<bool, Timeout> {
        let mut rows: Vec<(Linear<S>, BTreeSet<usize>)> = Vec::new();
        for e in &self.eqs {
            let r = self.reduced(e);
            if let Some(lin) = r.expr.linear() {
                if !lin.coefs.is_empty() {
                    rows.push((lin, r.used));
                }
            }
        }
        let columns: BTreeSet<usize> = rows.iter().flat_map(|(l, _)| l.coefs.keys().copied()).collect();
        let mut rank = 0;
        for col in columns {
            self.tick()?;
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].0.coefs.contains_key(&col)) else { continue };
            rows.swap(rank, pivot);
            let inv = S::one() / rows[rank].0.coefs[&col].clone();
            let (lin, _) = &mut rows[rank];
            for c in lin.coefs.values_mut() {
                *c = c.clone() * inv.clone();
            }
            lin.constant = lin.constant.clone() * inv;
            let (pivot_lin, pivot_used) = rows[rank].clone();
            for (r, (lin, used)) in rows.iter_mut().enumerate() {
                let Some(f) = lin.coefs.get(&col).cloned() else { continue };
                if r == rank {
                    continue;
                }
                for (v, c) in &pivot_lin.coefs {
                    let e = lin.coefs.entry(*v).or_insert_with(S::zero);
                    *e = e.clone() - f.clone() * c.clone();
                }
                lin.coefs.retain(|_, c| !c.is_negligible());
                lin.constant = lin.constant.clone() - f * pivot_lin.constant.clone();
                used.extend(&pivot_used);
            }
            rank += 1;
        }
        let mut progress = false;
        for (lin, used) in rows {
            if lin.coefs.len() == 1 {
                let (&v, coef) = lin.coefs.iter().next().expect("one entry");
                progress |= self.learn(v, -lin.constant / coef.clone(), used);
            }
        }
        Ok(progress)
    }

    fn evaluate(&self, target: &Expr<S>) -> Option<(S, BTreeSet<usize>)> {
        let r = self.reduced(&Residual { expr: target.clone(), used: BTreeSet::new() });
        r.expr.as_const().map(|c| (c.clone(), r.used))
    }

    fn solve_target(&mut self, target: &Expr<S>) -> std::result::Result<Option<(S, BTreeSet<usize>)>, Timeout> {
        if let Some(hit) = self.evaluate(target) {
            return Ok(Some(hit));
        }
        // Give the target a name so elimination can pin combinations.
        let aux = self.angle.len().max(self.eqs.iter().flat_map(|e| e.expr.vars()).max().map_or(0, |m| m + 1));
        self.angle.push(false);
        self.eqs.push(Residual { expr: Expr::sub(Expr::Var(aux), target.clone()).simplify(), used: BTreeSet::new() });
        loop {
            self.fixpoint()?;
            if let Some(k) = self.known.get(&aux) {
                return Ok(Some((k.value.clone(), k.used.clone())));
            }
            match self.search(aux)? {
                Some((v, value, used)) => {
                    self.learn(v, value, used);
                }
                None => return Ok(None),
            }
        }
    }

    /// Depth-first substitution search over the open equations connected
    /// to `target`; returns the first symbol it manages to pin.
    fn search(&self, target: usize) -> std::result::Result<Option<Hit<S>>, Timeout> {
        let open: Vec<Residual<S>> = self
            .eqs
            .iter()
            .map(|e| self.reduced(e))
            .filter(|r| !r.expr.vars().is_empty())
            .collect();
        let mut reach: BTreeSet<usize> = [target].into();
        let mut component: Vec<Residual<S>> = Vec::new();
        let mut pending: Vec<Residual<S>> = open;
        loop {
            let (touching, rest): (Vec<_>, Vec<_>) = pending.into_iter().partition(|r| !r.expr.vars().is_disjoint(&reach));
            if touching.is_empty() {
                break;
            }
            for r in &touching {
                reach.extend(r.expr.vars());
            }
            component.extend(touching);
            pending = rest;
        }
        if component.iter().all(|r| r.expr.linear().is_some()) {
            return Ok(None);
        }
        let mut memo = HashSet::new();
        self.explore(component, &mut memo)
    }

    fn explore(&self, eqs: Vec<Residual<S>>, memo: &mut HashSet<String>) -> std::result::Result<Option<Hit<S>>, Timeout> {
        self.tick()?;
        let mut keys: Vec<String> = eqs.iter().map(|e| format!("{:?}", e.expr)).collect();
        keys.sort();
        if !memo.insert(keys.concat()) {
            return Ok(None);
        }
        for (i, eq) in eqs.iter().enumerate() {
            for v in eq.expr.vars() {
                let Some(replacement) = eq.expr.isolate(Expr::Const(S::zero()), v) else { continue };
                let mut next = Vec::with_capacity(eqs.len() - 1);
                for (j, other) in eqs.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    if other.expr.occurrences(v) == 0 {
                        next.push(other.clone());
                        continue;
                    }
                    let expr = other.expr.substitute(&|w| (w == v).then(|| replacement.clone()));
                    let used = other.used.union(&eq.used).copied().collect();
                    let vars = expr.vars();
                    if vars.is_empty() {
                        continue;
                    }
                    if vars.len() == 1 {
                        let w = *vars.iter().next().expect("one variable");
                        if let Some(value) = self.solve_single(&expr, w) {
                            return Ok(Some((w, value, used)));
                        }
                    }
                    next.push(Residual { expr, used });
                }
                if let Some(hit) = self.explore(next, memo)? {
                    return Ok(Some(hit));
                }
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_system;
    use crate::Rational;

    fn system() -> Arc<FormalSystem> {
        Arc::new(
            parse_system(
                r#"{"predicates": [],
                  "attributes": [
                    {"name": "LengthOfLine", "slots": [{"kind":"line","points":2}], "symmetries": [[[0,true]]]},
                    {"name": "MeasureOfAngle", "slots": [{"kind":"angle","points":3}], "symmetries": [[[0,true]]]}
                  ],
                  "theorems": []}"#,
            )
            .unwrap(),
        )
    }

    fn alg() -> (Arc<FormalSystem>, AlgebraSystem<Rational>) {
        let sys = system();
        (sys.clone(), AlgebraSystem::new(sys))
    }

    fn q(n: i64) -> Rational {
        Rational::from_ratio(n, 1)
    }

    const BUDGET: Duration = Duration::from_millis(500);

    #[test]
    fn register_is_canonical() {
        let (sys, mut a) = alg();
        let ab = a.register(&sys.parse_expression("LengthOfLine(AB)").unwrap()).unwrap();
        let ba = a.register(&sys.parse_expression("LengthOfLine(BA)").unwrap()).unwrap();
        let ang = a.register(&sys.parse_expression("MeasureOfAngle(ABC)").unwrap()).unwrap();
        assert_eq!(ab, ba);
        assert_ne!(ab, ang);
        let foo = Term::app("Foo", vec![Term::points("AB")]);
        assert!(matches!(a.register(&foo), Err(Error::UnknownAttribute(_))));
    }

    #[test]
    fn add_equation_forms() {
        let (sys, mut a) = alg();
        let eq = sys.parse_condition("Equal(LengthOfLine(AB),10)").unwrap();
        assert!(a.add_equation(&eq, 0).unwrap());
        assert_eq!(a.equations().len(), 1);
        // duplicate normal form
        let same = sys.parse_condition("Equal(10,LengthOfLine(BA))").unwrap();
        assert!(!a.add_equation(&same, 1).unwrap());
        // tautology
        let taut = sys.parse_condition("Equal(LengthOfLine(AB),LengthOfLine(BA))").unwrap();
        assert!(!a.add_equation(&taut, 2).unwrap());
        assert_eq!(a.equations().len(), 1);
        let rel = Term::app("Parallel", vec![Term::points("AB"), Term::points("CD")]);
        assert!(matches!(a.add_equation(&rel, 3), Err(Error::NotAnEquation(_))));
    }

    #[test]
    fn substitution_chain() {
        let (sys, mut a) = alg();
        a.add_equation(&sys.parse_condition("Equal(LengthOfLine(AB),10)").unwrap(), 0).unwrap();
        a.add_equation(&sys.parse_condition("Equal(LengthOfLine(CD),LengthOfLine(AB))").unwrap(), 1).unwrap();
        let r = a.solve_value(&sys.parse_expression("LengthOfLine(CD)").unwrap(), BUDGET);
        assert_eq!(r.status, SolveStatus::Solved);
        assert_eq!(r.value, Some(q(10)));
        assert_eq!(r.used, [0, 1].into());
    }

    #[test]
    fn pythagorean_takes_non_negative_root() {
        let (sys, mut a) = alg();
        for (i, text) in [
            "Equal(LengthOfLine(AB),3)",
            "Equal(LengthOfLine(BC),4)",
            "Equal(Pow(LengthOfLine(AC),2),Add(Pow(LengthOfLine(AB),2),Pow(LengthOfLine(BC),2)))",
        ]
        .iter()
        .enumerate()
        {
            a.add_equation(&sys.parse_condition(text).unwrap(), i).unwrap();
        }
        let r = a.solve_value(&sys.parse_expression("LengthOfLine(AC)").unwrap(), BUDGET);
        assert_eq!(r.value, Some(q(5)));
        assert_eq!(r.used, [0, 1, 2].into());
        let known: Vec<Rational> = a.known_values().into_values().collect();
        assert_eq!(known, vec![q(3), q(4), q(5)]);
    }

    #[test]
    fn underdetermined_is_unknown() {
        let (sys, mut a) = alg();
        a.add_equation(&sys.parse_condition("Equal(Add(LengthOfLine(AB),LengthOfLine(CD)),10)").unwrap(), 0).unwrap();
        let r = a.solve_value(&sys.parse_expression("LengthOfLine(AB)").unwrap(), BUDGET);
        assert_eq!(r.status, SolveStatus::Unknown);
        assert!(a.known_values().is_empty());
        // ...but the sum itself is determined
        let sum = sys.parse_expression("Add(LengthOfLine(CD),LengthOfLine(AB))").unwrap();
        assert_eq!(a.solve_value(&sum, BUDGET).value, Some(q(10)));
    }

    #[test]
    fn empty_system_knows_nothing() {
        let (_, a) = alg();
        assert!(a.known_values().is_empty());
        let lit = a.solve_value(&Term::num("7"), BUDGET);
        assert_eq!(lit.value, Some(q(7)));
        assert!(lit.used.is_empty());
    }

    #[test]
    fn trig_at_table_angles() {
        let (sys, mut a) = alg();
        for (i, text) in [
            "Equal(LengthOfLine(AC),10)",
            "Equal(MeasureOfAngle(BCA),30)",
            "Equal(Mul(LengthOfLine(AC),Sin(MeasureOfAngle(BCA))),LengthOfLine(AB))",
            "Equal(Mul(LengthOfLine(AC),Cos(MeasureOfAngle(XYZ))),5)",
        ]
        .iter()
        .enumerate()
        {
            a.add_equation(&sys.parse_condition(text).unwrap(), i).unwrap();
        }
        assert_eq!(a.solve_value(&sys.parse_expression("LengthOfLine(AB)").unwrap(), BUDGET).value, Some(q(5)));
        assert_eq!(a.solve_value(&sys.parse_expression("MeasureOfAngle(XYZ)").unwrap(), BUDGET).value, Some(q(60)));
    }

    #[test]
    fn coupled_quadratic_chain_times_out() {
        // c_{i+1}^2 = c_i^2 + 1 with no base value: nothing is determined,
        // and the substitution search cannot finish within 10 ms.
        let (sys, mut a) = alg();
        let name = |i: usize| format!("LengthOfLine({}{})", (b'A' + (i / 20) as u8) as char, (b'G' + (i % 20) as u8) as char);
        for i in 0..30 {
            let text = format!("Equal(Pow({},2),Add(Pow({},2),1))", name(i + 1), name(i));
            a.add_equation(&sys.parse_condition(&text).unwrap(), i).unwrap();
        }
        let target = sys.parse_expression(&name(30)).unwrap();
        let r = a.solve_value(&target, Duration::from_millis(10));
        assert_eq!(r.status, SolveStatus::Timeout);
        assert!(r.value.is_none());
    }

    #[test]
    fn substitution_search_pins_coupled_unknowns() {
        // x^2 = y and y = 2x - 1... written so no single pass isolates alone:
        // AB^2 = CD, CD + 1 = 2 AB  =>  AB = 1
        let (sys, mut a) = alg();
        a.add_equation(&sys.parse_condition("Equal(Pow(LengthOfLine(AB),2),LengthOfLine(CD))").unwrap(), 0).unwrap();
        a.add_equation(&sys.parse_condition("Equal(Add(LengthOfLine(CD),1),Mul(2,LengthOfLine(AB)))").unwrap(), 1).unwrap();
        let r = a.solve_value(&sys.parse_expression("LengthOfLine(AB)").unwrap(), BUDGET);
        assert_eq!(r.status, SolveStatus::Solved);
        assert_eq!(r.value, Some(q(1)));
        assert_eq!(r.used, [0, 1].into());
    }

    #[test]
    fn float_scalar_agrees() {
        let sys = system();
        let mut a: AlgebraSystem<f64> = AlgebraSystem::new(sys.clone());
        a.add_equation(&sys.parse_condition("Equal(Add(LengthOfLine(AB),LengthOfLine(CD)),10)").unwrap(), 0).unwrap();
        a.add_equation(&sys.parse_condition("Equal(Sub(LengthOfLine(AB),LengthOfLine(CD)),4)").unwrap(), 1).unwrap();
        let r = a.solve_value(&sys.parse_expression("LengthOfLine(CD)").unwrap(), BUDGET);
        assert!((r.value.unwrap() - 3.0).abs() < 1e-12);
    }
}
