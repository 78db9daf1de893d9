//! Expression trees over symbol indices, with the rewriting the solver uses:
//! constant folding, linearization, single-variable polynomials and
//! one-occurrence isolation.

use std::collections::{BTreeMap, BTreeSet};

use crate::scalar::{Scalar, Trig};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr<S> {
    Const(S),
    Var(usize),
    Add(Box<Expr<S>>, Box<Expr<S>>),
    Sub(Box<Expr<S>>, Box<Expr<S>>),
    Mul(Box<Expr<S>>, Box<Expr<S>>),
    Div(Box<Expr<S>>, Box<Expr<S>>),
    Pow(Box<Expr<S>>, Box<Expr<S>>),
    Sqrt(Box<Expr<S>>),
    Trig(Trig, Box<Expr<S>>),
}

/// `sum(coef * var) + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<S> {
    pub coefs: BTreeMap<usize, S>,
    pub constant: S,
}

impl<S: Scalar> Linear<S> {
    fn constant(c: S) -> Self {
        Self { coefs: BTreeMap::new(), constant: c }
    }

    fn combine(mut self, other: Self, sign: S) -> Self {
        for (v, c) in other.coefs {
            let e = self.coefs.entry(v).or_insert_with(S::zero);
            *e = e.clone() + c * sign.clone();
        }
        self.constant = self.constant + other.constant * sign;
        self.coefs.retain(|_, c| !c.is_negligible());
        self
    }

    fn scale(mut self, k: &S) -> Self {
        for c in self.coefs.values_mut() {
            *c = c.clone() * k.clone();
        }
        self.constant = self.constant * k.clone();
        self.coefs.retain(|_, c| !c.is_negligible());
        self
    }
}

fn b<S>(e: Expr<S>) -> Box<Expr<S>> {
    Box::new(e)
}

impl<S: Scalar> Expr<S> {
    pub fn sub(a: Expr<S>, c: Expr<S>) -> Self {
        Expr::Sub(b(a), b(c))
    }

    pub fn as_const(&self) -> Option<&S> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Add(a, c) | Expr::Sub(a, c) | Expr::Mul(a, c) | Expr::Div(a, c) | Expr::Pow(a, c) => {
                a.collect_vars(out);
                c.collect_vars(out);
            }
            Expr::Sqrt(a) | Expr::Trig(_, a) => a.collect_vars(out),
        }
    }

    pub fn occurrences(&self, var: usize) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(v) => usize::from(*v == var),
            Expr::Add(a, c) | Expr::Sub(a, c) | Expr::Mul(a, c) | Expr::Div(a, c) | Expr::Pow(a, c) => {
                a.occurrences(var) + c.occurrences(var)
            }
            Expr::Sqrt(a) | Expr::Trig(_, a) => a.occurrences(var),
        }
    }

    /// Replaces variables for which `lookup` has a value, then folds.
    pub fn substitute(&self, lookup: &impl Fn(usize) -> Option<Expr<S>>) -> Expr<S> {
        let sub = |e: &Expr<S>| e.substitute(lookup);
        let out = match self {
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Var(v) => return lookup(*v).map_or(Expr::Var(*v), |e| e.simplify()),
            Expr::Add(a, c) => Expr::Add(b(sub(a)), b(sub(c))),
            Expr::Sub(a, c) => Expr::Sub(b(sub(a)), b(sub(c))),
            Expr::Mul(a, c) => Expr::Mul(b(sub(a)), b(sub(c))),
            Expr::Div(a, c) => Expr::Div(b(sub(a)), b(sub(c))),
            Expr::Pow(a, c) => Expr::Pow(b(sub(a)), b(sub(c))),
            Expr::Sqrt(a) => Expr::Sqrt(b(sub(a))),
            Expr::Trig(t, a) => Expr::Trig(*t, b(sub(a))),
        };
        out.simplify_node()
    }

    /// Bottom-up constant folding and the identities the solver relies on.
    pub fn simplify(&self) -> Expr<S> {
        self.substitute(&|_| None)
    }

    fn simplify_node(self) -> Expr<S> {
        use Expr::*;
        match self {
            Add(a, c) => match (*a, *c) {
                (Const(x), Const(y)) => Const(x + y),
                (Const(x), e) | (e, Const(x)) if x.is_zero() => e,
                (x, y) => Add(b(x), b(y)),
            },
            Sub(a, c) => match (*a, *c) {
                (Const(x), Const(y)) => Const(x - y),
                (e, Const(y)) if y.is_zero() => e,
                (x, y) if x == y => Const(S::zero()),
                (x, y) => Sub(b(x), b(y)),
            },
            Mul(a, c) => match (*a, *c) {
                (Const(x), Const(y)) => Const(x * y),
                (Const(x), _) | (_, Const(x)) if x.is_zero() => Const(S::zero()),
                (Const(x), e) | (e, Const(x)) if x.is_one() => e,
                (x, y) => Mul(b(x), b(y)),
            },
            Div(a, c) => match (*a, *c) {
                (Const(x), Const(y)) if !y.is_negligible() => Const(x / y),
                (e, Const(y)) if y.is_one() => e,
                (x, y) => Div(b(x), b(y)),
            },
            Pow(a, c) => match (*a, *c) {
                (base, Const(e)) if e.is_zero() => {
                    let _ = base;
                    Const(S::one())
                }
                (base, Const(e)) if e.is_one() => base,
                (Const(x), Const(e)) => match e.as_small_integer() {
                    Some(n) if n.abs() <= 64 => x.powi(n).map_or_else(|| Pow(b(Const(x)), b(Const(e.clone()))), Const),
                    _ if e == S::from_ratio(1, 2) => x.sqrt_nonneg().map_or_else(|| Pow(b(Const(x)), b(Const(e.clone()))), Const),
                    _ => Pow(b(Const(x)), b(Const(e))),
                },
                // Quantities are non-negative, so sqrt(x)^2 = x.
                (Sqrt(inner), Const(e)) if e == S::from_ratio(2, 1) => *inner,
                (x, y) => Pow(b(x), b(y)),
            },
            Sqrt(a) => match *a {
                Const(x) => match x.sqrt_nonneg() {
                    Some(r) => Const(r),
                    None => Sqrt(b(Const(x))),
                },
                Pow(inner, e) if e.as_const() == Some(&S::from_ratio(2, 1)) => *inner,
                other => Sqrt(b(other)),
            },
            Trig(t, a) => match *a {
                Const(x) => match t.eval(&x) {
                    Some(v) => Const(v),
                    None => Trig(t, b(Const(x))),
                },
                other => Trig(t, b(other)),
            },
            other => other,
        }
    }

    /// Linear form of an already simplified expression, if it has one.
    pub fn linear(&self) -> Option<Linear<S>> {
        match self {
            Expr::Const(c) => Some(Linear::constant(c.clone())),
            Expr::Var(v) => Some(Linear { coefs: [(*v, S::one())].into(), constant: S::zero() }),
            Expr::Add(a, c) => Some(a.linear()?.combine(c.linear()?, S::one())),
            Expr::Sub(a, c) => Some(a.linear()?.combine(c.linear()?, -S::one())),
            Expr::Mul(a, c) => {
                let (la, lc) = (a.linear()?, c.linear()?);
                if la.coefs.is_empty() {
                    Some(lc.scale(&la.constant))
                } else if lc.coefs.is_empty() {
                    Some(la.scale(&lc.constant))
                } else {
                    None
                }
            }
            Expr::Div(a, c) => {
                let lc = c.linear()?;
                if !lc.coefs.is_empty() || lc.constant.is_negligible() {
                    return None;
                }
                Some(a.linear()?.scale(&(S::one() / lc.constant)))
            }
            _ => None,
        }
    }

    /// Coefficients (low degree first) of a polynomial in `var` alone,
    /// capped at degree 4.
    pub fn poly(&self, var: usize) -> Option<Vec<S>> {
        const MAX_DEGREE: usize = 4;
        let p = match self {
            Expr::Const(c) => vec![c.clone()],
            Expr::Var(v) if *v == var => vec![S::zero(), S::one()],
            Expr::Var(_) => return None,
            Expr::Add(a, c) => poly_add(a.poly(var)?, c.poly(var)?, false),
            Expr::Sub(a, c) => poly_add(a.poly(var)?, c.poly(var)?, true),
            Expr::Mul(a, c) => poly_mul(&a.poly(var)?, &c.poly(var)?),
            Expr::Div(a, c) => {
                let d = c.poly(var)?;
                if d.len() != 1 || d[0].is_negligible() {
                    return None;
                }
                let inv = S::one() / d[0].clone();
                a.poly(var)?.into_iter().map(|x| x * inv.clone()).collect()
            }
            Expr::Pow(a, e) => {
                let n = e.as_const()?.as_small_integer()?;
                if !(0..=MAX_DEGREE as i64).contains(&n) {
                    return None;
                }
                let base = a.poly(var)?;
                let mut acc = vec![S::one()];
                for _ in 0..n {
                    acc = poly_mul(&acc, &base);
                }
                acc
            }
            _ => return None,
        };
        let p = trim(p);
        (p.len() <= MAX_DEGREE + 1).then_some(p)
    }

    /// Solves `self = rhs` for `var`, which must occur exactly once in `self`
    /// and not at all in `rhs`. Even roots take the non-negative branch;
    /// inverse trig needs a constant right-hand side.
    pub fn isolate(&self, rhs: Expr<S>, var: usize) -> Option<Expr<S>> {
        if self.occurrences(var) != 1 || rhs.occurrences(var) != 0 {
            return None;
        }
        let (mut lhs, mut rhs) = (self.clone(), rhs);
        loop {
            let next = match lhs {
                Expr::Var(v) if v == var => return Some(rhs.simplify()),
                Expr::Add(a, c) => {
                    if a.occurrences(var) == 1 {
                        (*a, Expr::Sub(b(rhs), c))
                    } else {
                        (*c, Expr::Sub(b(rhs), a))
                    }
                }
                Expr::Sub(a, c) => {
                    if a.occurrences(var) == 1 {
                        (*a, Expr::Add(b(rhs), c))
                    } else {
                        (*c, Expr::Sub(a, b(rhs)))
                    }
                }
                Expr::Mul(a, c) => {
                    let (inner, factor) = if a.occurrences(var) == 1 { (a, c) } else { (c, a) };
                    if factor.simplify().as_const().is_some_and(|f| f.is_negligible()) {
                        return None;
                    }
                    (*inner, Expr::Div(b(rhs), factor))
                }
                Expr::Div(a, c) => {
                    if a.occurrences(var) == 1 {
                        (*a, Expr::Mul(b(rhs), c))
                    } else {
                        (*c, Expr::Div(a, b(rhs)))
                    }
                }
                Expr::Pow(a, e) => {
                    if a.occurrences(var) != 1 {
                        return None;
                    }
                    match e.simplify().as_const().and_then(|c| c.as_small_integer()) {
                        Some(2) => (*a, Expr::Sqrt(b(rhs))),
                        _ => return None,
                    }
                }
                Expr::Sqrt(a) => (*a, Expr::Pow(b(rhs), b(Expr::Const(S::from_ratio(2, 1))))),
                Expr::Trig(t, a) => {
                    let value = rhs.simplify();
                    let angle = t.invert(value.as_const()?)?;
                    (*a, Expr::Const(angle))
                }
                _ => return None,
            };
            lhs = next.0;
            rhs = next.1;
        }
    }
}

fn trim<S: Scalar>(mut p: Vec<S>) -> Vec<S> {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_negligible()) {
        p.pop();
    }
    p
}

fn poly_add<S: Scalar>(a: Vec<S>, c: Vec<S>, subtract: bool) -> Vec<S> {
    let n = a.len().max(c.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(S::zero);
            let y = c.get(i).cloned().unwrap_or_else(S::zero);
            if subtract {
                x - y
            } else {
                x + y
            }
        })
        .collect()
}

fn poly_mul<S: Scalar>(a: &[S], c: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); a.len() + c.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in c.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}
