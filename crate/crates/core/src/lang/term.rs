use std::fmt;

pub const EQUAL: &str = "Equal";

/// Binary arithmetic operators: surface name and token symbol.
pub const OPERATORS: [(&str, &str); 5] = [
    ("Add", "+"),
    ("Sub", "-"),
    ("Mul", "*"),
    ("Div", "/"),
    ("Pow", "^"),
];

/// Unary functions usable inside equations.
pub const FUNCTIONS: [&str; 4] = ["Sqrt", "Sin", "Cos", "Tan"];

pub fn operator_symbol(name: &str) -> Option<&'static str> {
    OPERATORS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn operator_name(symbol: &str) -> Option<&'static str> {
    OPERATORS.iter().find(|(_, s)| *s == symbol).map(|(n, _)| *n)
}

pub fn is_function(name: &str) -> bool {
    FUNCTIONS.contains(&name)
}

/// A condition body, goal target or theorem pattern.
///
/// Entity arguments are kept as point groups (`AB` fills one line slot) so
/// bodies render back to their surface form without consulting the system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    App { head: String, args: Vec<Term> },
    Points(String),
    Num(String),
}

impl Term {
    pub fn app(head: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App { head: head.into(), args }
    }

    pub fn points(letters: impl Into<String>) -> Self {
        Term::Points(letters.into())
    }

    /// Numeric literal; the text is normalized.
    pub fn num(text: &str) -> Self {
        Term::Num(normalize_numeral(text).unwrap_or_else(|| text.to_string()))
    }

    pub fn equal(lhs: Term, rhs: Term) -> Self {
        Term::app(EQUAL, vec![lhs, rhs])
    }

    pub fn head(&self) -> Option<&str> {
        match self {
            Term::App { head, .. } => Some(head),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App { args, .. } => args,
            _ => &[],
        }
    }

    pub fn is_equation(&self) -> bool {
        self.head() == Some(EQUAL)
    }

    /// Every point letter in pre-order.
    pub fn point_letters(&self) -> Vec<char> {
        let mut out = Vec::new();
        self.collect_points(&mut out);
        out
    }

    fn collect_points(&self, out: &mut Vec<char>) {
        match self {
            Term::App { args, .. } => args.iter().for_each(|a| a.collect_points(out)),
            Term::Points(p) => out.extend(p.chars()),
            Term::Num(_) => {}
        }
    }

    /// Rewrites every point letter through `f`.
    pub fn map_points(&self, f: &impl Fn(char) -> char) -> Term {
        match self {
            Term::App { head, args } => Term::app(head.clone(), args.iter().map(|a| a.map_points(f)).collect()),
            Term::Points(p) => Term::Points(p.chars().map(f).collect()),
            Term::Num(n) => Term::Num(n.clone()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::App { head, args } => {
                write!(f, "{head}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::Points(p) => f.write_str(p),
            Term::Num(n) => f.write_str(n),
        }
    }
}

/// Canonical spelling of a decimal numeral: no leading zeros, no trailing
/// fractional zeros, no negative zero. `None` if `text` is not a numeral.
pub fn normalize_numeral(text: &str) -> Option<String> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() || !digits(int) || !digits(frac) || (body.ends_with('.')) {
        return None;
    }
    let int = int.trim_start_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    let frac = frac.trim_end_matches('0');
    let mut out = String::new();
    if neg && !(int == "0" && frac.is_empty()) {
        out.push('-');
    }
    out.push_str(int);
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    Some(out)
}

pub fn is_point_letter(c: char) -> bool {
    c.is_ascii_uppercase()
}
