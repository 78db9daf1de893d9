//! Pre-order tokenization of condition bodies.
//!
//! `RightTriangle(ABC)` becomes `[RightTriangle, A, B, C]`: the head first,
//! then every argument in order, one token per point letter. Operators emit
//! their symbol (`Add` → `+`). A numeral outside a closed numeral vocabulary
//! is spelled as a sign token, one token per character, and a closing `=`.

use std::collections::BTreeSet;

use super::system::FormalSystem;
use super::term::{is_function, is_point_letter, normalize_numeral, operator_name, operator_symbol, Term, EQUAL};
use crate::error::{Error, Result};

/// Closes a digit-split numeral.
pub const SPLIT_END: &str = "=";

/// Tokens that can appear in a digit-split numeral.
pub fn split_tokens() -> Vec<String> {
    let mut out: Vec<String> = ["+", "-", SPLIT_END, "."].iter().map(|s| s.to_string()).collect();
    out.extend((0..10).map(|d| d.to_string()));
    out
}

/// Tokenizer with an optional closed numeral vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenizer {
    numerals: Option<BTreeSet<String>>,
}

impl Tokenizer {
    /// Every numeral is a single token.
    pub fn open() -> Self {
        Self::default()
    }

    /// Numerals outside `numerals` are split into characters.
    pub fn closed(numerals: impl IntoIterator<Item = String>) -> Self {
        Self { numerals: Some(numerals.into_iter().collect()) }
    }

    pub fn tokenize(&self, body: &Term) -> Vec<String> {
        let mut out = Vec::new();
        self.emit(body, &mut out);
        out
    }

    fn emit(&self, term: &Term, out: &mut Vec<String>) {
        match term {
            Term::App { head, args } => {
                out.push(operator_symbol(head).unwrap_or(head).to_string());
                args.iter().for_each(|a| self.emit(a, out));
            }
            Term::Points(p) => out.extend(p.chars().map(String::from)),
            Term::Num(n) => match &self.numerals {
                Some(vocab) if !vocab.contains(n) => {
                    let (sign, digits) = match n.strip_prefix('-') {
                        Some(rest) => ("-", rest),
                        None => ("+", n.as_str()),
                    };
                    out.push(sign.to_string());
                    out.extend(digits.chars().map(String::from));
                    out.push(SPLIT_END.to_string());
                }
                _ => out.push(n.clone()),
            },
        }
    }
}

/// Tokenizes with an open numeral vocabulary.
pub fn tokenize(body: &Term) -> Vec<String> {
    Tokenizer::open().tokenize(body)
}

struct Reader<'a> {
    tokens: &'a [String],
    pos: usize,
    system: &'a FormalSystem,
}

impl<'a> Reader<'a> {
    fn next(&mut self, head: &str) -> Result<&'a str> {
        let t = self.tokens.get(self.pos).ok_or_else(|| Error::Arity {
            head: head.to_string(),
            message: "token stream ended early".into(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn split_numeral(&mut self) -> Option<Term> {
        let start = self.pos;
        let sign = self.tokens.get(start)?;
        let mut text = if sign == "-" { String::from("-") } else { String::new() };
        let mut i = start + 1;
        while let Some(t) = self.tokens.get(i) {
            if t == SPLIT_END {
                let n = normalize_numeral(&text)?;
                self.pos = i + 1;
                return Some(Term::Num(n));
            }
            let mut chars = t.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_digit() || c == '.' => text.push(c),
                _ => return None,
            }
            i += 1;
        }
        None
    }

    fn term(&mut self, parent: &str) -> Result<Term> {
        let tok = self.next(parent)?;
        if tok == "+" || tok == "-" {
            self.pos -= 1;
            if let Some(n) = self.split_numeral() {
                return Ok(n);
            }
            self.pos += 1;
        }
        if let Some(name) = operator_name(tok) {
            let a = self.term(name)?;
            let b = self.term(name)?;
            return Ok(Term::app(name, vec![a, b]));
        }
        if tok == EQUAL {
            let a = self.term(tok)?;
            let b = self.term(tok)?;
            return Ok(Term::equal(a, b));
        }
        if is_function(tok) {
            return Ok(Term::app(tok, vec![self.term(tok)?]));
        }
        if let Some(decl) = self.system.decl(tok) {
            let mut args = Vec::with_capacity(decl.slots.len());
            for slot in &decl.slots {
                let mut p = String::with_capacity(slot.points);
                for _ in 0..slot.points {
                    let t = self.next(tok)?;
                    match t.chars().next() {
                        Some(c) if t.len() == 1 && is_point_letter(c) => p.push(c),
                        _ => {
                            return Err(Error::Arity {
                                head: tok.to_string(),
                                message: format!("expected a point letter, found `{t}`"),
                            })
                        }
                    }
                }
                args.push(Term::Points(p));
            }
            return Ok(Term::app(tok, args));
        }
        if let Some(n) = normalize_numeral(tok) {
            return Ok(Term::Num(n));
        }
        Err(Error::UnexpectedToken(tok.to_string()))
    }
}

/// Rebuilds a body from its tokens using the declared arities.
pub fn detokenize(tokens: &[String], system: &FormalSystem) -> Result<Term> {
    if tokens.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut r = Reader { tokens, pos: 0, system };
    let term = r.term("")?;
    if r.pos != tokens.len() {
        return Err(Error::Arity { head: tokens[0].clone(), message: "trailing tokens".into() });
    }
    Ok(term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::system::parse_system;

    fn system() -> FormalSystem {
        parse_system(
            r#"{"predicates": [
                {"name": "Parallel", "slots": [{"kind":"line","points":2},{"kind":"line","points":2}]},
                {"name": "RightTriangle", "slots": [{"kind":"triangle","points":3}]}
              ],
              "attributes": [{"name": "LengthOfLine", "slots": [{"kind":"line","points":2}]}],
              "theorems": []}"#,
        )
        .unwrap()
    }

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flattens_in_pre_order() {
        let sys = system();
        let t = |s: &str| tokenize(&sys.parse_condition(s).unwrap());
        assert_eq!(t("RightTriangle(ABC)"), toks(&["RightTriangle", "A", "B", "C"]));
        assert_eq!(t("Equal(LengthOfLine(AB),10)"), toks(&["Equal", "LengthOfLine", "A", "B", "10"]));
        assert_eq!(t("Parallel(AB,CD)"), toks(&["Parallel", "A", "B", "C", "D"]));
        assert_eq!(
            t("Equal(Add(LengthOfLine(AB),2),3)"),
            toks(&["Equal", "+", "LengthOfLine", "A", "B", "2", "3"])
        );
    }

    #[test]
    fn detokenize_inverts() {
        let sys = system();
        let term = detokenize(&toks(&["RightTriangle", "A", "B", "C"]), &sys).unwrap();
        assert_eq!(term.to_string(), "RightTriangle(ABC)");
    }

    #[test]
    fn detokenize_errors() {
        let sys = system();
        assert!(matches!(detokenize(&[], &sys), Err(Error::EmptyStream)));
        assert!(matches!(detokenize(&toks(&["Parallel", "A", "B"]), &sys), Err(Error::Arity { .. })));
        assert!(matches!(
            detokenize(&toks(&["Parallel", "A", "B", "C", "D", "E"]), &sys),
            Err(Error::Arity { .. })
        ));
    }

    #[test]
    fn out_of_vocabulary_numerals_split() {
        let sys = system();
        let tk = Tokenizer::closed(["10".to_string()]);
        let body = sys.parse_condition("Equal(Sub(LengthOfLine(AB),5),-12.5)").unwrap();
        let tokens = tk.tokenize(&body);
        assert_eq!(
            tokens,
            toks(&["Equal", "-", "LengthOfLine", "A", "B", "+", "5", "=", "-", "1", "2", ".", "5", "="])
        );
        assert_eq!(detokenize(&tokens, &sys).unwrap(), body);
    }

    #[test]
    fn vocabulary_numerals_next_to_operators() {
        let sys = system();
        let tk = Tokenizer::closed(["5".to_string()]);
        let body = sys.parse_condition("Equal(Sub(5,-7),LengthOfLine(AB))").unwrap();
        let tokens = tk.tokenize(&body);
        assert_eq!(detokenize(&tokens, &sys).unwrap(), body);
    }
}
