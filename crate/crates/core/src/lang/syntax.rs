//! Surface syntax: `Head(arg,arg,...)` with point groups and numerals as atoms.

use crate::error::{Error, Result};

/// Untyped parse tree, validated against a formal system afterwards.
#[derive(Debug, Clone, PartialEq)]
pub enum Raw {
    Call { name: String, args: Vec<Raw>, pos: usize },
    Atom { text: String, pos: usize },
}

impl Raw {
    pub fn pos(&self) -> usize {
        match self {
            Raw::Call { pos, .. } | Raw::Atom { pos, .. } => *pos,
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn syntax<T>(pos: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Syntax { pos, message: message.into() })
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn word(&mut self) -> Result<(String, usize)> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let b = self.src[self.pos];
            if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || (b == b'-' && self.pos == start) {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return match self.src.get(start) {
                Some(&b) => syntax(start, format!("unexpected `{}`", b as char)),
                None => syntax(start, "unexpected end of input"),
            };
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice").to_string();
        Ok((text, start))
    }

    fn term(&mut self) -> Result<Raw> {
        let (text, pos) = self.word()?;
        if self.peek() != Some(b'(') {
            return Ok(Raw::Atom { text, pos });
        }
        self.pos += 1;
        let mut args = Vec::new();
        if self.peek() == Some(b')') {
            return syntax(self.pos, "empty argument list");
        }
        loop {
            args.push(self.term()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(b) => return syntax(self.pos, format!("expected `,` or `)`, found `{}`", b as char)),
                None => return syntax(self.pos, "unclosed `(`"),
            }
        }
        Ok(Raw::Call { name: text, args, pos })
    }
}

/// Parses one complete term; trailing input is an error.
pub fn parse_raw(text: &str) -> Result<Raw> {
    if !text.is_ascii() {
        let pos = text.char_indices().find(|(_, c)| !c.is_ascii()).map_or(0, |(i, _)| i);
        return syntax(pos, "non-ASCII character");
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let raw = p.term()?;
    if let Some(b) = p.peek() {
        return syntax(p.pos, format!("trailing input starting at `{}`", b as char));
    }
    Ok(raw)
}
