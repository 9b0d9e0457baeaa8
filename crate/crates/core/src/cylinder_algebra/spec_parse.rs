//! Parser for cylinder conditions
//!
//! ```text
//! expr  := and ('||' and)*
//! and   := unary ('&&' unary)*
//! unary := '!' unary | '(' expr ')' | 'true' | 'false' | atom
//! atom  := 'ord' '(' poly ')' cmp (nat | 'inf')
//! cmp   := '==' | '=' | '>=' | '<='
//! ```

use crate::error::{Error, Result};
use crate::scheme_model::{parse_error, parse_poly};

use super::{Cmp, Condition};

struct P<'a> {
    src: &'a str,
    vars: &'a [String],
    pos: usize,
}

impl P<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        parse_error(self.src, self.pos, msg)
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn expr(&mut self) -> Result<Condition> {
        let mut parts = vec![self.and()?];
        while self.eat("||") {
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Condition::Or(parts) })
    }

    fn and(&mut self) -> Result<Condition> {
        let mut parts = vec![self.unary()?];
        while self.eat("&&") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Condition::And(parts) })
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        rest[..len].to_string()
    }

    fn unary(&mut self) -> Result<Condition> {
        if self.eat("!") {
            return Ok(Condition::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let inner = self.expr()?;
            if !self.eat(")") {
                return Err(self.err("expected `)`"));
            }
            return Ok(inner);
        }
        match self.word().as_str() {
            "true" => {
                self.pos += 4;
                Ok(Condition::True)
            }
            "false" => {
                self.pos += 5;
                Ok(Condition::False)
            }
            "ord" => {
                self.pos += 3;
                self.atom()
            }
            "" if self.pos == self.src.len() => Err(self.err("expected a condition")),
            _ => Err(self.err("expected `ord(...)`, `true`, `false`, `!` or `(`")),
        }
    }

    fn atom(&mut self) -> Result<Condition> {
        if !self.eat("(") {
            return Err(self.err("expected `(` after `ord`"));
        }
        let start = self.pos;
        let Some(len) = self.src[start..].find(')') else {
            return Err(self.err("unclosed `ord(`"));
        };
        let body = &self.src[start..start + len];
        let poly = parse_poly(body, self.vars).map_err(|e| shift(self.src, start, body, e))?;
        self.pos = start + len + 1;
        let cmp = if self.eat("==") || self.eat("=") {
            Cmp::Eq
        } else if self.eat(">=") {
            Cmp::Ge
        } else if self.eat("<=") {
            Cmp::Le
        } else {
            return Err(self.err("expected `==`, `>=` or `<=`"));
        };
        if self.word() == "inf" {
            self.pos += 3;
            return match cmp {
                Cmp::Eq | Cmp::Ge => Ok(Condition::Vanishes(poly)),
                Cmp::Le => Ok(Condition::True),
            };
        }
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a natural number or `inf`"));
        }
        let c: u32 = rest[..len].parse().map_err(|_| self.err("order out of range"))?;
        self.pos += len;
        Ok(Condition::atom(poly, cmp, c))
    }
}

/// Move an error position inside `body` (which starts at byte `start` of
/// `src`) to a position in `src`.
fn shift(src: &str, start: usize, body: &str, e: Error) -> Error {
    let locate = |line: usize, column: usize| -> usize {
        let mut off = 0;
        for (i, l) in body.split('\n').enumerate() {
            if i + 1 == line {
                return start + off + column - 1;
            }
            off += l.len() + 1;
        }
        start + body.len()
    };
    match e {
        Error::Parse { line, column, message } => parse_error(src, locate(line, column), message),
        Error::UnknownVariable { token, line, column } => {
            let Error::Parse { line, column, .. } = parse_error(src, locate(line, column), "") else {
                unreachable!()
            };
            Error::UnknownVariable { token, line, column }
        }
        other => other,
    }
}

pub(super) fn parse_condition(src: &str, vars: &[String]) -> Result<Condition> {
    let mut p = P { src, vars, pos: 0 };
    if p.at_end() {
        return Ok(Condition::True);
    }
    let c = p.expr()?;
    if !p.at_end() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    #[test]
    fn precedence() {
        let c = parse_condition("ord(x) == 1 && ord(y) >= 2 || !(ord(x-y) <= 0)", &vars()).unwrap();
        match c {
            Condition::Or(parts) => {
                assert!(matches!(parts[0], Condition::And(_)));
                assert!(matches!(parts[1], Condition::Not(_)));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn error_positions() {
        match parse_condition("ord(x) == 1 && ord(z) >= 2", &vars()) {
            Err(Error::UnknownVariable { token, column, .. }) => {
                assert_eq!(token, "z");
                assert_eq!(column, 20);
            }
            other => panic!("{other:?}"),
        }
        match parse_condition("ord(x) >> 1", &vars()) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 8),
            other => panic!("{other:?}"),
        }
        match parse_condition("ord(x) == 1 &&", &vars()) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 15),
            other => panic!("{other:?}"),
        }
    }
}
