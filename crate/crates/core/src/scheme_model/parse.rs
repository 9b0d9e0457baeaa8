//! Parser for the polynomial input grammar
//!
//! ```text
//! poly     := sign? term (('+' | '-') term)*
//! term     := factor ('*'? factor)*
//! factor   := integer | atom ('^' nat)?
//! atom     := a declared variable | 'pi'
//! ```
//!
//! Whitespace is ignored, so `x y`, `xy` and `x*y` all denote the same
//! product. Identifier runs are split greedily into declared variable names.

use num_bigint::BigInt;

use crate::error::{Error, Result};

use super::poly::{Monomial, Poly};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Atom(Option<usize>), // None = pi
    Plus,
    Minus,
    Star,
    Caret,
}

struct Lexer<'a> {
    src: &'a str,
    vars: &'a [String],
    toks: Vec<(Tok, usize)>,
}

fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

pub(crate) fn parse_error(src: &str, offset: usize, message: impl Into<String>) -> Error {
    let (line, column) = position(src, offset);
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Result<Vec<(Tok, usize)>> {
        let bytes = self.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' => {
                    self.toks.push((Tok::Plus, i));
                    i += 1;
                }
                '-' => {
                    self.toks.push((Tok::Minus, i));
                    i += 1;
                }
                '*' => {
                    self.toks.push((Tok::Star, i));
                    i += 1;
                }
                '^' => {
                    self.toks.push((Tok::Caret, i));
                    i += 1;
                }
                '0'..='9' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let n: BigInt = self.src[start..i].parse().unwrap();
                    self.toks.push((Tok::Int(n), start));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                        i += 1;
                    }
                    self.split_identifier(start, i)?;
                }
                other => {
                    return Err(parse_error(self.src, i, format!("unexpected character `{other}`")))
                }
            }
        }
        Ok(self.toks)
    }

    fn split_identifier(&mut self, start: usize, end: usize) -> Result<()> {
        let mut pos = start;
        while pos < end {
            let rest = &self.src[pos..end];
            let mut best: Option<(usize, Option<usize>)> = None;
            for (idx, v) in self.vars.iter().enumerate() {
                if rest.starts_with(v.as_str()) && best.is_none_or(|(len, _)| v.len() > len) {
                    best = Some((v.len(), Some(idx)));
                }
            }
            if rest.starts_with("pi") && best.is_none_or(|(len, _)| len < 2) {
                best = Some((2, None));
            }
            match best {
                Some((len, atom)) => {
                    self.toks.push((Tok::Atom(atom), pos));
                    pos += len;
                }
                None => {
                    let (line, column) = position(self.src, pos);
                    return Err(Error::UnknownVariable {
                        token: rest.to_string(),
                        line,
                        column,
                    });
                }
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    vars: &'a [String],
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(_, o)| *o)
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Tok::Int(_)) | Some(Tok::Atom(_)))
    }

    fn poly(&mut self) -> Result<Poly> {
        let mut out = Poly::zero(self.vars);
        let mut sign = 1;
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -1;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            None => return Err(parse_error(self.src, self.offset(), "empty polynomial")),
            _ => {}
        }
        loop {
            let t = self.term()?;
            out = if sign < 0 { out.sub(&t) } else { out.add(&t) };
            match self.peek() {
                None => return Ok(out),
                Some(Tok::Plus) => {
                    sign = 1;
                    self.pos += 1;
                }
                Some(Tok::Minus) => {
                    sign = -1;
                    self.pos += 1;
                }
                Some(_) => {
                    return Err(parse_error(self.src, self.offset(), "expected `+` or `-`"));
                }
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        if !self.starts_factor() {
            let msg = match self.peek() {
                None => "dangling operator: expected a term",
                _ => "expected a coefficient, variable or `pi`",
            };
            let at = if self.peek().is_none() && self.pos > 0 {
                self.toks[self.pos - 1].1
            } else {
                self.offset()
            };
            return Err(parse_error(self.src, at, msg));
        }
        let mut coeff = BigInt::from(1);
        let mut mono = Monomial::one(self.vars.len());
        loop {
            match self.peek().cloned() {
                Some(Tok::Int(n)) => {
                    self.pos += 1;
                    let e = self.exponent()?;
                    coeff *= n.pow(e);
                }
                Some(Tok::Atom(a)) => {
                    self.pos += 1;
                    let e = self.exponent()?;
                    match a {
                        Some(i) => mono.exps[i] += e,
                        None => mono.pi += e,
                    }
                }
                _ => break,
            }
            if matches!(self.peek(), Some(Tok::Star)) {
                self.pos += 1;
                if !self.starts_factor() {
                    return Err(parse_error(self.src, self.offset(), "expected a factor after `*`"));
                }
            } else if !self.starts_factor() {
                break;
            }
        }
        Ok(Poly::from_terms(self.vars, [(mono, coeff)]))
    }

    fn exponent(&mut self) -> Result<u32> {
        if !matches!(self.peek(), Some(Tok::Caret)) {
            return Ok(1);
        }
        self.pos += 1;
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                u32::try_from(n).map_err(|_| parse_error(self.src, self.offset(), "exponent too large"))
            }
            _ => Err(parse_error(self.src, self.offset(), "expected a natural exponent after `^`")),
        }
    }
}

/// Parse a polynomial in the given variables.
pub fn parse_poly(src: &str, vars: &[String]) -> Result<Poly> {
    let toks = Lexer {
        src,
        vars,
        toks: Vec::new(),
    }
    .run()?;
    let mut p = Parser {
        src,
        vars,
        toks,
        pos: 0,
    };
    p.poly()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn basic_forms() {
        let v = vars(&["x", "y"]);
        let f = parse_poly("xy - pi", &v).unwrap();
        assert_eq!(f.to_string(), "x*y - pi");
        assert_eq!(parse_poly("x y-pi", &v).unwrap(), f);
        assert_eq!(parse_poly("x*y - pi", &v).unwrap(), f);
        let g = parse_poly("y^2 - x^3", &v).unwrap();
        assert_eq!(g.derivative(0).to_string(), "-3*x^2");
        assert_eq!(
            parse_poly("3*pi^2 x", &v).unwrap().to_string(),
            "3*pi^2*x"
        );
        assert_eq!(parse_poly("-x + 2", &v).unwrap().to_string(), "-x + 2");
    }

    #[test]
    fn longest_variable_match() {
        let v = vars(&["x", "x1", "y"]);
        let f = parse_poly("x1x", &v).unwrap();
        assert_eq!(f.to_string(), "x*x1");
    }

    #[test]
    fn errors() {
        let v = vars(&["x"]);
        match parse_poly("x^2 -", &v) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        match parse_poly("x + z", &v) {
            Err(Error::UnknownVariable { token, column, .. }) => {
                assert_eq!(token, "z");
                assert_eq!(column, 5);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_poly("", &v).is_err());
        assert!(parse_poly("x^", &v).is_err());
        assert!(parse_poly("x $ 2", &v).is_err());
    }
}
