//! Job files.
//!
//! ```text
//! # the affine line over F_2[[t]]
//! ring = {kind = "eq", p = 2, f = 1}
//! levels = 0..3
//!
//! scheme line:
//!   vars = [x]
//!   gens = []
//! ```
//!
//! A file is a list of `key = value` statements separated by newlines or
//! `;`, grouped by headers `scheme NAME:`, `morphism NAME:` and `job:`.
//! Statements before the first header belong to the job. A header named
//! after a command (`measure:`, `cov:`, ...) is a job section that also
//! selects the command. Values are `"strings"`, `[lists]`, `{tables}` or
//! bare words running up to the next `,` `;` `]` `}` or end of line.
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use greenberg_core::ring_tower::RingDescriptor;
use greenberg_core::scheme_model::{parse_poly, Poly};
use greenberg_core::Error as CoreError;

/// A position in the job file, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub pos: Pos,
    pub message: String,
    /// the offending token, for unknown names and variables
    pub token: Option<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)?;
        if let Some(t) = &self.token {
            write!(f, " (`{t}`)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn err(pos: Pos, message: impl Into<String>) -> ConfigError {
    ConfigError {
        pos,
        message: message.into(),
        token: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    Bare(String),
    List(Vec<Spanned>),
    Table(Vec<(String, Pos, Spanned)>),
}

/// A value with the position of its first character. For strings this is
/// the character after the opening quote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub value: Value,
    pub pos: Pos,
}

impl Spanned {
    fn describe(&self) -> &'static str {
        match self.value {
            Value::Str(_) => "a string",
            Value::Bare(_) => "a word",
            Value::List(_) => "a list",
            Value::Table(_) => "a table",
        }
    }

    /// Text of a string or bare word.
    pub fn text(&self) -> Result<&str, ConfigError> {
        match &self.value {
            Value::Str(s) | Value::Bare(s) => Ok(s),
            _ => Err(err(self.pos, format!("expected a word or string, found {}", self.describe()))),
        }
    }

    /// Items of a list; a single word or string counts as a list of one.
    pub fn items(&self) -> Vec<&Spanned> {
        match &self.value {
            Value::List(v) => v.iter().collect(),
            _ => vec![self],
        }
    }

    pub fn int(&self) -> Result<u64, ConfigError> {
        let t = self.text()?;
        parse_int(t).ok_or_else(|| err(self.pos, format!("expected a natural number, found `{t}`")))
    }

    pub fn signed(&self) -> Result<i64, ConfigError> {
        let t = self.text()?;
        t.parse().map_err(|_| err(self.pos, format!("expected an integer, found `{t}`")))
    }

    pub fn boolean(&self) -> Result<bool, ConfigError> {
        match self.text()? {
            "true" | "yes" => Ok(true),
            "false" | "no" => Ok(false),
            t => Err(err(self.pos, format!("expected true or false, found `{t}`"))),
        }
    }
}

/// `123`, `2^24` or `1<<24`.
pub fn parse_int(t: &str) -> Option<u64> {
    let t = t.trim();
    if let Some((a, b)) = t.split_once('^') {
        let a: u64 = a.trim().parse().ok()?;
        let b: u32 = b.trim().parse().ok()?;
        return a.checked_pow(b);
    }
    if let Some((a, b)) = t.split_once("<<") {
        let a: u64 = a.trim().parse().ok()?;
        let b: u32 = b.trim().parse().ok()?;
        return a.checked_shl(b).filter(|v| v >> b == a);
    }
    t.parse().ok()
}

/// `a..b` (inclusive), a single `n` meaning `0..n`, or a list.
pub fn parse_levels(t: &str) -> Option<Vec<u32>> {
    let t = t.trim();
    if let Some((a, b)) = t.split_once("..") {
        let a: u32 = a.trim().parse().ok()?;
        let b: u32 = b.trim().trim_start_matches('=').parse().ok()?;
        return (a <= b).then(|| (a..=b).collect());
    }
    let n: u32 = t.parse().ok()?;
    Some((0..=n).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Header {
    Job,
    Scheme(String),
    Morphism(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub header: Header,
    pub pos: Pos,
    /// the command named by the header, if any
    pub command: Option<String>,
    pub entries: Vec<(String, Pos, Spanned)>,
}

struct Lexer<'a> {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            i: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    /// Skip spaces and comments; newlines too when `newlines` is set.
    fn skip(&mut self, newlines: bool) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c == '\n' && !newlines {
                break;
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> Option<String> {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '-' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        (!s.is_empty()).then_some(s)
    }

    fn value(&mut self, depth: usize) -> Result<Spanned, ConfigError> {
        self.skip(depth > 0);
        let pos = self.pos();
        match self.peek() {
            Some('"') => {
                self.bump();
                let start = self.pos();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => return Err(err(pos, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err(err(self.pos(), "unknown escape")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Ok(Spanned {
                    value: Value::Str(s),
                    pos: start,
                })
            }
            Some('[') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip(true);
                    if self.peek() == Some(']') {
                        self.bump();
                        break;
                    }
                    items.push(self.value(depth + 1)?);
                    self.skip(true);
                    match self.peek() {
                        Some(',') => {
                            self.bump();
                        }
                        Some(']') => {}
                        _ => return Err(err(self.pos(), "expected `,` or `]` in list")),
                    }
                }
                Ok(Spanned {
                    value: Value::List(items),
                    pos,
                })
            }
            Some('{') => {
                self.bump();
                let mut entries = Vec::new();
                loop {
                    self.skip(true);
                    if self.peek() == Some('}') {
                        self.bump();
                        break;
                    }
                    let kpos = self.pos();
                    let key = self.ident().ok_or_else(|| err(kpos, "expected a key in table"))?;
                    self.skip(true);
                    if self.peek() != Some('=') {
                        return Err(err(self.pos(), format!("expected `=` after `{key}`")));
                    }
                    self.bump();
                    let v = self.value(depth + 1)?;
                    entries.push((key, kpos, v));
                    self.skip(true);
                    match self.peek() {
                        Some(',') => {
                            self.bump();
                        }
                        Some('}') => {}
                        _ => return Err(err(self.pos(), "expected `,` or `}` in table")),
                    }
                }
                Ok(Spanned {
                    value: Value::Table(entries),
                    pos,
                })
            }
            _ => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if matches!(c, ',' | ';' | ']' | '}' | '\n' | '#') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                let t = s.trim_end().to_string();
                if t.is_empty() {
                    return Err(err(pos, "expected a value"));
                }
                Ok(Spanned {
                    value: Value::Bare(t),
                    pos,
                })
            }
        }
    }

    /// Skip to the next statement after an error.
    fn recover(&mut self) {
        let mut depth = 0i32;
        while let Some(c) = self.peek() {
            match c {
                '[' | '{' => depth += 1,
                ']' | '}' => depth -= 1,
                ';' | '\n' if depth <= 0 => return,
                _ => {}
            }
            self.bump();
        }
    }
}

pub const COMMANDS: [&str; 9] = [
    "count", "series", "measure", "mult", "ordjac", "hensel", "greenberg", "integrate", "cov-check",
];

fn command_alias(name: &str) -> Option<&'static str> {
    match name {
        "cov" => Some("cov-check"),
        _ => COMMANDS.iter().find(|c| **c == name).copied(),
    }
}

/// Split a file into sections of raw entries.
pub fn parse_sections(src: &str) -> Result<Vec<Section>, ConfigErrors> {
    let mut lx = Lexer::new(src);
    let mut errors = Vec::new();
    let mut sections = vec![Section {
        header: Header::Job,
        pos: Pos { line: 1, column: 1 },
        command: None,
        entries: Vec::new(),
    }];
    loop {
        lx.skip(true);
        while lx.peek() == Some(';') {
            lx.bump();
            lx.skip(true);
        }
        if lx.peek().is_none() {
            break;
        }
        let pos = lx.pos();
        let Some(word) = lx.ident() else {
            errors.push(err(pos, format!("unexpected `{}`", lx.peek().unwrap())));
            lx.recover();
            continue;
        };
        lx.skip(false);
        if lx.peek() == Some('=') {
            lx.bump();
            match lx.value(0) {
                Ok(v) => {
                    lx.skip(false);
                    match lx.peek() {
                        None | Some('\n') | Some(';') => sections.last_mut().unwrap().entries.push((word, pos, v)),
                        Some(c) => {
                            errors.push(err(lx.pos(), format!("unexpected `{c}` after value")));
                            lx.recover();
                        }
                    }
                }
                Err(e) => {
                    errors.push(e);
                    lx.recover();
                }
            }
            continue;
        }
        // a header
        let name = if lx.peek() == Some(':') {
            None
        } else {
            let npos = lx.pos();
            match lx.ident() {
                Some(n) => Some(n),
                None => {
                    errors.push(err(npos, format!("expected `=` after `{word}`")));
                    lx.recover();
                    continue;
                }
            }
        };
        lx.skip(false);
        if lx.peek() != Some(':') {
            errors.push(err(lx.pos(), format!("expected `:` after section header `{word}`")));
            lx.recover();
            continue;
        }
        lx.bump();
        let (header, command) = match (word.as_str(), name) {
            ("scheme", n) => (Header::Scheme(n.unwrap_or_else(|| "X".into())), None),
            ("morphism", Some(n)) => (Header::Morphism(n), None),
            ("morphism", None) => {
                errors.push(err(pos, "a morphism section needs a name"));
                (Header::Morphism(String::new()), None)
            }
            ("job", None) => (Header::Job, None),
            (w, None) if command_alias(w).is_some() => (Header::Job, command_alias(w).map(String::from)),
            (w, _) => {
                errors.push(ConfigError {
                    pos,
                    message: "unknown section".into(),
                    token: Some(w.to_string()),
                });
                (Header::Job, None)
            }
        };
        sections.push(Section {
            header,
            pos,
            command,
            entries: Vec::new(),
        });
    }
    if errors.is_empty() {
        Ok(sections)
    } else {
        Err(ConfigErrors(errors))
    }
}

#[derive(Debug, Clone)]
pub struct SchemeDef {
    pub name: String,
    pub pos: Pos,
    pub vars: Vec<String>,
    pub gens: Vec<Poly>,
    pub dim: usize,
    pub smooth: bool,
    pub complete_intersection: bool,
    pub flat: bool,
}

#[derive(Debug, Clone)]
pub struct MorphismDef {
    pub name: String,
    pub pos: Pos,
    pub source: String,
    pub target: String,
    pub coords: Vec<Poly>,
}

/// A chart of the source side of a change of variables.
#[derive(Debug, Clone)]
pub struct ChartDef {
    pub morphism: String,
    pub domain: String,
}

/// Parameters of the job section. Absent keys take the defaults of the
/// command line.
#[derive(Debug, Clone, Default)]
pub struct Params {
    pub command: Option<String>,
    pub q: Option<Vec<u64>>,
    pub levels: Option<Vec<u32>>,
    pub precision: Option<i64>,
    pub budget: Option<u64>,
    pub s: Option<u32>,
    pub scheme: Option<String>,
    pub cond: Option<String>,
    pub mult: Option<Vec<Poly>>,
    pub scale: Option<u32>,
    pub offset: Option<i64>,
    pub ordjac: Option<String>,
    pub morphism: Option<String>,
    pub compose: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub n: Option<u32>,
    pub horizon: Option<u32>,
    pub lift: Option<u32>,
    pub charts: Vec<ChartDef>,
    pub interpolate: bool,
}

#[derive(Debug, Clone)]
pub struct JobConfig {
    pub ring: RingDescriptor,
    pub schemes: BTreeMap<String, SchemeDef>,
    pub morphisms: BTreeMap<String, MorphismDef>,
    pub params: Params,
}

impl JobConfig {
    /// The scheme the job works on: the `scheme` key, else the only scheme,
    /// else the first one in the file.
    pub fn main_scheme(&self) -> Option<&SchemeDef> {
        match &self.params.scheme {
            Some(n) => self.schemes.get(n),
            None => self.schemes.values().min_by_key(|s| s.pos),
        }
    }
}

/// Map an error inside a polynomial string to a position in the file.
fn poly_error(v: &Spanned, e: CoreError) -> ConfigError {
    let at = |line: usize, column: usize| {
        if line <= 1 {
            Pos {
                line: v.pos.line,
                column: v.pos.column + column - 1,
            }
        } else {
            Pos {
                line: v.pos.line + line - 1,
                column,
            }
        }
    };
    match e {
        CoreError::Parse { line, column, message } => err(at(line, column), message),
        CoreError::UnknownVariable { token, line, column } => ConfigError {
            pos: at(line, column),
            message: "unknown variable".into(),
            token: Some(token),
        },
        other => err(v.pos, other.to_string()),
    }
}

fn polys(v: &Spanned, vars: &[String]) -> Result<Vec<Poly>, ConfigError> {
    v.items()
        .into_iter()
        .map(|item| {
            let t = item.text()?;
            parse_poly(t, vars).map_err(|e| poly_error(item, e))
        })
        .collect()
}

fn ring_from(v: &Spanned) -> Result<RingDescriptor, ConfigError> {
    let Value::Table(entries) = &v.value else {
        return Err(err(v.pos, "expected a table such as {kind = \"eq\", p = 2, f = 1}"));
    };
    let mut kind = None;
    let (mut p, mut f, mut modulus) = (None, 1u32, None);
    for (k, kpos, val) in entries {
        match k.as_str() {
            "kind" => {
                kind = Some(match val.text()? {
                    "eq" | "equal" | "equal-char" => false,
                    "padic" | "p-adic" | "witt" => true,
                    t => return Err(err(val.pos, format!("unknown ring kind `{t}`, use \"eq\" or \"padic\""))),
                })
            }
            "p" => p = Some(val.int()?),
            "f" => f = val.int()? as u32,
            "modulus" => modulus = Some(val.items().iter().map(|c| c.int()).collect::<Result<Vec<_>, _>>()?),
            _ => {
                return Err(ConfigError {
                    pos: *kpos,
                    message: "unknown ring key".into(),
                    token: Some(k.clone()),
                })
            }
        }
    }
    let p = p.ok_or_else(|| err(v.pos, "the ring needs a prime `p`"))?;
    let mut d = if kind.unwrap_or(false) {
        RingDescriptor::p_adic(p, f)
    } else {
        RingDescriptor::equal_char(p, f)
    };
    d.modulus = modulus;
    d.validate().map_err(|e| err(v.pos, e.to_string()))?;
    Ok(d)
}

fn unknown_key(key: &str, pos: Pos) -> ConfigError {
    ConfigError {
        pos,
        message: "unknown key".into(),
        token: Some(key.to_string()),
    }
}

fn name_error(what: &str, name: &str, pos: Pos) -> ConfigError {
    ConfigError {
        pos,
        message: format!("no {what} of that name"),
        token: Some(name.to_string()),
    }
}

struct Raw<'a> {
    pos: Pos,
    entries: BTreeMap<&'a str, (Pos, &'a Spanned)>,
}

fn collect<'a>(section: &'a Section, errors: &mut Vec<ConfigError>) -> Raw<'a> {
    let mut entries = BTreeMap::new();
    for (k, pos, v) in &section.entries {
        if entries.insert(k.as_str(), (*pos, v)).is_some() {
            errors.push(ConfigError {
                pos: *pos,
                message: "key given twice".into(),
                token: Some(k.clone()),
            });
        }
    }
    Raw {
        pos: section.pos,
        entries,
    }
}

fn scheme_def(name: &str, raw: &Raw, errors: &mut Vec<ConfigError>) -> Option<SchemeDef> {
    let run = || -> Result<SchemeDef, ConfigError> {
        for (k, (pos, _)) in &raw.entries {
            if !matches!(*k, "vars" | "gens" | "dim" | "smooth" | "ci" | "flat") {
                return Err(unknown_key(k, *pos));
            }
        }
        let vars: Vec<String> = match raw.entries.get("vars") {
            Some((_, v)) => v.items().iter().map(|i| i.text().map(String::from)).collect::<Result<_, _>>()?,
            None => return Err(err(raw.pos, format!("scheme {name} has no `vars`"))),
        };
        let gens = match raw.entries.get("gens") {
            Some((_, v)) => polys(v, &vars)?,
            None => Vec::new(),
        };
        let dim = match raw.entries.get("dim") {
            Some((_, v)) => v.int()? as usize,
            None => vars.len().saturating_sub(gens.len()),
        };
        let flag = |k: &str| -> Result<bool, ConfigError> {
            raw.entries.get(k).map_or(Ok(false), |(_, v)| v.boolean())
        };
        Ok(SchemeDef {
            name: name.to_string(),
            pos: raw.pos,
            vars,
            gens,
            dim,
            smooth: flag("smooth")? || raw.entries.get("gens").is_none_or(|(_, v)| v.items().is_empty()),
            complete_intersection: flag("ci")?,
            flat: flag("flat")?,
        })
    };
    run().map_err(|e| errors.push(e)).ok()
}

/// Parse a job file.
pub fn parse_config(src: &str) -> Result<JobConfig, ConfigErrors> {
    let sections = parse_sections(src)?;
    let mut errors = Vec::new();
    let mut schemes = BTreeMap::new();
    let mut morphisms_raw = Vec::new();
    let mut job: Vec<(String, Pos, &Spanned)> = Vec::new();
    let mut command = None;
    for s in &sections {
        match &s.header {
            Header::Job => {
                if let Some(c) = &s.command {
                    command = Some(c.clone());
                }
                for (k, p, v) in &s.entries {
                    if job.iter().any(|(j, _, _)| j == k) {
                        errors.push(ConfigError {
                            pos: *p,
                            message: "key given twice".into(),
                            token: Some(k.clone()),
                        });
                    }
                    job.push((k.clone(), *p, v));
                }
            }
            Header::Scheme(name) => {
                let raw = collect(s, &mut errors);
                if schemes.contains_key(name) {
                    errors.push(ConfigError {
                        pos: s.pos,
                        message: "scheme defined twice".into(),
                        token: Some(name.clone()),
                    });
                } else if let Some(d) = scheme_def(name, &raw, &mut errors) {
                    schemes.insert(name.clone(), d);
                }
            }
            Header::Morphism(name) => morphisms_raw.push((name.clone(), collect(s, &mut errors))),
        }
    }

    let mut morphisms = BTreeMap::new();
    for (name, raw) in &morphisms_raw {
        let run = || -> Result<MorphismDef, ConfigError> {
            let get = |k: &str| {
                raw.entries
                    .get(k)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| err(raw.pos, format!("morphism {name} has no `{k}`")))
            };
            for (k, (pos, _)) in &raw.entries {
                if !matches!(*k, "source" | "target" | "coords") {
                    return Err(unknown_key(k, *pos));
                }
            }
            let (src, tgt) = (get("source")?, get("target")?);
            let source = schemes
                .get(src.text()?)
                .ok_or_else(|| name_error("scheme", src.text().unwrap_or(""), src.pos))?;
            let target = schemes
                .get(tgt.text()?)
                .ok_or_else(|| name_error("scheme", tgt.text().unwrap_or(""), tgt.pos))?;
            let cv = get("coords")?;
            let coords = polys(cv, &source.vars)?;
            if coords.len() != target.vars.len() {
                return Err(err(
                    cv.pos,
                    format!("{} coordinates given for a target in {} variables", coords.len(), target.vars.len()),
                ));
            }
            Ok(MorphismDef {
                name: name.clone(),
                pos: raw.pos,
                source: source.name.clone(),
                target: target.name.clone(),
                coords,
            })
        };
        match run() {
            Ok(m) => {
                if morphisms.insert(name.clone(), m).is_some() {
                    errors.push(ConfigError {
                        pos: raw.pos,
                        message: "morphism defined twice".into(),
                        token: Some(name.clone()),
                    });
                }
            }
            Err(e) => errors.push(e),
        }
    }

    let mut ring = None;
    let mut params = Params {
        command,
        ..Params::default()
    };
    // keys whose meaning depends on the scheme are read in a second pass
    let mut deferred = Vec::new();
    for (k, pos, v) in &job {
        let r: Result<(), ConfigError> = (|| {
            match k.as_str() {
                "ring" => ring = Some(ring_from(v)?),
                "command" => {
                    let t = v.text()?;
                    params.command = Some(
                        command_alias(t)
                            .ok_or_else(|| ConfigError {
                                pos: v.pos,
                                message: "unknown command".into(),
                                token: Some(t.to_string()),
                            })?
                            .to_string(),
                    );
                }
                "q" => params.q = Some(v.items().iter().map(|i| i.int()).collect::<Result<_, _>>()?),
                "levels" => {
                    params.levels = Some(match &v.value {
                        Value::List(items) => items.iter().map(|i| i.int().map(|n| n as u32)).collect::<Result<_, _>>()?,
                        _ => parse_levels(v.text()?)
                            .ok_or_else(|| err(v.pos, "expected levels such as 0..6"))?,
                    })
                }
                "precision" => params.precision = Some(v.signed()?),
                "budget" => params.budget = Some(v.int()?),
                "s" => params.s = Some(v.int()? as u32),
                "scheme" => params.scheme = Some(v.text()?.to_string()),
                "scale" => params.scale = Some(v.int()? as u32),
                "offset" => params.offset = Some(v.signed()?),
                "samples" => params.samples = Some(v.int()? as usize),
                "seed" => params.seed = Some(v.int()?),
                "n" => params.n = Some(v.int()? as u32),
                "horizon" => params.horizon = Some(v.int()? as u32),
                "lift" => params.lift = Some(v.int()? as u32),
                "interpolate" => params.interpolate = v.boolean()?,
                "cond" | "mult" | "ordjac" | "morphism" | "compose" | "charts" | "domains" => {
                    deferred.push((k.as_str(), *pos, *v))
                }
                _ => return Err(unknown_key(k, *pos)),
            }
            Ok(())
        })();
        if let Err(e) = r {
            errors.push(e);
        }
    }
    let ring = match ring {
        Some(r) => r,
        None => {
            if !errors.iter().any(|e| e.message.contains("ring")) {
                errors.push(err(Pos { line: 1, column: 1 }, "no `ring = {kind = ..., p = ..., f = ...}` given"));
            }
            RingDescriptor::equal_char(2, 1)
        }
    };

    let mut config = JobConfig {
        ring,
        schemes,
        morphisms,
        params,
    };
    if let Some(n) = &config.params.scheme {
        if !config.schemes.contains_key(n) {
            let pos = job.iter().find(|(k, _, _)| k == "scheme").map_or(Pos { line: 1, column: 1 }, |(_, _, v)| v.pos);
            errors.push(name_error("scheme", n, pos));
        }
    }
    let vars = config.main_scheme().map(|s| s.vars.clone()).unwrap_or_default();
    let mut chart_names: Vec<(String, Pos)> = Vec::new();
    let mut domains: Option<Vec<&Spanned>> = None;
    for (k, pos, v) in deferred {
        let r: Result<(), ConfigError> = (|| {
            let morphism_name = |v: &Spanned| -> Result<String, ConfigError> {
                let t = v.text()?;
                if config.morphisms.contains_key(t) {
                    Ok(t.to_string())
                } else {
                    Err(name_error("morphism", t, v.pos))
                }
            };
            match k {
                "cond" => {
                    let t = v.text()?;
                    // check the syntax against the main scheme's variables
                    if config.main_scheme().is_some() {
                        check_condition(t, &vars).map_err(|e| poly_error(v, e))?;
                    }
                    config.params.cond = Some(t.to_string());
                }
                "mult" => config.params.mult = Some(polys(v, &vars)?),
                "ordjac" => config.params.ordjac = Some(morphism_name(v)?),
                "morphism" => config.params.morphism = Some(morphism_name(v)?),
                "compose" => config.params.compose = Some(morphism_name(v)?),
                "charts" => {
                    for i in v.items() {
                        chart_names.push((morphism_name(i)?, i.pos));
                    }
                }
                "domains" => domains = Some(v.items()),
                _ => unreachable!(),
            }
            let _ = pos;
            Ok(())
        })();
        if let Err(e) = r {
            errors.push(e);
        }
    }
    if let Some(d) = &domains {
        if d.len() != chart_names.len() {
            errors.push(err(d.first().map_or(Pos { line: 1, column: 1 }, |x| x.pos), format!(
                "{} domains given for {} charts",
                d.len(),
                chart_names.len()
            )));
        }
    }
    for (i, (name, _)) in chart_names.iter().enumerate() {
        let domain = match domains.as_ref().and_then(|d| d.get(i)) {
            Some(v) => match v.text() {
                Ok(t) => {
                    let src = &config.morphisms[name].source;
                    if let Err(e) = check_condition(t, &config.schemes[src].vars) {
                        errors.push(poly_error(v, e));
                    }
                    t.to_string()
                }
                Err(e) => {
                    errors.push(e);
                    String::new()
                }
            },
            None => String::new(),
        };
        config.params.charts.push(ChartDef {
            morphism: name.clone(),
            domain,
        });
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        errors.sort_by_key(|e| e.pos);
        Err(ConfigErrors(errors))
    }
}

fn check_condition(src: &str, vars: &[String]) -> Result<(), CoreError> {
    use greenberg_core::scheme_model::AffineFormalScheme;
    use greenberg_core::cylinder_algebra::CylinderSpec;
    let names: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
    let x = AffineFormalScheme::affine_space("probe", RingDescriptor::equal_char(2, 1), &names)?;
    CylinderSpec::parse(std::sync::Arc::new(x), src).map(|_| ())
}
