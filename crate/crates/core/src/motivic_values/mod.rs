//! Laurent polynomials in `L` with filtration precision, their norm, and the
//! counting specialization `L -> q`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// `Finite(m)`: known modulo terms of order `L^{-m}` and below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Exact,
    Finite(i64),
}

impl Precision {
    pub fn min(self, other: Precision) -> Precision {
        match (self, other) {
            (Precision::Exact, p) | (p, Precision::Exact) => p,
            (Precision::Finite(a), Precision::Finite(b)) => Precision::Finite(a.min(b)),
        }
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Precision::Exact => None,
            Precision::Finite(m) => Some(m),
        }
    }

    fn covers(self, j: i64) -> bool {
        match self {
            Precision::Exact => true,
            Precision::Finite(m) => j > -m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MotivicValue {
    coeffs: BTreeMap<i64, BigInt>,
    precision: Precision,
}

/// The norm `2^{jmax}`, or a bound when no term is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Zero,
    /// exactly `2^j`
    Exact(i64),
    /// at most `2^{-m}`
    AtMost(i64),
}

impl Norm {
    /// Upper bound on the exponent of 2, `None` for zero.
    pub fn log2_upper(self) -> Option<i64> {
        match self {
            Norm::Zero => None,
            Norm::Exact(j) => Some(j),
            Norm::AtMost(m) => Some(-m),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Zero => write!(f, "0"),
            Norm::Exact(j) => write!(f, "2^{j}"),
            Norm::AtMost(m) => write!(f, "<= 2^{}", -m),
        }
    }
}

impl MotivicValue {
    pub fn zero() -> Self {
        MotivicValue {
            coeffs: BTreeMap::new(),
            precision: Precision::Exact,
        }
    }

    pub fn one() -> Self {
        Self::term(1, 0)
    }

    /// `a L^j`
    pub fn term(a: impl Into<BigInt>, j: i64) -> Self {
        let mut v = Self::zero();
        v.push(j, a.into());
        v
    }

    pub fn l_pow(j: i64) -> Self {
        Self::term(1, j)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i64, BigInt)>, precision: Precision) -> Self {
        let mut v = Self::zero();
        for (j, a) in terms {
            v.push(j, a);
        }
        v.with_precision(precision)
    }

    /// Zero known to precision `m`, i.e. `O(L^{-m})`.
    pub fn unknown_below(m: i64) -> Self {
        MotivicValue {
            coeffs: BTreeMap::new(),
            precision: Precision::Finite(m),
        }
    }

    fn push(&mut self, j: i64, a: BigInt) {
        if a.is_zero() || !self.precision.covers(j) {
            return;
        }
        let e = self.coeffs.entry(j).or_insert_with(BigInt::zero);
        *e += a;
        if e.is_zero() {
            self.coeffs.remove(&j);
        }
    }

    /// Lower the precision to `p` (never raises it), dropping unknown terms.
    pub fn with_precision(mut self, p: Precision) -> Self {
        self.precision = self.precision.min(p);
        let prec = self.precision;
        self.coeffs.retain(|&j, _| prec.covers(j));
        self
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn is_exact(&self) -> bool {
        self.precision == Precision::Exact
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, BigInt> {
        &self.coeffs
    }

    pub fn coeff(&self, j: i64) -> BigInt {
        self.coeffs.get(&j).cloned().unwrap_or_default()
    }

    pub fn jmax(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn jmin(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    /// Known to be zero (exact and without terms).
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.is_exact()
    }

    pub fn add(&self, other: &MotivicValue) -> MotivicValue {
        let mut out = self.clone().with_precision(other.precision);
        for (&j, a) in &other.coeffs {
            out.push(j, a.clone());
        }
        out
    }

    pub fn neg(&self) -> MotivicValue {
        MotivicValue {
            coeffs: self.coeffs.iter().map(|(&j, a)| (j, -a)).collect(),
            precision: self.precision,
        }
    }

    pub fn sub(&self, other: &MotivicValue) -> MotivicValue {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigInt) -> MotivicValue {
        let mut out = MotivicValue {
            coeffs: BTreeMap::new(),
            precision: self.precision,
        };
        for (&j, a) in &self.coeffs {
            out.push(j, a * c);
        }
        out
    }

    /// Multiply by `L^k` (shifts the precision too).
    pub fn shift(&self, k: i64) -> MotivicValue {
        MotivicValue {
            coeffs: self.coeffs.iter().map(|(&j, a)| (j + k, a.clone())).collect(),
            precision: match self.precision {
                Precision::Exact => Precision::Exact,
                Precision::Finite(m) => Precision::Finite(m - k),
            },
        }
    }

    /// Precision of a product: unknown tails of each factor are multiplied by
    /// the known top term of the other factor, and by each other.
    pub fn mul_precision(&self, other: &MotivicValue) -> Precision {
        let mut p = Precision::Exact;
        if let Precision::Finite(ma) = self.precision {
            p = p.min(match other.jmax() {
                Some(jb) => Precision::Finite(ma - jb),
                None => Precision::Exact,
            });
            if let Precision::Finite(mb) = other.precision {
                p = p.min(Precision::Finite(ma + mb));
            }
        }
        if let Precision::Finite(mb) = other.precision {
            p = p.min(match self.jmax() {
                Some(ja) => Precision::Finite(mb - ja),
                None => Precision::Exact,
            });
        }
        p
    }

    pub fn mul(&self, other: &MotivicValue) -> MotivicValue {
        let mut out = MotivicValue {
            coeffs: BTreeMap::new(),
            precision: self.mul_precision(other),
        };
        for (&ja, a) in &self.coeffs {
            for (&jb, b) in &other.coeffs {
                out.push(ja + jb, a * b);
            }
        }
        out
    }

    pub fn norm(&self) -> Norm {
        match (self.jmax(), self.precision) {
            (Some(j), _) => Norm::Exact(j),
            (None, Precision::Exact) => Norm::Zero,
            (None, Precision::Finite(m)) => Norm::AtMost(m),
        }
    }

    /// Value of the known terms at `L = q`.
    pub fn evaluate(&self, q: u64) -> BigRational {
        let q = BigRational::from_integer(BigInt::from(q));
        let mut acc = BigRational::zero();
        for (&j, a) in &self.coeffs {
            acc += BigRational::from_integer(a.clone()) * pow_i(&q, j);
        }
        acc
    }

    /// Counting realization at `L = q`.
    pub fn specialize(&self, q: u64) -> Result<RealizedMeasure> {
        if q < 2 || crate::ring_tower::prime_power(q).is_none() {
            return Err(Error::Contract(format!("{q} is not a prime power")));
        }
        let value = self.evaluate(q);
        Ok(match self.precision {
            Precision::Exact => RealizedMeasure::exact(q, value),
            Precision::Finite(m) => RealizedMeasure::with_bound(
                q,
                value,
                pow_i(&BigRational::from_integer(BigInt::from(q)), -m),
                Provenance::TailBounded,
            ),
        })
    }

    /// Parse the output of `Display`.
    pub fn parse(s: &str) -> Result<MotivicValue> {
        parse_value(s)
    }
}

pub(crate) fn pow_i(q: &BigRational, j: i64) -> BigRational {
    if j >= 0 {
        num_traits::pow(q.clone(), j as usize)
    } else {
        num_traits::pow(q.recip(), (-j) as usize)
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, a: &BigInt, j: i64) -> fmt::Result {
    match (a.is_one(), j) {
        (_, 0) => write!(f, "{a}"),
        (true, 1) => write!(f, "L"),
        (true, _) => write!(f, "L^{j}"),
        (false, 1) => write!(f, "{a}*L"),
        (false, _) => write!(f, "{a}*L^{j}"),
    }
}

impl fmt::Display for MotivicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&j, a) in self.coeffs.iter().rev() {
            if first {
                if a.is_negative() {
                    write!(f, "-")?;
                }
            } else if a.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write_monomial(f, &a.abs(), j)?;
            first = false;
        }
        match self.precision {
            Precision::Exact if first => write!(f, "0"),
            Precision::Exact => Ok(()),
            Precision::Finite(m) => {
                if !first {
                    write!(f, " ± ")?;
                }
                write!(f, "O(L^{})", -m)
            }
        }
    }
}

fn parse_value(src: &str) -> Result<MotivicValue> {
    let err = |msg: &str| Error::Parse {
        line: 1,
        column: 1,
        message: format!("{msg} in motivic value `{src}`"),
    };
    let compact: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(err("empty input"));
    }
    // split into signed pieces at top-level '+', '-', '±' (not inside exponents)
    let mut pieces: Vec<(i8, String)> = Vec::new();
    let mut sign: i8 = 1;
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in compact.chars() {
        let splits = matches!(c, '+' | '-' | '±') && !matches!(prev, Some('^') | Some('(') | None);
        if splits {
            pieces.push((sign, std::mem::take(&mut cur)));
            sign = if c == '-' { -1 } else { 1 };
        } else if prev.is_none() && c == '-' {
            sign = -1;
        } else if !(prev.is_none() && c == '+') {
            cur.push(c);
        }
        prev = Some(c);
    }
    pieces.push((sign, cur));
    let mut terms: Vec<(i64, BigInt)> = Vec::new();
    let mut precision = Precision::Exact;
    for (sign, piece) in pieces {
        if piece.is_empty() {
            return Err(err("dangling sign"));
        }
        if let Some(inner) = piece.strip_prefix("O(").and_then(|r| r.strip_suffix(')')) {
            let j = parse_l_power(inner).ok_or_else(|| err("bad O-term"))?;
            precision = precision.min(Precision::Finite(-j));
            continue;
        }
        let (coeff, rest) = match piece.find('L') {
            Some(0) => (BigInt::one(), piece.as_str()),
            Some(i) => {
                let c = piece[..i].strip_suffix('*').ok_or_else(|| err("expected `*` before L"))?;
                (c.parse::<BigInt>().map_err(|_| err("bad coefficient"))?, &piece[i..])
            }
            None => (piece.parse::<BigInt>().map_err(|_| err("bad coefficient"))?, ""),
        };
        let j = if rest.is_empty() {
            0
        } else {
            parse_l_power(rest).ok_or_else(|| err("bad power of L"))?
        };
        terms.push((j, if sign < 0 { -coeff } else { coeff }));
    }
    Ok(MotivicValue::from_terms(terms, precision))
}

fn parse_l_power(s: &str) -> Option<i64> {
    let rest = s.strip_prefix('L')?;
    if rest.is_empty() {
        return Some(1);
    }
    rest.strip_prefix('^')?.parse().ok()
}

/// How a realized value was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    /// error from a truncated series or an unknown tail
    TailBounded,
    /// counts certified stable across levels
    Stabilized,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::TailBounded => "tail-bounded",
            Provenance::Stabilized => "stabilized",
        })
    }
}

/// A rational value with `|true - value| <= error_bound <= q^{-error_exponent}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedMeasure {
    pub q: u64,
    pub value: BigRational,
    /// exact error radius; zero when the value is exact
    pub error_bound: BigRational,
    /// `None` when exact
    pub error_exponent: Option<i64>,
    pub provenance: Provenance,
}

/// Largest `e` with `bound <= q^{-e}`.
pub fn error_exponent(q: u64, bound: &BigRational) -> Option<i64> {
    if bound.is_zero() {
        return None;
    }
    let qr = BigRational::from_integer(BigInt::from(q));
    // start from a rough estimate, then adjust
    let mut e: i64 = 0;
    let mut pw = BigRational::one(); // q^{-e}
    if bound > &pw {
        while bound > &pw {
            e -= 1;
            pw = &pw * &qr;
        }
        return Some(e);
    }
    loop {
        let next = &pw / &qr;
        if bound > &next {
            return Some(e);
        }
        pw = next;
        e += 1;
    }
}

impl RealizedMeasure {
    pub fn exact(q: u64, value: BigRational) -> Self {
        RealizedMeasure {
            q,
            value,
            error_bound: BigRational::zero(),
            error_exponent: None,
            provenance: Provenance::Exact,
        }
    }

    pub fn with_bound(q: u64, value: BigRational, error_bound: BigRational, provenance: Provenance) -> Self {
        let error_exponent = error_exponent(q, &error_bound);
        let provenance = if error_bound.is_zero() && provenance == Provenance::TailBounded {
            Provenance::Exact
        } else {
            provenance
        };
        RealizedMeasure {
            q,
            value,
            error_bound,
            error_exponent,
            provenance,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.error_bound.is_zero()
    }

    pub fn lower(&self) -> BigRational {
        &self.value - &self.error_bound
    }

    pub fn upper(&self) -> BigRational {
        &self.value + &self.error_bound
    }

    /// Sum with errors added exactly.
    pub fn add(&self, other: &RealizedMeasure) -> Result<RealizedMeasure> {
        if self.q != other.q {
            return Err(Error::Contract("adding measures realized at different q".into()));
        }
        let provenance = match (self.provenance, other.provenance) {
            (Provenance::Exact, p) | (p, Provenance::Exact) => p,
            (Provenance::TailBounded, _) | (_, Provenance::TailBounded) => Provenance::TailBounded,
            _ => Provenance::Stabilized,
        };
        Ok(RealizedMeasure::with_bound(
            self.q,
            &self.value + &other.value,
            &self.error_bound + &other.error_bound,
            provenance,
        ))
    }

    pub fn scale(&self, c: &BigRational) -> RealizedMeasure {
        RealizedMeasure::with_bound(
            self.q,
            &self.value * c,
            &self.error_bound * c.abs(),
            self.provenance,
        )
    }

    /// Does `[value - bound, value + bound]` meet `x`'s interval?
    pub fn consistent_with(&self, other: &RealizedMeasure) -> bool {
        (&self.value - &other.value).abs() <= &self.error_bound + &other.error_bound
    }
}

impl fmt::Display for RealizedMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::greenberg_levels::render_rational(&self.value))?;
        if let Some(e) = self.error_exponent {
            write!(f, " ± {}^{}", self.q, -e)?;
        }
        write!(f, " ({})", self.provenance)
    }
}

/// `scale * sum_{n >= 0} L^{r n}` with its closed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometricSum {
    pub truncated: MotivicValue,
    pub scale: MotivicValue,
    pub ratio_exponent: i64,
}

impl GeometricSum {
    /// `scale(q) / (1 - q^r)`, exact for exact scales.
    pub fn closed_form(&self, q: u64) -> BigRational {
        let qr = BigRational::from_integer(BigInt::from(q));
        self.scale.evaluate(q) / (BigRational::one() - pow_i(&qr, self.ratio_exponent))
    }
}

pub fn geometric_sum(r: i64, scale: &MotivicValue, m: i64) -> Result<GeometricSum> {
    if r >= 0 {
        return Err(Error::Divergent(format!(
            "geometric series with ratio L^{r} does not converge"
        )));
    }
    let prec = Precision::Finite(m).min(scale.precision());
    let mut acc = MotivicValue::unknown_below(m).with_precision(prec);
    if let Some(top) = scale.jmax() {
        let mut n = 0;
        while top + r * n > -m {
            acc = acc.add(&scale.shift(r * n));
            n += 1;
        }
    }
    Ok(GeometricSum {
        truncated: acc.with_precision(prec),
        scale: scale.clone(),
        ratio_exponent: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(s: &str) -> MotivicValue {
        MotivicValue::parse(s).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        let a = mv("L - 1").mul(&mv("L + 1"));
        assert_eq!(a.to_string(), "L^2 - 1");
        let b = mv("1 + L^-1 ± O(L^-2)").add(&mv("-L^-1"));
        assert_eq!(b.to_string(), "1 ± O(L^-2)");
        assert_eq!(mv("L^-3").norm(), Norm::Exact(-3));
        assert_eq!(mv("5*L^2 + L^-7").norm(), Norm::Exact(2));
        assert_eq!(MotivicValue::unknown_below(4).norm(), Norm::AtMost(4));
        assert_eq!(MotivicValue::zero().norm(), Norm::Zero);
    }

    #[test]
    fn specialization_examples() {
        let r = mv("L - 1").specialize(3).unwrap();
        assert_eq!(r.value, BigRational::from_integer(2.into()));
        assert!(r.is_exact());
        let r = mv("1 - L^-1").specialize(2).unwrap();
        assert_eq!(r.value, BigRational::new(1.into(), 2.into()));
        let node = mv("2 - 2*L^-1").with_precision(Precision::Finite(5));
        let r = node.specialize(3).unwrap();
        assert_eq!(r.value, BigRational::new(4.into(), 3.into()));
        assert_eq!(r.error_exponent, Some(5));
        assert_eq!(r.provenance, Provenance::TailBounded);
    }

    #[test]
    fn geometric_examples() {
        let g = geometric_sum(-1, &MotivicValue::one(), 4).unwrap();
        assert_eq!(g.truncated.to_string(), "1 + L^-1 + L^-2 + L^-3 ± O(L^-4)");
        let g = geometric_sum(-2, &mv("1 - L^-1"), 6).unwrap();
        assert_eq!(
            g.truncated.to_string(),
            "1 - L^-1 + L^-2 - L^-3 + L^-4 - L^-5 ± O(L^-6)"
        );
        assert_eq!(g.closed_form(2), BigRational::new(2.into(), 3.into()));
        let r = g.truncated.specialize(2).unwrap();
        assert!((r.value.clone() - g.closed_form(2)).abs() <= r.error_bound);
        assert!(matches!(geometric_sum(0, &MotivicValue::one(), 3), Err(Error::Divergent(_))));
    }

    #[test]
    fn render_parse_round_trip() {
        for s in ["0", "O(L^-3)", "-L^2 + 3*L - 7 + 2*L^-4 ± O(L^-9)", "L", "-1", "O(L^2)"] {
            assert_eq!(mv(s).to_string(), s);
        }
        assert_eq!(mv("1 + O(L^-2)"), mv("1 ± O(L^-2)"));
        assert!(MotivicValue::parse("1 + ").is_err());
        assert!(MotivicValue::parse("2L").is_err());
    }

    #[test]
    fn error_exponents() {
        let b = BigRational::new(1.into(), 9.into());
        assert_eq!(error_exponent(3, &b), Some(2));
        let b = BigRational::new(1.into(), 10.into());
        assert_eq!(error_exponent(3, &b), Some(2));
        let b = BigRational::new(1.into(), 8.into());
        assert_eq!(error_exponent(3, &b), Some(1));
        assert_eq!(error_exponent(2, &BigRational::from_integer(3.into())), Some(-2));
    }
}
