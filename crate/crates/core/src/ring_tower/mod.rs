//! Exact arithmetic in the truncations `R_n = R/(pi)^{n+1}` of a complete DVR.
//!
//! Three families are supported:
//!
//! * equal characteristic, `R = F_q[[t]]`, `R_n = F_q[t]/(t^{n+1})`;
//! * unramified p-adic with `f = 1`, `R_n = Z/p^{n+1}`;
//! * unramified p-adic with `f > 1`, the Galois ring
//!   `GR(p^{n+1}, f) = (Z/p^{n+1})[X]/(G)` for a monic lift `G` of an irreducible
//!   polynomial of degree `f`.
//!
//! Every element is stored as its *digit index*: with canonical digits
//! `a_0, ..., a_n` in the residue field (each encoded as an integer in `[0, q)`),
//! the index is `sum a_i q^i`. For `Z/p^{n+1}` this is the integer itself. The
//! index makes reduction (`mod q^{n+1}`), lifting (`+ a q^k`), and
//! multiplication or division by powers of the uniformizer (shifts by powers
//! of `q`) plain integer operations, and its natural order is the enumeration
//! order.

mod field;
mod tables;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

pub use field::{default_modulus, is_irreducible, is_prime, ResidueField};

/// Default cap on the number of elements `enumerate` will produce.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RingKind {
    /// `F_{p^f}[[t]]`
    EqualChar,
    /// `W(F_{p^f})`, unramified over `Z_p`
    PAdic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingDescriptor {
    pub kind: RingKind,
    pub p: u64,
    pub f: u32,
    /// Ramification index over `Z_p`; only `1` is supported.
    pub ramification: u32,
    /// Custom defining polynomial of the residue field extension.
    pub modulus: Option<Vec<u64>>,
}

impl RingDescriptor {
    pub fn equal_char(p: u64, f: u32) -> Self {
        RingDescriptor {
            kind: RingKind::EqualChar,
            p,
            f,
            ramification: 1,
            modulus: None,
        }
    }

    pub fn p_adic(p: u64, f: u32) -> Self {
        RingDescriptor {
            kind: RingKind::PAdic,
            p,
            f,
            ramification: 1,
            modulus: None,
        }
    }

    /// Same kind of ring over the degree-`s` extension of the residue field.
    pub fn extend(&self, s: u32) -> Self {
        RingDescriptor {
            kind: self.kind,
            p: self.p,
            f: self.f * s,
            ramification: self.ramification,
            modulus: if s == 1 { self.modulus.clone() } else { None },
        }
    }

    /// Same kind of ring with residue field of order `q`.
    pub fn with_order(&self, q: u64) -> Result<Self> {
        let (p, f) = prime_power(q)
            .ok_or_else(|| Error::InvalidDescriptor(format!("{q} is not a prime power")))?;
        Ok(RingDescriptor {
            kind: self.kind,
            p,
            f,
            ramification: self.ramification,
            modulus: None,
        })
    }

    pub fn q(&self) -> u64 {
        self.p.saturating_pow(self.f)
    }

    pub fn uniformizer_symbol(&self) -> &'static str {
        match self.kind {
            RingKind::EqualChar => "t",
            RingKind::PAdic => "p",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::InvalidDescriptor(format!("{} is not prime", self.p)));
        }
        if self.f == 0 {
            return Err(Error::InvalidDescriptor("extension degree must be >= 1".into()));
        }
        if self.ramification != 1 {
            return Err(Error::InvalidDescriptor(
                "ramified rings are not supported (ramification index must be 1)".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for RingDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            RingKind::EqualChar => "eq",
            RingKind::PAdic => "padic",
        };
        write!(f, "{{ kind = \"{kind}\", p = {}, f = {} }}", self.p, self.f)
    }
}

/// `(p, f)` with `q = p^f`, if `q` is a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q && q % p != 0 {
        p += 1;
    }
    if q % p != 0 {
        p = q;
    }
    let mut rest = q;
    let mut f = 0;
    while rest % p == 0 {
        rest /= p;
        f += 1;
    }
    (rest == 1).then_some((p, f))
}

/// An element of a [`TruncatedRing`], stored as its digit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RingElem(pub u64);

impl RingElem {
    pub fn index(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug)]
enum Arith {
    Series,
    Integers { modulus: u64 },
    Galois { modulus: u64, lift: Vec<u64> },
}

#[derive(Debug)]
struct Inner {
    descriptor: RingDescriptor,
    level: u32,
    q: u64,
    powers: Vec<u64>,
    field: Arc<ResidueField>,
    arith: Arith,
}

/// The finite ring `R/(pi)^{n+1}`. Cheap to clone.
#[derive(Debug, Clone)]
pub struct TruncatedRing {
    inner: Arc<Inner>,
}

impl PartialEq for TruncatedRing {
    fn eq(&self, other: &Self) -> bool {
        self.inner.descriptor == other.inner.descriptor && self.inner.level == other.inner.level
    }
}

impl Eq for TruncatedRing {}

/// Build `R_n` for the given descriptor.
pub fn make_ring(descriptor: &RingDescriptor, level: u32) -> Result<TruncatedRing> {
    TruncatedRing::new(descriptor, level)
}

impl TruncatedRing {
    pub fn new(descriptor: &RingDescriptor, level: u32) -> Result<Self> {
        descriptor.validate()?;
        let field = match &descriptor.modulus {
            Some(m) => ResidueField::with_modulus(descriptor.p, descriptor.f, m.clone())?,
            None => ResidueField::new(descriptor.p, descriptor.f)?,
        };
        Self::with_field(descriptor, level, Arc::new(field))
    }

    fn with_field(descriptor: &RingDescriptor, level: u32, field: Arc<ResidueField>) -> Result<Self> {
        let q = field.order();
        let mut powers = Vec::with_capacity(level as usize + 2);
        let mut acc: u64 = 1;
        powers.push(1);
        for _ in 0..=level {
            acc = acc
                .checked_mul(q)
                .filter(|&v| v <= 1 << 63)
                .ok_or_else(|| {
                    Error::InvalidDescriptor(format!(
                        "R/(pi)^{} over F_{q} does not fit in 63-bit digit indices",
                        level + 1
                    ))
                })?;
            powers.push(acc);
        }
        let p = descriptor.p;
        let arith = match descriptor.kind {
            RingKind::EqualChar => Arith::Series,
            RingKind::PAdic => {
                let modulus = p.pow(level + 1);
                if descriptor.f == 1 {
                    Arith::Integers { modulus }
                } else {
                    Arith::Galois {
                        modulus,
                        lift: field.modulus().to_vec(),
                    }
                }
            }
        };
        Ok(TruncatedRing {
            inner: Arc::new(Inner {
                descriptor: descriptor.clone(),
                level,
                q,
                powers,
                field,
                arith,
            }),
        })
    }

    /// The same ring at another level, sharing the residue field tables.
    pub fn at_level(&self, level: u32) -> Result<Self> {
        if level == self.inner.level {
            return Ok(self.clone());
        }
        Self::with_field(&self.inner.descriptor, level, self.inner.field.clone())
    }

    pub fn descriptor(&self) -> &RingDescriptor {
        &self.inner.descriptor
    }

    pub fn level(&self) -> u32 {
        self.inner.level
    }

    /// Order of the residue field.
    pub fn q(&self) -> u64 {
        self.inner.q
    }

    pub fn residue_field(&self) -> &ResidueField {
        &self.inner.field
    }

    /// `q^{n+1}`
    pub fn cardinality(&self) -> u64 {
        self.inner.powers[self.inner.level as usize + 1]
    }

    /// `q^k` for `k <= n + 1`.
    #[inline]
    pub fn q_pow(&self, k: u32) -> u64 {
        self.inner.powers[k as usize]
    }

    pub fn zero(&self) -> RingElem {
        RingElem(0)
    }

    pub fn one(&self) -> RingElem {
        RingElem(1)
    }

    pub fn contains(&self, x: RingElem) -> bool {
        x.0 < self.cardinality()
    }

    #[inline]
    pub fn digit(&self, x: RingElem, i: u32) -> u64 {
        if i > self.inner.level {
            return 0;
        }
        x.0 / self.inner.powers[i as usize] % self.inner.q
    }

    pub fn digits(&self, x: RingElem) -> Vec<u64> {
        (0..=self.inner.level).map(|i| self.digit(x, i)).collect()
    }

    pub fn from_digits(&self, digits: &[u64]) -> Result<RingElem> {
        if digits.len() > self.inner.level as usize + 1 || digits.iter().any(|&d| d >= self.inner.q) {
            return Err(Error::Contract(format!(
                "digits {digits:?} do not describe an element of level {}",
                self.inner.level
            )));
        }
        Ok(RingElem(
            digits
                .iter()
                .enumerate()
                .map(|(i, &d)| d * self.inner.powers[i])
                .sum(),
        ))
    }

    /// Canonical lift of a residue field element (digit 0).
    pub fn from_residue(&self, a: u64) -> RingElem {
        RingElem(a % self.inner.q)
    }

    /// `pi^k`, zero when `k > n`.
    pub fn uniformizer_pow(&self, k: u32) -> RingElem {
        if k > self.inner.level {
            RingElem(0)
        } else {
            RingElem(self.inner.powers[k as usize])
        }
    }

    /// `x + a pi^k` where digit `k` of `x` is zero.
    #[inline]
    pub fn with_digit(&self, x: RingElem, k: u32, a: u64) -> RingElem {
        debug_assert_eq!(self.digit(x, k), 0);
        RingElem(x.0 + a * self.inner.powers[k as usize])
    }

    /// `pi^k x`
    #[inline]
    pub fn mul_uniformizer_pow(&self, x: RingElem, k: u32) -> RingElem {
        if k > self.inner.level {
            return RingElem(0);
        }
        let keep = self.inner.powers[(self.inner.level + 1 - k) as usize];
        RingElem((x.0 % keep) * self.inner.powers[k as usize])
    }

    /// `x / pi^k` for `val(x) >= k`; the top `k` digits of the result are zero
    /// (they are not determined by `x`).
    pub fn div_uniformizer_pow(&self, x: RingElem, k: u32) -> Result<RingElem> {
        if k > self.inner.level + 1 {
            return Err(Error::Contract(format!("cannot divide by pi^{k} at level {}", self.inner.level)));
        }
        let div = self.inner.powers[k as usize];
        if x.0 % div != 0 {
            return Err(Error::Contract(format!("element is not divisible by pi^{k}")));
        }
        Ok(RingElem(x.0 / div))
    }

    /// Index of the first nonzero digit; `None` when `x = 0` in `R_n`.
    #[inline]
    pub fn val(&self, x: RingElem) -> Option<u32> {
        if x.0 == 0 {
            return None;
        }
        let mut v = 0;
        let mut t = x.0;
        while t % self.inner.q == 0 {
            t /= self.inner.q;
            v += 1;
        }
        Some(v)
    }

    pub fn is_unit(&self, x: RingElem) -> bool {
        self.val(x) == Some(0)
    }

    /// Reduce from this ring onto `target` (same descriptor, lower level).
    pub fn reduce(&self, x: RingElem, target: &TruncatedRing) -> Result<RingElem> {
        if target.descriptor() != self.descriptor() {
            return Err(Error::Contract("reduce between different rings".into()));
        }
        if target.level() > self.level() {
            return Err(Error::Contract(format!(
                "cannot reduce from level {} to higher level {}",
                self.level(),
                target.level()
            )));
        }
        Ok(RingElem(x.0 % target.cardinality()))
    }

    /// Digit truncation to level `n`, without building the target ring.
    #[inline]
    pub fn truncate(&self, x: RingElem, n: u32) -> RingElem {
        if n >= self.inner.level {
            x
        } else {
            RingElem(x.0 % self.inner.powers[n as usize + 1])
        }
    }

    /// Image of an integer.
    pub fn from_int(&self, c: i64) -> RingElem {
        self.from_bigint(&BigInt::from(c))
    }

    pub fn from_bigint(&self, c: &BigInt) -> RingElem {
        let p = self.inner.descriptor.p;
        match &self.inner.arith {
            Arith::Series => {
                let r = c.mod_floor(&BigInt::from(p)).to_u64().unwrap();
                RingElem(r)
            }
            Arith::Integers { modulus } => {
                RingElem(c.mod_floor(&BigInt::from(*modulus)).to_u64().unwrap())
            }
            Arith::Galois { modulus, .. } => {
                let r = c.mod_floor(&BigInt::from(*modulus)).to_u64().unwrap();
                let mut coeffs = vec![0u64; self.inner.descriptor.f as usize];
                coeffs[0] = r;
                self.galois_pack(&coeffs)
            }
        }
    }

    fn galois_unpack(&self, x: RingElem) -> Vec<u64> {
        let p = self.inner.descriptor.p;
        let f = self.inner.descriptor.f as usize;
        let mut coeffs = vec![0u64; f];
        let mut place = 1u64;
        let mut t = x.0;
        for _ in 0..=self.inner.level {
            let mut a = t % self.inner.q;
            t /= self.inner.q;
            for c in coeffs.iter_mut() {
                *c += (a % p) * place;
                a /= p;
            }
            place *= p;
        }
        coeffs
    }

    fn galois_pack(&self, coeffs: &[u64]) -> RingElem {
        let p = self.inner.descriptor.p;
        let mut rest = coeffs.to_vec();
        let mut out = 0u64;
        for i in 0..=self.inner.level {
            let mut a = 0u64;
            let mut place = 1u64;
            for c in rest.iter_mut() {
                a += (*c % p) * place;
                *c /= p;
                place *= p;
            }
            out += a * self.inner.powers[i as usize];
        }
        RingElem(out)
    }

    #[inline]
    pub fn add(&self, a: RingElem, b: RingElem) -> RingElem {
        match &self.inner.arith {
            Arith::Integers { modulus } => {
                let s = a.0 + b.0;
                RingElem(if s >= *modulus { s - modulus } else { s })
            }
            Arith::Series => {
                let k = &self.inner.field;
                let q = self.inner.q;
                let (mut x, mut y) = (a.0, b.0);
                let mut out = 0;
                for i in 0..=self.inner.level {
                    if x == 0 && y == 0 {
                        break;
                    }
                    out += k.add(x % q, y % q) * self.inner.powers[i as usize];
                    x /= q;
                    y /= q;
                }
                RingElem(out)
            }
            Arith::Galois { modulus, .. } => {
                let ca = self.galois_unpack(a);
                let cb = self.galois_unpack(b);
                let c: Vec<u64> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % modulus).collect();
                self.galois_pack(&c)
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: RingElem) -> RingElem {
        match &self.inner.arith {
            Arith::Integers { modulus } => RingElem(if a.0 == 0 { 0 } else { modulus - a.0 }),
            Arith::Series => {
                let k = &self.inner.field;
                let q = self.inner.q;
                let mut x = a.0;
                let mut out = 0;
                let mut i = 0;
                while x != 0 {
                    out += k.neg(x % q) * self.inner.powers[i];
                    x /= q;
                    i += 1;
                }
                RingElem(out)
            }
            Arith::Galois { modulus, .. } => {
                let c: Vec<u64> = self
                    .galois_unpack(a)
                    .iter()
                    .map(|x| (modulus - x) % modulus)
                    .collect();
                self.galois_pack(&c)
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: RingElem, b: RingElem) -> RingElem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: RingElem, b: RingElem) -> RingElem {
        if a.0 == 0 || b.0 == 0 {
            return RingElem(0);
        }
        match &self.inner.arith {
            Arith::Integers { modulus } => {
                RingElem((a.0 as u128 * b.0 as u128 % *modulus as u128) as u64)
            }
            Arith::Series => {
                let k = &self.inner.field;
                let q = self.inner.q;
                let n = self.inner.level as usize;
                let mut da = [0u64; 64];
                let mut db = [0u64; 64];
                let (mut x, mut y) = (a.0, b.0);
                let mut la = 0;
                let mut lb = 0;
                while x != 0 {
                    da[la] = x % q;
                    x /= q;
                    la += 1;
                }
                while y != 0 {
                    db[lb] = y % q;
                    y /= q;
                    lb += 1;
                }
                let mut prod = [0u64; 64];
                for i in 0..la {
                    if da[i] == 0 {
                        continue;
                    }
                    for j in 0..lb.min(n + 1 - i) {
                        prod[i + j] = k.add(prod[i + j], k.mul(da[i], db[j]));
                    }
                }
                let mut out = 0;
                for (i, &d) in prod.iter().enumerate().take(n + 1) {
                    out += d * self.inner.powers[i];
                }
                RingElem(out)
            }
            Arith::Galois { modulus, lift } => {
                let m = *modulus as u128;
                let f = lift.len() - 1;
                let ca = self.galois_unpack(a);
                let cb = self.galois_unpack(b);
                let mut prod = vec![0u128; 2 * f - 1];
                for (i, &x) in ca.iter().enumerate() {
                    for (j, &y) in cb.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x as u128 * y as u128) % m;
                    }
                }
                for deg in (f..prod.len()).rev() {
                    let c = prod[deg];
                    if c == 0 {
                        continue;
                    }
                    prod[deg] = 0;
                    for (j, &g) in lift.iter().enumerate().take(f) {
                        let idx = deg - f + j;
                        prod[idx] = (prod[idx] + m - c * g as u128 % m) % m;
                    }
                }
                let coeffs: Vec<u64> = prod[..f].iter().map(|&c| c as u64).collect();
                self.galois_pack(&coeffs)
            }
        }
    }

    pub fn pow(&self, x: RingElem, e: u64) -> RingElem {
        let mut acc = self.one();
        let mut base = x;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Inverse of a unit via Newton iteration `y <- y (2 - x y)`.
    pub fn inv(&self, x: RingElem) -> Option<RingElem> {
        let a0 = self.digit(x, 0);
        let inv0 = self.inner.field.inv(a0)?;
        let two = self.from_int(2);
        let mut y = self.from_residue(inv0);
        let mut correct = 1u32;
        while correct <= self.inner.level {
            y = self.mul(y, self.sub(two, self.mul(x, y)));
            correct *= 2;
        }
        Some(y)
    }

    /// The Teichmüller representative of a residue field element.
    pub fn teichmueller(&self, a: u64) -> Result<RingElem> {
        if self.inner.descriptor.kind == RingKind::EqualChar {
            return Err(Error::Unsupported(
                "Teichmüller lifts are only defined for p-adic rings; use from_residue".into(),
            ));
        }
        if a >= self.inner.q {
            return Err(Error::Contract(format!("{a} is not a residue field element")));
        }
        let mut y = self.from_residue(a);
        loop {
            let next = self.pow(y, self.inner.q);
            if next == y {
                return Ok(y);
            }
            y = next;
        }
    }

    /// Every element exactly once, in increasing digit-index order.
    pub fn enumerate(&self, budget: u64) -> Result<impl Iterator<Item = RingElem> + '_> {
        let card = self.cardinality();
        if card > budget {
            return Err(Error::budget(
                format!("enumerating R_{} over F_{}", self.level(), self.q()),
                budget,
                card,
            ));
        }
        Ok((0..card).map(RingElem))
    }

    /// Exact integer value of a `Z/p^{n+1}` element or the constant coefficient
    /// of a Galois ring element, mainly for display.
    pub fn to_bigint(&self, x: RingElem) -> BigInt {
        match &self.inner.arith {
            Arith::Integers { .. } => BigInt::from(x.0),
            Arith::Galois { .. } => BigInt::from(self.galois_unpack(x)[0]),
            Arith::Series => BigInt::from(x.0),
        }
    }

    /// Human-readable rendering, e.g. `1 + t^2` or `7` or `[3, 1]`.
    pub fn render(&self, x: RingElem) -> String {
        match &self.inner.arith {
            Arith::Integers { .. } => x.0.to_string(),
            Arith::Galois { .. } => format!("{:?}", self.galois_unpack(x)),
            Arith::Series => {
                if x.is_zero() {
                    return "0".into();
                }
                let mut parts = Vec::new();
                for i in 0..=self.inner.level {
                    let d = self.digit(x, i);
                    if d == 0 {
                        continue;
                    }
                    let coeff = if self.inner.descriptor.f > 1 {
                        format!("a{d}")
                    } else {
                        d.to_string()
                    };
                    parts.push(match (i, d) {
                        (0, _) => coeff,
                        (1, 1) => "t".into(),
                        (_, 1) => format!("t^{i}"),
                        (1, _) => format!("{coeff}*t"),
                        _ => format!("{coeff}*t^{i}"),
                    });
                }
                parts.join(" + ")
            }
        }
    }
}
