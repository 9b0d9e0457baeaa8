//! Polynomials over `Z[pi]` in named variables.
//!
//! The uniformizer is kept as a separate symbol `pi` so that coefficients are
//! stored exactly and independently of the ring they are later evaluated in:
//! `-3*x^2` stays `-3*x^2` even over a ring where `3 = pi`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::ring_tower::{RingElem, TruncatedRing};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    /// exponent of `pi`
    pub pi: u32,
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial {
            pi: 0,
            exps: vec![0; nvars],
        }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            pi: self.pi + other.pi,
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    vars: Vec<String>,
    terms: BTreeMap<Monomial, BigInt>,
}

impl Poly {
    pub fn zero(vars: &[String]) -> Self {
        Poly {
            vars: vars.to_vec(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[String], c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(Monomial::one(vars.len()), c.into());
        p
    }

    pub fn one(vars: &[String]) -> Self {
        Self::constant(vars, 1)
    }

    pub fn var(vars: &[String], i: usize) -> Self {
        let mut m = Monomial::one(vars.len());
        m.exps[i] = 1;
        let mut p = Self::zero(vars);
        p.add_term(m, BigInt::one());
        p
    }

    /// `c * pi^k`
    pub fn pi_pow(vars: &[String], c: impl Into<BigInt>, k: u32) -> Self {
        let mut m = Monomial::one(vars.len());
        m.pi = k;
        let mut p = Self::zero(vars);
        p.add_term(m, c.into());
        p
    }

    pub fn from_terms(vars: &[String], terms: impl IntoIterator<Item = (Monomial, BigInt)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            assert_eq!(m.exps.len(), vars.len());
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_vars(&self, other: &Poly) {
        assert_eq!(self.vars, other.vars, "polynomials over different variable lists");
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.check_vars(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check_vars(other);
        let mut out = Poly::zero(&self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        let mut out = Poly::zero(&self.vars);
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(&self.vars);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.exps[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.exps[i] -= 1;
            out.add_term(m2, c * BigInt::from(e));
        }
        out
    }

    /// Substitute `values[i]` for variable `i`; all values share one variable list.
    pub fn substitute(&self, values: &[Poly]) -> Poly {
        assert_eq!(values.len(), self.vars.len());
        let new_vars: Vec<String> = match values.first() {
            Some(v) => v.vars.clone(),
            None => Vec::new(),
        };
        let mut out = Poly::zero(&new_vars);
        for (m, c) in &self.terms {
            let mut term = Poly::pi_pow(&new_vars, c.clone(), m.pi);
            for (i, &e) in m.exps.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&values[i].pow(e));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// The same polynomial viewed in a larger variable list (by name).
    pub fn embed(&self, vars: &[String]) -> Result<Poly> {
        let mut map = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let idx = vars
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| Error::Contract(format!("variable {v} missing from target list")))?;
            map.push(idx);
        }
        let mut out = Poly::zero(vars);
        for (m, c) in &self.terms {
            let mut exps = vec![0; vars.len()];
            for (i, &e) in m.exps.iter().enumerate() {
                exps[map[i]] += e;
            }
            out.add_term(Monomial { pi: m.pi, exps }, c.clone());
        }
        Ok(out)
    }

    /// Reduction modulo `pi` is zero in a ring of residue characteristic `p`.
    pub fn vanishes_mod_pi(&self, p: u64) -> bool {
        let p = BigInt::from(p);
        self.terms
            .iter()
            .all(|(m, c)| m.pi > 0 || (c % &p).is_zero())
    }

    pub fn compile(&self, ring: &TruncatedRing) -> CompiledPoly {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let coeff = ring.mul(ring.from_bigint(c), ring.uniformizer_pow(m.pi));
            if coeff.is_zero() {
                continue;
            }
            let factors: SmallVec<[(u16, u32); 4]> = m
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| (i as u16, e))
                .collect();
            terms.push((coeff, factors));
        }
        CompiledPoly {
            ring: ring.clone(),
            terms,
        }
    }

    /// Evaluate at a point of `R_n^N`.
    pub fn eval(&self, ring: &TruncatedRing, point: &[RingElem]) -> RingElem {
        self.compile(ring).eval(point)
    }

    fn sorted_terms(&self) -> Vec<(&Monomial, &BigInt)> {
        let mut t: Vec<_> = self.terms.iter().collect();
        t.sort_by(|(a, _), (b, _)| {
            b.degree()
                .cmp(&a.degree())
                .then_with(|| b.exps.cmp(&a.exps))
                .then_with(|| a.pi.cmp(&b.pi))
        });
        t
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let abs = c.abs();
            let mut factors: Vec<String> = Vec::new();
            let bare = m.pi == 0 && m.degree() == 0;
            if !abs.is_one() || bare {
                factors.push(abs.to_string());
            }
            match m.pi {
                0 => {}
                1 => factors.push("pi".into()),
                k => factors.push(format!("pi^{k}")),
            }
            for (i, &e) in m.exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.vars[i].clone()),
                    e => factors.push(format!("{}^{e}", self.vars[i])),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// A polynomial with coefficients mapped into a fixed [`TruncatedRing`].
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    ring: TruncatedRing,
    terms: Vec<(RingElem, SmallVec<[(u16, u32); 4]>)>,
}

impl CompiledPoly {
    pub fn ring(&self) -> &TruncatedRing {
        &self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn eval(&self, point: &[RingElem]) -> RingElem {
        let r = &self.ring;
        let mut acc = r.zero();
        for (coeff, factors) in &self.terms {
            let mut t = *coeff;
            for &(v, e) in factors {
                let x = point[v as usize];
                let pw = if e == 1 { x } else { r.pow(x, e as u64) };
                t = r.mul(t, pw);
                if t.is_zero() {
                    break;
                }
            }
            acc = r.add(acc, t);
        }
        acc
    }
}
