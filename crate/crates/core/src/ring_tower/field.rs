//! Arithmetic in the residue field `F_{p^f}`.
//!
//! An element is encoded as the index `sum c_j p^j` of its coefficient vector
//! in the basis `1, X, ..., X^{f-1}` of `F_p[X]/(g)`.

use crate::error::{Error, Result};

use super::tables;

const MAX_TABLE_ORDER: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueField {
    p: u64,
    f: u32,
    q: u64,
    /// Monic defining polynomial, constant term first. `[0, 1]` when `f == 1`.
    modulus: Vec<u64>,
    log: Vec<u32>,
    exp: Vec<u32>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Multiply two polynomials over `F_p` and reduce modulo the monic `modulus`.
fn poly_mulmod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let f = modulus.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for k in (f..prod.len()).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for j in 0..f {
            let sub = c * modulus[j] % p;
            prod[k - f + j] = (prod[k - f + j] + p - sub) % p;
        }
    }
    prod.truncate(f);
    prod.resize(f, 0);
    prod
}

/// Remainder of `a` modulo a monic `b` over `F_p`.
fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if c != 0 {
            for (j, &bj) in b.iter().enumerate() {
                r[shift + j] = (r[shift + j] + p - c * bj % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
pub fn is_irreducible(poly: &[u64], p: u64) -> bool {
    let deg = poly.len() - 1;
    if deg == 0 || poly[deg] % p != 1 {
        return false;
    }
    if deg == 1 {
        return true;
    }
    for k in 1..=deg / 2 {
        let count = p.pow(k as u32);
        for idx in 0..count {
            let mut div = Vec::with_capacity(k + 1);
            let mut t = idx;
            for _ in 0..k {
                div.push(t % p);
                t /= p;
            }
            div.push(1);
            if poly_rem(poly, &div, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn first_irreducible(p: u64, f: u32) -> Vec<u64> {
    let count = p.pow(f);
    for idx in 0..count {
        let mut poly = Vec::with_capacity(f as usize + 1);
        let mut t = idx;
        for _ in 0..f {
            poly.push(t % p);
            t /= p;
        }
        poly.push(1);
        if is_irreducible(&poly, p) {
            return poly;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// The defining polynomial used for `F_{p^f}` (and for Galois rings over it).
pub fn default_modulus(p: u64, f: u32) -> Vec<u64> {
    if f == 1 {
        return vec![0, 1];
    }
    tables::lookup(p, f).unwrap_or_else(|| first_irreducible(p, f))
}

impl ResidueField {
    pub fn new(p: u64, f: u32) -> Result<Self> {
        Self::with_modulus(p, f, default_modulus(p, f))
    }

    pub fn with_modulus(p: u64, f: u32, modulus: Vec<u64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidDescriptor(format!("{p} is not prime")));
        }
        if f == 0 {
            return Err(Error::InvalidDescriptor("extension degree must be >= 1".into()));
        }
        if modulus.len() != f as usize + 1 {
            return Err(Error::InvalidDescriptor(format!(
                "defining polynomial must have degree {f}"
            )));
        }
        if f > 1 && !is_irreducible(&modulus, p) {
            return Err(Error::InvalidDescriptor(format!(
                "defining polynomial {modulus:?} is reducible over F_{p}"
            )));
        }
        let q = p
            .checked_pow(f)
            .ok_or_else(|| Error::InvalidDescriptor("residue field too large".into()))?;
        let mut field = ResidueField {
            p,
            f,
            q,
            modulus,
            log: Vec::new(),
            exp: Vec::new(),
        };
        if f > 1 {
            if q > MAX_TABLE_ORDER {
                return Err(Error::InvalidDescriptor(format!(
                    "extension fields are limited to order <= {MAX_TABLE_ORDER}, got {q}"
                )));
            }
            field.build_tables();
        }
        Ok(field)
    }

    fn to_coeffs(&self, a: u64) -> Vec<u64> {
        let mut c = Vec::with_capacity(self.f as usize);
        let mut t = a;
        for _ in 0..self.f {
            c.push(t % self.p);
            t /= self.p;
        }
        c
    }

    fn from_coeffs(&self, c: &[u64]) -> u64 {
        c.iter().rev().fold(0, |acc, &x| acc * self.p + x)
    }

    fn build_tables(&mut self) {
        let order = self.q - 1;
        let mut log = vec![0u32; self.q as usize];
        let mut exp = vec![0u32; order as usize];
        'candidates: for g in 2..self.q {
            let gc = self.to_coeffs(g);
            let mut cur = vec![0u64; self.f as usize];
            cur[0] = 1;
            let mut seen = vec![false; self.q as usize];
            for k in 0..order {
                let idx = self.from_coeffs(&cur);
                if seen[idx as usize] {
                    continue 'candidates;
                }
                seen[idx as usize] = true;
                exp[k as usize] = idx as u32;
                log[idx as usize] = k as u32;
                cur = poly_mulmod(&cur, &gc, &self.modulus, self.p);
            }
            self.log = log;
            self.exp = exp;
            return;
        }
        unreachable!("the multiplicative group of a finite field is cyclic")
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.f
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        if self.f == 1 {
            let s = a + b;
            return if s >= self.p { s - self.p } else { s };
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.f {
            let d = (a % self.p + b % self.p) % self.p;
            out += d * place;
            place *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if self.f == 1 {
            return if a == 0 { 0 } else { self.p - a };
        }
        let mut a = a;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.f {
            let d = (self.p - a % self.p) % self.p;
            out += d * place;
            place *= self.p;
            a /= self.p;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.f == 1 {
            return a * b % self.p;
        }
        if a == 0 || b == 0 {
            return 0;
        }
        let order = self.q - 1;
        let k = (self.log[a as usize] as u64 + self.log[b as usize] as u64) % order;
        self.exp[k as usize] as u64
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        if self.f == 1 {
            return Some(pow_mod(a, self.p - 2, self.p));
        }
        let order = self.q - 1;
        let k = (order - self.log[a as usize] as u64) % order;
        Some(self.exp[k as usize] as u64)
    }
}

pub(crate) fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_entries_are_irreducible_and_primitive() {
        for &(p, f, coeffs) in tables::CONWAY {
            assert!(is_irreducible(coeffs, p), "({p},{f}) reducible");
            // Conway polynomials are primitive: X generates the unit group.
            let field = ResidueField::new(p, f).unwrap();
            let x = p; // index of the class of X
            let mut cur = 1u64;
            let mut order = 0u64;
            loop {
                cur = field.mul(cur, x);
                order += 1;
                if cur == 1 {
                    break;
                }
            }
            assert_eq!(order, field.order() - 1, "({p},{f}) not primitive");
        }
    }

    #[test]
    fn reducible_modulus_is_rejected() {
        // x^2 + 1 = (x + 1)^2 over F_2
        assert!(ResidueField::with_modulus(2, 2, vec![1, 0, 1]).is_err());
        assert!(ResidueField::new(4, 1).is_err());
    }

    #[test]
    fn field_axioms_f4_exhaustive() {
        let k = ResidueField::new(2, 2).unwrap();
        for a in 0..4 {
            assert_eq!(k.add(a, k.neg(a)), 0);
            if a != 0 {
                assert_eq!(k.mul(a, k.inv(a).unwrap()), 1);
            }
            for b in 0..4 {
                for c in 0..4 {
                    assert_eq!(k.mul(a, k.add(b, c)), k.add(k.mul(a, b), k.mul(a, c)));
                    assert_eq!(k.mul(k.mul(a, b), c), k.mul(a, k.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn fallback_search_finds_irreducible() {
        let g = default_modulus(17, 2);
        assert!(is_irreducible(&g, 17));
    }
}
