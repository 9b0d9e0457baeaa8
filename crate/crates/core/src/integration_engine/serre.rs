//! The counting series `sum N_n T^n` and a small rational fit.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Result;
use crate::greenberg_levels::{count_table, render_rational, CountRow};
use crate::scheme_model::AffineFormalScheme;

/// `P(T) / Q(T)` with `Q(0) = 1`, coefficients listed from `T^0` up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFit {
    pub numerator: Vec<BigRational>,
    pub denominator: Vec<BigRational>,
    /// level of the term held out of the fit and checked against it
    pub checked_level: u32,
}

impl RationalFit {
    /// Coefficient of `T^n` in the expansion.
    pub fn coefficient(&self, n: usize) -> BigRational {
        let mut a: Vec<BigRational> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut v = self.numerator.get(k).cloned().unwrap_or_else(BigRational::zero);
            for (i, c) in self.denominator.iter().enumerate().skip(1) {
                if i <= k {
                    v -= c * &a[k - i];
                }
            }
            a.push(v);
        }
        a.pop().unwrap()
    }
}

fn poly_str(c: &[BigRational]) -> String {
    let mut out = String::new();
    for (k, v) in c.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let neg = v < &BigRational::zero();
        let abs = if neg { -v } else { v.clone() };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mono = match k {
            0 => String::new(),
            1 => "T".into(),
            _ => format!("T^{k}"),
        };
        if mono.is_empty() {
            out.push_str(&render_rational(&abs));
        } else if abs.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&format!("{}*{mono}", render_rational(&abs)));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Display for RationalFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = poly_str(&self.numerator);
        if self.denominator.len() <= 1 {
            return write!(f, "{num}");
        }
        let num = if num.contains(' ') { format!("({num})") } else { num };
        write!(f, "{num}/({})", poly_str(&self.denominator))
    }
}

#[derive(Debug, Clone)]
pub struct SerreSeries {
    pub rows: Vec<CountRow>,
    pub fit: Option<RationalFit>,
}

/// Solve `m c = rhs`; free unknowns are set to zero. `None` if inconsistent.
fn solve(mut m: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>, k: usize) -> Option<Vec<BigRational>> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..k {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        rhs.swap(row, p);
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[row][col];
                for c in 0..k {
                    let d = &f * &m[row][c];
                    m[r][c] -= d;
                }
                let d = &f * &rhs[row];
                rhs[r] -= d;
            }
        }
        pivots.push(col);
        row += 1;
    }
    if rhs[row..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut c = vec![BigRational::zero(); k];
    for (r, &col) in pivots.iter().enumerate() {
        c[col] = &rhs[r] / &m[r][col];
    }
    Some(c)
}

/// Fit `P/Q` with `deg P, deg Q <= 2` to all terms but the last, then check
/// the last. Smaller degrees are tried first.
pub fn fit_series(terms: &[BigInt]) -> Option<RationalFit> {
    if terms.len() < 2 {
        return None;
    }
    let a: Vec<BigRational> = terms.iter().map(|t| BigRational::from_integer(t.clone())).collect();
    let fit_len = a.len() - 1;
    let at = |n: i64| -> BigRational {
        if n < 0 {
            BigRational::zero()
        } else {
            a[n as usize].clone()
        }
    };
    let mut shapes: Vec<(usize, usize)> = (0..=2).flat_map(|p| (0..=2).map(move |q| (p, q))).collect();
    shapes.sort_by_key(|&(p, q)| (p + q, q));
    for (dp, dq) in shapes {
        // coefficient of T^n for dp < n < fit_len: sum_i c_i a_{n-i} = 0
        let eqs: Vec<usize> = (dp + 1..fit_len).collect();
        if eqs.len() < dq {
            continue;
        }
        let m: Vec<Vec<BigRational>> = eqs
            .iter()
            .map(|&n| (1..=dq).map(|i| at(n as i64 - i as i64)).collect())
            .collect();
        let rhs: Vec<BigRational> = eqs.iter().map(|&n| -at(n as i64)).collect();
        let Some(c) = solve(m, rhs, dq) else { continue };
        let mut denominator = vec![BigRational::one()];
        denominator.extend(c);
        let numerator: Vec<BigRational> = (0..=dp)
            .map(|n| {
                let mut v = at(n as i64);
                for (i, ci) in denominator.iter().enumerate().skip(1) {
                    v += ci * at(n as i64 - i as i64);
                }
                v
            })
            .collect();
        let fit = RationalFit {
            numerator,
            denominator,
            checked_level: fit_len as u32,
        };
        if fit.coefficient(fit_len) == a[fit_len] {
            return Some(fit);
        }
    }
    None
}

/// Counts `N_0 .. N_{n_max}` with the normalized sequence, and a rational
/// fit of `sum N_n T^n` held out on `N_{n_max}` when one exists.
pub fn serre_series(x: &AffineFormalScheme, n_max: u32, s: u32, budget: u64) -> Result<SerreSeries> {
    let levels: Vec<u32> = (0..=n_max).collect();
    let rows = count_table(x, &levels, s, budget)?;
    let terms: Vec<BigInt> = rows.iter().map(|r| r.count.clone()).collect();
    Ok(SerreSeries {
        fit: fit_series(&terms),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_tower::{RingDescriptor, DEFAULT_ENUMERATION_BUDGET as B};

    #[test]
    fn node_series() {
        let x = AffineFormalScheme::parse("node", RingDescriptor::equal_char(3, 1), &["x", "y"], &["x*y - pi"], 1).unwrap();
        let s = serre_series(&x, 4, 1, B).unwrap();
        let fit = s.fit.unwrap();
        assert_eq!(fit.to_string(), "(5 - 3*T)/(1 - 3*T)");
        assert_eq!(fit.checked_level, 4);
    }

    #[test]
    fn fits_and_refusals() {
        let geo: Vec<BigInt> = (0..6).map(|n| BigInt::from(4) * BigInt::from(9).pow(n)).collect();
        assert_eq!(fit_series(&geo).unwrap().to_string(), "4/(1 - 9*T)");
        let zero = vec![BigInt::zero(); 5];
        assert_eq!(fit_series(&zero).unwrap().to_string(), "0");
        let fact: Vec<BigInt> = [1, 1, 2, 6, 24, 120, 720].iter().map(|&v| BigInt::from(v)).collect();
        assert!(fit_series(&fact).is_none());
    }
}
