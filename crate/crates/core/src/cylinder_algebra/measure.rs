//! Motivic measure of a cylinder, realized at `q`.
//!
//! The cylinder `A` is split as `A ∩ Gr^{(E)}` plus a remainder on which the
//! singular ideal has order above `E`. The first part is measured by counting
//! truncations of level `n + E` points (which lift to arcs by Hensel), and
//! the count is accepted once `S_{n+1} = q^d S_n`. The remainder is bounded
//! by the normalized count of its truncations. `E` grows until the
//! remainder is below the requested precision.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::greenberg_levels::{extend_scheme, LevelCache};
use crate::motivic_values::{MotivicValue, Precision, Provenance, RealizedMeasure};

use super::{truncated_members, Cmp, Condition, CylinderSpec};

#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    /// stop once the error is at most `q^{-target}`
    pub target: i64,
    /// residue field extension degree
    pub s: u32,
    pub max_e: u32,
    /// levels tried above the first admissible one while waiting for the
    /// count ratio to settle
    pub extra_levels: u32,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            target: 4,
            s: 1,
            max_e: 32,
            extra_levels: 3,
        }
    }
}

/// What was counted for one value of `E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureStep {
    pub e: u32,
    /// `(n, S_n)` for each level examined
    pub counts: Vec<(u32, u64)>,
    /// the level at which `S_{n+1} = q^d S_n` held
    pub stable_at: Option<u32>,
    pub remainder_count: Option<u64>,
    pub value: Option<BigRational>,
    pub remainder_bound: Option<BigRational>,
}

#[derive(Debug, Clone)]
pub struct MeasureResult {
    pub realized: RealizedMeasure,
    pub steps: Vec<MeasureStep>,
    /// false when the budget ran out before reaching the target precision
    pub resolved: bool,
    pub e: u32,
    pub level: u32,
    /// deepest level enumerated
    pub depth: u32,
    pub note: Option<String>,
}

fn q_pow(q: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(q), k as usize)
}

pub fn measure(spec: &CylinderSpec, opts: &MeasureOptions, cache: &LevelCache) -> Result<MeasureResult> {
    if spec.is_pro() {
        return Err(Error::ProCylinder(format!(
            "`{spec}` involves an infinite order; use a negligibility certificate"
        )));
    }
    let x = Arc::new(extend_scheme(spec.scheme(), opts.s)?);
    let q = x.descriptor().q();
    let d = x.dim() as u32;
    let qd = q_pow(q, d);
    let sing = x.singular_ideal()?;
    let rank = spec.rank();
    let mut steps = Vec::new();
    let mut best: Option<MeasureResult> = None;
    let mut depth = 0;

    let count = |cond: &Condition, level: u32, n: u32| -> Result<u64> {
        let set = cache.level(&x, level)?;
        truncated_members(&set, cond, n)
    };

    let unresolved = |best: Option<MeasureResult>, steps: Vec<MeasureStep>, why: Error| -> Result<MeasureResult> {
        match best {
            Some(mut b) => {
                b.resolved = false;
                b.steps = steps;
                b.note = Some(why.to_string());
                Ok(b)
            }
            None => Err(why),
        }
    };

    for e in 0..=opts.max_e {
        let gr = Condition::Or(sing.iter().map(|g| Condition::atom(g.clone(), Cmp::Le, e)).collect());
        let stable_part = Condition::And(vec![spec.condition().clone(), gr.clone()]);
        let remainder = Condition::And(vec![spec.condition().clone(), Condition::Not(Box::new(gr))]);
        let n0 = rank.max(e);
        let mut step = MeasureStep {
            e,
            counts: Vec::new(),
            stable_at: None,
            remainder_count: None,
            value: None,
            remainder_bound: None,
        };
        let mut carried: Option<u64> = None;
        let mut failure = None;
        for n in n0..=n0 + opts.extra_levels {
            let s_n = match carried {
                Some(v) => v,
                None => match count(&stable_part, n + e, n) {
                    Ok(v) => v,
                    Err(err) => {
                        failure = Some(err);
                        break;
                    }
                },
            };
            let s_next = match count(&stable_part, n + e + 1, n + 1) {
                Ok(v) => v,
                Err(err) => {
                    failure = Some(err);
                    break;
                }
            };
            depth = depth.max(n + e + 1);
            step.counts.push((n, s_n));
            if BigInt::from(s_next) == &qd * BigInt::from(s_n) {
                step.stable_at = Some(n);
                break;
            }
            carried = Some(s_next);
        }
        if let Some(err) = failure {
            steps.push(step);
            return unresolved(best, steps, err);
        }
        let Some(n) = step.stable_at else {
            steps.push(step);
            continue;
        };
        let r = match count(&remainder, n + e + 1, n) {
            Ok(r) => r,
            Err(err) => {
                steps.push(step);
                return unresolved(best, steps, err);
            }
        };
        let denom = q_pow(q, (n + 1) * d);
        let s_n = step.counts.last().unwrap().1;
        let value = BigRational::new(BigInt::from(s_n), denom.clone());
        let bound = BigRational::new(BigInt::from(r), denom);
        step.remainder_count = Some(r);
        step.value = Some(value.clone());
        step.remainder_bound = Some(bound.clone());
        steps.push(step);
        // the remainder lies in [0, bound]; report the midpoint
        let half = &bound / BigRational::from_integer(BigInt::from(2));
        let provenance = if bound.is_zero() {
            Provenance::Stabilized
        } else {
            Provenance::TailBounded
        };
        let realized = RealizedMeasure::with_bound(q, &value + &half, half, provenance);
        let done = realized.error_exponent.is_none_or(|k| k >= opts.target);
        let result = MeasureResult {
            realized,
            steps: steps.clone(),
            resolved: done,
            e,
            level: n,
            depth,
            note: None,
        };
        if done {
            return Ok(result);
        }
        best = Some(result);
    }
    let err = Error::Unresolved {
        level: depth,
        message: format!("remainder of `{spec}` still above q^-{} after E = {}", opts.target, opts.max_e),
    };
    unresolved(best, steps, err)
}

/// Measure over the extensions of degree `1..=4` and, when every value is
/// exact, recover a Laurent polynomial in `L` taking those values at
/// `L = q^s`. `None` when the budget or precision does not allow it.
pub fn measure_interpolated(
    spec: &CylinderSpec,
    opts: &MeasureOptions,
    cache: &LevelCache,
) -> Result<Option<(MotivicValue, Vec<MeasureResult>)>> {
    let q = spec.scheme().descriptor().q();
    let mut results = Vec::new();
    let mut points = Vec::new();
    for s in 1..=4 {
        let o = MeasureOptions { s, ..*opts };
        let r = match measure(spec, &o, cache) {
            Ok(r) => r,
            Err(Error::Budget { .. }) | Err(Error::Unresolved { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !r.resolved || !r.realized.is_exact() {
            return Ok(None);
        }
        points.push((s, r.realized.value.clone()));
        results.push(r);
    }
    Ok(fit_laurent(q, &points).map(|v| (v, results)))
}

fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] -= t;
            }
            let t = &f * &b[col];
            b[r] -= t;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Find a Laurent polynomial `sum c_j L^j` with integer coefficients and
/// the fewest terms that takes value `v` at `L = q^s` for every `(s, v)`.
/// At least one point is held back to check the fit.
pub fn fit_laurent(q: u64, points: &[(u32, BigRational)]) -> Option<MotivicValue> {
    if points.iter().all(|(_, v)| v.is_zero()) {
        return Some(MotivicValue::zero());
    }
    let base = BigRational::from_integer(BigInt::from(q));
    let at = |s: u32, j: i64| -> BigRational {
        let b = num_traits::pow(base.clone(), s as usize);
        if j >= 0 {
            num_traits::pow(b, j as usize)
        } else {
            BigRational::one() / num_traits::pow(b, (-j) as usize)
        }
    };
    for t in 1..points.len() {
        for jlo in -12..=6i64 {
            let a: Vec<Vec<BigRational>> = points[..t]
                .iter()
                .map(|&(s, _)| (0..t as i64).map(|k| at(s, jlo + k)).collect())
                .collect();
            let b: Vec<BigRational> = points[..t].iter().map(|(_, v)| v.clone()).collect();
            let Some(c) = solve_rational(a, b) else { continue };
            if c.iter().any(|x| !x.is_integer()) || c[0].is_zero() || c[t - 1].is_zero() {
                continue;
            }
            let ok = points[t..].iter().all(|(s, v)| {
                let val: BigRational = c
                    .iter()
                    .enumerate()
                    .map(|(k, ck)| ck * at(*s, jlo + k as i64))
                    .fold(BigRational::zero(), |acc, x| acc + x);
                &val == v
            });
            if ok {
                return Some(MotivicValue::from_terms(
                    c.iter()
                        .enumerate()
                        .filter(|(_, ck)| !ck.is_zero())
                        .map(|(k, ck)| (jlo + k as i64, ck.to_integer())),
                    Precision::Exact,
                ));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_tower::{RingDescriptor, DEFAULT_ENUMERATION_BUDGET as B};
    use crate::scheme_model::AffineFormalScheme;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn node_is_exact() {
        let cache = LevelCache::new(B);
        let x = Arc::new(
            AffineFormalScheme::parse("node", RingDescriptor::equal_char(3, 1), &["x", "y"], &["x*y - pi"], 1)
                .unwrap(),
        );
        let m = measure(&CylinderSpec::full(x), &MeasureOptions::default(), &cache).unwrap();
        assert!(m.resolved);
        assert!(m.realized.is_exact());
        assert_eq!(m.realized.value, r(4, 3));
        assert!(m.level <= 2);
    }

    #[test]
    fn plane_cylinder_exact() {
        let cache = LevelCache::new(B);
        let x = Arc::new(AffineFormalScheme::affine_space("A2", RingDescriptor::equal_char(2, 1), &["x", "y"]).unwrap());
        let spec = CylinderSpec::parse(x, "ord(x) >= 1 && ord(y) >= 1").unwrap();
        let m = measure(&spec, &MeasureOptions::default(), &cache).unwrap();
        assert_eq!(m.realized.value, r(1, 4));
        assert!(m.realized.is_exact());
        let interp = measure_interpolated(&spec, &MeasureOptions::default(), &cache).unwrap().unwrap();
        assert_eq!(interp.0.to_string(), "L^-2");
    }

    #[test]
    fn laurent_fit() {
        let q = 3u64;
        let f = |s: u32| {
            let qq = BigRational::from_integer(BigInt::from(q.pow(s)));
            BigRational::from_integer(2.into()) - BigRational::from_integer(2.into()) / qq
        };
        let pts: Vec<(u32, BigRational)> = (1..=4).map(|s| (s, f(s))).collect();
        let v = fit_laurent(q, &pts).unwrap();
        assert_eq!(v.to_string(), "2 - 2*L^-1");
        assert!(fit_laurent(q, &[(1, r(1, 7)), (2, r(1, 5))]).is_none());
    }
}
