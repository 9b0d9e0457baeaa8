//! Negligibility of the arcs of `X` lying in a closed subscheme `Z` of
//! smaller dimension.
//!
//! For each `e` we take `i = γ̂(e)`, the empirical Greenberg level of
//! `S = X ∩ Z`, and count the points of `X` at level `i` that truncate arcs
//! (approximated by truncations of deeper points) and satisfy the equations
//! of `Z` to that level. The normalized count must be at most `C q^{-(e+1)}`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::greenberg_levels::{
    extend_level_set, extend_scheme, greenberg_estimate, GreenbergEstimate, LevelCache, LevelPointSet,
};
use crate::ring_tower::TruncatedRing;
use crate::scheme_model::{AffineFormalScheme, Poly};

use super::{truncated_members, Cmp, Condition};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegligibleRow {
    pub e: u32,
    /// `γ̂(e)` for `X ∩ Z`
    pub level: u32,
    /// whether `γ̂(e)` was found below the horizon
    pub estimated: bool,
    /// depth of the points whose truncations stand in for arcs
    pub depth: u32,
    pub count: u64,
    /// `count / q^{(level+1) d}`
    pub ratio: BigRational,
    /// `C q^{-(e+1)}`
    pub bound: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegligibleCertificate {
    pub q: u64,
    pub rows: Vec<NegligibleRow>,
    pub constant: BigRational,
    /// true when `C` was taken from the data rather than supplied
    pub calibrated: bool,
}

impl NegligibleCertificate {
    /// `C q^{-(e+1)}` for the largest `e` examined.
    pub fn final_bound(&self) -> BigRational {
        self.rows.last().map_or_else(BigRational::zero, |r| r.bound.clone())
    }
}

fn q_pow(q: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(q), k as usize)
}

const LIFT_SEARCH_STEPS: u64 = 4096;

/// Whether the single point `p` lifts to level `depth`; `None` when the
/// search ran out of steps.
fn has_lift(p: &LevelPointSet, depth: u32, steps: &mut u64, budget: u64) -> Result<Option<bool>> {
    if p.level() >= depth {
        return Ok(Some(true));
    }
    let next = extend_level_set(p, p.level() + 1, budget)?;
    for i in 0..next.len() {
        if *steps == 0 {
            return Ok(None);
        }
        *steps -= 1;
        match has_lift(&next.select(&[i]), depth, steps, budget)? {
            Some(false) => {}
            other => return Ok(other),
        }
    }
    Ok(Some(false))
}

/// Certify that `Gr(X) ∩ Gr(Z)` is negligible, where `z_gens` generate `Z` in
/// the ambient variables of `X` and `z_dim` is its dimension. With
/// `constant = None` the constant is calibrated as the largest observed
/// `ratio q^{e+1}`.
pub fn negligible(
    x: &Arc<AffineFormalScheme>,
    z_gens: &[Poly],
    z_dim: usize,
    e_max: u32,
    s: u32,
    constant: Option<BigRational>,
    cache: &LevelCache,
) -> Result<NegligibleCertificate> {
    let d = x.dim();
    if z_dim >= d {
        return Err(Error::Refused(format!(
            "{}: the subscheme has dimension {z_dim}, not below {d}",
            x.name()
        )));
    }
    if z_gens.is_empty() {
        return Err(Error::Refused(format!("{}: the subscheme is the whole ambient space", x.name())));
    }
    let xe = Arc::new(extend_scheme(x, s)?);
    let q = xe.descriptor().q();
    let zero_set = Condition::And(z_gens.iter().map(|g| Condition::Vanishes(g.clone())).collect());

    // Z containing X shows up as every point of X satisfying the equations
    let probe = cache.level(&xe, 2)?;
    if !probe.is_empty() && truncated_members(&probe, &zero_set, 2)? as usize == probe.len() {
        return Err(Error::Refused(format!(
            "{}: every point at level 2 lies on the subscheme, which looks like it contains {}",
            x.name(),
            x.name()
        )));
    }

    let top = TruncatedRing::new(xe.descriptor(), 2 * e_max + 4)?;
    let mut gens = xe.generators().to_vec();
    for g in z_gens {
        if !g.compile(&top).is_zero() && !gens.contains(g) {
            gens.push(g.clone());
        }
    }
    let meet = AffineFormalScheme::new_flat(
        format!("{} ∩ Z", x.name()),
        xe.descriptor().clone(),
        xe.vars().to_vec(),
        gens,
        z_dim,
    )?;

    let d32 = d as u32;
    let mut rows = Vec::new();
    for e in 0..=e_max {
        let horizon = 2 * e + 2;
        let (level, estimated) = match greenberg_estimate(&meet, e, 1, horizon, cache.budget())? {
            GreenbergEstimate::Found { m, .. } => (m, true),
            GreenbergEstimate::NotFound { .. } => (horizon, false),
        };
        // A point of X at `level` counts when it lies on Z to that order and
        // has a lift to `depth`; any depth gives an upper bound, deeper is
        // tighter. Lifts are searched depth first, and a point whose search
        // runs out of steps is counted.
        let depth = if xe.is_declared_smooth() { level } else { 2 * level + 1 };
        let on_z = Condition::And(
            z_gens
                .iter()
                .map(|g| Condition::atom(g.clone(), Cmp::Ge, level + 1))
                .collect(),
        );
        let base = cache.level(&xe, level)?;
        let test = on_z.compile(base.ring())?;
        let mut count = 0u64;
        for i in (0..base.len()).filter(|&i| test.eval(base.ring(), base.point(i))) {
            let mut steps = LIFT_SEARCH_STEPS;
            if has_lift(&base.select(&[i]), depth, &mut steps, cache.budget())? != Some(false) {
                count += 1;
            }
        }
        let ratio = BigRational::new(BigInt::from(count), q_pow(q, (level + 1) * d32));
        rows.push(NegligibleRow {
            e,
            level,
            estimated,
            depth,
            count,
            ratio,
            bound: BigRational::zero(),
        });
    }
    let scaled = |r: &NegligibleRow| &r.ratio * BigRational::from_integer(q_pow(q, r.e + 1));
    let (constant, calibrated) = match constant {
        Some(c) => (c, false),
        None => (rows.iter().map(scaled).max().unwrap_or_else(BigRational::zero), true),
    };
    for r in rows.iter_mut() {
        r.bound = &constant / BigRational::from_integer(q_pow(q, r.e + 1));
        if r.ratio > r.bound {
            return Err(Error::DimensionInconsistency(format!(
                "{}: at e = {} the count {} at level {} exceeds C q^-{} with C = {}",
                x.name(),
                r.e,
                r.count,
                r.level,
                r.e + 1,
                crate::greenberg_levels::render_rational(&constant)
            )));
        }
    }
    Ok(NegligibleCertificate {
        q,
        rows,
        constant,
        calibrated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_tower::{RingDescriptor, DEFAULT_ENUMERATION_BUDGET as B};
    use crate::scheme_model::parse_poly;

    #[test]
    fn origin_in_the_line() {
        let cache = LevelCache::new(B);
        let x = Arc::new(AffineFormalScheme::affine_space("A1", RingDescriptor::equal_char(3, 1), &["x"]).unwrap());
        let z = vec![parse_poly("x", x.vars()).unwrap()];
        let cert = negligible(&x, &z, 0, 3, 1, None, &cache).unwrap();
        assert_eq!(cert.constant, BigRational::from_integer(1.into()));
        for r in &cert.rows {
            assert_eq!(r.level, r.e);
            assert_eq!(r.count, 1);
        }
        assert!(matches!(negligible(&x, &z, 1, 3, 1, None, &cache), Err(Error::Refused(_))));
        let zero = vec![parse_poly("x - x", x.vars()).unwrap()];
        assert!(matches!(negligible(&x, &zero, 0, 3, 1, None, &cache), Err(Error::Refused(_))));
    }
}
