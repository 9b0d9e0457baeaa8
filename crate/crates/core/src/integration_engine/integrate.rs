//! `∫_A L^{-α} dμ` as `sum_v μ(A ∩ {α = v}) q^{-v}` plus a bounded tail.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::cylinder_algebra::{measure, Condition, CylinderSpec, MeasureOptions};
use crate::error::{Error, Result};
use crate::greenberg_levels::LevelCache;
use crate::motivic_values::{Provenance, RealizedMeasure};

use super::Integrand;

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// stop once the error is at most `q^{-target}`
    pub target: i64,
    pub s: u32,
    /// largest number of fibers summed before giving up
    pub max_fibers: u32,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            target: 5,
            s: 1,
            max_fibers: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiberRow {
    pub v: i64,
    pub measure: RealizedMeasure,
    /// level at which the fiber measure was read off
    pub level: u32,
}

#[derive(Debug, Clone)]
pub struct IntegralResult {
    pub realized: RealizedMeasure,
    pub fibers: Vec<FiberRow>,
    /// last fiber summed; the tail is `α > v_max`
    pub v_max: i64,
    pub tail: RealizedMeasure,
    /// arcs where a jacobian order could not be read off
    pub unresolved: Option<RealizedMeasure>,
    pub resolved: bool,
    pub note: Option<String>,
}

fn q_pow_signed(q: u64, k: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(q));
    if k >= 0 {
        num_traits::pow(b, k as usize)
    } else {
        BigRational::one() / num_traits::pow(b, (-k) as usize)
    }
}

fn nonneg(x: BigRational) -> BigRational {
    if x < BigRational::zero() {
        BigRational::zero()
    } else {
        x
    }
}

/// Integrate `L^{-α}` over the cylinder `a`. The value is reported as the
/// midpoint of a certified interval.
pub fn integrate(a: &CylinderSpec, alpha: &Integrand, opts: &IntegrateOptions, cache: &LevelCache) -> Result<IntegralResult> {
    if a.scheme().fingerprint() != alpha.domain().fingerprint() {
        return Err(Error::Contract(format!(
            "integrand on {} used over {}",
            alpha.domain().name(),
            a.scheme().name()
        )));
    }
    let mopts = MeasureOptions {
        target: opts.target + 2,
        s: opts.s,
        ..MeasureOptions::default()
    };
    let resolved = alpha.resolved_condition()?;
    let has_jac = !matches!(&resolved, Condition::And(v) if v.is_empty());
    let unresolved = if has_jac {
        let u = measure(&a.and_cond(Condition::Not(Box::new(resolved.clone()))), &mopts, cache)?;
        if u.realized.value.is_zero() && u.realized.is_exact() {
            None
        } else {
            Some(u.realized)
        }
    } else {
        None
    };
    let b = alpha.constant();
    let mut fibers = Vec::new();
    let mut fiber_conds = Vec::new();
    let mut last: Option<IntegralResult> = None;
    for k in 0..opts.max_fibers {
        let v = b + i64::from(k);
        let cond = alpha.level_condition(v)?;
        let m = measure(&a.and_cond(cond.clone()), &mopts, cache);
        let m = match m {
            Ok(m) => m,
            Err(e @ Error::Budget { .. }) => return finish_unresolved(last, e),
            Err(e) => return Err(e),
        };
        if !m.resolved {
            return finish_unresolved(
                last,
                Error::Unresolved {
                    level: m.depth,
                    message: format!("fiber α = {v} not measured to precision"),
                },
            );
        }
        let q = m.realized.q;
        fibers.push(FiberRow {
            v,
            measure: m.realized,
            level: m.level,
        });
        fiber_conds.push(cond);
        let tail_spec = a.and_cond(Condition::And(vec![
            resolved.clone(),
            Condition::Not(Box::new(Condition::Or(fiber_conds.clone()))),
        ]));
        let tail = match measure(&tail_spec, &mopts, cache) {
            Ok(t) => t.realized,
            Err(e @ Error::Budget { .. }) => return finish_unresolved(last, e),
            Err(e) => return Err(e),
        };
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for f in &fibers {
            let w = q_pow_signed(q, -f.v);
            lo += nonneg(f.measure.lower()) * &w;
            hi += f.measure.upper() * &w;
        }
        hi += tail.upper() * q_pow_signed(q, -(v + 1));
        if let Some(u) = &unresolved {
            hi += u.upper() * q_pow_signed(q, -b);
        }
        let two = BigRational::from_integer(BigInt::from(2));
        let half = (&hi - &lo) / &two;
        let realized = RealizedMeasure::with_bound(q, (&hi + &lo) / &two, half, Provenance::TailBounded);
        let done = realized.error_exponent.is_none_or(|e| e >= opts.target);
        let result = IntegralResult {
            realized,
            fibers: fibers.clone(),
            v_max: v,
            tail,
            unresolved: unresolved.clone(),
            resolved: done,
            note: None,
        };
        if done {
            return Ok(result);
        }
        last = Some(result);
    }
    finish_unresolved(
        last,
        Error::Unresolved {
            level: 0,
            message: format!("tail of ∫ L^-({alpha}) still above the target after {} fibers", opts.max_fibers),
        },
    )
}

fn finish_unresolved(last: Option<IntegralResult>, why: Error) -> Result<IntegralResult> {
    match last {
        Some(mut r) => {
            r.resolved = false;
            r.note = Some(why.to_string());
            Ok(r)
        }
        None => Err(why),
    }
}
