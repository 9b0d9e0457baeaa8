//! Change of variables check: `∫_A L^{-α} = sum over charts of
//! ∫_{B_i} L^{-(α∘h_i + ord_jac h_i)}`, each side computed on its own.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::cylinder_algebra::{negligible, CylinderSpec, NegligibleCertificate};
use crate::error::{Error, Result};
use crate::greenberg_levels::{extend_scheme, render_rational, LevelCache};
use crate::motivic_values::RealizedMeasure;
use crate::ring_tower::RingElem;

use super::{extend_morphism, integrate, IntegralResult, Integrand, IntegrateOptions, JacobianData};
use crate::scheme_model::FormalMorphism;

/// One piece of the source side: `h` restricted to the cylinder `domain`.
#[derive(Debug, Clone)]
pub struct Chart {
    pub map: Arc<FormalMorphism>,
    pub domain: CylinderSpec,
}

#[derive(Debug, Clone, Copy)]
pub struct CovOptions {
    pub target: i64,
    pub s: u32,
    /// jacobian orders checked for injectivity
    pub injectivity_orders: u32,
    /// range of `e` in the negligibility certificates of the wild loci
    pub negligible_orders: u32,
}

impl Default for CovOptions {
    fn default() -> Self {
        CovOptions {
            target: 5,
            s: 1,
            injectivity_orders: 2,
            negligible_orders: 3,
        }
    }
}

/// Injectivity evidence for one chart and one jacobian order `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectivityRow {
    pub chart: String,
    pub e: u32,
    pub level: u32,
    pub piece: usize,
    pub image: usize,
    /// every image point has exactly `q^e` preimages
    pub fibers_ok: bool,
    /// preimages of one point agree modulo `π^{n-e+1}`
    pub agree_ok: bool,
    /// every image point lies in the target cylinder
    pub inside_ok: bool,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CovReport {
    pub q: u64,
    pub target: i64,
    pub lhs: IntegralResult,
    pub rhs: Vec<(String, IntegralResult)>,
    pub rhs_total: RealizedMeasure,
    pub injectivity: Vec<InjectivityRow>,
    /// images of different pieces meeting at the check level
    pub overlaps: Vec<String>,
    pub tempered: Vec<(String, std::result::Result<NegligibleCertificate, String>)>,
    pub difference: BigRational,
    pub tolerance: BigRational,
    pub pass: bool,
    pub failures: Vec<String>,
}

fn injectivity(
    target: &CylinderSpec,
    charts: &[Chart],
    opts: &CovOptions,
    cache: &LevelCache,
) -> Result<(Vec<InjectivityRow>, Vec<String>)> {
    let emax = opts.injectivity_orders;
    let rank = charts.iter().map(|c| c.domain.rank()).max().unwrap_or(0);
    let n = (2 * emax + 1).max(rank + emax).max(target.rank());
    let a = target.realize(n, opts.s, cache)?;
    let mut rows = Vec::new();
    let mut owner: BTreeMap<Vec<RingElem>, (String, u32)> = BTreeMap::new();
    let mut overlaps = Vec::new();
    for chart in charts {
        let h = extend_morphism(&chart.map, opts.s)?;
        let data = JacobianData::new(&chart.map)?;
        let q = h.source().descriptor().q();
        for e in 0..=emax {
            let piece = chart.domain.and_cond(data.level_condition(e)).realize(n, opts.s, cache)?;
            let ring = piece.universe().ring().clone();
            let coords = h.compile(&ring);
            let mut fibers: BTreeMap<Vec<RingElem>, Vec<&[RingElem]>> = BTreeMap::new();
            for z in piece.points() {
                let img: Vec<RingElem> = coords.iter().map(|c| c.eval(z)).collect();
                fibers.entry(img).or_default().push(z);
            }
            let want = q.pow(e) as usize;
            let mut row = InjectivityRow {
                chart: chart.map.name().to_string(),
                e,
                level: n,
                piece: piece.len(),
                image: fibers.len(),
                fibers_ok: true,
                agree_ok: true,
                inside_ok: true,
                counterexample: None,
            };
            let show = |z: &[RingElem]| {
                let c: Vec<String> = z.iter().map(|&x| ring.render(x)).collect();
                format!("({})", c.join(", "))
            };
            for (img, pre) in &fibers {
                if pre.len() != want {
                    row.fibers_ok = false;
                }
                let cut = |z: &[RingElem]| -> Vec<RingElem> { z.iter().map(|&x| ring.truncate(x, n - e)).collect() };
                if let Some(other) = pre.iter().find(|z| cut(z) != cut(pre[0])) {
                    row.agree_ok = false;
                    row.counterexample.get_or_insert_with(|| {
                        format!("{} and {} both map to {}", show(pre[0]), show(other), show(img))
                    });
                }
                if !a.contains(img) {
                    row.inside_ok = false;
                    row.counterexample
                        .get_or_insert_with(|| format!("{} maps to {} outside the target", show(pre[0]), show(img)));
                }
                if let Some((c, f)) = owner.get(img) {
                    if overlaps.len() < 8 {
                        overlaps.push(format!(
                            "{} is hit by {c} (order {f}) and {} (order {e})",
                            show(img),
                            chart.map.name()
                        ));
                    }
                } else {
                    owner.insert(img.clone(), (chart.map.name().to_string(), e));
                }
            }
            rows.push(row);
        }
    }
    Ok((rows, overlaps))
}

/// Compute both sides of the change of variables formula and compare.
pub fn cov_check(
    target: &CylinderSpec,
    alpha: &Integrand,
    charts: &[Chart],
    opts: &CovOptions,
    cache: &LevelCache,
) -> Result<CovReport> {
    for c in charts {
        if c.map.target().fingerprint() != target.scheme().fingerprint() {
            return Err(Error::Contract(format!(
                "chart {} does not map to {}",
                c.map.name(),
                target.scheme().name()
            )));
        }
        if c.domain.scheme().fingerprint() != c.map.source().fingerprint() {
            return Err(Error::Contract(format!(
                "domain of chart {} is not on its source",
                c.map.name()
            )));
        }
    }
    let iopts = IntegrateOptions {
        target: opts.target + 1,
        s: opts.s,
        ..IntegrateOptions::default()
    };
    let lhs = integrate(target, alpha, &iopts, cache)?;
    let q = lhs.realized.q;
    let mut failures = Vec::new();
    let mut rhs = Vec::new();
    let mut total: Option<RealizedMeasure> = None;
    for c in charts {
        let beta = alpha.transported(&c.map)?;
        let r = integrate(&c.domain, &beta, &iopts, cache)?;
        if !r.resolved {
            failures.push(format!("chart {} unresolved: {}", c.map.name(), r.note.clone().unwrap_or_default()));
        }
        total = Some(match total {
            None => r.realized.clone(),
            Some(t) => t.add(&r.realized)?,
        });
        rhs.push((c.map.name().to_string(), r));
    }
    let rhs_total = total.unwrap_or_else(|| RealizedMeasure::exact(q, BigRational::from_integer(0.into())));
    if !lhs.resolved {
        failures.push(format!("target side unresolved: {}", lhs.note.clone().unwrap_or_default()));
    }

    let (inj, overlaps) = injectivity(target, charts, opts, cache)?;
    for r in &inj {
        if !(r.fibers_ok && r.agree_ok && r.inside_ok) {
            failures.push(format!(
                "chart {} order {}: {}",
                r.chart,
                r.e,
                r.counterexample.clone().unwrap_or_else(|| "fiber sizes differ from q^e".into())
            ));
        }
    }
    if !overlaps.is_empty() {
        failures.push(format!("chart images overlap: {}", overlaps[0]));
    }

    let mut tempered = Vec::new();
    for c in charts {
        let data = JacobianData::new(&c.map)?;
        let y = c.map.source();
        let cert = if y.dim() == 0 {
            Err("zero-dimensional source".to_string())
        } else {
            let ys = Arc::new(extend_scheme(y, 1)?);
            negligible(&ys, data.fitting_ideal(), y.dim() - 1, opts.negligible_orders, opts.s, None, cache)
                .map_err(|e| e.to_string())
        };
        if let Err(why) = &cert {
            failures.push(format!("wild locus of {} not certified: {why}", c.map.name()));
        }
        tempered.push((c.map.name().to_string(), cert));
    }

    let difference = (&lhs.realized.value - &rhs_total.value).abs();
    let qr = BigRational::from_integer(BigInt::from(q));
    let tolerance = BigRational::one() / num_traits::pow(qr, opts.target as usize)
        + &lhs.realized.error_bound
        + &rhs_total.error_bound;
    if difference > tolerance {
        failures.push(format!(
            "sides differ by {} > {}",
            render_rational(&difference),
            render_rational(&tolerance)
        ));
    }
    Ok(CovReport {
        q,
        target: opts.target,
        pass: failures.is_empty(),
        lhs,
        rhs,
        rhs_total,
        injectivity: inj,
        overlaps,
        tempered,
        difference,
        tolerance,
        failures,
    })
}
