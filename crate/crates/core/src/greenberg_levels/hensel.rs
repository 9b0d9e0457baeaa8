//! Newton-Hensel lifting with a possibly non-invertible jacobian.
//!
//! If `δ = det J_S(z)` has order `e` and the equations vanish at `z` to order
//! greater than `2e`, the iteration `x_S <- x_S - adj(J_S) f(x) / δ` converges
//! and never moves the point by more than `pi^{n+1-e}`. The division by `δ`
//! splits into a shift by `pi^e` and a unit inverse, so it is carried out at
//! working level `m + e` and the result is exact at level `m`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring_tower::{RingElem, TruncatedRing};
use crate::scheme_model::{
    adjugate, det_ring, minor_orders_of, AffineFormalScheme, CompiledPoly, FormalMorphism, Poly,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HenselLift {
    /// The lifted point at the target level.
    pub point: Vec<RingElem>,
    pub level: u32,
    /// Order of the minor used.
    pub e: u32,
    /// The lift agrees with the input point up to this level (`n - e`).
    pub agrees_to: u32,
    pub columns: Vec<usize>,
    pub iterations: u32,
}

const MAX_ITERATIONS: u32 = 64;

struct System {
    ring: TruncatedRing,
    eqs: Vec<CompiledPoly>,
    /// `jac[j][c]` is the derivative of equation `j` along `cols[c]`
    jac: Vec<Vec<CompiledPoly>>,
    offsets: Vec<RingElem>,
    cols: Vec<usize>,
}

impl System {
    fn new(
        ring: TruncatedRing,
        eqs: &[Poly],
        offsets: Vec<RingElem>,
        cols: Vec<usize>,
    ) -> Self {
        let jac = eqs
            .iter()
            .map(|f| cols.iter().map(|&c| f.derivative(c).compile(&ring)).collect())
            .collect();
        System {
            eqs: eqs.iter().map(|f| f.compile(&ring)).collect(),
            jac,
            offsets,
            cols,
            ring,
        }
    }

    fn residual(&self, x: &[RingElem]) -> Vec<RingElem> {
        self.eqs
            .iter()
            .zip(&self.offsets)
            .map(|(f, &o)| self.ring.sub(f.eval(x), o))
            .collect()
    }

    /// Iterate until the residual vanishes modulo `pi^{m+1}`.
    fn run(&self, mut x: Vec<RingElem>, e: u32, m: u32) -> Result<(Vec<RingElem>, u32)> {
        let r = &self.ring;
        let ring_m = r.at_level(m)?;
        for it in 0..MAX_ITERATIONS {
            let f = self.residual(&x);
            if f.iter().all(|&v| r.truncate(v, m).is_zero()) {
                return Ok((x, it));
            }
            let jac: Vec<Vec<RingElem>> = self
                .jac
                .iter()
                .map(|row| row.iter().map(|p| p.eval(&x)).collect())
                .collect();
            let delta = det_ring(r, &jac);
            if r.val(delta) != Some(e) {
                return Err(Error::LiftCounterexample(format!(
                    "the minor changed order during lifting (now {:?}, expected {e})",
                    r.val(delta)
                )));
            }
            let adj = adjugate(r, &jac);
            let unit = r.div_uniformizer_pow(delta, e)?;
            let unit_inv = ring_m
                .inv(RingElem(r.truncate(unit, m).index()))
                .expect("delta / pi^e is a unit");
            for (c, row) in adj.iter().enumerate() {
                let mut g = r.zero();
                for (a, &fv) in row.iter().zip(&f) {
                    g = r.add(g, r.mul(*a, fv));
                }
                let shifted = r.div_uniformizer_pow(g, e).map_err(|_| {
                    Error::LiftCounterexample("residual not divisible by the minor".into())
                })?;
                let u = ring_m.mul(RingElem(r.truncate(shifted, m).index()), unit_inv);
                let i = self.cols[c];
                x[i] = r.sub(x[i], u);
            }
        }
        Err(Error::LiftCounterexample(format!(
            "Newton iteration did not converge in {MAX_ITERATIONS} steps"
        )))
    }
}

/// Solve the square system `eqs(x) = offsets` in the variables `cols`,
/// starting from `start` (given at level `n`, possibly with higher digits
/// already chosen), assuming the minor on `cols` has order `e` at `start`.
/// Returns the solution at level `m`.
#[allow(clippy::too_many_arguments)]
pub fn newton_solve(
    ring: &TruncatedRing,
    eqs: &[Poly],
    offsets: &[RingElem],
    cols: &[usize],
    start: &[RingElem],
    e: u32,
    m: u32,
) -> Result<Vec<RingElem>> {
    let work = ring.at_level(m + e)?;
    let sys = System::new(work, eqs, offsets.to_vec(), cols.to_vec());
    let (x, _) = sys.run(start.to_vec(), e, m)?;
    Ok(x.iter().map(|&v| sys.ring.truncate(v, m)).collect())
}

struct Prepared {
    e: u32,
    cols: Vec<usize>,
}

fn prepare(x: &AffineFormalScheme, z: &[RingElem], n: u32) -> Result<Prepared> {
    let ring_n = TruncatedRing::new(x.descriptor(), n)?;
    if z.len() != x.nvars() || z.iter().any(|&c| !ring_n.contains(c)) {
        return Err(Error::Contract(format!("{z:?} is not a point of R_{n}^{}", x.nvars())));
    }
    if !x.contains(&ring_n, z) {
        return Err(Error::Contract(format!(
            "the point does not satisfy the equations of {} at level {n}",
            x.name()
        )));
    }
    let k = x.codim();
    if x.generators().is_empty() {
        return Ok(Prepared { e: 0, cols: Vec::new() });
    }
    if x.generators().len() != k {
        return Err(Error::NoLiftGuarantee(format!(
            "{} has {} equations but codimension {k}; lifting needs a complete intersection",
            x.name(),
            x.generators().len()
        )));
    }
    let jac: Vec<Vec<RingElem>> = x
        .jacobian()
        .iter()
        .map(|row| row.iter().map(|p| p.eval(&ring_n, z)).collect())
        .collect();
    let mo = minor_orders_of(&ring_n, &jac, x.nvars(), k);
    let e = mo.min.ok_or_else(|| {
        Error::NoLiftGuarantee(format!("every maximal minor vanishes at level {n}"))
    })?;
    if n < 2 * e {
        return Err(Error::NoLiftGuarantee(format!(
            "minor order {e} at level {n}: lifting needs n >= 2e = {}",
            2 * e
        )));
    }
    Ok(Prepared {
        e,
        cols: mo.argmin_cols,
    })
}

fn lift_with(
    x: &AffineFormalScheme,
    z: &[RingElem],
    n: u32,
    m: u32,
    prep: &Prepared,
    high: &[RingElem],
) -> Result<HenselLift> {
    let work = TruncatedRing::new(x.descriptor(), m + prep.e)?;
    let start: Vec<RingElem> = z
        .iter()
        .zip(high)
        .map(|(&a, &h)| RingElem(a.index() + h.index()))
        .collect();
    let (point, iterations) = if x.generators().is_empty() {
        (start, 0)
    } else {
        let sys = System::new(
            work.clone(),
            x.generators(),
            vec![work.zero(); x.generators().len()],
            prep.cols.clone(),
        );
        sys.run(start, prep.e, m)?
    };
    let point: Vec<RingElem> = point.iter().map(|&v| work.truncate(v, m)).collect();
    let ring_m = work.at_level(m)?;
    if !x.contains(&ring_m, &point) {
        return Err(Error::LiftCounterexample(format!(
            "lift fails the equations of {} at level {m}",
            x.name()
        )));
    }
    let agrees_to = n - prep.e;
    if point
        .iter()
        .zip(z)
        .any(|(&a, &b)| work.truncate(a, agrees_to) != work.truncate(b, agrees_to))
    {
        return Err(Error::LiftCounterexample(format!(
            "lift moved the point below level {agrees_to}"
        )));
    }
    Ok(HenselLift {
        point,
        level: m,
        e: prep.e,
        agrees_to,
        columns: prep.cols.clone(),
        iterations,
    })
}

/// Lift a level-`n` point of `X` to level `m >= n`. Digits of the input above
/// level `n` are taken to be zero.
pub fn hensel_lift(x: &AffineFormalScheme, z: &[RingElem], n: u32, m: u32) -> Result<HenselLift> {
    if m < n {
        return Err(Error::Contract(format!("target level {m} is below {n}")));
    }
    let prep = prepare(x, z, n)?;
    if m == n && prep.e == 0 {
        return Ok(HenselLift {
            point: z.to_vec(),
            level: n,
            e: 0,
            agrees_to: n,
            columns: prep.cols,
            iterations: 0,
        });
    }
    lift_with(x, z, n, m, &prep, &vec![RingElem(0); z.len()])
}

/// All lifts obtained by choosing the digits `n+1..=m` of the coordinates
/// outside the minor freely. Sorted and duplicate free.
pub fn hensel_lift_family(
    x: &AffineFormalScheme,
    z: &[RingElem],
    n: u32,
    m: u32,
    budget: u64,
) -> Result<Vec<Vec<RingElem>>> {
    if m < n {
        return Err(Error::Contract(format!("target level {m} is below {n}")));
    }
    let prep = prepare(x, z, n)?;
    let work = TruncatedRing::new(x.descriptor(), m + prep.e)?;
    let free: Vec<usize> = (0..x.nvars()).filter(|i| !prep.cols.contains(i)).collect();
    let q = work.q();
    let slots = (m - n) as usize * free.len();
    let total = q
        .checked_pow(slots as u32)
        .filter(|&t| t <= budget)
        .ok_or_else(|| Error::budget("Hensel lift family", budget, q.saturating_pow(slots as u32)))?;
    let mut out = Vec::with_capacity(total as usize);
    for idx in 0..total {
        let mut high = vec![RingElem(0); x.nvars()];
        let mut t = idx;
        for &i in &free {
            for lvl in n + 1..=m {
                let d = t % q;
                t /= q;
                high[i] = RingElem(high[i].index() + d * work.q_pow(lvl));
            }
        }
        out.push(lift_with(x, z, n, m, &prep, &high)?.point);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Given a level-`n` point `z` of the source and a level-`m` point `target`
/// of the target with `h(z) ≡ target` mod `pi^{n+1}`, find `y` at level `m`
/// with `h(y) = target`, agreeing with `z` up to level `n - e`.
pub fn hensel_lift_morphism(
    h: &FormalMorphism,
    z: &[RingElem],
    n: u32,
    target: &[RingElem],
    m: u32,
) -> Result<HenselLift> {
    let y: &Arc<AffineFormalScheme> = h.source();
    let x: &Arc<AffineFormalScheme> = h.target();
    if m < n {
        return Err(Error::Contract(format!("target level {m} is below {n}")));
    }
    if y.dim() != x.dim() {
        return Err(Error::NoLiftGuarantee(format!(
            "source dimension {} differs from target dimension {}",
            y.dim(),
            x.dim()
        )));
    }
    if y.generators().len() != y.codim() {
        return Err(Error::NoLiftGuarantee(format!(
            "{} is not presented as a complete intersection",
            y.name()
        )));
    }
    let ring_n = TruncatedRing::new(y.descriptor(), n)?;
    let ring_m = ring_n.at_level(m)?;
    if !y.contains(&ring_n, z) || !x.contains(&ring_m, target) {
        return Err(Error::Contract("points do not lie on the schemes".into()));
    }
    let hz = h.apply(&ring_n, z);
    if hz.iter().zip(target).any(|(&a, &b)| a != ring_m.truncate(b, n)) {
        return Err(Error::Contract(format!(
            "h(z) does not agree with the target point at level {n}"
        )));
    }
    // coordinates of X used as local parameters: complement of a unit minor
    let proj: Vec<usize> = if x.generators().is_empty() {
        (0..x.nvars()).collect()
    } else {
        if x.generators().len() != x.codim() {
            return Err(Error::NoLiftGuarantee(format!(
                "{} is not presented as a complete intersection",
                x.name()
            )));
        }
        let jx: Vec<Vec<RingElem>> = x
            .jacobian()
            .iter()
            .map(|row| row.iter().map(|p| p.eval(&ring_n, &hz)).collect())
            .collect();
        let mo = minor_orders_of(&ring_n, &jx, x.nvars(), x.codim());
        let unit = mo.minors.iter().find(|mv| mv.val == Some(0)).ok_or_else(|| {
            Error::NoLiftGuarantee(format!("{} is not smooth at h(z)", x.name()))
        })?;
        (0..x.nvars()).filter(|i| !unit.cols.contains(i)).collect()
    };
    let mut eqs: Vec<Poly> = y.generators().to_vec();
    let mut offsets_m = vec![ring_m.zero(); eqs.len()];
    for &p in &proj {
        eqs.push(h.coords()[p].clone());
        offsets_m.push(target[p]);
    }
    let cols: Vec<usize> = (0..y.nvars()).collect();
    let jac: Vec<Vec<RingElem>> = eqs
        .iter()
        .map(|f| cols.iter().map(|&c| f.derivative(c).eval(&ring_n, z)).collect())
        .collect();
    let e = ring_n.val(det_ring(&ring_n, &jac)).ok_or_else(|| {
        Error::NoLiftGuarantee(format!("the jacobian of {} vanishes at level {n}", h.name()))
    })?;
    if n < 2 * e {
        return Err(Error::NoLiftGuarantee(format!(
            "jacobian order {e} at level {n}: lifting needs n >= 2e = {}",
            2 * e
        )));
    }
    let work = ring_n.at_level(m + e)?;
    let offsets: Vec<RingElem> = offsets_m.iter().map(|&o| RingElem(o.index())).collect();
    let sys = System::new(work.clone(), &eqs, offsets, cols.clone());
    let (pt, iterations) = sys.run(z.to_vec(), e, m)?;
    let point: Vec<RingElem> = pt.iter().map(|&v| work.truncate(v, m)).collect();
    if !y.contains(&ring_m, &point) || h.apply(&ring_m, &point) != target {
        return Err(Error::LiftCounterexample(format!(
            "no point of {} above the target at level {m}",
            y.name()
        )));
    }
    Ok(HenselLift {
        point,
        level: m,
        e,
        agrees_to: n - e,
        columns: cols,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greenberg_levels::{enumerate_level, truncate_set};
    use crate::ring_tower::RingDescriptor;

    #[test]
    fn smooth_family_matches_enumeration() {
        let d = RingDescriptor::equal_char(3, 1);
        let x = AffineFormalScheme::parse("g", d.clone(), &["x", "y"], &["y - x^2"], 1).unwrap();
        let z = [RingElem(1), RingElem(1)];
        let fam = hensel_lift_family(&x, &z, 0, 3, 1 << 20).unwrap();
        assert_eq!(fam.len(), 27);
        let lvl3 = enumerate_level(&x, 3, 1, 1 << 20).unwrap();
        let above: Vec<Vec<RingElem>> = lvl3
            .iter()
            .filter(|p| p.iter().all(|c| c.index() % 3 == 1))
            .map(|p| p.to_vec())
            .collect();
        assert_eq!(fam, above);
    }

    #[test]
    fn node_unique_y_digits() {
        let d = RingDescriptor::equal_char(2, 1);
        let x = AffineFormalScheme::parse("n", d, &["x", "y"], &["xy - pi"], 1).unwrap();
        let z = [RingElem(1), RingElem(2)]; // (1, t) at level 1
        let l = hensel_lift(&x, &z, 1, 4).unwrap();
        assert_eq!(l.e, 0);
        assert_eq!(l.columns, vec![1]);
        let fam = hensel_lift_family(&x, &z, 1, 4, 1 << 20).unwrap();
        assert_eq!(fam.len(), 8);
        let lvl4 = enumerate_level(&x, 4, 1, 1 << 20).unwrap();
        let img = truncate_set(&lvl4, 1).unwrap();
        let pos = img.image.position(&z).unwrap();
        assert_eq!(img.fiber_sizes[pos], 8);
    }

    #[test]
    fn identity_at_same_level() {
        let d = RingDescriptor::equal_char(2, 1);
        let x = AffineFormalScheme::parse("n", d, &["x", "y"], &["xy - pi"], 1).unwrap();
        let z = [RingElem(1), RingElem(2)];
        assert_eq!(hensel_lift(&x, &z, 1, 1).unwrap().point, z.to_vec());
    }

    #[test]
    fn singular_point_needs_precision() {
        let d = RingDescriptor::equal_char(5, 1);
        let cusp = AffineFormalScheme::parse("c", d.clone(), &["x", "y"], &["y^2 - x^3"], 1).unwrap();
        let r = TruncatedRing::new(&d, 4).unwrap();
        // (t^2, t^3) has minor order 3 > 4/2
        let z = [r.uniformizer_pow(2), r.uniformizer_pow(3)];
        assert!(matches!(hensel_lift(&cusp, &z, 4, 6), Err(Error::NoLiftGuarantee(_))));
        // at level 6 the same arc has order 3 and 6 >= 2*3
        let r6 = TruncatedRing::new(&d, 6).unwrap();
        let z6 = [r6.uniformizer_pow(2), r6.uniformizer_pow(3)];
        let l = hensel_lift(&cusp, &z6, 6, 9).unwrap();
        assert_eq!(l.e, 3);
        assert_eq!(l.agrees_to, 3);
    }

    #[test]
    fn p_adic_lift() {
        let d = RingDescriptor::p_adic(7, 1);
        // y^2 = x over Z_7, lift (2, 4) from level 0
        let x = AffineFormalScheme::parse("s", d, &["x", "y"], &["y^2 - x"], 1).unwrap();
        let l = hensel_lift(&x, &[RingElem(4), RingElem(2)], 0, 3).unwrap();
        let r = TruncatedRing::new(&RingDescriptor::p_adic(7, 1), 3).unwrap();
        assert!(x.contains(&r, &l.point));
    }

    #[test]
    fn morphism_lift_through_blowup_chart() {
        let d = RingDescriptor::equal_char(2, 1);
        let plane = Arc::new(AffineFormalScheme::affine_space("A2", d.clone(), &["x", "y"]).unwrap());
        let chart = Arc::new(AffineFormalScheme::affine_space("Y", d.clone(), &["u", "v"]).unwrap());
        let h = FormalMorphism::parse("h", chart, plane, &["u", "uv"]).unwrap();
        // z = (t, 1) at level 2, jacobian u has order 1
        let z = [RingElem(2), RingElem(1)];
        let r4 = TruncatedRing::new(&d, 4).unwrap();
        // target (t + t^3, t + t^4) is congruent to h(z) = (t, t) mod t^3
        let target = [r4.from_digits(&[0, 1, 0, 1]).unwrap(), r4.from_digits(&[0, 1, 0, 0, 1]).unwrap()];
        let l = hensel_lift_morphism(&h, &z, 2, &target, 4).unwrap();
        assert_eq!(l.e, 1);
        assert_eq!(h.apply(&r4, &l.point), target.to_vec());
    }
}
