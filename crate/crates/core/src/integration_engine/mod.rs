//! Integrands built from ideal multiplicities and jacobian orders, the
//! integral of `L^{-α}`, and the change of variables harness.

mod cov;
mod integrate;
mod serre;

use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cylinder_algebra::{mult_condition, Cmp, Condition, MultValue};
use crate::error::{Error, Result};
use crate::greenberg_levels::{extend_scheme, LevelCache};
use crate::ring_tower::{RingElem, TruncatedRing};
use crate::scheme_model::{det_poly, subsets, AffineFormalScheme, FormalMorphism, Poly};

pub use cov::{cov_check, Chart, CovOptions, CovReport, InjectivityRow};
pub use integrate::{integrate, FiberRow, IntegralResult, IntegrateOptions};
pub use serre::{fit_series, serre_series, RationalFit, SerreSeries};

/// An order computed from a level-`n` point: exact, or only known to be
/// at least `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OrdValue {
    Finite(u32),
    AtLeast(u32),
}

impl OrdValue {
    pub fn finite(self) -> Option<u32> {
        match self {
            OrdValue::Finite(v) => Some(v),
            OrdValue::AtLeast(_) => None,
        }
    }

    fn of(ring: &TruncatedRing, x: RingElem) -> OrdValue {
        match ring.val(x) {
            Some(v) => OrdValue::Finite(v),
            None => OrdValue::AtLeast(ring.level() + 1),
        }
    }
}

impl fmt::Display for OrdValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdValue::Finite(v) => write!(f, "{v}"),
            OrdValue::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// `min_g ord(g(arc))` over the generators of an ideal.
pub fn mult_at(gens: &[Poly], ring: &TruncatedRing, point: &[RingElem]) -> OrdValue {
    gens.iter()
        .map(|g| OrdValue::of(ring, g.eval(ring, point)))
        .min_by_key(|v| match v {
            OrdValue::Finite(v) => u64::from(*v),
            OrdValue::AtLeast(_) => u64::MAX,
        })
        .unwrap_or(OrdValue::AtLeast(ring.level() + 1))
}

/// A coordinate projection of the target that may be étale at `h(z)`.
#[derive(Debug, Clone)]
struct Projection {
    /// the complementary target minor, pulled back to the source
    delta: Poly,
    /// `det [J_Y ; J_{p∘h}]`
    det: Poly,
}

/// Polynomial data from which `ord_jac` of a morphism is read off.
#[derive(Debug, Clone)]
pub struct JacobianData {
    source_minors: Vec<Poly>,
    projections: Vec<Projection>,
    fitting: Vec<Poly>,
}

impl JacobianData {
    pub fn new(h: &FormalMorphism) -> Result<Self> {
        let y = h.source();
        let x = h.target();
        let (ny, my) = (y.nvars(), y.generators().len());
        if ny - my.min(ny) != y.dim() || my > ny {
            return Err(Error::UnsupportedIdeal(format!(
                "{}: the source {} must be cut out by {} equations",
                h.name(),
                y.name(),
                ny - y.dim()
            )));
        }
        if !y.is_declared_smooth() {
            return Err(Error::Contract(format!(
                "{}: jacobian orders need a source declared smooth, {} is not",
                h.name(),
                y.name()
            )));
        }
        let d = y.dim();
        let (nx, mx) = (x.nvars(), x.generators().len());
        if x.dim() != d || nx != mx + d {
            return Err(Error::UnsupportedIdeal(format!(
                "{}: the target {} must be affine space or a complete intersection of dimension {d}",
                h.name(),
                x.name()
            )));
        }
        let yv = y.vars();
        let jy = y.jacobian();
        let jx = x.jacobian();
        let jh = h.jacobian();
        let source_minors: Vec<Poly> = if my == 0 {
            Vec::new()
        } else {
            subsets(ny, my)
                .into_iter()
                .map(|t| {
                    let m: Vec<Vec<Poly>> = jy.iter().map(|r| t.iter().map(|&c| r[c].clone()).collect()).collect();
                    det_poly(&m, yv)
                })
                .filter(|p| !p.is_zero())
                .collect()
        };
        let mut projections = Vec::new();
        for c in subsets(nx, mx) {
            let kept: Vec<usize> = (0..nx).filter(|i| !c.contains(i)).collect();
            let minor: Vec<Vec<Poly>> = jx.iter().map(|r| c.iter().map(|&k| r[k].clone()).collect()).collect();
            let delta = h.pullback(&det_poly(&minor, x.vars()));
            let delta = if delta.vars() == yv {
                delta
            } else {
                delta.embed(yv)?
            };
            let mut m = jy.clone();
            m.extend(kept.iter().map(|&k| jh[k].clone()));
            projections.push(Projection {
                delta,
                det: det_poly(&m, yv),
            });
        }
        let mut rows = jy.clone();
        rows.extend(jh.iter().cloned());
        let mut fitting = Vec::new();
        for r in subsets(rows.len(), ny) {
            let m: Vec<Vec<Poly>> = r.iter().map(|&i| rows[i].clone()).collect();
            let p = det_poly(&m, yv);
            if !p.is_zero() && !fitting.contains(&p) {
                fitting.push(p);
            }
        }
        Ok(JacobianData {
            source_minors,
            projections,
            fitting,
        })
    }

    /// Generators of the Fitting ideal whose order along an arc is the
    /// jacobian order.
    pub fn fitting_ideal(&self) -> &[Poly] {
        &self.fitting
    }

    fn source_smooth(&self) -> Condition {
        if self.source_minors.is_empty() {
            return Condition::True;
        }
        Condition::Or(
            self.source_minors
                .iter()
                .map(|t| Condition::atom(t.clone(), Cmp::Eq, 0))
                .collect(),
        )
    }

    /// Arcs where some projection of the target is étale at `h(z)`.
    pub fn resolved_condition(&self) -> Condition {
        Condition::And(vec![
            self.source_smooth(),
            Condition::Or(
                self.projections
                    .iter()
                    .map(|p| Condition::atom(p.delta.clone(), Cmp::Eq, 0))
                    .collect(),
            ),
        ])
    }

    /// `{ord_jac = w}` on the resolved arcs.
    pub fn level_condition(&self, w: u32) -> Condition {
        Condition::And(vec![
            self.source_smooth(),
            Condition::Or(
                self.projections
                    .iter()
                    .map(|p| {
                        Condition::And(vec![
                            Condition::atom(p.delta.clone(), Cmp::Eq, 0),
                            Condition::atom(p.det.clone(), Cmp::Eq, w),
                        ])
                    })
                    .collect(),
            ),
        ])
    }

    /// `ord_jac` at a level-`n` point of the source.
    pub fn ord_jac_at(&self, ring: &TruncatedRing, z: &[RingElem]) -> Result<OrdValue> {
        let unresolved = |what: &str| Error::Unresolved {
            level: ring.level(),
            message: format!("no {what} minor is a unit at this point"),
        };
        if !self.source_minors.is_empty()
            && !self.source_minors.iter().any(|t| ring.is_unit(t.eval(ring, z)))
        {
            return Err(unresolved("source"));
        }
        // the last étale projection, matching the tie-break of minor_orders
        let p = self
            .projections
            .iter()
            .rev()
            .find(|p| ring.is_unit(p.delta.eval(ring, z)))
            .ok_or_else(|| unresolved("target"))?;
        Ok(OrdValue::of(ring, p.det.eval(ring, z)))
    }

    /// Multiplicity of the Fitting ideal at a level-`n` point.
    pub fn fitting_mult_at(&self, ring: &TruncatedRing, z: &[RingElem]) -> OrdValue {
        mult_at(&self.fitting, ring, z)
    }
}

/// `ord_jac_h` at a point of the source.
pub fn ord_jac_at(h: &FormalMorphism, ring: &TruncatedRing, z: &[RingElem]) -> Result<OrdValue> {
    JacobianData::new(h)?.ord_jac_at(ring, z)
}

/// Base change of a morphism to the residue field extension of degree `s`.
pub fn extend_morphism(h: &FormalMorphism, s: u32) -> Result<FormalMorphism> {
    if s == 1 {
        return Ok(h.clone());
    }
    FormalMorphism::new(
        h.name(),
        Arc::new(extend_scheme(h.source(), s)?),
        Arc::new(extend_scheme(h.target(), s)?),
        h.coords().to_vec(),
    )
}

#[derive(Debug, Clone)]
pub enum Term {
    /// `mult` along the ideal generated by these polynomials
    Mult(Vec<Poly>),
    OrdJac(Arc<FormalMorphism>),
}

/// `α = sum a_i t_i + b` with `a_i >= 0`.
#[derive(Debug, Clone)]
pub struct Integrand {
    domain: Arc<AffineFormalScheme>,
    terms: Vec<(u32, Term)>,
    constant: i64,
}

impl Integrand {
    pub fn zero(domain: Arc<AffineFormalScheme>) -> Self {
        Integrand {
            domain,
            terms: Vec::new(),
            constant: 0,
        }
    }

    pub fn mult(domain: Arc<AffineFormalScheme>, gens: Vec<Poly>) -> Result<Self> {
        if let Some(g) = gens.iter().find(|g| g.vars() != domain.vars()) {
            return Err(Error::Contract(format!(
                "`{g}` is not written in the variables of {}",
                domain.name()
            )));
        }
        Ok(Integrand {
            domain,
            terms: vec![(1, Term::Mult(gens))],
            constant: 0,
        })
    }

    pub fn ord_jac(h: Arc<FormalMorphism>) -> Result<Self> {
        JacobianData::new(&h)?;
        Ok(Integrand {
            domain: h.source().clone(),
            terms: vec![(1, Term::OrdJac(h))],
            constant: 0,
        })
    }

    pub fn domain(&self) -> &Arc<AffineFormalScheme> {
        &self.domain
    }

    pub fn terms(&self) -> &[(u32, Term)] {
        &self.terms
    }

    pub fn constant(&self) -> i64 {
        self.constant
    }

    pub fn scaled(mut self, a: u32) -> Self {
        for t in self.terms.iter_mut() {
            t.0 *= a;
        }
        self.constant *= i64::from(a);
        self
    }

    pub fn offset(mut self, b: i64) -> Self {
        self.constant += b;
        self
    }

    pub fn plus(mut self, other: Integrand) -> Result<Self> {
        if other.domain.fingerprint() != self.domain.fingerprint() {
            return Err(Error::Contract("adding integrands on different schemes".into()));
        }
        self.terms.extend(other.terms);
        self.constant += other.constant;
        Ok(self)
    }

    /// `α ∘ h` on the source of `h`.
    pub fn pullback(&self, h: &FormalMorphism) -> Result<Integrand> {
        if h.target().fingerprint() != self.domain.fingerprint() {
            return Err(Error::Contract(format!(
                "{} does not map to {}",
                h.name(),
                self.domain.name()
            )));
        }
        let mut terms = Vec::new();
        for (a, t) in &self.terms {
            match t {
                Term::Mult(gens) => terms.push((*a, Term::Mult(gens.iter().map(|g| h.pullback(g)).collect()))),
                Term::OrdJac(k) => {
                    return Err(Error::Unsupported(format!(
                        "pulling back the jacobian order of {} along {}",
                        k.name(),
                        h.name()
                    )))
                }
            }
        }
        Ok(Integrand {
            domain: h.source().clone(),
            terms,
            constant: self.constant,
        })
    }

    /// `α ∘ h + ord_jac_h`, the integrand on the source in the change of
    /// variables formula.
    pub fn transported(&self, h: &Arc<FormalMorphism>) -> Result<Integrand> {
        self.pullback(h)?.plus(Integrand::ord_jac(h.clone())?)
    }

    fn active(&self) -> Vec<(u32, &Term)> {
        self.terms.iter().filter(|(a, _)| *a > 0).map(|(a, t)| (*a, t)).collect()
    }

    /// Value at a level-`n` point.
    pub fn value_at(&self, ring: &TruncatedRing, z: &[RingElem]) -> Result<OrdValueSigned> {
        let mut total: i64 = self.constant;
        let mut open = false;
        for (a, t) in self.active() {
            let v = match t {
                Term::Mult(gens) => mult_at(gens, ring, z),
                Term::OrdJac(h) => JacobianData::new(h)?.ord_jac_at(ring, z)?,
            };
            match v {
                OrdValue::Finite(v) => total += i64::from(a) * i64::from(v),
                OrdValue::AtLeast(v) => {
                    total += i64::from(a) * i64::from(v);
                    open = true;
                }
            }
        }
        Ok(if open {
            OrdValueSigned::AtLeast(total)
        } else {
            OrdValueSigned::Finite(total)
        })
    }

    /// Arcs on which every jacobian term can be evaluated.
    pub fn resolved_condition(&self) -> Result<Condition> {
        let mut parts = Vec::new();
        for (_, t) in self.active() {
            if let Term::OrdJac(h) = t {
                parts.push(JacobianData::new(h)?.resolved_condition());
            }
        }
        Ok(Condition::And(parts))
    }

    fn term_condition(t: &Term, w: u32) -> Result<Condition> {
        Ok(match t {
            Term::Mult(gens) => mult_condition(gens, MultValue::Exactly(w)),
            Term::OrdJac(h) => JacobianData::new(h)?.level_condition(w),
        })
    }

    /// `{α = v}` as a cylinder condition.
    pub fn level_condition(&self, v: i64) -> Result<Condition> {
        let active = self.active();
        let rest = v - self.constant;
        if rest < 0 {
            return Ok(Condition::False);
        }
        if active.is_empty() {
            return Ok(if rest == 0 { Condition::True } else { Condition::False });
        }
        // every split of `rest` as sum a_i w_i
        let mut out = Vec::new();
        let mut stack: Vec<(usize, i64, Vec<Condition>)> = vec![(0, rest, Vec::new())];
        while let Some((i, left, conds)) = stack.pop() {
            if i == active.len() {
                if left == 0 {
                    out.push(Condition::And(conds));
                }
                continue;
            }
            let (a, t) = active[i];
            let a = i64::from(a);
            let mut w = left / a;
            loop {
                let mut c = conds.clone();
                c.push(Self::term_condition(t, w as u32)?);
                stack.push((i + 1, left - a * w, c));
                if w == 0 {
                    break;
                }
                w -= 1;
            }
        }
        Ok(Condition::Or(out))
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (a, t) in &self.terms {
            let body = match t {
                Term::Mult(gens) => {
                    let g: Vec<String> = gens.iter().map(|g| g.to_string()).collect();
                    format!("mult({})", g.join(", "))
                }
                Term::OrdJac(h) => format!("ordjac({})", h.name()),
            };
            parts.push(if *a == 1 { body } else { format!("{a}*{body}") });
        }
        if self.constant != 0 || parts.is_empty() {
            parts.push(self.constant.to_string());
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Value of an integrand at a point; open values are lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdValueSigned {
    Finite(i64),
    AtLeast(i64),
}

impl fmt::Display for OrdValueSigned {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdValueSigned::Finite(v) => write!(f, "{v}"),
            OrdValueSigned::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// Outcome of a check over sampled arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCheck {
    pub level: u32,
    pub sampled: usize,
    pub checked: usize,
    /// arcs where some value was not determined at the sampling level
    pub skipped: usize,
    pub counterexamples: Vec<String>,
}

impl SampleCheck {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn sample_points(
    x: &AffineFormalScheme,
    level: u32,
    count: usize,
    seed: u64,
    cache: &LevelCache,
) -> Result<(TruncatedRing, Vec<Vec<RingElem>>)> {
    let set = cache.level(x, level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, set.len(), count.min(set.len())).into_vec();
    idx.sort_unstable();
    Ok((set.ring().clone(), idx.into_iter().map(|i| set.point(i).to_vec()).collect()))
}

fn render(ring: &TruncatedRing, z: &[RingElem]) -> String {
    let c: Vec<String> = z.iter().map(|&x| ring.render(x)).collect();
    format!("({})", c.join(", "))
}

/// Check `ord_jac_{h∘g}(z) = ord_jac_h(g(z)) + ord_jac_g(z)` on sampled
/// level-`n` points of the source of `g`.
pub fn composition_check(
    h: &FormalMorphism,
    g: &FormalMorphism,
    level: u32,
    samples: usize,
    seed: u64,
    cache: &LevelCache,
) -> Result<SampleCheck> {
    let hg = h.compose(g)?;
    let (dh, dg, dhg) = (JacobianData::new(h)?, JacobianData::new(g)?, JacobianData::new(&hg)?);
    let (ring, pts) = sample_points(g.source(), level, samples, seed, cache)?;
    let mut out = SampleCheck {
        level,
        sampled: pts.len(),
        checked: 0,
        skipped: 0,
        counterexamples: Vec::new(),
    };
    for z in &pts {
        let gz = g.apply(&ring, z);
        let vals = (dhg.ord_jac_at(&ring, z), dh.ord_jac_at(&ring, &gz), dg.ord_jac_at(&ring, z));
        match vals {
            (Ok(OrdValue::Finite(a)), Ok(OrdValue::Finite(b)), Ok(OrdValue::Finite(c))) => {
                out.checked += 1;
                if a != b + c {
                    out.counterexamples.push(format!(
                        "{}: ord_jac {} = {a} but {} + {} = {b} + {c}",
                        render(&ring, z),
                        hg.name(),
                        h.name(),
                        g.name()
                    ));
                }
            }
            _ => out.skipped += 1,
        }
    }
    Ok(out)
}

/// Check that `ord_jac_h` equals the Fitting ideal multiplicity on sampled
/// level-`n` points of the source.
pub fn fitting_check(h: &FormalMorphism, level: u32, samples: usize, seed: u64, cache: &LevelCache) -> Result<SampleCheck> {
    let data = JacobianData::new(h)?;
    let (ring, pts) = sample_points(h.source(), level, samples, seed, cache)?;
    let mut out = SampleCheck {
        level,
        sampled: pts.len(),
        checked: 0,
        skipped: 0,
        counterexamples: Vec::new(),
    };
    for z in &pts {
        let fit = data.fitting_mult_at(&ring, z);
        // values above the level compare as `>= n+1` on both sides
        match data.ord_jac_at(&ring, z) {
            Ok(e) => {
                out.checked += 1;
                if fit != e {
                    out.counterexamples.push(format!(
                        "{}: ord_jac {e}, Fitting multiplicity {fit}",
                        render(&ring, z)
                    ));
                }
            }
            Err(_) => out.skipped += 1,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_tower::{RingDescriptor, DEFAULT_ENUMERATION_BUDGET as B};

    fn plane(name: &str, q: u64, vars: &[&str]) -> Arc<AffineFormalScheme> {
        Arc::new(AffineFormalScheme::affine_space(name, RingDescriptor::equal_char(q, 1), vars).unwrap())
    }

    #[test]
    fn blowup_chart_ord_jac() {
        let y = plane("Y", 2, &["u", "v"]);
        let x = plane("X", 2, &["x", "y"]);
        let h = FormalMorphism::parse("h", y.clone(), x, &["u", "u*v"]).unwrap();
        let ring = TruncatedRing::new(y.descriptor(), 4).unwrap();
        let t = ring.uniformizer_pow(1);
        let z = [t, ring.one()];
        assert_eq!(ord_jac_at(&h, &ring, &z).unwrap(), OrdValue::Finite(1));
        let data = JacobianData::new(&h).unwrap();
        assert_eq!(data.fitting_mult_at(&ring, &z), OrdValue::Finite(1));
        let id = FormalMorphism::parse("id", y.clone(), y.clone(), &["u", "v"]).unwrap();
        assert_eq!(ord_jac_at(&id, &ring, &[ring.zero(), ring.zero()]).unwrap(), OrdValue::Finite(0));
    }

    #[test]
    fn mult_examples() {
        let x = plane("X", 3, &["x", "y"]);
        let ring = TruncatedRing::new(x.descriptor(), 5).unwrap();
        let t = ring.uniformizer_pow(1);
        let pt = [ring.pow(t, 2), ring.pow(t, 3)];
        let gens = vec![Poly::var(x.vars(), 0), Poly::var(x.vars(), 1)];
        assert_eq!(mult_at(&gens, &ring, &pt), OrdValue::Finite(2));
        assert_eq!(mult_at(&gens, &ring, &[ring.zero(), ring.zero()]), OrdValue::AtLeast(6));
    }

    #[test]
    fn node_smoothening_chart() {
        let d = RingDescriptor::equal_char(3, 1);
        let node = Arc::new(AffineFormalScheme::parse("node", d.clone(), &["x", "y"], &["x*y - pi"], 1).unwrap());
        let y1 = Arc::new(
            AffineFormalScheme::parse("Y1", d, &["x", "s"], &["x*s - 1"], 1)
                .unwrap()
                .declare_smooth(),
        );
        let h = FormalMorphism::parse("h1", y1.clone(), node, &["x", "pi*s"]).unwrap();
        let cache = LevelCache::new(B);
        let fit = fitting_check(&h, 3, 50, 7, &cache).unwrap();
        assert!(fit.holds());
        assert_eq!(fit.skipped, 0);
        let set = cache.level(&y1, 2).unwrap();
        for z in set.iter() {
            assert_eq!(ord_jac_at(&h, set.ring(), z).unwrap(), OrdValue::Finite(0));
        }
    }

    #[test]
    fn composed_blowups() {
        let z = plane("Z", 2, &["a", "b"]);
        let y = plane("Y", 2, &["u", "v"]);
        let x = plane("X", 2, &["x", "y"]);
        let h = FormalMorphism::parse("h", y.clone(), x, &["u", "u*v"]).unwrap();
        let g = FormalMorphism::parse("g", z, y, &["a", "a*b"]).unwrap();
        let cache = LevelCache::new(B);
        let rep = composition_check(&h, &g, 5, 300, 1, &cache).unwrap();
        assert!(rep.holds(), "{:?}", rep.counterexamples);
        assert!(rep.checked >= 200);
    }

    #[test]
    fn integrand_levels() {
        let x = plane("X", 2, &["x", "y"]);
        let gens = vec![Poly::var(x.vars(), 0), Poly::var(x.vars(), 1)];
        let a = Integrand::mult(x.clone(), gens).unwrap().scaled(2).offset(1);
        assert_eq!(a.to_string(), "2*mult(x, y) + 1");
        assert!(matches!(a.level_condition(0).unwrap(), Condition::False));
        let ring = TruncatedRing::new(x.descriptor(), 3).unwrap();
        let t = ring.uniformizer_pow(1);
        assert_eq!(a.value_at(&ring, &[t, ring.one()]).unwrap(), OrdValueSigned::Finite(1));
        assert_eq!(a.value_at(&ring, &[t, t]).unwrap(), OrdValueSigned::Finite(3));
    }
}
