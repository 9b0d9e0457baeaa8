//! Cylinders in the arc space cut out by order conditions, realized as sets
//! of points at a finite level.
//!
//! A [`CylinderSpec`] is intensional: a boolean combination of conditions of
//! the form `ord(g) == c`, `ord(g) >= c`, `ord(g) <= c`. Its rank is the least
//! level at which membership of an arc is decided by its truncation. A
//! [`Cylinder`] is the spec realized at some level `n >= rank`.

mod measure;
mod negligible;
mod spec_parse;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greenberg_levels::{LevelCache, LevelPointSet};
use crate::ring_tower::{RingElem, TruncatedRing};
use crate::scheme_model::{AffineFormalScheme, CompiledPoly, FormalMorphism, Poly};

pub use measure::{fit_laurent, measure, measure_interpolated, MeasureOptions, MeasureResult, MeasureStep};
pub use negligible::{negligible, NegligibleCertificate, NegligibleRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Eq,
    Ge,
    Le,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Eq => "==",
            Cmp::Ge => ">=",
            Cmp::Le => "<=",
        })
    }
}

/// `ord(poly) cmp c`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub poly: Poly,
    pub cmp: Cmp,
    pub c: u32,
}

impl Atom {
    pub fn new(poly: Poly, cmp: Cmp, c: u32) -> Self {
        Atom { poly, cmp, c }
    }

    fn rank(&self) -> u32 {
        match self.cmp {
            Cmp::Eq | Cmp::Le => self.c,
            Cmp::Ge => self.c.saturating_sub(1),
        }
    }
}

/// Extensional condition: the truncation of `map(arc)` to the level of `set`
/// lies in `set`. Without a map the arc itself is truncated.
#[derive(Debug, Clone)]
pub struct PointCondition {
    pub set: Arc<LevelPointSet>,
    pub map: Option<Vec<Poly>>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub enum Condition {
    True,
    False,
    Atom(Atom),
    /// `ord(g) == inf`; makes the spec a pro-cylinder
    Vanishes(Poly),
    Member(PointCondition),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
}

impl Condition {
    pub fn atom(poly: Poly, cmp: Cmp, c: u32) -> Condition {
        Condition::Atom(Atom::new(poly, cmp, c))
    }

    pub fn rank(&self) -> u32 {
        match self {
            Condition::True | Condition::False | Condition::Vanishes(_) => 0,
            Condition::Atom(a) => a.rank(),
            Condition::Member(m) => m.set.level(),
            Condition::Not(c) => c.rank(),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().map(Condition::rank).max().unwrap_or(0),
        }
    }

    pub fn is_pro(&self) -> bool {
        match self {
            Condition::Vanishes(_) => true,
            Condition::True | Condition::False | Condition::Atom(_) | Condition::Member(_) => false,
            Condition::Not(c) => c.is_pro(),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().any(Condition::is_pro),
        }
    }

    fn polys(&self, out: &mut Vec<Poly>) {
        match self {
            Condition::Atom(a) => out.push(a.poly.clone()),
            Condition::Vanishes(p) => out.push(p.clone()),
            Condition::Not(c) => c.polys(out),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.polys(out)),
            _ => {}
        }
    }

    /// The condition on arcs `y` of the source expressing that `h(y)` satisfies `self`.
    pub fn pullback(&self, h: &FormalMorphism) -> Condition {
        match self {
            Condition::True => Condition::True,
            Condition::False => Condition::False,
            Condition::Atom(a) => Condition::atom(pull_poly(&a.poly, h), a.cmp, a.c),
            Condition::Vanishes(p) => Condition::Vanishes(pull_poly(p, h)),
            Condition::Member(m) => {
                let map = match &m.map {
                    None => h.coords().to_vec(),
                    Some(polys) => polys.iter().map(|p| pull_poly(p, h)).collect(),
                };
                Condition::Member(PointCondition {
                    set: m.set.clone(),
                    map: Some(map),
                    label: format!("{}^-1 {}", h.name(), m.label),
                })
            }
            Condition::Not(c) => Condition::Not(Box::new(c.pullback(h))),
            Condition::And(cs) => Condition::And(cs.iter().map(|c| c.pullback(h)).collect()),
            Condition::Or(cs) => Condition::Or(cs.iter().map(|c| c.pullback(h)).collect()),
        }
    }

    fn compile(&self, ring: &TruncatedRing) -> Result<Compiled> {
        Ok(match self {
            Condition::True => Compiled::Const(true),
            Condition::False => Compiled::Const(false),
            Condition::Atom(a) => Compiled::Atom(a.poly.compile(ring), a.cmp, a.c),
            Condition::Vanishes(p) => Compiled::Atom(p.compile(ring), Cmp::Ge, ring.level() + 1),
            Condition::Member(m) => {
                if m.set.ring().descriptor() != ring.descriptor() {
                    return Err(Error::Contract(format!(
                        "point set {} lives over a different ring",
                        m.label
                    )));
                }
                if m.set.level() > ring.level() {
                    return Err(Error::UnderDetermined(format!(
                        "{} needs level {}",
                        m.label,
                        m.set.level()
                    )));
                }
                Compiled::Member(
                    m.set.clone(),
                    m.map
                        .as_ref()
                        .map(|polys| polys.iter().map(|p| p.compile(ring)).collect()),
                )
            }
            Condition::Not(c) => Compiled::Not(Box::new(c.compile(ring)?)),
            Condition::And(cs) => Compiled::And(cs.iter().map(|c| c.compile(ring)).collect::<Result<_>>()?),
            Condition::Or(cs) => Compiled::Or(cs.iter().map(|c| c.compile(ring)).collect::<Result<_>>()?),
        })
    }
}

fn pull_poly(p: &Poly, h: &FormalMorphism) -> Poly {
    if h.coords().is_empty() {
        let vars = h.source().vars();
        return Poly::from_terms(
            vars,
            p.terms().map(|(m, c)| {
                (
                    crate::scheme_model::Monomial {
                        pi: m.pi,
                        exps: vec![0; vars.len()],
                    },
                    c.clone(),
                )
            }),
        );
    }
    p.substitute(h.coords())
}

fn write_joined(f: &mut fmt::Formatter<'_>, cs: &[Condition], sep: &str, empty: &str, parens: bool) -> fmt::Result {
    if cs.is_empty() {
        return f.write_str(empty);
    }
    for (i, c) in cs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        let wrap = parens && matches!(c, Condition::Or(v) if v.len() > 1);
        if wrap {
            write!(f, "({c})")?;
        } else {
            write!(f, "{c}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::True => f.write_str("true"),
            Condition::False => f.write_str("false"),
            Condition::Atom(a) => write!(f, "ord({}) {} {}", a.poly, a.cmp, a.c),
            Condition::Vanishes(p) => write!(f, "ord({p}) == inf"),
            Condition::Member(m) => write!(f, "in({}@{})", m.label, m.set.level()),
            Condition::Not(c) => match **c {
                Condition::And(_) | Condition::Or(_) => write!(f, "!({c})"),
                _ => write!(f, "!{c}"),
            },
            Condition::And(cs) => write_joined(f, cs, " && ", "true", true),
            Condition::Or(cs) => write_joined(f, cs, " || ", "false", false),
        }
    }
}

enum Compiled {
    Const(bool),
    Atom(CompiledPoly, Cmp, u32),
    Member(Arc<LevelPointSet>, Option<Vec<CompiledPoly>>),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
}

impl Compiled {
    fn eval(&self, ring: &TruncatedRing, pt: &[RingElem]) -> bool {
        match self {
            Compiled::Const(b) => *b,
            Compiled::Atom(p, cmp, c) => {
                let v = ring.val(p.eval(pt));
                match cmp {
                    Cmp::Eq => v == Some(*c),
                    Cmp::Le => v.is_some_and(|v| v <= *c),
                    Cmp::Ge => v.is_none_or(|v| v >= *c),
                }
            }
            Compiled::Member(set, map) => {
                let k = set.level();
                let image: Vec<RingElem> = match map {
                    None => pt.iter().map(|&x| ring.truncate(x, k)).collect(),
                    Some(polys) => polys.iter().map(|p| ring.truncate(p.eval(pt), k)).collect(),
                };
                set.contains(&image)
            }
            Compiled::Not(c) => !c.eval(ring, pt),
            Compiled::And(cs) => cs.iter().all(|c| c.eval(ring, pt)),
            Compiled::Or(cs) => cs.iter().any(|c| c.eval(ring, pt)),
        }
    }
}

/// A cylinder condition on the arcs of a fixed scheme.
#[derive(Debug, Clone)]
pub struct CylinderSpec {
    scheme: Arc<AffineFormalScheme>,
    cond: Condition,
}

impl CylinderSpec {
    pub fn new(scheme: Arc<AffineFormalScheme>, cond: Condition) -> Result<Self> {
        let mut polys = Vec::new();
        cond.polys(&mut polys);
        if let Some(p) = polys.iter().find(|p| p.vars() != scheme.vars()) {
            return Err(Error::Contract(format!(
                "condition polynomial `{p}` is not written in the variables of {}",
                scheme.name()
            )));
        }
        Ok(CylinderSpec { scheme, cond })
    }

    /// All arcs.
    pub fn full(scheme: Arc<AffineFormalScheme>) -> Self {
        CylinderSpec {
            scheme,
            cond: Condition::True,
        }
    }

    /// Parse a condition such as `ord(x) == 1 && !(ord(x - y) <= 0)`.
    /// The empty string is the full arc space.
    pub fn parse(scheme: Arc<AffineFormalScheme>, src: &str) -> Result<Self> {
        let cond = spec_parse::parse_condition(src, scheme.vars())?;
        Self::new(scheme, cond)
    }

    pub fn scheme(&self) -> &Arc<AffineFormalScheme> {
        &self.scheme
    }

    pub fn condition(&self) -> &Condition {
        &self.cond
    }

    pub fn rank(&self) -> u32 {
        self.cond.rank()
    }

    pub fn is_pro(&self) -> bool {
        self.cond.is_pro()
    }

    fn check_same(&self, other: &CylinderSpec) -> Result<()> {
        if self.scheme.fingerprint() != other.scheme.fingerprint() {
            return Err(Error::Contract(format!(
                "cylinders on different schemes {} and {}",
                self.scheme.name(),
                other.scheme.name()
            )));
        }
        Ok(())
    }

    pub fn and(&self, other: &CylinderSpec) -> Result<CylinderSpec> {
        self.check_same(other)?;
        Ok(CylinderSpec {
            scheme: self.scheme.clone(),
            cond: Condition::And(vec![self.cond.clone(), other.cond.clone()]),
        })
    }

    pub fn or(&self, other: &CylinderSpec) -> Result<CylinderSpec> {
        self.check_same(other)?;
        Ok(CylinderSpec {
            scheme: self.scheme.clone(),
            cond: Condition::Or(vec![self.cond.clone(), other.cond.clone()]),
        })
    }

    pub fn not(&self) -> CylinderSpec {
        CylinderSpec {
            scheme: self.scheme.clone(),
            cond: Condition::Not(Box::new(self.cond.clone())),
        }
    }

    pub fn and_cond(&self, cond: Condition) -> CylinderSpec {
        CylinderSpec {
            scheme: self.scheme.clone(),
            cond: Condition::And(vec![self.cond.clone(), cond]),
        }
    }

    /// `h^{-1}` of this cylinder, a spec on the source of `h`.
    pub fn preimage(&self, h: &FormalMorphism) -> Result<CylinderSpec> {
        if h.target().fingerprint() != self.scheme.fingerprint() {
            return Err(Error::Contract(format!(
                "{} does not map to {}",
                h.name(),
                self.scheme.name()
            )));
        }
        Ok(CylinderSpec {
            scheme: h.source().clone(),
            cond: self.cond.pullback(h),
        })
    }

    /// Realize at level `n` over the extension of degree `s`.
    pub fn realize(&self, n: u32, s: u32, cache: &LevelCache) -> Result<Cylinder> {
        if self.is_pro() {
            return Err(Error::ProCylinder(format!("`{}` involves an infinite order", self.cond)));
        }
        let rank = self.rank();
        if n < rank {
            return Err(Error::UnderDetermined(format!(
                "`{}` has rank {rank}, cannot realize at level {n}",
                self.cond
            )));
        }
        let universe = cache.level_ext(&self.scheme, n, s)?;
        let members = select_members(&universe, &self.cond)?;
        Ok(Cylinder {
            spec: self.clone(),
            s,
            universe,
            members,
        })
    }
}

impl fmt::Display for CylinderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.cond)
    }
}

/// Indices of the points of `set` satisfying `cond`.
pub(crate) fn select_members(set: &LevelPointSet, cond: &Condition) -> Result<Vec<u32>> {
    let compiled = cond.compile(set.ring())?;
    let ring = set.ring();
    Ok((0..set.len())
        .into_par_iter()
        .filter(|&i| compiled.eval(ring, set.point(i)))
        .map(|i| i as u32)
        .collect())
}

/// Distinct truncations to level `n` of the points of `set` satisfying `cond`.
pub(crate) fn truncated_members(set: &LevelPointSet, cond: &Condition, n: u32) -> Result<u64> {
    let compiled = cond.compile(set.ring())?;
    let ring = set.ring();
    let mut pts: Vec<Vec<RingElem>> = (0..set.len())
        .into_par_iter()
        .filter_map(|i| {
            let p = set.point(i);
            compiled
                .eval(ring, p)
                .then(|| p.iter().map(|&x| ring.truncate(x, n)).collect())
        })
        .collect();
    pts.par_sort_unstable();
    pts.dedup();
    if set.width() == 0 {
        return Ok(u64::from(!pts.is_empty() && !set.is_empty()));
    }
    Ok(pts.len() as u64)
}

/// A cylinder spec realized at a level: a subset of `X(R_n)`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    spec: CylinderSpec,
    s: u32,
    universe: Arc<LevelPointSet>,
    members: Vec<u32>,
}

impl Cylinder {
    pub fn spec(&self) -> &CylinderSpec {
        &self.spec
    }

    pub fn level(&self) -> u32 {
        self.universe.level()
    }

    pub fn extension_degree(&self) -> u32 {
        self.s
    }

    pub fn universe(&self) -> &Arc<LevelPointSet> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member_indices(&self) -> &[u32] {
        &self.members
    }

    pub fn points(&self) -> impl Iterator<Item = &[RingElem]> + '_ {
        self.members.iter().map(|&i| self.universe.point(i as usize))
    }

    pub fn contains(&self, point: &[RingElem]) -> bool {
        self.universe
            .position(point)
            .is_some_and(|i| self.members.binary_search(&(i as u32)).is_ok())
    }

    /// The members as a point set of their own.
    pub fn to_point_set(&self) -> LevelPointSet {
        let idx: Vec<usize> = self.members.iter().map(|&i| i as usize).collect();
        self.universe.select(&idx)
    }

    /// `|C_n| / q^{(n+1)d}`, the naive normalized count at this level.
    pub fn normalized_count(&self) -> BigRational {
        let q = BigInt::from(self.universe.q());
        let d = self.universe.scheme().dim() as u32;
        BigRational::new(
            BigInt::from(self.members.len()),
            num_traits::pow(q, ((self.level() + 1) * d) as usize),
        )
    }

    /// The same cylinder at a higher level.
    pub fn promote(&self, m: u32, cache: &LevelCache) -> Result<Cylinder> {
        if m == self.level() {
            return Ok(self.clone());
        }
        if m < self.level() && m < self.spec.rank() {
            return Err(Error::UnderDetermined(format!(
                "`{}` has rank {}, cannot move to level {m}",
                self.spec,
                self.spec.rank()
            )));
        }
        self.spec.realize(m, self.s, cache)
    }

    fn aligned(&self, other: &Cylinder, cache: &LevelCache) -> Result<(Cylinder, Cylinder)> {
        self.spec.check_same(&other.spec)?;
        if self.s != other.s {
            return Err(Error::Contract("cylinders realized over different residue fields".into()));
        }
        let m = self.level().max(other.level());
        Ok((self.promote(m, cache)?, other.promote(m, cache)?))
    }

    pub fn and(&self, other: &Cylinder, cache: &LevelCache) -> Result<Cylinder> {
        let (a, b) = self.aligned(other, cache)?;
        let members = merge(&a.members, &b.members, |x, y| x && y);
        Ok(Cylinder {
            spec: a.spec.and(&b.spec)?,
            s: a.s,
            universe: a.universe,
            members,
        })
    }

    pub fn or(&self, other: &Cylinder, cache: &LevelCache) -> Result<Cylinder> {
        let (a, b) = self.aligned(other, cache)?;
        let members = merge(&a.members, &b.members, |x, y| x || y);
        Ok(Cylinder {
            spec: a.spec.or(&b.spec)?,
            s: a.s,
            universe: a.universe,
            members,
        })
    }

    pub fn not(&self) -> Cylinder {
        let all: Vec<u32> = (0..self.universe.len() as u32).collect();
        Cylinder {
            spec: self.spec.not(),
            s: self.s,
            universe: self.universe.clone(),
            members: merge(&all, &self.members, |x, y| x && !y),
        }
    }

    /// Same points after aligning levels.
    pub fn same_points(&self, other: &Cylinder, cache: &LevelCache) -> Result<bool> {
        let (a, b) = self.aligned(other, cache)?;
        Ok(a.members == b.members)
    }
}

fn merge(a: &[u32], b: &[u32], keep: impl Fn(bool, bool) -> bool) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = a.get(i).copied().unwrap_or(u32::MAX);
        let y = b.get(j).copied().unwrap_or(u32::MAX);
        let v = x.min(y);
        let (ina, inb) = (x == v, y == v);
        if keep(ina, inb) {
            out.push(v);
        }
        i += usize::from(ina);
        j += usize::from(inb);
    }
    out
}

/// `Gr^{(e)}(X)`: arcs along which the singular ideal has order at most `e`.
pub fn gr_e_spec(x: &Arc<AffineFormalScheme>, e: u32) -> Result<CylinderSpec> {
    let gens = x.singular_ideal()?;
    let cond = Condition::Or(gens.into_iter().map(|g| Condition::atom(g, Cmp::Le, e)).collect());
    CylinderSpec::new(x.clone(), cond)
}

pub fn gr_e(x: &Arc<AffineFormalScheme>, e: u32, n: u32, s: u32, cache: &LevelCache) -> Result<Cylinder> {
    gr_e_spec(x, e)?.realize(n, s, cache)
}

/// Value of the order of an ideal along an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultValue {
    Exactly(u32),
    AtLeast(u32),
    Infinite,
}

/// `{ord_Z = v}` for the ideal generated by `gens`.
pub fn mult_condition(gens: &[Poly], value: MultValue) -> Condition {
    match value {
        MultValue::Exactly(v) => {
            if gens.is_empty() {
                return Condition::False;
            }
            let mut all: Vec<Condition> = gens.iter().map(|g| Condition::atom(g.clone(), Cmp::Ge, v)).collect();
            all.push(Condition::Or(
                gens.iter().map(|g| Condition::atom(g.clone(), Cmp::Eq, v)).collect(),
            ));
            Condition::And(all)
        }
        MultValue::AtLeast(v) => Condition::And(gens.iter().map(|g| Condition::atom(g.clone(), Cmp::Ge, v)).collect()),
        MultValue::Infinite => Condition::And(gens.iter().map(|g| Condition::Vanishes(g.clone())).collect()),
    }
}

pub fn mult_level_set(x: &Arc<AffineFormalScheme>, gens: &[Poly], value: MultValue) -> Result<CylinderSpec> {
    CylinderSpec::new(x.clone(), mult_condition(gens, value))
}

/// `h^{-1}(a)` realized at the level of `a`.
pub fn preimage(h: &FormalMorphism, a: &Cylinder, cache: &LevelCache) -> Result<Cylinder> {
    a.spec.preimage(h)?.realize(a.level(), a.s, cache)
}

fn image_points(h: &FormalMorphism, b: &Cylinder, x: &Arc<AffineFormalScheme>) -> Result<LevelPointSet> {
    let ring = b.universe.ring();
    let coords = h.compile(ring);
    let pts: Vec<Vec<RingElem>> = b
        .points()
        .map(|p| coords.iter().map(|c| c.eval(p)).collect())
        .collect();
    LevelPointSet::from_points(x.clone(), ring.clone(), pts)
}

fn is_saturated(h: &FormalMorphism, b: &Cylinder, x: &Arc<AffineFormalScheme>, cache: &LevelCache) -> Result<bool> {
    let n = b.level();
    let lower = image_points(h, b, x)?;
    let upper = image_points(h, &b.promote(n + 1, cache)?, x)?;
    let above = cache.level(x, n + 1)?;
    let cond = Condition::Member(PointCondition {
        set: Arc::new(lower),
        map: None,
        label: "image".into(),
    });
    let over = select_members(&above, &cond)?;
    Ok(over.len() == upper.len())
}

/// `h(b)` as a cylinder at the level of `b`, provided the image at that
/// level is saturated: every point of the next level over the image is
/// itself the image of a point of `b`.
pub fn image(h: &FormalMorphism, b: &Cylinder, cache: &LevelCache) -> Result<Cylinder> {
    if h.source().fingerprint() != b.spec.scheme.fingerprint() {
        return Err(Error::Contract(format!(
            "{} is not defined on {}",
            h.name(),
            b.spec.scheme.name()
        )));
    }
    let x = Arc::new(crate::greenberg_levels::extend_scheme(h.target(), b.s)?);
    let n = b.level();
    if !is_saturated(h, b, &x, cache)? {
        let mut suggested = n + 4;
        for k in n + 1..n + 4 {
            match b.promote(k, cache).and_then(|bk| is_saturated(h, &bk, &x, cache)) {
                Ok(true) => {
                    suggested = k;
                    break;
                }
                Ok(false) => {}
                Err(Error::Budget { .. }) => {
                    suggested = k;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        return Err(Error::LevelTooLow {
            message: format!(
                "image of `{}` under {} is not saturated at level {n}",
                b.spec,
                h.name()
            ),
            suggested,
        });
    }
    let img = Arc::new(image_points(h, b, &x)?);
    let universe = cache.level(&x, n)?;
    let members: Vec<u32> = img
        .iter()
        .map(|p| universe.position(p).map(|i| i as u32))
        .collect::<Option<Vec<u32>>>()
        .ok_or_else(|| Error::Contract("image point missing from the level set".into()))?;
    let mut members = members;
    members.sort_unstable();
    let base_target = h.target().clone();
    let spec = CylinderSpec {
        scheme: base_target,
        cond: Condition::Member(PointCondition {
            set: img,
            map: None,
            label: format!("{}({})", h.name(), b.spec),
        }),
    };
    Ok(Cylinder {
        spec,
        s: b.s,
        universe,
        members,
    })
}
