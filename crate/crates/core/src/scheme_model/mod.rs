//! Affine formal schemes given by polynomial generators, and polynomial
//! morphisms between them.

mod minors;
mod parse;
mod poly;

use std::fmt;
use std::sync::Arc;

pub use minors::{adjugate, det_poly, det_ring, select, subsets};
pub(crate) use parse::parse_error;
pub use parse::parse_poly;
pub use poly::{CompiledPoly, Monomial, Poly};

use crate::error::{Error, Result};
use crate::ring_tower::{RingDescriptor, RingElem, TruncatedRing};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineFormalScheme {
    name: String,
    descriptor: RingDescriptor,
    vars: Vec<String>,
    generators: Vec<Poly>,
    dim: usize,
    smooth: bool,
    complete_intersection: bool,
    flat_attested: bool,
}

/// One maximal minor of the jacobian evaluated at a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorValue {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// `None` when the minor vanishes at the working precision.
    pub val: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorOrders {
    pub minors: Vec<MinorValue>,
    pub min: Option<u32>,
    /// Generator rows of a minimal minor.
    pub argmin_rows: Vec<usize>,
    /// Variable columns of a minimal minor.
    pub argmin_cols: Vec<usize>,
}

impl MinorOrders {
    /// Valuations sorted ascending, `None` last.
    pub fn valuations(&self) -> Vec<Option<u32>> {
        let mut v: Vec<Option<u32>> = self.minors.iter().map(|m| m.val).collect();
        v.sort_by_key(|x| x.unwrap_or(u32::MAX));
        v
    }
}

fn ord_key(v: Option<u32>) -> u64 {
    v.map_or(u64::MAX, u64::from)
}

impl AffineFormalScheme {
    /// Generators are given over `vars`. Fails if a generator vanishes modulo
    /// the uniformizer (use [`attest_flat`](Self::attest_flat) to override).
    pub fn new(
        name: impl Into<String>,
        descriptor: RingDescriptor,
        vars: Vec<String>,
        generators: Vec<Poly>,
        dim: usize,
    ) -> Result<Self> {
        Self::build(name, descriptor, vars, generators, dim, false)
    }

    fn build(
        name: impl Into<String>,
        descriptor: RingDescriptor,
        vars: Vec<String>,
        generators: Vec<Poly>,
        dim: usize,
        flat_attested: bool,
    ) -> Result<Self> {
        descriptor.validate()?;
        let name = name.into();
        for (i, v) in vars.iter().enumerate() {
            if v == "pi" || v.is_empty() || vars[..i].contains(v) {
                return Err(Error::Contract(format!("bad or repeated variable name `{v}`")));
            }
        }
        for g in &generators {
            if g.vars() != vars.as_slice() {
                return Err(Error::Contract(format!(
                    "generator `{g}` is not written in the variables of {name}"
                )));
            }
        }
        if dim > vars.len() {
            return Err(Error::DimensionInconsistency(format!(
                "{name}: dimension {dim} exceeds the {} ambient variables",
                vars.len()
            )));
        }
        let s = AffineFormalScheme {
            name,
            descriptor,
            vars,
            generators,
            dim,
            smooth: false,
            complete_intersection: false,
            flat_attested,
        };
        s.check_admissible()?;
        Ok(s)
    }

    /// Like [`new`](Self::new) with flatness attested up front.
    pub fn new_flat(
        name: impl Into<String>,
        descriptor: RingDescriptor,
        vars: Vec<String>,
        generators: Vec<Poly>,
        dim: usize,
    ) -> Result<Self> {
        Self::build(name, descriptor, vars, generators, dim, true)
    }

    /// Parse generator strings over the given variable names.
    pub fn parse(
        name: impl Into<String>,
        descriptor: RingDescriptor,
        vars: &[&str],
        generators: &[&str],
        dim: usize,
    ) -> Result<Self> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let gens = generators
            .iter()
            .map(|g| parse_poly(g, &vars))
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, descriptor, vars, gens, dim)
    }

    /// The affine space of the given variables.
    pub fn affine_space(name: impl Into<String>, descriptor: RingDescriptor, vars: &[&str]) -> Result<Self> {
        Ok(Self::parse(name, descriptor, vars, &[], vars.len())?.declare_smooth())
    }

    pub fn declare_smooth(mut self) -> Self {
        self.smooth = true;
        self
    }

    pub fn declare_complete_intersection(mut self) -> Result<Self> {
        if self.generators.len() + self.dim != self.vars.len() {
            return Err(Error::DimensionInconsistency(format!(
                "{}: a complete intersection of dimension {} in {} variables needs {} generators, got {}",
                self.name,
                self.dim,
                self.vars.len(),
                self.vars.len() - self.dim,
                self.generators.len()
            )));
        }
        self.complete_intersection = true;
        Ok(self)
    }

    pub fn attest_flat(mut self) -> Self {
        self.flat_attested = true;
        self
    }

    fn check_admissible(&self) -> Result<()> {
        if self.flat_attested {
            return Ok(());
        }
        for g in &self.generators {
            if g.vanishes_mod_pi(self.descriptor.p) {
                return Err(Error::Contract(format!(
                    "{}: generator `{g}` vanishes modulo {}, so the scheme has {}-torsion; attest flatness to override",
                    self.name,
                    self.descriptor.uniformizer_symbol(),
                    self.descriptor.uniformizer_symbol()
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn descriptor(&self) -> &RingDescriptor {
        &self.descriptor
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn generators(&self) -> &[Poly] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.vars.len() - self.dim
    }

    pub fn is_declared_smooth(&self) -> bool {
        self.smooth
    }

    pub fn is_declared_complete_intersection(&self) -> bool {
        self.complete_intersection
    }

    /// Same equations over another base ring (used for residue field extensions).
    pub fn with_descriptor(&self, descriptor: RingDescriptor) -> Result<Self> {
        descriptor.validate()?;
        let mut s = self.clone();
        s.descriptor = descriptor;
        Ok(s)
    }

    /// A stable textual identity used as a cache key.
    pub fn fingerprint(&self) -> String {
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        format!(
            "{}|{}|{}|{}|{}",
            self.descriptor,
            self.vars.join(","),
            gens.join(";"),
            self.dim,
            self.smooth
        )
    }

    /// `m x N` matrix of partial derivatives.
    pub fn jacobian(&self) -> Vec<Vec<Poly>> {
        self.generators
            .iter()
            .map(|g| (0..self.nvars()).map(|i| g.derivative(i)).collect())
            .collect()
    }

    fn minor_shape(&self) -> Result<()> {
        let m = self.generators.len();
        let k = self.codim();
        if m == 0 && self.dim == self.nvars() {
            return Ok(());
        }
        if m == 1 && k == 1 {
            return Ok(());
        }
        if self.complete_intersection {
            return Ok(());
        }
        Err(Error::UnsupportedIdeal(format!(
            "{}: {m} generators in {} variables with dimension {} is neither a hypersurface nor a declared complete intersection",
            self.name,
            self.nvars(),
            self.dim
        )))
    }

    /// The `(N-d)`-minors of the jacobian as polynomials, with their column sets.
    pub fn maximal_minors(&self) -> Result<Vec<(Vec<usize>, Poly)>> {
        self.minor_shape()?;
        let jac = self.jacobian();
        let k = self.codim();
        Ok(subsets(self.nvars(), k)
            .into_iter()
            .map(|cols| {
                let sub: Vec<Vec<Poly>> = jac
                    .iter()
                    .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
                    .collect();
                let det = det_poly(&sub, &self.vars);
                (cols, det)
            })
            .collect())
    }

    /// Generators of the ideal cutting out the singular locus: the equations
    /// together with all maximal jacobian minors.
    pub fn singular_ideal(&self) -> Result<Vec<Poly>> {
        let minors = self.maximal_minors()?;
        let mut out = self.generators.clone();
        for (_, m) in minors {
            if !m.is_zero() && !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn compile_generators(&self, ring: &TruncatedRing) -> Vec<CompiledPoly> {
        self.generators.iter().map(|g| g.compile(ring)).collect()
    }

    pub fn compile_jacobian(&self, ring: &TruncatedRing) -> Vec<Vec<CompiledPoly>> {
        self.jacobian()
            .iter()
            .map(|row| row.iter().map(|p| p.compile(ring)).collect())
            .collect()
    }

    /// Does the point satisfy every generator in `ring`?
    pub fn contains(&self, ring: &TruncatedRing, point: &[RingElem]) -> bool {
        self.generators.iter().all(|g| g.eval(ring, point).is_zero())
    }

    /// Valuations of all maximal minors of the jacobian at a point of `R_n^N`.
    pub fn minor_orders(&self, ring: &TruncatedRing, point: &[RingElem]) -> Result<MinorOrders> {
        self.minor_shape()?;
        let jac: Vec<Vec<RingElem>> = self
            .jacobian()
            .iter()
            .map(|row| row.iter().map(|p| p.eval(ring, point)).collect())
            .collect();
        Ok(minor_orders_of(ring, &jac, self.nvars(), self.codim()))
    }
}

/// Valuations of all `k x k` minors of an evaluated `m x ncols` matrix.
pub fn minor_orders_of(ring: &TruncatedRing, jac: &[Vec<RingElem>], ncols: usize, k: usize) -> MinorOrders {
    let mut minors = Vec::new();
    for rows in subsets(jac.len(), k) {
        for cols in subsets(ncols, k) {
            let det = det_ring(ring, &select(jac, &rows, &cols));
            minors.push(MinorValue {
                rows: rows.clone(),
                cols,
                val: ring.val(det),
            });
        }
    }
    // ties go to the last minimal minor, so graph-like presentations solve
    // for the trailing coordinates
    let best = minors.iter().rev().min_by_key(|m| ord_key(m.val));
    let (min, argmin_rows, argmin_cols) = match best {
        Some(m) => (m.val, m.rows.clone(), m.cols.clone()),
        None => (None, Vec::new(), Vec::new()),
    };
    MinorOrders {
        minors,
        min,
        argmin_rows,
        argmin_cols,
    }
}

impl fmt::Display for AffineFormalScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        write!(
            f,
            "{} over {}: vars [{}], gens [{}], d = {}",
            self.name,
            self.descriptor,
            self.vars.join(", "),
            gens.join(", "),
            self.dim
        )
    }
}

/// A morphism `h: Y -> X` given by coordinate polynomials in the `Y` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalMorphism {
    name: String,
    source: Arc<AffineFormalScheme>,
    target: Arc<AffineFormalScheme>,
    coords: Vec<Poly>,
}

impl FormalMorphism {
    pub fn new(
        name: impl Into<String>,
        source: Arc<AffineFormalScheme>,
        target: Arc<AffineFormalScheme>,
        coords: Vec<Poly>,
    ) -> Result<Self> {
        let name = name.into();
        if coords.len() != target.nvars() {
            return Err(Error::Contract(format!(
                "{name}: {} coordinates given for a target in {} variables",
                coords.len(),
                target.nvars()
            )));
        }
        if coords.iter().any(|c| c.vars() != source.vars()) {
            return Err(Error::Contract(format!(
                "{name}: coordinates must be polynomials in the source variables"
            )));
        }
        if source.descriptor() != target.descriptor() {
            return Err(Error::Contract(format!(
                "{name}: source and target live over different rings"
            )));
        }
        Ok(FormalMorphism {
            name,
            source,
            target,
            coords,
        })
    }

    pub fn parse(
        name: impl Into<String>,
        source: Arc<AffineFormalScheme>,
        target: Arc<AffineFormalScheme>,
        coords: &[&str],
    ) -> Result<Self> {
        let polys = coords
            .iter()
            .map(|c| parse_poly(c, source.vars()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, source, target, polys)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Arc<AffineFormalScheme> {
        &self.source
    }

    pub fn target(&self) -> &Arc<AffineFormalScheme> {
        &self.target
    }

    pub fn coords(&self) -> &[Poly] {
        &self.coords
    }

    /// `N_X x N_Y` matrix of partial derivatives of the coordinates.
    pub fn jacobian(&self) -> Vec<Vec<Poly>> {
        self.coords
            .iter()
            .map(|c| (0..self.source.nvars()).map(|i| c.derivative(i)).collect())
            .collect()
    }

    /// Pull back a polynomial on the target to the source.
    pub fn pullback(&self, f: &Poly) -> Poly {
        f.substitute(&self.coords)
    }

    /// Target generators pulled back to the source; these must vanish on `Y`.
    pub fn compatibility_polys(&self) -> Vec<Poly> {
        self.target.generators().iter().map(|f| self.pullback(f)).collect()
    }

    pub fn apply(&self, ring: &TruncatedRing, point: &[RingElem]) -> Vec<RingElem> {
        self.coords.iter().map(|c| c.eval(ring, point)).collect()
    }

    pub fn compile(&self, ring: &TruncatedRing) -> Vec<CompiledPoly> {
        self.coords.iter().map(|c| c.compile(ring)).collect()
    }

    /// `self ∘ inner`, where `inner: Z -> Y` and `self: Y -> X`.
    pub fn compose(&self, inner: &FormalMorphism) -> Result<FormalMorphism> {
        if inner.target.fingerprint() != self.source.fingerprint() {
            return Err(Error::Contract(format!(
                "cannot compose {} after {}: target and source differ",
                self.name, inner.name
            )));
        }
        let coords = self.coords.iter().map(|c| c.substitute(&inner.coords)).collect();
        FormalMorphism::new(
            format!("{}∘{}", self.name, inner.name),
            inner.source.clone(),
            self.target.clone(),
            coords,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(p: u64) -> RingDescriptor {
        RingDescriptor::equal_char(p, 1)
    }

    #[test]
    fn jacobian_rows() {
        let s = AffineFormalScheme::parse("c", eq(2), &["x", "y"], &["y - x^2"], 1).unwrap();
        let j = s.jacobian();
        assert_eq!(j[0][0].to_string(), "-2*x");
        assert_eq!(j[0][1].to_string(), "1");
        let n = AffineFormalScheme::parse("n", eq(2), &["x", "y"], &["xy - pi"], 1).unwrap();
        let j = n.jacobian();
        assert_eq!((j[0][0].to_string(), j[0][1].to_string()), ("y".into(), "x".into()));
    }

    #[test]
    fn singular_ideal_shapes() {
        let n = AffineFormalScheme::parse("n", eq(2), &["x", "y"], &["xy - pi"], 1).unwrap();
        let s: Vec<String> = n.singular_ideal().unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(s, vec!["x*y - pi", "y", "x"]);
        let a = AffineFormalScheme::affine_space("a", eq(2), &["x", "y"]).unwrap();
        assert_eq!(a.singular_ideal().unwrap().len(), 1);
        let bad = AffineFormalScheme::parse("b", eq(2), &["x", "y", "z"], &["x", "y"], 2).unwrap();
        assert!(matches!(bad.singular_ideal(), Err(Error::UnsupportedIdeal(_))));
    }

    #[test]
    fn complete_intersection_minors() {
        let ci = AffineFormalScheme::parse("ci", eq(3), &["x", "y", "z"], &["y - x^2", "z - x^3"], 1)
            .unwrap()
            .declare_complete_intersection()
            .unwrap();
        let minors = ci.maximal_minors().unwrap();
        assert_eq!(minors.len(), 3);
        // the (y, z) minor is the identity
        assert_eq!(minors[2].1.to_string(), "1");
        assert!(AffineFormalScheme::parse("x", eq(3), &["x", "y", "z"], &["y"], 1)
            .unwrap()
            .declare_complete_intersection()
            .is_err());
    }

    #[test]
    fn admissibility() {
        assert!(AffineFormalScheme::parse("t", eq(2), &["x"], &["pi*x"], 0).is_err());
        assert!(AffineFormalScheme::parse("t", RingDescriptor::p_adic(3, 1), &["x"], &["3x"], 0).is_err());
        let ok = AffineFormalScheme::new(
            "t",
            eq(2),
            vec!["x".into()],
            vec![parse_poly("pi x", &["x".to_string()]).unwrap()],
            0,
        );
        assert!(ok.is_err());
    }

    #[test]
    fn minor_orders_examples() {
        let d = eq(2);
        let n = AffineFormalScheme::parse("n", d.clone(), &["x", "y"], &["xy - pi"], 1).unwrap();
        let r = TruncatedRing::new(&d, 2).unwrap();
        let pt = [r.one(), r.uniformizer_pow(1)];
        let mo = n.minor_orders(&r, &pt).unwrap();
        assert_eq!(mo.minors.len(), 2);
        assert_eq!(mo.minors[0].val, Some(1)); // d/dx = y
        assert_eq!(mo.minors[1].val, Some(0)); // d/dy = x
        assert_eq!(mo.min, Some(0));
        assert_eq!(mo.argmin_cols, vec![1]);

        let d5 = eq(5);
        let cusp = AffineFormalScheme::parse("c", d5.clone(), &["x", "y"], &["y^2 - x^3"], 1).unwrap();
        let r = TruncatedRing::new(&d5, 4).unwrap();
        let pt = [r.uniformizer_pow(2), r.uniformizer_pow(3)];
        let mo = cusp.minor_orders(&r, &pt).unwrap();
        assert_eq!(mo.valuations(), vec![Some(3), Some(4)]);
        assert_eq!(mo.min, Some(3));
    }

    #[test]
    fn composition_of_blowups() {
        let d = eq(2);
        let plane = Arc::new(AffineFormalScheme::affine_space("A2", d.clone(), &["x", "y"]).unwrap());
        let uv = Arc::new(AffineFormalScheme::affine_space("Y", d.clone(), &["u", "v"]).unwrap());
        let h = FormalMorphism::parse("h", uv.clone(), plane.clone(), &["u", "uv"]).unwrap();
        let ab = Arc::new(AffineFormalScheme::affine_space("Z", d, &["a", "b"]).unwrap());
        let uv_as_plane = Arc::new(uv.as_ref().clone());
        let g = FormalMorphism::parse("g", ab, uv_as_plane, &["a", "ab"]).unwrap();
        let hg = h.compose(&g).unwrap();
        let c: Vec<String> = hg.coords().iter().map(|p| p.to_string()).collect();
        assert_eq!(c, vec!["a", "a^2*b"]);
    }
}
