//! The finite level sets `X(R_n)` of a formal scheme, their truncation maps,
//! point counts, Hensel lifting and empirical Greenberg functions.

mod hensel;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Reduced;
use crate::ring_tower::{RingElem, TruncatedRing};
use crate::scheme_model::{AffineFormalScheme, CompiledPoly, FormalMorphism};

pub use hensel::{hensel_lift, hensel_lift_family, hensel_lift_morphism, newton_solve, HenselLift};

/// The points of `X(R_n)` for one residue field, sorted lexicographically by
/// the digit indices of their coordinates.
#[derive(Debug, Clone)]
pub struct LevelPointSet {
    scheme: Arc<AffineFormalScheme>,
    ring: TruncatedRing,
    width: usize,
    data: Vec<RingElem>,
    /// Whether the empty tuple is a point, for schemes without variables.
    nullary: bool,
}

impl LevelPointSet {
    /// Build from arbitrary points of `R_n^N`: sorts, removes duplicates and
    /// checks every point against the generators.
    pub fn from_points(
        scheme: Arc<AffineFormalScheme>,
        ring: TruncatedRing,
        points: impl IntoIterator<Item = Vec<RingElem>>,
    ) -> Result<Self> {
        let width = scheme.nvars();
        let mut pts: Vec<Vec<RingElem>> = points.into_iter().collect();
        let gens = scheme.compile_generators(&ring);
        for p in &pts {
            if p.len() != width || p.iter().any(|&x| !ring.contains(x)) {
                return Err(Error::Contract(format!("{p:?} is not a point of R_{}^{width}", ring.level())));
            }
            if gens.iter().any(|g| !g.eval(p).is_zero()) {
                return Err(Error::Contract(format!(
                    "{p:?} does not satisfy the equations of {}",
                    scheme.name()
                )));
            }
        }
        pts.sort_unstable();
        pts.dedup();
        let nullary = width == 0 && !pts.is_empty();
        let mut set = Self::from_sorted(scheme, ring, pts.concat());
        set.nullary = nullary;
        Ok(set)
    }

    /// `data` must already be sorted, duplicate free and on the scheme.
    pub(crate) fn from_sorted(scheme: Arc<AffineFormalScheme>, ring: TruncatedRing, data: Vec<RingElem>) -> Self {
        LevelPointSet {
            width: scheme.nvars(),
            scheme,
            ring,
            data,
            nullary: false,
        }
    }

    pub fn scheme(&self) -> &Arc<AffineFormalScheme> {
        &self.scheme
    }

    pub fn ring(&self) -> &TruncatedRing {
        &self.ring
    }

    pub fn level(&self) -> u32 {
        self.ring.level()
    }

    pub fn q(&self) -> u64 {
        self.ring.q()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            return usize::from(self.nullary);
        }
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[RingElem] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[RingElem]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn position(&self, point: &[RingElem]) -> Option<usize> {
        let mut lo = 0;
        let mut hi = self.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.point(mid).cmp(point) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, point: &[RingElem]) -> bool {
        self.position(point).is_some()
    }

    pub fn to_vecs(&self) -> Vec<Vec<RingElem>> {
        self.iter().map(<[RingElem]>::to_vec).collect()
    }

    /// Sub-list of points selected by index, as a new set.
    pub fn select(&self, indices: &[usize]) -> LevelPointSet {
        let mut data = Vec::with_capacity(indices.len() * self.width);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        let mut set = Self::from_sorted(self.scheme.clone(), self.ring.clone(), data);
        set.nullary = self.nullary && !indices.is_empty();
        set
    }

    pub fn render_point(&self, i: usize) -> String {
        let coords: Vec<String> = self.point(i).iter().map(|&x| self.ring.render(x)).collect();
        format!("({})", coords.join(", "))
    }
}

/// Image of a truncation map with the size of every fiber.
#[derive(Debug, Clone)]
pub struct TruncationImage {
    pub image: LevelPointSet,
    /// `fiber_sizes[i]` is the number of source points above `image.point(i)`.
    pub fiber_sizes: Vec<u64>,
}

impl TruncationImage {
    pub fn min_fiber(&self) -> u64 {
        self.fiber_sizes.iter().copied().min().unwrap_or(0)
    }

    pub fn max_fiber(&self) -> u64 {
        self.fiber_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.min_fiber() == self.max_fiber()
    }
}

/// Truncate every point to level `n`.
pub fn truncate_set(set: &LevelPointSet, n: u32) -> Result<TruncationImage> {
    if n > set.level() {
        return Err(Error::Contract(format!(
            "cannot truncate level {} points to level {n}",
            set.level()
        )));
    }
    let ring = set.ring.at_level(n)?;
    let w = set.width;
    let mut counts: BTreeMap<Vec<RingElem>, u64> = BTreeMap::new();
    for p in set.iter() {
        let t: Vec<RingElem> = p.iter().map(|&x| set.ring.truncate(x, n)).collect();
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut data = Vec::with_capacity(counts.len() * w);
    let mut fiber_sizes = Vec::with_capacity(counts.len());
    for (p, c) in counts {
        data.extend(p);
        fiber_sizes.push(c);
    }
    let mut image = LevelPointSet::from_sorted(set.scheme.clone(), ring, data);
    image.nullary = set.nullary;
    if set.nullary {
        fiber_sizes = vec![1];
    }
    Ok(TruncationImage {
        image,
        fiber_sizes,
    })
}

/// Base change of `X` to the residue field extension of degree `s`.
pub fn extend_scheme(x: &AffineFormalScheme, s: u32) -> Result<AffineFormalScheme> {
    if s == 1 {
        return Ok(x.clone());
    }
    if s == 0 || s > 4 {
        return Err(Error::Unsupported(format!("residue field extensions of degree {s}; only 1..=4")));
    }
    x.with_descriptor(x.descriptor().extend(s))
}

/// Data needed to lift points with a given reduction modulo `pi`.
struct LocalSolver {
    reduced: Reduced,
    kernel: Vec<Vec<u64>>,
}

struct Lifter {
    scheme: Arc<AffineFormalScheme>,
    jac0: Vec<Vec<CompiledPoly>>,
    ring0: TruncatedRing,
    solvers: Mutex<HashMap<Vec<RingElem>, Arc<LocalSolver>>>,
}

impl Lifter {
    fn new(scheme: Arc<AffineFormalScheme>) -> Result<Self> {
        let ring0 = TruncatedRing::new(scheme.descriptor(), 0)?;
        let jac0 = scheme.compile_jacobian(&ring0);
        Ok(Lifter {
            scheme,
            jac0,
            ring0,
            solvers: Mutex::new(HashMap::new()),
        })
    }

    fn solver(&self, residue: &[RingElem]) -> Arc<LocalSolver> {
        if let Some(s) = self.solvers.lock().unwrap().get(residue) {
            return s.clone();
        }
        let k = self.ring0.residue_field();
        let a: Vec<Vec<u64>> = self
            .jac0
            .iter()
            .map(|row| row.iter().map(|p| p.eval(residue).index()).collect())
            .collect();
        let reduced = Reduced::new(k, &a, self.scheme.nvars());
        let kernel = reduced.kernel_elements(k);
        let s = Arc::new(LocalSolver { reduced, kernel });
        self.solvers
            .lock()
            .unwrap()
            .insert(residue.to_vec(), s.clone());
        s
    }

    /// The particular solution of the linear lifting system for a point of
    /// level `k - 1` viewed in `R_k`, or `None` when it does not lift.
    fn step(&self, ring_k: &TruncatedRing, gens_k: &[CompiledPoly], point: &[RingElem]) -> Option<(Vec<u64>, Arc<LocalSolver>)> {
        let k = ring_k.level();
        let residue: Vec<RingElem> = point.iter().map(|&x| ring_k.truncate(x, 0)).collect();
        let solver = self.solver(&residue);
        let field = ring_k.residue_field();
        let rhs: Vec<u64> = gens_k
            .iter()
            .map(|g| field.neg(ring_k.digit(g.eval(point), k)))
            .collect();
        let part = solver.reduced.solve(field, &rhs)?;
        Some((part, solver))
    }

    fn lift_count(&self, ring_k: &TruncatedRing, gens_k: &[CompiledPoly], point: &[RingElem]) -> u64 {
        match self.step(ring_k, gens_k, point) {
            Some((_, s)) => s.kernel.len() as u64,
            None => 0,
        }
    }

    fn lifts(&self, ring_k: &TruncatedRing, gens_k: &[CompiledPoly], point: &[RingElem], out: &mut Vec<RingElem>) {
        let Some((part, solver)) = self.step(ring_k, gens_k, point) else {
            return;
        };
        let field = ring_k.residue_field();
        let k = ring_k.level();
        for kv in &solver.kernel {
            for (i, &x) in point.iter().enumerate() {
                out.push(ring_k.with_digit(x, k, field.add(part[i], kv[i])));
            }
        }
    }
}

fn sort_points(width: usize, data: Vec<RingElem>) -> Vec<RingElem> {
    if width <= 1 {
        let mut d = data;
        d.par_sort_unstable();
        return d;
    }
    let mut rows: Vec<&[RingElem]> = data.chunks_exact(width).collect();
    rows.par_sort_unstable();
    rows.concat()
}

fn level0(scheme: &Arc<AffineFormalScheme>, budget: u64) -> Result<LevelPointSet> {
    let ring = TruncatedRing::new(scheme.descriptor(), 0)?;
    let n = scheme.nvars();
    let q = ring.q();
    let space = q
        .checked_pow(n as u32)
        .filter(|&s| s <= budget)
        .ok_or_else(|| {
            Error::budget(
                format!("level-0 search over F_{q}^{n} for {}", scheme.name()),
                budget,
                q.saturating_pow(n as u32),
            )
        })?;
    let gens = scheme.compile_generators(&ring);
    let data: Vec<RingElem> = (0..space)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let mut pt = vec![RingElem(0); n];
            let mut t = idx;
            for c in pt.iter_mut().rev() {
                *c = RingElem(t % q);
                t /= q;
            }
            let ok = gens.iter().all(|g| g.eval(&pt).is_zero());
            ok.then_some(pt).into_iter().flatten()
        })
        .collect();
    let mut set = LevelPointSet::from_sorted(scheme.clone(), ring, data);
    if n == 0 {
        set.data.clear();
        set.nullary = gens.iter().all(|g| g.eval(&[]).is_zero());
    }
    Ok(set)
}

fn nullary_alive(set: &LevelPointSet, level: u32) -> Result<bool> {
    let ring = set.ring.at_level(level)?;
    Ok(set.nullary && set.scheme.compile_generators(&ring).iter().all(|g| g.eval(&[]).is_zero()))
}

fn lift_level(lifter: &Lifter, set: &LevelPointSet, budget: u64) -> Result<LevelPointSet> {
    let k = set.level() + 1;
    let ring_k = set.ring.at_level(k)?;
    let gens_k = lifter.scheme.compile_generators(&ring_k);
    let w = set.width;
    if w == 0 {
        let alive = nullary_alive(set, k)?;
        let mut out = LevelPointSet::from_sorted(set.scheme.clone(), ring_k, Vec::new());
        out.nullary = alive;
        return Ok(out);
    }
    let produced = AtomicU64::new(0);
    let aborted = AtomicBool::new(false);
    let chunks: Vec<Vec<RingElem>> = set
        .data
        .par_chunks(w * 64)
        .map(|chunk| {
            let mut out = Vec::new();
            if aborted.load(Ordering::Relaxed) {
                return out;
            }
            for p in chunk.chunks_exact(w) {
                lifter.lifts(&ring_k, &gens_k, p, &mut out);
            }
            let total = produced.fetch_add((out.len() / w) as u64, Ordering::Relaxed) + (out.len() / w) as u64;
            if total > budget {
                aborted.store(true, Ordering::Relaxed);
            }
            out
        })
        .collect();
    if aborted.load(Ordering::Relaxed) {
        let required: u64 = set
            .data
            .par_chunks_exact(w)
            .map(|p| lifter.lift_count(&ring_k, &gens_k, p))
            .sum();
        return Err(budget_error(&lifter.scheme, k, budget, required));
    }
    let data = sort_points(w, chunks.concat());
    Ok(LevelPointSet::from_sorted(set.scheme.clone(), ring_k, data))
}

fn budget_error(scheme: &AffineFormalScheme, level: u32, budget: u64, required: u64) -> Error {
    let hint = if scheme.is_declared_smooth() {
        "; the scheme is declared smooth, so counts can be extrapolated as N_0 q^{nd}".to_string()
    } else {
        "; raise --budget or lower the level".to_string()
    };
    Error::Budget {
        what: format!("level {level} of {}", scheme.name()),
        budget,
        required,
        hint,
    }
}

/// All levels `0..=n` of `X` over the extension of degree `s`.
pub fn enumerate_tower(x: &AffineFormalScheme, n: u32, s: u32, budget: u64) -> Result<Vec<LevelPointSet>> {
    let scheme = Arc::new(extend_scheme(x, s)?);
    let lifter = Lifter::new(scheme.clone())?;
    let mut tower = vec![level0(&scheme, budget)?];
    for _ in 0..n {
        let next = lift_level(&lifter, tower.last().unwrap(), budget)?;
        tower.push(next);
    }
    Ok(tower)
}

/// `X(R_n)` over the residue field extension of degree `s`.
pub fn enumerate_level(x: &AffineFormalScheme, n: u32, s: u32, budget: u64) -> Result<LevelPointSet> {
    Ok(enumerate_tower(x, n, s, budget)?.pop().unwrap())
}

/// Lift an existing level set one or more levels up.
pub fn extend_level_set(set: &LevelPointSet, n: u32, budget: u64) -> Result<LevelPointSet> {
    if n < set.level() {
        return Err(Error::Contract(format!("level {n} is below {}", set.level())));
    }
    let lifter = Lifter::new(set.scheme.clone())?;
    let mut cur = set.clone();
    while cur.level() < n {
        cur = lift_level(&lifter, &cur, budget)?;
    }
    Ok(cur)
}

/// Level sets shared between computations, keyed by scheme and level, with
/// a common enumeration budget.
#[derive(Debug)]
pub struct LevelCache {
    budget: u64,
    sets: Mutex<HashMap<(String, u32), Arc<LevelPointSet>>>,
}

impl LevelCache {
    pub fn new(budget: u64) -> Self {
        LevelCache {
            budget,
            sets: Mutex::new(HashMap::new()),
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// `X(R_n)` for `X` exactly as given (already base changed if needed).
    pub fn level(&self, x: &AffineFormalScheme, n: u32) -> Result<Arc<LevelPointSet>> {
        let key = x.fingerprint();
        let start = {
            let sets = self.sets.lock().unwrap();
            if let Some(s) = sets.get(&(key.clone(), n)) {
                return Ok(s.clone());
            }
            (0..n).rev().find_map(|k| sets.get(&(key.clone(), k)).cloned())
        };
        let mut cur = match start {
            Some(s) => s,
            None => {
                let s = Arc::new(level0(&Arc::new(x.clone()), self.budget)?);
                self.sets.lock().unwrap().insert((key.clone(), 0), s.clone());
                s
            }
        };
        if cur.level() == n {
            return Ok(cur);
        }
        let lifter = Lifter::new(cur.scheme.clone())?;
        while cur.level() < n {
            let next = Arc::new(lift_level(&lifter, &cur, self.budget)?);
            self.sets
                .lock()
                .unwrap()
                .insert((key.clone(), next.level()), next.clone());
            cur = next;
        }
        Ok(cur)
    }

    /// `X(R_n)` over the residue field extension of degree `s`.
    pub fn level_ext(&self, x: &AffineFormalScheme, n: u32, s: u32) -> Result<Arc<LevelPointSet>> {
        self.level(&extend_scheme(x, s)?, n)
    }
}

/// `|X(R_n)|` over the extension of degree `s`. Level `n` itself is never
/// materialized: only level `n - 1` and the number of lifts of each point.
pub fn count_level(x: &AffineFormalScheme, n: u32, s: u32, budget: u64) -> Result<u64> {
    if n == 0 {
        return Ok(enumerate_level(x, 0, s, budget)?.len() as u64);
    }
    let below = enumerate_level(x, n - 1, s, budget)?;
    count_above(&below)
}

fn count_above(below: &LevelPointSet) -> Result<u64> {
    if below.width == 0 {
        return Ok(u64::from(nullary_alive(below, below.level() + 1)?));
    }
    let lifter = Lifter::new(below.scheme.clone())?;
    let ring_k = below.ring.at_level(below.level() + 1)?;
    let gens_k = lifter.scheme.compile_generators(&ring_k);
    Ok(below
        .data
        .par_chunks_exact(below.width)
        .map(|p| lifter.lift_count(&ring_k, &gens_k, p))
        .sum())
}

/// How a count was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountProvenance {
    Enumerated,
    /// `N_0 q^{nd}` for a declared smooth scheme.
    SmoothExtrapolation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub level: u32,
    pub q: u64,
    pub count: BigInt,
    /// `N_n / q^{(n+1)d}`
    pub normalized: BigRational,
    pub provenance: CountProvenance,
}

/// Counts for each requested level; declared smooth schemes fall back to
/// extrapolation from level 0 when enumeration exceeds the budget.
pub fn count_table(x: &AffineFormalScheme, levels: &[u32], s: u32, budget: u64) -> Result<Vec<CountRow>> {
    let scheme = extend_scheme(x, s)?;
    let q = scheme.descriptor().q();
    let d = scheme.dim() as u32;
    let mut rows = Vec::with_capacity(levels.len());
    let mut cache: Option<Vec<LevelPointSet>> = None;
    let mut n0: Option<u64> = None;
    for &n in levels {
        let enumerated = (|| -> Result<u64> {
            if n == 0 {
                return Ok(enumerate_level(&scheme, 0, 1, budget)?.len() as u64);
            }
            let have = cache.as_ref().map_or(0, |t| t.len() as u32);
            if have < n {
                let base = match cache.take() {
                    Some(t) => t,
                    None => vec![level0(&Arc::new(scheme.clone()), budget)?],
                };
                let mut tower = base;
                let lifter = Lifter::new(tower[0].scheme.clone())?;
                while (tower.len() as u32) < n {
                    let next = lift_level(&lifter, tower.last().unwrap(), budget)?;
                    tower.push(next);
                }
                cache = Some(tower);
            }
            count_above(&cache.as_ref().unwrap()[n as usize - 1])
        })();
        let (count, provenance) = match enumerated {
            Ok(c) => (BigInt::from(c), CountProvenance::Enumerated),
            Err(e @ Error::Budget { .. }) => {
                if !scheme.is_declared_smooth() {
                    return Err(e);
                }
                let base = match n0 {
                    Some(v) => v,
                    None => enumerate_level(&scheme, 0, 1, budget)?.len() as u64,
                };
                n0 = Some(base);
                (
                    BigInt::from(base) * BigInt::from(q).pow(n * d),
                    CountProvenance::SmoothExtrapolation,
                )
            }
            Err(e) => return Err(e),
        };
        let denom = BigInt::from(q).pow((n + 1) * d);
        rows.push(CountRow {
            level: n,
            q,
            normalized: BigRational::new(count.clone(), denom),
            count,
            provenance,
        });
    }
    Ok(rows)
}

pub fn render_rational(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// TSV with header `level q N_n N_n/q^{(n+1)d}`; extrapolated counts are
/// marked in a trailing column.
pub fn render_count_table(rows: &[CountRow]) -> String {
    let mut out = String::from("level\tq\tN_n\tN_n/q^{(n+1)d}\tsource\n");
    for r in rows {
        let src = match r.provenance {
            CountProvenance::Enumerated => "enumerated",
            CountProvenance::SmoothExtrapolation => "smooth-extrapolation",
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.level,
            r.q,
            r.count,
            render_rational(&r.normalized),
            src
        );
    }
    out
}

/// For a declared smooth scheme every fiber of `X(R_{n+1}) -> X(R_n)` must
/// have `q^d` points; returns the first level where this fails.
pub fn check_smooth_dimension(x: &AffineFormalScheme, max_level: u32, s: u32, budget: u64) -> Result<()> {
    let tower = enumerate_tower(x, max_level, s, budget)?;
    let q = tower[0].q();
    let expect = q.pow(x.dim() as u32);
    for pair in tower.windows(2) {
        let img = truncate_set(&pair[1], pair[0].level())?;
        let lifts_all = img.image.len() == pair[0].len();
        if !lifts_all || img.min_fiber() != expect || img.max_fiber() != expect {
            return Err(Error::DimensionInconsistency(format!(
                "{}: fibers of level {} -> {} have {}..{} points (and {} of {} points lift), expected q^d = {expect}",
                x.name(),
                pair[1].level(),
                pair[0].level(),
                img.min_fiber(),
                img.max_fiber(),
                img.image.len(),
                pair[0].len()
            )));
        }
    }
    Ok(())
}

/// A finite piece of an arc: compatible points at increasing levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcApproximation {
    levels: Vec<(u32, Vec<RingElem>)>,
}

impl ArcApproximation {
    pub fn new(ring_top: &TruncatedRing, levels: Vec<(u32, Vec<RingElem>)>) -> Result<Self> {
        for pair in levels.windows(2) {
            let (lo, ref a) = pair[0];
            let (hi, ref b) = pair[1];
            if lo >= hi || a.len() != b.len() {
                return Err(Error::Contract("arc levels must increase with equal widths".into()));
            }
            if b.iter().zip(a).any(|(&y, &x)| ring_top.truncate(y, lo) != x) {
                return Err(Error::Contract(format!(
                    "the level {hi} entry does not truncate to the level {lo} entry"
                )));
            }
        }
        Ok(ArcApproximation { levels })
    }

    /// All truncations of a single point.
    pub fn from_point(ring: &TruncatedRing, point: &[RingElem]) -> Self {
        let levels = (0..=ring.level())
            .map(|n| (n, point.iter().map(|&x| ring.truncate(x, n)).collect()))
            .collect();
        ArcApproximation { levels }
    }

    pub fn levels(&self) -> &[(u32, Vec<RingElem>)] {
        &self.levels
    }

    pub fn top(&self) -> Option<&(u32, Vec<RingElem>)> {
        self.levels.last()
    }
}

/// Outcome of [`greenberg_estimate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GreenbergEstimate {
    /// Every level-`n` truncation of a level-`m` point lifts to the horizon.
    Found {
        m: u32,
        /// `|θ_n(X(R_k))|` for `k = n..=H`
        image_sizes: Vec<u64>,
    },
    /// For each `m` in `n..H`, a level-`n` point that is a truncation of a
    /// level-`m` point but of no horizon point.
    NotFound {
        witnesses: Vec<(u32, Vec<RingElem>)>,
        image_sizes: Vec<u64>,
    },
}

/// Empirical Greenberg function: the least `m < H` with
/// `θ_n(X(R_m)) = θ_n(X(R_H))`.
pub fn greenberg_estimate(x: &AffineFormalScheme, n: u32, s: u32, horizon: u32, budget: u64) -> Result<GreenbergEstimate> {
    if horizon <= n {
        return Err(Error::Contract(format!("horizon {horizon} must exceed the level {n}")));
    }
    let tower = enumerate_tower(x, horizon, s, budget)?;
    let images: Vec<LevelPointSet> = tower[n as usize..]
        .iter()
        .map(|set| truncate_set(set, n).map(|t| t.image))
        .collect::<Result<_>>()?;
    let image_sizes: Vec<u64> = images.iter().map(|i| i.len() as u64).collect();
    let top = images.last().unwrap();
    let mut witnesses = Vec::new();
    for (i, img) in images[..images.len() - 1].iter().enumerate() {
        let m = n + i as u32;
        match img.iter().find(|p| !top.contains(p)) {
            None => {
                return Ok(GreenbergEstimate::Found { m, image_sizes });
            }
            Some(w) => witnesses.push((m, w.to_vec())),
        }
    }
    Ok(GreenbergEstimate::NotFound {
        witnesses,
        image_sizes,
    })
}

impl FormalMorphism {
    /// Check that the target equations pulled back along the coordinates
    /// vanish on every enumerated point of the source at the given levels.
    pub fn check_compatibility(&self, levels: &[u32], budget: u64) -> Result<()> {
        let pulled = self.compatibility_polys();
        for &n in levels {
            let set = enumerate_level(self.source(), n, 1, budget)?;
            let compiled: Vec<CompiledPoly> = pulled.iter().map(|p| p.compile(set.ring())).collect();
            for (i, pt) in set.iter().enumerate() {
                if let Some(j) = compiled.iter().position(|c| !c.eval(pt).is_zero()) {
                    return Err(Error::Contract(format!(
                        "{}: point {} of {} at level {n} maps outside {} (equation `{}`)",
                        self.name(),
                        set.render_point(i),
                        self.source().name(),
                        self.target().name(),
                        self.target().generators()[j]
                    )));
                }
            }
        }
        Ok(())
    }
}
