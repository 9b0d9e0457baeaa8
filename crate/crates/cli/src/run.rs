//! Command dispatch and report rendering.
//!
//! Every command writes a line report of `key=value` fields and a TSV
//! table. Numbers are exact rationals; an error bound is written as
//! `q^-e` next to the value. The last report line is `class=...`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use greenberg_core::cylinder_algebra::{measure, measure_interpolated, mult_level_set, CylinderSpec, MeasureOptions, MultValue};
use greenberg_core::greenberg_levels::{
    count_table, enumerate_tower, greenberg_estimate, hensel_lift, render_rational, truncate_set, CountProvenance,
    CountRow, GreenbergEstimate, LevelCache,
};
use greenberg_core::integration_engine::{
    composition_check, cov_check, fitting_check, integrate, serre_series, Chart, CovOptions, Integrand,
    IntegrateOptions, JacobianData, OrdValue, SampleCheck,
};
use greenberg_core::motivic_values::RealizedMeasure;
use greenberg_core::ring_tower::{RingDescriptor, DEFAULT_ENUMERATION_BUDGET};
use greenberg_core::scheme_model::{AffineFormalScheme, FormalMorphism};
use greenberg_core::Error;

use crate::config::{JobConfig, SchemeDef};

/// Failure class, also the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Class {
    Ok,
    /// a check ran and did not hold
    Fail,
    Config,
    Budget,
    Unresolved,
    /// the input is outside what the command supports
    Refused,
}

impl Class {
    pub fn code(self) -> i32 {
        match self {
            Class::Ok => 0,
            Class::Fail => 1,
            Class::Config => 2,
            Class::Budget => 3,
            Class::Unresolved => 4,
            Class::Refused => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Ok => "OK",
            Class::Fail => "FAIL",
            Class::Config => "CONFIG",
            Class::Budget => "BUDGET",
            Class::Unresolved => "UNRESOLVED",
            Class::Refused => "REFUSED",
        }
    }

    pub fn of(e: &Error) -> Class {
        match e {
            Error::Budget { .. } => Class::Budget,
            Error::Unresolved { .. } | Error::Divergent(_) => Class::Unresolved,
            Error::InvalidDescriptor(_)
            | Error::Parse { .. }
            | Error::UnknownVariable { .. }
            | Error::Contract(_) => Class::Config,
            Error::LiftCounterexample(_) => Class::Fail,
            _ => Class::Refused,
        }
    }
}

/// Settings from the command line, overriding the job file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub q: Option<Vec<u64>>,
    pub levels: Option<Vec<u32>>,
    pub precision: Option<i64>,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub class: Class,
    pub report: String,
    pub table: String,
}

struct Job<'a> {
    cfg: &'a JobConfig,
    qs: Vec<u64>,
    levels: Vec<u32>,
    precision: i64,
    budget: u64,
    s: u32,
    report: String,
    table: String,
    class: Class,
}

/// Schemes and morphisms of the job file over one ring.
#[derive(Debug, Clone)]
pub struct World {
    pub schemes: BTreeMap<String, Arc<AffineFormalScheme>>,
    pub morphisms: BTreeMap<String, Arc<FormalMorphism>>,
}

fn build_scheme(d: &SchemeDef, ring: &RingDescriptor) -> Result<AffineFormalScheme, Error> {
    let mk = if d.flat {
        AffineFormalScheme::new_flat
    } else {
        AffineFormalScheme::new
    };
    let mut x = mk(d.name.clone(), ring.clone(), d.vars.clone(), d.gens.clone(), d.dim)?;
    if d.smooth {
        x = x.declare_smooth();
    }
    if d.complete_intersection {
        x = x.declare_complete_intersection()?;
    }
    Ok(x)
}

/// Build the job file's schemes and morphisms over the ring with residue
/// field of order `q`.
pub fn world(cfg: &JobConfig, q: u64) -> Result<World, Error> {
    let ring = if q == cfg.ring.q() {
        cfg.ring.clone()
    } else {
        cfg.ring.with_order(q)?
    };
    let mut schemes = BTreeMap::new();
    for (n, d) in &cfg.schemes {
        schemes.insert(n.clone(), Arc::new(build_scheme(d, &ring)?));
    }
    let mut morphisms = BTreeMap::new();
    for (n, m) in &cfg.morphisms {
        let h = FormalMorphism::new(n.clone(), schemes[&m.source].clone(), schemes[&m.target].clone(), m.coords.clone())?;
        morphisms.insert(n.clone(), Arc::new(h));
    }
    Ok(World { schemes, morphisms })
}

/// `value ± q^-e (provenance)`, where the bound shown is the requested
/// precision when the value is known more precisely.
pub fn render_measure(m: &RealizedMeasure, target: i64) -> String {
    let e = match m.error_exponent {
        Some(k) if k < target => k,
        _ => target,
    };
    format!("{} ± {}^-{} ({})", render_rational(&m.value), m.q, e, m.provenance)
}

impl Job<'_> {
    fn line(&mut self, s: impl AsRef<str>) {
        self.report.push_str(s.as_ref());
        self.report.push('\n');
    }

    fn row(&mut self, cells: &[String]) {
        self.table.push_str(&cells.join("\t"));
        self.table.push('\n');
    }

    fn scheme<'w>(&self, w: &'w World) -> Result<&'w Arc<AffineFormalScheme>, Error> {
        let d = self
            .cfg
            .main_scheme()
            .ok_or_else(|| Error::Contract("the job file defines no scheme".into()))?;
        Ok(&w.schemes[&d.name])
    }

    fn cond_spec(&self, x: &Arc<AffineFormalScheme>) -> Result<CylinderSpec, Error> {
        CylinderSpec::parse(x.clone(), self.cfg.params.cond.as_deref().unwrap_or(""))
    }

    fn integrand(&self, w: &World, x: &Arc<AffineFormalScheme>) -> Result<Integrand, Error> {
        let p = &self.cfg.params;
        let mut a = Integrand::zero(x.clone());
        if let Some(g) = &p.mult {
            a = a.plus(Integrand::mult(x.clone(), g.clone())?)?;
        }
        if let Some(h) = &p.ordjac {
            a = a.plus(Integrand::ord_jac(w.morphisms[h].clone())?)?;
        }
        Ok(a.scaled(p.scale.unwrap_or(1)).offset(p.offset.unwrap_or(0)))
    }

    fn worse(&mut self, c: Class) {
        if c > self.class {
            self.class = c;
        }
    }

    fn count(&mut self, series: bool) -> Result<(), Error> {
        self.row(&["scheme", "q", "n", "N_n", "N_n/q^((n+1)d)", "source"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let x = self.scheme(&w)?.clone();
            let rows: Vec<CountRow> = if series {
                let n_max = *self.levels.last().unwrap();
                let s = serre_series(&x, n_max, self.s, self.budget)?;
                match &s.fit {
                    Some(f) => self.line(format!(
                        "series scheme={} q={q} fit={f} checked_at={}",
                        x.name(),
                        f.checked_level
                    )),
                    None => self.line(format!("series scheme={} q={q} fit=none", x.name())),
                }
                s.rows
            } else {
                count_table(&x, &self.levels, self.s, self.budget)?
            };
            for r in rows {
                let src = match r.provenance {
                    CountProvenance::Enumerated => "enumerated",
                    CountProvenance::SmoothExtrapolation => "smooth-extrapolation",
                };
                let norm = render_rational(&r.normalized);
                self.line(format!(
                    "count scheme={} q={q} n={} N={} normalized={norm} source={src}",
                    x.name(),
                    r.level,
                    r.count
                ));
                self.row(&[x.name().into(), q.to_string(), r.level.to_string(), r.count.to_string(), norm, src.into()]);
            }
        }
        Ok(())
    }

    fn measure(&mut self) -> Result<(), Error> {
        self.row(&["q", "e", "n", "S_n"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let x = self.scheme(&w)?.clone();
            let spec = self.cond_spec(&x)?;
            let cache = LevelCache::new(self.budget);
            let opts = MeasureOptions {
                target: self.precision,
                s: self.s,
                ..MeasureOptions::default()
            };
            let m = measure(&spec, &opts, &cache)?;
            for st in &m.steps {
                for (n, c) in &st.counts {
                    self.row(&[q.to_string(), st.e.to_string(), n.to_string(), c.to_string()]);
                }
            }
            self.line(format!(
                "measure scheme={} q={q} cond={} value={} error={} level={} e={} resolved={}",
                x.name(),
                spec.condition(),
                render_measure(&m.realized, self.precision),
                render_rational(&m.realized.error_bound),
                m.level,
                m.e,
                m.resolved
            ));
            if let Some(note) = &m.note {
                self.line(format!("note={note}"));
            }
            if !m.resolved {
                self.worse(Class::Unresolved);
            }
            if self.cfg.params.interpolate {
                match measure_interpolated(&spec, &opts, &cache)? {
                    Some((v, _)) => self.line(format!("motivic scheme={} q={q} value={v}", x.name())),
                    None => self.line(format!("motivic scheme={} q={q} value=none", x.name())),
                }
            }
        }
        Ok(())
    }

    fn mult(&mut self) -> Result<(), Error> {
        self.row(&["q", "v", "measure", "error"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let x = self.scheme(&w)?.clone();
            let gens = self
                .cfg
                .params
                .mult
                .clone()
                .ok_or_else(|| Error::Contract("`mult` lists no ideal generators".into()))?;
            let base = self.cond_spec(&x)?;
            let cache = LevelCache::new(self.budget);
            let opts = MeasureOptions {
                target: self.precision,
                s: self.s,
                ..MeasureOptions::default()
            };
            for v in self.levels.clone() {
                let spec = base.and(&mult_level_set(&x, &gens, MultValue::Exactly(v))?)?;
                let m = measure(&spec, &opts, &cache)?;
                if !m.resolved {
                    self.worse(Class::Unresolved);
                }
                self.line(format!(
                    "mult scheme={} q={q} v={v} measure={}",
                    x.name(),
                    render_measure(&m.realized, self.precision)
                ));
                self.row(&[
                    q.to_string(),
                    v.to_string(),
                    render_rational(&m.realized.value),
                    render_rational(&m.realized.error_bound),
                ]);
            }
        }
        Ok(())
    }

    fn sample_line(&mut self, what: &str, q: u64, c: &SampleCheck) {
        self.line(format!(
            "{what} q={q} level={} sampled={} checked={} skipped={} counterexamples={} holds={}",
            c.level,
            c.sampled,
            c.checked,
            c.skipped,
            c.counterexamples.len(),
            c.holds()
        ));
        for ce in c.counterexamples.iter().take(5) {
            self.line(format!("counterexample {ce}"));
        }
        if !c.holds() {
            self.worse(Class::Fail);
        }
    }

    fn ordjac(&mut self) -> Result<(), Error> {
        let p = self.cfg.params.clone();
        let name = p
            .morphism
            .clone()
            .or_else(|| self.cfg.morphisms.keys().next().cloned())
            .ok_or_else(|| Error::Contract("the job file defines no morphism".into()))?;
        let level = *self.levels.last().unwrap();
        self.row(&["q", "level", "ord_jac", "points"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let h = w.morphisms[&name].clone();
            let data = JacobianData::new(&h)?;
            let cache = LevelCache::new(self.budget);
            let set = cache.level(h.source(), level)?;
            let mut dist: BTreeMap<OrdValue, u64> = BTreeMap::new();
            let mut unresolved = 0u64;
            for z in set.iter() {
                match data.ord_jac_at(set.ring(), z) {
                    Ok(v) => *dist.entry(v).or_insert(0) += 1,
                    Err(_) => unresolved += 1,
                }
            }
            for (v, c) in &dist {
                self.line(format!("ordjac morphism={name} q={q} level={level} value={v} points={c}"));
                self.row(&[q.to_string(), level.to_string(), v.to_string(), c.to_string()]);
            }
            if unresolved > 0 {
                self.line(format!("ordjac morphism={name} q={q} level={level} value=unresolved points={unresolved}"));
                self.row(&[q.to_string(), level.to_string(), "unresolved".into(), unresolved.to_string()]);
            }
            let samples = p.samples.unwrap_or(300);
            let seed = p.seed.unwrap_or(1);
            let fit = fitting_check(&h, level, samples, seed, &cache)?;
            self.sample_line(&format!("fitting morphism={name}"), q, &fit);
            if let Some(g) = &p.compose {
                let g = w.morphisms[g].clone();
                let c = composition_check(&h, &g, level, samples, seed, &cache)?;
                self.sample_line(&format!("composition outer={name} inner={}", g.name()), q, &c);
            }
        }
        Ok(())
    }

    fn hensel(&mut self) -> Result<(), Error> {
        let k = self.cfg.params.lift.unwrap_or(3);
        self.row(&["q", "n", "points", "lifted", "no_guarantee", "failed"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let x = self.scheme(&w)?.clone();
            let cache = LevelCache::new(self.budget);
            for n in self.levels.clone() {
                let set = cache.level(&x, n)?;
                let top = set.ring().at_level(n + k)?;
                let (mut lifted, mut none, mut failed) = (0u64, 0u64, 0u64);
                for z in set.iter() {
                    match hensel_lift(&x, z, n, n + k) {
                        Ok(l) => {
                            let back: Vec<_> = l.point.iter().map(|&c| top.truncate(c, l.agrees_to)).collect();
                            let orig: Vec<_> = z.iter().map(|&c| set.ring().truncate(c, l.agrees_to)).collect();
                            if x.contains(&top, &l.point) && back == orig {
                                lifted += 1;
                            } else {
                                failed += 1;
                            }
                        }
                        Err(Error::NoLiftGuarantee(_)) => none += 1,
                        Err(Error::LiftCounterexample(_)) => failed += 1,
                        Err(e) => return Err(e),
                    }
                }
                self.line(format!(
                    "hensel scheme={} q={q} n={n} to={} points={} lifted={lifted} no_guarantee={none} failed={failed}",
                    x.name(),
                    n + k,
                    set.len()
                ));
                self.row(&[
                    q.to_string(),
                    n.to_string(),
                    set.len().to_string(),
                    lifted.to_string(),
                    none.to_string(),
                    failed.to_string(),
                ]);
                if failed > 0 {
                    self.worse(Class::Fail);
                }
            }
        }
        Ok(())
    }

    fn greenberg(&mut self) -> Result<(), Error> {
        let n = self.cfg.params.n.unwrap_or(1);
        let horizon = self.cfg.params.horizon.unwrap_or(6);
        self.row(&["q", "n", "k", "|theta_n(X(R_k))|"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let x = self.scheme(&w)?.clone();
            let est = greenberg_estimate(&x, n, self.s, horizon, self.budget)?;
            let sizes = match &est {
                GreenbergEstimate::Found { image_sizes, .. } | GreenbergEstimate::NotFound { image_sizes, .. } => {
                    image_sizes.clone()
                }
            };
            for (i, s) in sizes.iter().enumerate() {
                self.row(&[q.to_string(), n.to_string(), (n + i as u32).to_string(), s.to_string()]);
            }
            match est {
                GreenbergEstimate::Found { m, .. } => {
                    // every point of the stable image has a horizon lift on X
                    let tower = enumerate_tower(&x, horizon, self.s, self.budget)?;
                    let top = &tower[horizon as usize];
                    let image = truncate_set(&tower[m as usize], n)?.image;
                    let lifted = truncate_set(top, n)?.image;
                    let verified = image
                        .iter()
                        .filter(|p| lifted.contains(p))
                        .count();
                    let all_on_x = top.iter().all(|p| x.contains(top.ring(), p));
                    self.line(format!(
                        "greenberg scheme={} q={q} n={n} horizon={horizon} m={m} verified={verified}/{} lifts_on_scheme={all_on_x}",
                        x.name(),
                        image.len()
                    ));
                    if verified != image.len() || !all_on_x {
                        self.worse(Class::Fail);
                    }
                }
                GreenbergEstimate::NotFound { witnesses, .. } => {
                    self.line(format!(
                        "greenberg scheme={} q={q} n={n} horizon={horizon} m=none witnesses={}",
                        x.name(),
                        witnesses.len()
                    ));
                    self.worse(Class::Unresolved);
                }
            }
        }
        Ok(())
    }

    fn integrate(&mut self) -> Result<(), Error> {
        self.row(&["q", "v", "measure", "error", "level"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let x = self.scheme(&w)?.clone();
            let spec = self.cond_spec(&x)?;
            let alpha = self.integrand(&w, &x)?;
            let cache = LevelCache::new(self.budget);
            let opts = IntegrateOptions {
                target: self.precision,
                s: self.s,
                ..IntegrateOptions::default()
            };
            let r = integrate(&spec, &alpha, &opts, &cache)?;
            for f in &r.fibers {
                self.row(&[
                    q.to_string(),
                    f.v.to_string(),
                    render_rational(&f.measure.value),
                    render_rational(&f.measure.error_bound),
                    f.level.to_string(),
                ]);
            }
            self.line(format!(
                "integrate scheme={} q={q} cond={} alpha={alpha} value={} error={} v_max={} tail={} resolved={}",
                x.name(),
                spec.condition(),
                render_measure(&r.realized, self.precision),
                render_rational(&r.realized.error_bound),
                r.v_max,
                render_rational(&r.tail.upper()),
                r.resolved
            ));
            if let Some(note) = &r.note {
                self.line(format!("note={note}"));
            }
            if !r.resolved {
                self.worse(Class::Unresolved);
            }
        }
        Ok(())
    }

    fn cov(&mut self) -> Result<(), Error> {
        self.row(&["q", "chart", "e", "level", "piece", "image", "fibers_ok", "agree_ok", "inside_ok"].map(String::from));
        for q in self.qs.clone() {
            let w = world(self.cfg, q)?;
            let x = self.scheme(&w)?.clone();
            let target = self.cond_spec(&x)?;
            let alpha = self.integrand(&w, &x)?;
            let mut charts = Vec::new();
            for c in &self.cfg.params.charts {
                let h = w.morphisms[&c.morphism].clone();
                let domain = CylinderSpec::parse(h.source().clone(), &c.domain)?;
                charts.push(Chart { map: h, domain });
            }
            if charts.is_empty() {
                return Err(Error::Contract("`charts` lists no morphisms".into()));
            }
            let cache = LevelCache::new(self.budget);
            let opts = CovOptions {
                target: self.precision,
                s: self.s,
                ..CovOptions::default()
            };
            let rep = cov_check(&target, &alpha, &charts, &opts, &cache)?;
            let p = self.precision;
            self.line(format!(
                "cov target={} q={q} cond={} alpha={alpha} lhs={} v_max={}",
                x.name(),
                target.condition(),
                render_measure(&rep.lhs.realized, p),
                rep.lhs.v_max
            ));
            for (name, r) in &rep.rhs {
                self.line(format!(
                    "cov chart={name} q={q} rhs={} v_max={} resolved={}",
                    render_measure(&r.realized, p),
                    r.v_max,
                    r.resolved
                ));
            }
            self.line(format!("cov q={q} rhs_total={}", render_measure(&rep.rhs_total, p)));
            for r in &rep.injectivity {
                self.row(&[
                    q.to_string(),
                    r.chart.clone(),
                    r.e.to_string(),
                    r.level.to_string(),
                    r.piece.to_string(),
                    r.image.to_string(),
                    r.fibers_ok.to_string(),
                    r.agree_ok.to_string(),
                    r.inside_ok.to_string(),
                ]);
            }
            for (name, t) in &rep.tempered {
                match t {
                    Ok(c) => self.line(format!(
                        "tempered chart={name} q={q} C={} calibrated={} final_bound={}",
                        render_rational(&c.constant),
                        c.calibrated,
                        render_rational(&c.final_bound())
                    )),
                    Err(why) => self.line(format!("tempered chart={name} q={q} certificate=none reason={why}")),
                }
            }
            for f in &rep.failures {
                self.line(format!("failure q={q} {f}"));
            }
            self.line(format!(
                "cov q={q} difference={} tolerance={} verdict={}",
                render_rational(&rep.difference),
                render_rational(&rep.tolerance),
                if rep.pass { "PASS" } else { "FAIL" }
            ));
            if !rep.pass {
                self.worse(Class::Fail);
            }
        }
        Ok(())
    }
}

/// Run `command` on a parsed job.
pub fn run(cfg: &JobConfig, command: &str, ov: &Overrides) -> Outcome {
    let p = &cfg.params;
    let mut job = Job {
        cfg,
        qs: ov.q.clone().or_else(|| p.q.clone()).unwrap_or_else(|| vec![cfg.ring.q()]),
        levels: ov.levels.clone().or_else(|| p.levels.clone()).unwrap_or_else(|| (0..=3).collect()),
        precision: ov.precision.or(p.precision).unwrap_or(5),
        budget: ov.budget.or(p.budget).unwrap_or(DEFAULT_ENUMERATION_BUDGET),
        s: p.s.unwrap_or(1),
        report: String::new(),
        table: String::new(),
        class: Class::Ok,
    };
    if job.levels.is_empty() {
        job.levels.push(0);
    }
    let r = match command {
        "count" => job.count(false),
        "series" => job.count(true),
        "measure" => job.measure(),
        "mult" => job.mult(),
        "ordjac" => job.ordjac(),
        "hensel" => job.hensel(),
        "greenberg" => job.greenberg(),
        "integrate" => job.integrate(),
        "cov-check" | "cov" => job.cov(),
        other => Err(Error::Contract(format!("unknown command `{other}`"))),
    };
    if let Err(e) = r {
        job.worse(Class::of(&e));
        let _ = writeln!(job.report, "error={e}");
    }
    let class = job.class;
    let _ = writeln!(job.report, "class={}", class.name());
    Outcome {
        class,
        report: job.report,
        table: job.table,
    }
}
