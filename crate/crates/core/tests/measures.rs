//! Measures, multiplicity level sets, negligibility and counting series
//! against closed forms.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use greenberg_core::cylinder_algebra::{
    measure, mult_level_set, negligible, CylinderSpec, MeasureOptions, MultValue,
};
use greenberg_core::greenberg_levels::LevelCache;
use greenberg_core::integration_engine::{integrate, serre_series, Integrand, IntegrateOptions};
use greenberg_core::motivic_values::Provenance;
use greenberg_core::ring_tower::{RingDescriptor, DEFAULT_ENUMERATION_BUDGET as B};
use greenberg_core::scheme_model::{parse_poly, AffineFormalScheme, Poly};
use greenberg_core::Error;

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn q_inv(q: u64, k: u32) -> BigRational {
    BigRational::one() / BigRational::from_integer(BigInt::from(q).pow(k))
}

fn node(q: u64) -> Arc<AffineFormalScheme> {
    Arc::new(AffineFormalScheme::parse("node", RingDescriptor::equal_char(q, 1), &["x", "y"], &["x*y - pi"], 1).unwrap())
}

fn plane(q: u64) -> Arc<AffineFormalScheme> {
    Arc::new(AffineFormalScheme::affine_space("plane", RingDescriptor::equal_char(q, 1), &["x", "y"]).unwrap())
}

#[test]
fn node_measure() {
    for q in [2u64, 3, 5] {
        let cache = LevelCache::new(B);
        let m = measure(&CylinderSpec::full(node(q)), &MeasureOptions::default(), &cache).unwrap();
        assert!(m.resolved);
        assert!(m.realized.is_exact(), "q={q}: {}", m.realized);
        assert_eq!(m.realized.value, BigRational::from_integer(2.into()) * (BigRational::one() - q_inv(q, 1)));
        assert!(m.level <= 2, "q={q} stabilized at {}", m.level);
        assert_ne!(m.realized.provenance, Provenance::TailBounded);
    }
}

#[test]
fn measure_is_additive() {
    let cache = LevelCache::new(B);
    for (x, a, b) in [
        (plane(2), "ord(x) >= 1", "ord(x - y) == 1 || ord(y) <= 0"),
        (plane(3), "ord(x*y) <= 2", "ord(x + y) >= 1"),
        (node(3), "ord(x) == 0", "ord(x - 1) >= 2"),
        (node(2), "true", "ord(y) >= 1"),
    ] {
        let sa = CylinderSpec::parse(x.clone(), a).unwrap();
        let sb = CylinderSpec::parse(x.clone(), b).unwrap();
        let opts = MeasureOptions::default();
        let whole = measure(&sa, &opts, &cache).unwrap().realized;
        let part1 = measure(&sa.and(&sb).unwrap(), &opts, &cache).unwrap().realized;
        let part2 = measure(&sa.and(&sb.not()).unwrap(), &opts, &cache).unwrap().realized;
        assert!(whole.is_exact() && part1.is_exact() && part2.is_exact());
        assert_eq!(whole.value, &part1.value + &part2.value, "{a} / {b}");
    }
}

#[test]
fn mult_level_sets_of_the_origin() {
    for q in [2u64, 3] {
        let cache = LevelCache::new(B);
        let x = plane(q);
        let gens = vec![Poly::var(x.vars(), 0), Poly::var(x.vars(), 1)];
        for v in 0..=2u32 {
            let spec = mult_level_set(&x, &gens, MultValue::Exactly(v)).unwrap();
            let m = measure(&spec, &MeasureOptions::default(), &cache).unwrap();
            let want = (BigRational::one() - q_inv(q, 2)) * q_inv(q, 2 * v);
            assert_eq!(m.realized.value, want, "q={q} v={v}");
            assert!(m.realized.is_exact());
            let ge = mult_level_set(&x, &gens, MultValue::AtLeast(v)).unwrap();
            assert_eq!(measure(&ge, &MeasureOptions::default(), &cache).unwrap().realized.value, q_inv(q, 2 * v));
        }
        let inf = mult_level_set(&x, &gens, MultValue::Infinite).unwrap();
        assert!(matches!(inf.realize(3, 1, &cache), Err(Error::ProCylinder(_))));
    }
}

#[test]
fn negligible_loci() {
    let cache = LevelCache::new(B);
    let line = Arc::new(AffineFormalScheme::affine_space("line", RingDescriptor::equal_char(2, 1), &["x"]).unwrap());
    let cert = negligible(&line, &[Poly::var(line.vars(), 0)], 0, 3, 1, None, &cache).unwrap();
    assert_eq!(cert.constant, BigRational::one());

    let cusp = Arc::new(
        AffineFormalScheme::parse("cusp", RingDescriptor::equal_char(2, 1), &["x", "y"], &["y^2 - x^3"], 1).unwrap(),
    );
    let z = vec![parse_poly("x", cusp.vars()).unwrap(), parse_poly("y", cusp.vars()).unwrap()];
    let cert = negligible(&cusp, &z, 0, 3, 1, None, &cache).unwrap();
    assert_eq!(cert.rows.len(), 4);
    for r in &cert.rows {
        assert!(r.ratio <= r.bound);
    }
    assert!(cert.constant > BigRational::zero());
    // a constant below the calibrated one is refused
    let tight = &cert.constant / BigRational::from_integer(BigInt::from(64));
    assert!(matches!(
        negligible(&cusp, &z, 0, 3, 1, Some(tight), &cache),
        Err(Error::DimensionInconsistency(_))
    ));
}

#[test]
fn counting_series_fits() {
    for q in [2u64, 3] {
        let s = serre_series(&node(q), 4, 1, B).unwrap();
        let fit = s.fit.unwrap();
        assert_eq!(fit.to_string(), format!("({} - {q}*T)/(1 - {q}*T)", 2 * q - 1));
        for (n, row) in s.rows.iter().enumerate() {
            assert_eq!(fit.coefficient(n), BigRational::from_integer(row.count.clone()));
        }
        let conic = AffineFormalScheme::parse("conic", RingDescriptor::equal_char(q, 1), &["x", "y"], &["y - x^2"], 1)
            .unwrap()
            .declare_smooth();
        let fit = serre_series(&conic, 4, 1, B).unwrap().fit.unwrap();
        assert_eq!(fit.to_string(), format!("{q}/(1 - {q}*T)"));
    }
    let empty = AffineFormalScheme::parse("empty", RingDescriptor::equal_char(3, 1), &["x"], &["x^2 - pi"], 0).unwrap();
    let s = serre_series(&empty, 3, 1, B).unwrap();
    assert!(s.rows.iter().skip(1).all(|r| r.count.is_zero()));
    let nothing = AffineFormalScheme::parse("nothing", RingDescriptor::equal_char(3, 1), &["x"], &["1"], 0).unwrap();
    let s = serre_series(&nothing, 3, 1, B).unwrap();
    assert!(s.rows.iter().all(|r| r.count.is_zero()));
    assert_eq!(s.fit.unwrap().to_string(), "0");
}

#[test]
fn smooth_volume_is_the_residue_count() {
    let cache = LevelCache::new(B);
    let circle = Arc::new(
        AffineFormalScheme::parse("circle", RingDescriptor::equal_char(3, 1), &["x", "y"], &["x^2 + y^2 - 1"], 1)
            .unwrap()
            .declare_smooth(),
    );
    let r = integrate(&CylinderSpec::full(circle.clone()), &Integrand::zero(circle), &IntegrateOptions::default(), &cache)
        .unwrap();
    assert!(r.realized.is_exact());
    assert_eq!(r.realized.value, rat(4, 3));
}

#[test]
fn restriction_shrinks_fibers() {
    let cache = LevelCache::new(B);
    let x = plane(2);
    let alpha = Integrand::mult(x.clone(), vec![parse_poly("x", x.vars()).unwrap(), parse_poly("y", x.vars()).unwrap()])
        .unwrap();
    let big = CylinderSpec::parse(x.clone(), "ord(x) >= 0").unwrap();
    let small = CylinderSpec::parse(x.clone(), "ord(x - y) >= 1").unwrap();
    let opts = IntegrateOptions::default();
    let rb = integrate(&big, &alpha, &opts, &cache).unwrap();
    let rs = integrate(&small, &alpha, &opts, &cache).unwrap();
    for (fs, fb) in rs.fibers.iter().zip(&rb.fibers) {
        assert_eq!(fs.v, fb.v);
        assert!(fs.measure.value <= fb.measure.value);
    }
    assert!(rs.realized.value <= rb.realized.value);
}
