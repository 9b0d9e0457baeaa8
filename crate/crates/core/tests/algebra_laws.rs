//! Randomized algebraic laws: ring arithmetic, reduction, valuations,
//! motivic values and the boolean algebra of cylinders.

use std::sync::Arc;

use num_bigint::BigInt;
use proptest::prelude::*;

use greenberg_core::cylinder_algebra::{Cmp, Condition, CylinderSpec};
use greenberg_core::greenberg_levels::LevelCache;
use greenberg_core::motivic_values::{MotivicValue, Precision};
use greenberg_core::ring_tower::{RingDescriptor, RingElem, TruncatedRing, DEFAULT_ENUMERATION_BUDGET as B};
use greenberg_core::scheme_model::{parse_poly, AffineFormalScheme};

fn descriptor() -> impl Strategy<Value = RingDescriptor> {
    prop_oneof![
        Just(RingDescriptor::equal_char(2, 1)),
        Just(RingDescriptor::equal_char(3, 1)),
        Just(RingDescriptor::equal_char(2, 2)),
        Just(RingDescriptor::p_adic(2, 1)),
        Just(RingDescriptor::p_adic(3, 1)),
        Just(RingDescriptor::p_adic(5, 1)),
        Just(RingDescriptor::p_adic(2, 2)),
    ]
}

fn ring_and_elems(k: usize) -> impl Strategy<Value = (TruncatedRing, Vec<RingElem>)> {
    (descriptor(), 0u32..4).prop_flat_map(move |(d, n)| {
        let ring = TruncatedRing::new(&d, n).unwrap();
        let card = ring.cardinality();
        (Just(ring), prop::collection::vec((0..card).prop_map(RingElem), k))
    })
}

fn motivic() -> impl Strategy<Value = MotivicValue> {
    (
        prop::collection::vec((-6i64..6, -5i64..6), 0..5),
        prop_oneof![Just(None), (-3i64..8).prop_map(Some)],
    )
        .prop_map(|(terms, m)| {
            let p = m.map_or(Precision::Exact, Precision::Finite);
            MotivicValue::from_terms(terms.into_iter().map(|(j, a)| (j, BigInt::from(a))), p)
        })
}

fn exact_motivic() -> impl Strategy<Value = MotivicValue> {
    prop::collection::vec((-4i64..4, -5i64..6), 0..4)
        .prop_map(|t| MotivicValue::from_terms(t.into_iter().map(|(j, a)| (j, BigInt::from(a))), Precision::Exact))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn ring_axioms((r, v) in ring_and_elems(3)) {
        let (a, b, c) = (v[0], v[1], v[2]);
        prop_assert_eq!(r.add(a, b), r.add(b, a));
        prop_assert_eq!(r.mul(a, b), r.mul(b, a));
        prop_assert_eq!(r.add(r.add(a, b), c), r.add(a, r.add(b, c)));
        prop_assert_eq!(r.mul(r.mul(a, b), c), r.mul(a, r.mul(b, c)));
        prop_assert_eq!(r.mul(a, r.add(b, c)), r.add(r.mul(a, b), r.mul(a, c)));
        prop_assert_eq!(r.add(a, r.neg(a)), r.zero());
        prop_assert_eq!(r.mul(a, r.one()), a);
        if let Some(i) = r.inv(a) {
            prop_assert_eq!(r.mul(a, i), r.one());
        }
    }

    #[test]
    fn reduction_is_a_homomorphism((r, v) in ring_and_elems(2), k in 0u32..4) {
        let k = k.min(r.level());
        let s = r.at_level(k).unwrap();
        let red = |x| r.reduce(x, &s).unwrap();
        let (a, b) = (v[0], v[1]);
        prop_assert_eq!(red(r.add(a, b)), s.add(red(a), red(b)));
        prop_assert_eq!(red(r.mul(a, b)), s.mul(red(a), red(b)));
        prop_assert_eq!(red(r.one()), s.one());
    }

    #[test]
    fn evaluation_commutes_with_reduction((r, v) in ring_and_elems(2), k in 0u32..4) {
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let f = parse_poly("x^3*y - 2*x*y^2 + pi*y + 1", &vars).unwrap();
        let k = k.min(r.level());
        let s = r.at_level(k).unwrap();
        let red: Vec<RingElem> = v.iter().map(|&x| r.reduce(x, &s).unwrap()).collect();
        prop_assert_eq!(r.reduce(f.eval(&r, &v), &s).unwrap(), f.eval(&s, &red));
    }

    #[test]
    fn valuation_laws((r, v) in ring_and_elems(2)) {
        let (a, b) = (v[0], v[1]);
        let inf = r.level() + 1;
        let val = |x| r.val(x).unwrap_or(inf);
        prop_assert!(val(r.add(a, b)) >= val(a).min(val(b)));
        prop_assert_eq!(val(r.mul(a, b)), (val(a) + val(b)).min(inf));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ultrametric_norm(a in motivic(), b in motivic()) {
        let rank = |v: &MotivicValue| v.norm().log2_upper();
        let s = a.add(&b);
        match (rank(&a), rank(&b), rank(&s)) {
            (_, _, None) => {}
            (None, None, Some(_)) => prop_assert!(false, "sum of zeros is nonzero"),
            (x, y, Some(z)) => prop_assert!(z <= x.max(y).unwrap()),
        }
    }

    #[test]
    fn precision_is_monotone(a in motivic(), b in motivic(), m in -3i64..8) {
        prop_assert_eq!(a.add(&b).precision(), a.precision().min(b.precision()));
        // coarsening an input never sharpens the output
        let coarse = a.clone().with_precision(Precision::Finite(m));
        let rank = |p: Precision| p.finite().unwrap_or(i64::MAX);
        prop_assert!(rank(coarse.add(&b).precision()) <= rank(a.add(&b).precision()));
        prop_assert!(rank(coarse.mul(&b).precision()) <= rank(a.mul(&b).precision()));
        prop_assert!(rank(coarse.precision()) <= rank(a.precision()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn specialization_is_a_homomorphism(a in exact_motivic(), b in exact_motivic(), qi in 0usize..4) {
        let q = [2u64, 3, 4, 5][qi];
        let sa = a.specialize(q).unwrap().value;
        let sb = b.specialize(q).unwrap().value;
        prop_assert_eq!(a.add(&b).specialize(q).unwrap().value, &sa + &sb);
        prop_assert_eq!(a.mul(&b).specialize(q).unwrap().value, &sa * &sb);
        prop_assert!(a.add(&b).specialize(q).unwrap().is_exact());
    }

}

// cylinder conditions on the plane over F_2[[t]]

const POLYS: [&str; 5] = ["x", "y", "x + y", "x*y - pi", "x^2 + y"];

fn condition() -> impl Strategy<Value = Condition> {
    let vars: Vec<String> = vec!["x".into(), "y".into()];
    let leaf = (0..POLYS.len(), 0..3usize, 0u32..3).prop_map(move |(i, c, k)| {
        let cmp = [Cmp::Eq, Cmp::Ge, Cmp::Le][c];
        Condition::atom(parse_poly(POLYS[i], &vars).unwrap(), cmp, k)
    });
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|c| Condition::Not(Box::new(c))),
            prop::collection::vec(inner.clone(), 2).prop_map(Condition::And),
            prop::collection::vec(inner, 2).prop_map(Condition::Or),
        ]
    })
}

fn plane() -> Arc<AffineFormalScheme> {
    Arc::new(AffineFormalScheme::affine_space("plane", RingDescriptor::equal_char(2, 1), &["x", "y"]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn boolean_laws(a in condition(), b in condition(), c in condition()) {
        let x = plane();
        let cache = LevelCache::new(B);
        let spec = |c: &Condition| CylinderSpec::new(x.clone(), c.clone()).unwrap();
        let (sa, sb, sc) = (spec(&a), spec(&b), spec(&c));
        let n = sa.rank().max(sb.rank()).max(sc.rank());
        let real = |s: &CylinderSpec| s.realize(n, 1, &cache).unwrap();
        let same = |l: &CylinderSpec, r: &CylinderSpec| real(l).same_points(&real(r), &cache).unwrap();

        // distributivity and De Morgan, computed from the specs
        let lhs = sa.and(&sb.or(&sc).unwrap()).unwrap();
        let rhs = sa.and(&sb).unwrap().or(&sa.and(&sc).unwrap()).unwrap();
        prop_assert!(same(&lhs, &rhs));
        prop_assert!(same(&sa.and(&sb).unwrap().not(), &sa.not().or(&sb.not()).unwrap()));
        prop_assert!(same(&sa.or(&sb).unwrap().not(), &sa.not().and(&sb.not()).unwrap()));
        prop_assert!(same(&sa.not().not(), &sa));

        // the same laws on realized cylinders
        let (ra, rb, rc) = (real(&sa), real(&sb), real(&sc));
        let l = ra.and(&rb.or(&rc, &cache).unwrap(), &cache).unwrap();
        let r = ra.and(&rb, &cache).unwrap().or(&ra.and(&rc, &cache).unwrap(), &cache).unwrap();
        prop_assert!(l.same_points(&r, &cache).unwrap());
        prop_assert!(ra.and(&ra.not(), &cache).unwrap().is_empty());
        let all = ra.or(&ra.not(), &cache).unwrap();
        prop_assert_eq!(all.len(), all.universe().len());
        prop_assert!(ra.and(&rb, &cache).unwrap().same_points(&real(&sa.and(&sb).unwrap()), &cache).unwrap());
    }
}
