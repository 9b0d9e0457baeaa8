//! Level sets checked against plain enumeration of every tuple.

use std::sync::Arc;

use greenberg_core::greenberg_levels::{count_level, truncate_set, LevelCache};
use greenberg_core::ring_tower::{RingDescriptor, RingElem, TruncatedRing, DEFAULT_ENUMERATION_BUDGET as B};
use greenberg_core::scheme_model::AffineFormalScheme;

fn brute(x: &AffineFormalScheme, n: u32) -> Vec<Vec<RingElem>> {
    let ring = TruncatedRing::new(x.descriptor(), n).unwrap();
    let card = ring.cardinality();
    let k = x.nvars();
    let total = card.pow(k as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut t = idx;
        let pt: Vec<RingElem> = (0..k)
            .map(|_| {
                let v = RingElem(t % card);
                t /= card;
                v
            })
            .collect();
        if x.generators().iter().all(|g| g.eval(&ring, &pt).is_zero()) {
            out.push(pt);
        }
    }
    out.sort();
    out
}

fn fixtures(q: u64) -> Vec<AffineFormalScheme> {
    let d = RingDescriptor::equal_char(q, 1);
    let p = RingDescriptor::p_adic(q, 1);
    vec![
        AffineFormalScheme::affine_space("line", d.clone(), &["x"]).unwrap(),
        AffineFormalScheme::parse("conic", d.clone(), &["x", "y"], &["y - x^2"], 1).unwrap(),
        AffineFormalScheme::parse("node", d.clone(), &["x", "y"], &["x*y - pi"], 1).unwrap(),
        AffineFormalScheme::parse("cusp", d, &["x", "y"], &["y^2 - x^3"], 1).unwrap(),
        AffineFormalScheme::parse("node_padic", p, &["x", "y"], &["x*y - pi"], 1).unwrap(),
    ]
}

#[test]
fn level_sets_match_brute_force() {
    for q in [2u64, 3] {
        let cache = LevelCache::new(B);
        for x in fixtures(q) {
            for n in 0..=2 {
                let want = brute(&x, n);
                let got = cache.level(&x, n).unwrap();
                let got: Vec<Vec<RingElem>> = got.iter().map(|p| p.to_vec()).collect();
                assert_eq!(got, want, "{} q={q} n={n}", x.name());
                assert_eq!(count_level(&x, n, 1, B).unwrap(), want.len() as u64);
            }
        }
    }
}

#[test]
fn node_counts() {
    for q in [2u64, 3, 5] {
        let x = AffineFormalScheme::parse("node", RingDescriptor::equal_char(q, 1), &["x", "y"], &["x*y - pi"], 1).unwrap();
        assert_eq!(count_level(&x, 0, 1, B).unwrap(), 2 * q - 1);
        for n in 1..=4u32 {
            assert_eq!(count_level(&x, n, 1, B).unwrap(), 2 * (q - 1) * q.pow(n), "q={q} n={n}");
        }
        if q == 2 {
            for n in 1..=2 {
                assert_eq!(brute(&x, n).len() as u64, 2 * (q - 1) * q.pow(n));
            }
        }
    }
}

#[test]
fn affine_space_counts() {
    for q in [2u64, 3] {
        let d = RingDescriptor::equal_char(q, 1);
        for vars in [&["x"][..], &["x", "y"][..]] {
            let x = AffineFormalScheme::affine_space("A", d.clone(), vars).unwrap();
            for n in 0..=4u32 {
                let want = q.pow((n + 1) * vars.len() as u32);
                assert_eq!(count_level(&x, n, 1, B).unwrap(), want);
            }
        }
    }
}

#[test]
fn smooth_fibers_are_uniform() {
    for q in [2u64, 3] {
        let cache = LevelCache::new(B);
        let d = RingDescriptor::equal_char(q, 1);
        let conic = Arc::new(AffineFormalScheme::parse("conic", d.clone(), &["x", "y"], &["y - x^2"], 1).unwrap());
        let ci = Arc::new(
            AffineFormalScheme::parse("ci", d, &["x", "y", "z"], &["y - x^2", "z - x*y"], 1).unwrap(),
        );
        for x in [conic, ci] {
            for n in 0..=3 {
                let up = cache.level(&x, n + 1).unwrap();
                let img = truncate_set(&up, n).unwrap();
                assert_eq!(img.min_fiber(), q.pow(x.dim() as u32));
                assert!(img.is_constant());
                assert_eq!(img.image.len(), cache.level(&x, n).unwrap().len());
            }
        }
    }
}
