//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use greenberg_core::ring_tower::RingDescriptor;
use greenberg_core::scheme_model::AffineFormalScheme;

pub fn node(q: u64) -> Arc<AffineFormalScheme> {
    Arc::new(AffineFormalScheme::parse("node", RingDescriptor::equal_char(q, 1), &["x", "y"], &["x*y - pi"], 1).unwrap())
}

pub fn cusp(q: u64) -> Arc<AffineFormalScheme> {
    Arc::new(AffineFormalScheme::parse("cusp", RingDescriptor::equal_char(q, 1), &["x", "y"], &["y^2 - x^3"], 1).unwrap())
}

pub fn plane(q: u64, name: &str, vars: &[&str]) -> Arc<AffineFormalScheme> {
    Arc::new(AffineFormalScheme::affine_space(name, RingDescriptor::equal_char(q, 1), vars).unwrap())
}
