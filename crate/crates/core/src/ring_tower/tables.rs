//! Defining polynomials for residue field extensions.
//!
//! Entries are Conway polynomials, coefficients listed from the constant term
//! up to the (monic) leading term. Pairs `(p, f)` missing from the table fall
//! back to the lexicographically first monic irreducible polynomial.

pub(crate) const CONWAY: &[(u64, u32, &[u64])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (3, 2, &[2, 2, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 0, 0, 2, 1]),
    (5, 2, &[2, 4, 1]),
    (5, 3, &[3, 3, 0, 1]),
    (5, 4, &[2, 4, 4, 0, 1]),
    (7, 2, &[3, 6, 1]),
    (7, 3, &[4, 0, 6, 1]),
    (7, 4, &[3, 4, 5, 0, 1]),
    (11, 2, &[2, 7, 1]),
    (11, 3, &[9, 2, 0, 1]),
    (11, 4, &[2, 10, 8, 0, 1]),
    (13, 2, &[2, 12, 1]),
    (13, 3, &[11, 2, 0, 1]),
    (13, 4, &[2, 12, 3, 0, 1]),
];

pub(crate) fn lookup(p: u64, f: u32) -> Option<Vec<u64>> {
    CONWAY
        .iter()
        .find(|(pp, ff, _)| *pp == p && *ff == f)
        .map(|(_, _, c)| c.to_vec())
}
