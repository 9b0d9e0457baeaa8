//! Determinants and maximal minors, symbolic and over `R_n`.

use crate::ring_tower::{RingElem, TruncatedRing};

use super::poly::Poly;

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Cofactor expansion along the first row. The empty matrix has determinant 1.
pub fn det_poly(m: &[Vec<Poly>], vars: &[String]) -> Poly {
    let k = m.len();
    if k == 0 {
        return Poly::one(vars);
    }
    if k == 1 {
        return m[0][0].clone();
    }
    let mut acc = Poly::zero(vars);
    for j in 0..k {
        if m[0][j].is_zero() {
            continue;
        }
        let sub: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let term = m[0][j].mul(&det_poly(&sub, vars));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

pub fn det_ring(ring: &TruncatedRing, m: &[Vec<RingElem>]) -> RingElem {
    let k = m.len();
    match k {
        0 => ring.one(),
        1 => m[0][0],
        2 => ring.sub(ring.mul(m[0][0], m[1][1]), ring.mul(m[0][1], m[1][0])),
        _ => {
            let mut acc = ring.zero();
            for j in 0..k {
                if m[0][j].is_zero() {
                    continue;
                }
                let sub: Vec<Vec<RingElem>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let term = ring.mul(m[0][j], det_ring(ring, &sub));
                acc = if j % 2 == 0 {
                    ring.add(acc, term)
                } else {
                    ring.sub(acc, term)
                };
            }
            acc
        }
    }
}

/// Adjugate of a square matrix over `R_n`: `adj(M) M = M adj(M) = det(M) I`.
pub fn adjugate(ring: &TruncatedRing, m: &[Vec<RingElem>]) -> Vec<Vec<RingElem>> {
    let k = m.len();
    if k == 1 {
        return vec![vec![ring.one()]];
    }
    let mut adj = vec![vec![ring.zero(); k]; k];
    for i in 0..k {
        for j in 0..k {
            let sub: Vec<Vec<RingElem>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != i)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let c = det_ring(ring, &sub);
            adj[j][i] = if (i + j) % 2 == 0 { c } else { ring.neg(c) };
        }
    }
    adj
}

pub fn select(m: &[Vec<RingElem>], rows: &[usize], cols: &[usize]) -> Vec<Vec<RingElem>> {
    rows.iter()
        .map(|&r| cols.iter().map(|&c| m[r][c]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_tower::RingDescriptor;

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(2, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(1, 2).is_empty());
    }

    #[test]
    fn adjugate_identity() {
        let r = TruncatedRing::new(&RingDescriptor::p_adic(3, 1), 2).unwrap();
        let m: Vec<Vec<RingElem>> = vec![
            vec![r.from_int(2), r.from_int(5), r.from_int(1)],
            vec![r.from_int(3), r.from_int(7), r.from_int(4)],
            vec![r.from_int(11), r.from_int(0), r.from_int(6)],
        ];
        let adj = adjugate(&r, &m);
        let det = det_ring(&r, &m);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = r.zero();
                for k in 0..3 {
                    s = r.add(s, r.mul(adj[i][k], m[k][j]));
                }
                assert_eq!(s, if i == j { det } else { r.zero() });
            }
        }
    }
}
