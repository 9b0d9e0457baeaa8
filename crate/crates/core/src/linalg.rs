//! Row reduction over the residue field.

use crate::ring_tower::ResidueField;

/// A matrix `A` over `F_q` put in reduced row echelon form, remembering the
/// row operations so that `A a = b` can be solved for many right-hand sides.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    ncols: usize,
    /// `transform * A = rref`
    transform: Vec<Vec<u64>>,
    rref: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl Reduced {
    pub(crate) fn new(k: &ResidueField, a: &[Vec<u64>], ncols: usize) -> Self {
        let m = a.len();
        let mut rref: Vec<Vec<u64>> = a.to_vec();
        let mut transform: Vec<Vec<u64>> = (0..m)
            .map(|i| (0..m).map(|j| u64::from(i == j)).collect())
            .collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..ncols {
            if row == m {
                break;
            }
            let Some(p) = (row..m).find(|&r| rref[r][col] != 0) else {
                continue;
            };
            rref.swap(row, p);
            transform.swap(row, p);
            let inv = k.inv(rref[row][col]).unwrap();
            for c in 0..ncols {
                rref[row][c] = k.mul(rref[row][c], inv);
            }
            for c in 0..m {
                transform[row][c] = k.mul(transform[row][c], inv);
            }
            for r in 0..m {
                if r == row || rref[r][col] == 0 {
                    continue;
                }
                let factor = rref[r][col];
                for c in 0..ncols {
                    let s = k.mul(factor, rref[row][c]);
                    rref[r][c] = k.sub(rref[r][c], s);
                }
                for c in 0..m {
                    let s = k.mul(factor, transform[row][c]);
                    transform[r][c] = k.sub(transform[r][c], s);
                }
            }
            pivots.push(col);
            row += 1;
        }
        Reduced {
            ncols,
            transform,
            rref,
            pivots,
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// A particular solution of `A a = b`, or `None` if inconsistent.
    pub(crate) fn solve(&self, k: &ResidueField, b: &[u64]) -> Option<Vec<u64>> {
        let m = self.transform.len();
        let mut bt = vec![0u64; m];
        for (r, out) in bt.iter_mut().enumerate() {
            let mut s = 0;
            for (c, &bc) in b.iter().enumerate() {
                if bc != 0 && self.transform[r][c] != 0 {
                    s = k.add(s, k.mul(self.transform[r][c], bc));
                }
            }
            *out = s;
        }
        if bt[self.rank()..].iter().any(|&x| x != 0) {
            return None;
        }
        let mut a = vec![0u64; self.ncols];
        for (r, &pc) in self.pivots.iter().enumerate() {
            a[pc] = bt[r];
        }
        Some(a)
    }

    /// A basis of the kernel, one vector per free column.
    pub(crate) fn kernel_basis(&self, k: &ResidueField) -> Vec<Vec<u64>> {
        let mut basis = Vec::new();
        for free in 0..self.ncols {
            if self.pivots.contains(&free) {
                continue;
            }
            let mut v = vec![0u64; self.ncols];
            v[free] = 1;
            for (r, &pc) in self.pivots.iter().enumerate() {
                v[pc] = k.neg(self.rref[r][free]);
            }
            basis.push(v);
        }
        basis
    }

    /// Every kernel vector, in a fixed order.
    pub(crate) fn kernel_elements(&self, k: &ResidueField) -> Vec<Vec<u64>> {
        let basis = self.kernel_basis(k);
        let q = k.order();
        let mut out = vec![vec![0u64; self.ncols]];
        for b in basis.iter().rev() {
            let mut next = Vec::with_capacity(out.len() * q as usize);
            for c in 0..q {
                for v in &out {
                    let w: Vec<u64> = v
                        .iter()
                        .zip(b)
                        .map(|(&x, &y)| k.add(x, k.mul(c, y)))
                        .collect();
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }
}
