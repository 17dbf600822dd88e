//! Compressed-row complex matrices for assembling propagators.
//!
//! Every operator in the transformation chain is block sparse, so products
//! of propagators are far cheaper in CSR form than as dense matrices.

use crate::matrix::{OperatorMatrix, C64, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SparseMatrix {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_dense(a: &OperatorMatrix) -> Self {
        let mut b = Builder::new(a.dim());
        for i in 0..a.dim() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != ZERO {
                    b.push(j, v);
                }
            }
            b.end_row();
        }
        b.finish()
    }

    /// Assembles a matrix from dense diagonal blocks on index sets that
    /// partition `0..dim`.
    pub fn from_blocks<'a>(
        dim: usize,
        blocks: impl Iterator<Item = (&'a [usize], Vec<C64>)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (indices, values) in blocks {
            let k = indices.len();
            for a in 0..k {
                let row = &mut rows[indices[a]];
                row.extend(
                    (0..k)
                        .map(|b| (indices[b], values[a * k + b]))
                        .filter(|(_, v)| *v != ZERO),
                );
            }
        }
        let mut b = Builder::new(dim);
        for mut row in rows {
            row.sort_by_key(|(j, _)| *j);
            for (j, v) in row {
                b.push(j, v);
            }
            b.end_row();
        }
        b.finish()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn adjoint(&self) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                rows[j].push((i, v.conj()));
            }
        }
        let mut b = Builder::new(self.dim);
        for row in rows {
            for (j, v) in row {
                b.push(j, v);
            }
            b.end_row();
        }
        b.finish()
    }

    /// Gustavson row-by-row product.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        let n = self.dim;
        let mut acc = vec![ZERO; n];
        let mut touched = vec![false; n];
        let mut pattern = Vec::new();
        let mut b = Builder::new(n);
        for i in 0..n {
            for (k, a) in self.row(i) {
                for (j, v) in rhs.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        pattern.push(j);
                    }
                    acc[j] += a * v;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                if acc[j] != ZERO {
                    b.push(j, acc[j]);
                }
                acc[j] = ZERO;
                touched[j] = false;
            }
            pattern.clear();
            b.end_row();
        }
        b.finish()
    }

    /// `A + Σ_i d_i |i⟩⟨i|` for the listed `(i, d_i)`.
    pub fn add_diagonal(&self, entries: &[(usize, C64)]) -> Self {
        let mut extra: Vec<Option<C64>> = vec![None; self.dim];
        for &(i, d) in entries {
            extra[i] = Some(extra[i].unwrap_or(ZERO) + d);
        }
        let mut b = Builder::new(self.dim);
        for (i, e) in extra.into_iter().enumerate() {
            let mut pending = e;
            for (j, v) in self.row(i) {
                match pending {
                    Some(d) if j == i => {
                        b.push(j, v + d);
                        pending = None;
                        continue;
                    }
                    Some(d) if j > i => {
                        b.push(i, d);
                        pending = None;
                    }
                    _ => {}
                }
                b.push(j, v);
            }
            if let Some(d) = pending {
                b.push(i, d);
            }
            b.end_row();
        }
        b.finish()
    }

    /// `A · diag(d)`.
    pub fn scale_columns(&self, d: &[C64]) -> Self {
        let mut out = self.clone();
        for (v, &j) in out.values.iter_mut().zip(&self.cols) {
            *v *= d[j];
        }
        out
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(
            x.len(),
            self.dim,
            "vector length differs from operator side"
        );
        (0..self.dim)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> OperatorMatrix {
        let mut out = OperatorMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// `max |A_ij − B_ij|` over columns `j` with `keep(j)`.
    pub fn max_abs_diff_columns(&self, other: &Self, keep: impl Fn(usize) -> bool) -> f64 {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let mut acc = vec![ZERO; self.dim];
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                acc[j] += v;
            }
            for (j, v) in other.row(i) {
                acc[j] -= v;
            }
            for j in self.row(i).chain(other.row(i)).map(|(j, _)| j) {
                if keep(j) {
                    worst = worst.max(acc[j].norm());
                }
            }
            for j in self.row(i).chain(other.row(i)).map(|(j, _)| j) {
                acc[j] = ZERO;
            }
        }
        worst
    }
}

struct Builder {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl Builder {
    fn new(dim: usize) -> Self {
        Builder {
            dim,
            row_start: vec![0],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, j: usize, v: C64) {
        self.cols.push(j);
        self.values.push(v);
    }

    fn end_row(&mut self) {
        self.row_start.push(self.cols.len());
    }

    fn finish(self) -> SparseMatrix {
        assert_eq!(self.row_start.len(), self.dim + 1, "row count mismatch");
        SparseMatrix {
            dim: self.dim,
            row_start: self.row_start,
            cols: self.cols,
            values: self.values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, fill: f64, rng: &mut ChaCha8Rng) -> OperatorMatrix {
        OperatorMatrix::from_fn(n, |_, _| {
            if rng.gen::<f64>() < fill {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn round_trip_product_and_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_sparse(23, 0.2, &mut rng);
        let b = random_sparse(23, 0.3, &mut rng);
        let (sa, sb) = (SparseMatrix::from_dense(&a), SparseMatrix::from_dense(&b));
        assert_eq!(sa.to_dense(), a);
        assert!(sa.matmul(&sb).to_dense().max_abs_diff(&a.matmul(&b)) < 1e-14);
        assert_eq!(sa.adjoint().to_dense(), a.adjoint());
        let x: Vec<C64> = (0..23).map(|k| C64::new(k as f64, -1.0)).collect();
        let (ys, yd) = (sa.apply(&x), a.apply(&x));
        assert!(ys.iter().zip(&yd).all(|(p, q)| (p - q).norm() < 1e-13));
    }

    #[test]
    fn diagonal_update_and_column_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_sparse(9, 0.3, &mut rng);
        let d: Vec<C64> = (0..9).map(|k| C64::new(k as f64, 1.0)).collect();
        let entries = [
            (0, C64::new(2.0, 0.0)),
            (4, C64::new(0.0, -1.0)),
            (8, C64::new(1.0, 1.0)),
        ];
        let mut expected = a.clone();
        for &(i, v) in &entries {
            expected.add_at(i, i, v);
        }
        let s = SparseMatrix::from_dense(&a).add_diagonal(&entries);
        assert!(s.to_dense().max_abs_diff(&expected) < 1e-15);
        let scaled = s.scale_columns(&d).to_dense();
        assert!(scaled.max_abs_diff(&expected.matmul(&OperatorMatrix::from_diagonal(&d))) < 1e-14);
    }

    #[test]
    fn column_restricted_difference() {
        let mut a = OperatorMatrix::zeros(3);
        a.set(0, 2, C64::new(5.0, 0.0));
        a.set(1, 0, C64::new(1.0, 0.0));
        let b = OperatorMatrix::zeros(3);
        let (sa, sb) = (SparseMatrix::from_dense(&a), SparseMatrix::from_dense(&b));
        assert_eq!(sa.max_abs_diff_columns(&sb, |j| j < 2), 1.0);
        assert_eq!(sa.max_abs_diff_columns(&sb, |_| true), 5.0);
    }
}
