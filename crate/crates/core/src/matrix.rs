//! Dense complex operator carrier.
//!
//! Storage is row-major. Most operators in this crate are very sparse
//! (ladder operators, Hamiltonians) or block-sparse (propagators of
//! excitation-conserving Hamiltonians), so the product kernel skips exact
//! zeros on both operands. Results are identical to a naive dense product.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layout::TensorLayout;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance used when an operator claims to be Hermitian.
pub const HERMITIAN_HINT_TOL: f64 = 1e-12;

/// Dense row-major complex square matrix with optional layout metadata.
///
/// Equality compares shape and entries only.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    dim: usize,
    data: Vec<C64>,
    layout: Option<TensorLayout>,
    hermitian_hint: Option<bool>,
}

impl PartialEq for OperatorMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.data == other.data
    }
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix {
            dim,
            data: vec![ZERO; dim * dim],
            layout: None,
            hermitian_hint: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m.hermitian_hint = Some(true);
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = C64::new(d, 0.0);
        }
        m.hermitian_hint = Some(true);
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        OperatorMatrix {
            dim,
            data,
            layout: None,
            hermitian_hint: None,
        }
    }

    /// Builds from real row vectors; panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Tags the matrix as a full-space operator on `layout`.
    pub fn with_layout(mut self, layout: TensorLayout) -> Result<Self> {
        if self.dim != layout.total_dim() {
            return Err(Error::Layout(format!(
                "matrix side {} does not match layout {} (total {})",
                self.dim,
                layout,
                layout.total_dim()
            )));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn with_hermitian_hint(mut self, hint: bool) -> Self {
        self.hermitian_hint = Some(hint);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layout(&self) -> Option<TensorLayout> {
        self.layout
    }

    /// A subsystem-local operator carries no layout.
    pub fn is_local(&self) -> bool {
        self.layout.is_none()
    }

    pub fn hermitian_hint(&self) -> Option<bool> {
        self.hermitian_hint
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
        self.hermitian_hint = None;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] += v;
        self.hermitian_hint = None;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        const TILE: usize = 32;
        let mut out = Self::zeros(n);
        for bi in (0..n).step_by(TILE) {
            for bj in (0..n).step_by(TILE) {
                for i in bi..(bi + TILE).min(n) {
                    for j in bj..(bj + TILE).min(n) {
                        out.data[j * n + i] = self.data[i * n + j].conj();
                    }
                }
            }
        }
        out.layout = self.layout;
        out.hermitian_hint = self.hermitian_hint;
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(C64::new(s, 0.0))
            .with_hint(self.hermitian_hint.filter(|_| s.is_finite()))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        OperatorMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
            layout: self.layout,
            hermitian_hint: None,
        }
    }

    fn with_hint(mut self, hint: Option<bool>) -> Self {
        self.hermitian_hint = hint;
        self
    }

    fn binary(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        OperatorMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            layout: self.layout.or(rhs.layout),
            hermitian_hint: match (self.hermitian_hint, rhs.hermitian_hint) {
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
        }
    }

    /// Matrix product, skipping exact zeros of both operands.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        let n = self.dim;
        let dense_cutoff = n / 4;
        let rhs_rows: Vec<RowRepr> = (0..n)
            .into_par_iter()
            .map(|k| {
                let row = rhs.row(k);
                let nnz = row.iter().filter(|x| **x != ZERO).count();
                if nnz > dense_cutoff {
                    RowRepr::Dense
                } else {
                    RowRepr::Sparse(
                        row.iter()
                            .enumerate()
                            .filter(|(_, x)| **x != ZERO)
                            .map(|(j, &x)| (j, x))
                            .collect(),
                    )
                }
            })
            .collect();
        let mut out = vec![ZERO; n * n];
        out.par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, crow)| {
                let arow = self.row(i);
                for (k, &a) in arow.iter().enumerate() {
                    if a == ZERO {
                        continue;
                    }
                    match &rhs_rows[k] {
                        RowRepr::Dense => {
                            for (c, &b) in crow.iter_mut().zip(rhs.row(k)) {
                                *c += a * b;
                            }
                        }
                        RowRepr::Sparse(entries) => {
                            for &(j, b) in entries {
                                crow[j] += a * b;
                            }
                        }
                    }
                }
            });
        OperatorMatrix {
            dim: n,
            data: out,
            layout: self.layout.or(rhs.layout),
            hermitian_hint: None,
        }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// `A B A†`, the conjugation used throughout the transformation chain.
    pub fn conjugate(&self, inner: &Self) -> Self {
        self.matmul(inner).matmul(&self.adjoint())
    }

    /// Kronecker product `self ⊗ rhs`. The result carries no layout.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (p, q) = (self.dim, rhs.dim);
        let n = p * q;
        let mut out = Self::zeros(n);
        for i in 0..p {
            for j in 0..p {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..q {
                    for l in 0..q {
                        let b = rhs.get(k, l);
                        if b != ZERO {
                            out.data[(i * q + k) * n + j * q + l] = a * b;
                        }
                    }
                }
            }
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
            .into_par_iter()
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| **a != ZERO)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|A − A†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        const TILE: usize = 32;
        let n = self.dim;
        let mut dev = 0.0f64;
        // Tiled so the transposed reads stay in cache.
        for bi in (0..n).step_by(TILE) {
            for bj in (bi..n).step_by(TILE) {
                for i in bi..(bi + TILE).min(n) {
                    for j in bj.max(i)..(bj + TILE).min(n) {
                        let d = self.data[i * n + j] - self.data[j * n + i].conj();
                        dev = dev.max(d.norm());
                    }
                }
            }
        }
        dev
    }

    /// Fails unless `max|A − A†| ≤ rel_tol · max(1, max|A|)`.
    pub fn check_hermitian(&self, rel_tol: f64) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        let tolerance = rel_tol * self.max_abs().max(1.0);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(())
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    /// `A · P`, with `P` the diagonal projector onto `keep` columns.
    pub fn project_columns(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut out = self.clone();
        for j in (0..self.dim).filter(|&j| !keep(j)) {
            for i in 0..self.dim {
                out.data[i * self.dim + j] = ZERO;
            }
        }
        out.hermitian_hint = None;
        out
    }

    /// `P A P` restricted to `keep` rows and columns (others zeroed).
    pub fn project_both(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mask: Vec<bool> = (0..self.dim).map(keep).collect();
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if !(mask[i] && mask[j]) {
                    out.data[i * self.dim + j] = ZERO;
                }
            }
        }
        out
    }

    /// Principal submatrix on `indices` as a nalgebra matrix.
    pub(crate) fn submatrix(&self, indices: &[usize]) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(indices.len(), indices.len(), |a, b| {
            self.get(indices[a], indices[b])
        })
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.data[i * self.dim + j] == ZERO))
    }
}

enum RowRepr {
    Dense,
    Sparse(Vec<(usize, C64)>),
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.binary(rhs, |a, b| a + b)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.binary(rhs, |a, b| a - b)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scale(rhs)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale(-1.0)
    }
}

/// Sums an iterator of operators; `None` for an empty iterator.
pub fn sum<'a>(mut terms: impl Iterator<Item = &'a OperatorMatrix>) -> Option<OperatorMatrix> {
    let first = terms.next()?.clone();
    Some(terms.fold(first, |acc, t| &acc + t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dim: usize, density: f64, rng: &mut impl Rng) -> OperatorMatrix {
        OperatorMatrix::from_fn(dim, |_, _| {
            if rng.gen::<f64>() < density {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                ZERO
            }
        })
    }

    fn naive(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
        let n = a.dim();
        OperatorMatrix::from_fn(n, |i, j| (0..n).map(|k| a.get(i, k) * b.get(k, j)).sum())
    }

    #[test]
    fn sparse_product_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for density in [0.02, 0.3, 1.0] {
            let a = random(40, density, &mut rng);
            let b = random(40, density, &mut rng);
            assert!(a.matmul(&b).max_abs_diff(&naive(&a, &b)) < 1e-12);
        }
    }

    #[test]
    fn kron_orders_left_operand_as_major_index() {
        let a = OperatorMatrix::from_real_diagonal(&[1.0, 2.0]);
        let b = OperatorMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = a.kron(&b);
        assert_eq!(k.get(0, 1), ONE);
        assert_eq!(k.get(2, 3), C64::new(2.0, 0.0));
        assert_eq!(k.get(0, 3), ZERO);
    }

    #[test]
    fn hermitian_check_reports_deviation() {
        let m = OperatorMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        match m.check_hermitian(1e-10) {
            Err(Error::NotHermitian { deviation, .. }) => assert_eq!(deviation, 1.0),
            other => panic!("expected hermiticity error, got {other:?}"),
        }
        assert!(OperatorMatrix::identity(3).check_hermitian(1e-10).is_ok());
    }
}
