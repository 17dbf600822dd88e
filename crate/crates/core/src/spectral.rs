//! Hermitian spectral decomposition and `exp(−iHt)`.
//!
//! The Hamiltonians handled here conserve quantities such as the excitation
//! number, so their nonzero pattern splits into many small connected
//! components. The decomposition diagonalizes each component separately;
//! the result is the same spectral decomposition a full dense solve would
//! give, at a fraction of the cost. A dense random matrix is simply one
//! component.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::Result;
use crate::matrix::{OperatorMatrix, C64, ZERO};
use crate::sparse::SparseMatrix;

/// Relative hermiticity tolerance accepted by the propagator.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    layout: Option<crate::layout::TensorLayout>,
    blocks: Vec<Block>,
}

impl SpectralDecomposition {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        h.check_hermitian(HERMITIAN_TOL)?;
        let blocks = connected_components(h)
            .into_par_iter()
            .map(|indices| {
                let sub = h.submatrix(&indices);
                // Symmetrize so the solver sees an exactly Hermitian block.
                let sub = (&sub + sub.adjoint()) * C64::new(0.5, 0.0);
                let eig = SymmetricEigen::new(sub);
                Block {
                    indices,
                    values: eig.eigenvalues.iter().copied().collect(),
                    vectors: eig.eigenvectors,
                }
            })
            .collect();
        Ok(SpectralDecomposition {
            dim: h.dim(),
            layout: h.layout(),
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of independent invariant blocks found in the sparsity pattern.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// `exp(−iHt)` as a full matrix.
    pub fn propagator(&self, t: f64) -> OperatorMatrix {
        let u = self.propagator_sparse(t).to_dense();
        match self.layout {
            Some(layout) => u
                .with_layout(layout)
                .expect("layout matches by construction"),
            None => u,
        }
    }

    pub(crate) fn propagator_sparse(&self, t: f64) -> SparseMatrix {
        let blocks = self.blocks.iter().map(|block| {
            let phases: Vec<C64> = block
                .values
                .iter()
                .map(|&e| C64::from_polar(1.0, -e * t))
                .collect();
            let k = block.indices.len();
            let mut values = vec![ZERO; k * k];
            for a in 0..k {
                for b in 0..k {
                    values[a * k + b] = phases
                        .iter()
                        .enumerate()
                        .map(|(l, &p)| block.vectors[(a, l)] * p * block.vectors[(b, l)].conj())
                        .sum();
                }
            }
            (block.indices.as_slice(), values)
        });
        SparseMatrix::from_blocks(self.dim, blocks)
    }

    /// `exp(−iHt) ψ` without forming the propagator.
    pub fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        assert_eq!(
            psi.len(),
            self.dim,
            "state length differs from operator side"
        );
        let mut out = vec![ZERO; self.dim];
        for block in &self.blocks {
            let k = block.indices.len();
            // Coefficients in the eigenbasis, then phase and map back.
            let coeffs: Vec<C64> = (0..k)
                .map(|l| {
                    let c: C64 = (0..k)
                        .map(|a| block.vectors[(a, l)].conj() * psi[block.indices[a]])
                        .sum();
                    c * C64::from_polar(1.0, -block.values[l] * t)
                })
                .collect();
            for a in 0..k {
                out[block.indices[a]] = (0..k).map(|l| block.vectors[(a, l)] * coeffs[l]).sum();
            }
        }
        out
    }
}

/// `U = exp(−iHt)` by spectral decomposition.
pub fn expm_hermitian(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    Ok(SpectralDecomposition::new(h)?.propagator(t))
}

fn connected_components(h: &OperatorMatrix) -> Vec<Vec<usize>> {
    let n = h.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for (j, v) in h.row(i).iter().enumerate().skip(i + 1) {
            if *v != ZERO || h.get(j, i) != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{I, ONE};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = expm_hermitian(&OperatorMatrix::zeros(5), 3.7).unwrap();
        assert_eq!(u.max_abs_diff(&OperatorMatrix::identity(5)), 0.0);
    }

    #[test]
    fn pauli_z_quarter_period() {
        let sz = OperatorMatrix::from_real_diagonal(&[1.0, -1.0]);
        let u = expm_hermitian(&sz, FRAC_PI_2).unwrap();
        let expected = OperatorMatrix::from_diagonal(&[-I, I]);
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn number_operator_phases() {
        let n = OperatorMatrix::from_real_diagonal(&[0.0, 1.0, 2.0, 3.0]);
        let u = expm_hermitian(&n, 1.0).unwrap();
        let expected = OperatorMatrix::from_diagonal(
            &(0..4)
                .map(|k| C64::from_polar(1.0, -(k as f64)))
                .collect::<Vec<_>>(),
        );
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = OperatorMatrix::zeros(2);
        m.set(0, 1, ONE);
        assert!(matches!(
            expm_hermitian(&m, 1.0),
            Err(crate::Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn components_follow_sparsity() {
        // Two decoupled 2x2 blocks interleaved: {0,2} and {1,3}.
        let h = OperatorMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.5, 0.0],
            &[0.0, 2.0, 0.0, 0.3],
            &[0.5, 0.0, 3.0, 0.0],
            &[0.0, 0.3, 0.0, 4.0],
        ]);
        let s = SpectralDecomposition::new(&h).unwrap();
        assert_eq!(s.block_count(), 2);
        let psi = vec![ONE, ZERO, ZERO, ZERO];
        let direct = s.propagator(0.7).apply(&psi);
        let via_state = s.evolve(&psi, 0.7);
        for (a, b) in direct.iter().zip(&via_state) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(via_state[1], ZERO);
    }
}
