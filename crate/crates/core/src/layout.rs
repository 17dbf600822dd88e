//! Basis ordering of the atom ⊗ field ⊗ mirror Hilbert space.
//!
//! The atom is the most significant index, then the field photon number,
//! then the mirror phonon number. Atomic index 0 is the excited state `|e⟩`
//! and index 1 the ground state `|g⟩`, so the 2×2 atomic block notation
//! `[[ee, eg], [ge, gg]]` maps row 1 onto `|e⟩`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ATOM_DIM: usize = 2;

/// Atomic level index of `|e⟩`.
pub const EXCITED: usize = 0;
/// Atomic level index of `|g⟩`.
pub const GROUND: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Atom,
    Field,
    Mirror,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Atom => "atom",
            Slot::Field => "field",
            Slot::Mirror => "mirror",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorLayout {
    field_dim: usize,
    mirror_dim: usize,
}

impl TensorLayout {
    pub fn new(field_dim: usize, mirror_dim: usize) -> Result<Self> {
        for dim in [field_dim, mirror_dim] {
            if dim < 2 {
                return Err(Error::InvalidDimension { dim });
            }
        }
        Ok(TensorLayout {
            field_dim,
            mirror_dim,
        })
    }

    pub fn atom_dim(&self) -> usize {
        ATOM_DIM
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn mirror_dim(&self) -> usize {
        self.mirror_dim
    }

    pub fn slot_dim(&self, slot: Slot) -> usize {
        match slot {
            Slot::Atom => ATOM_DIM,
            Slot::Field => self.field_dim,
            Slot::Mirror => self.mirror_dim,
        }
    }

    pub fn total_dim(&self) -> usize {
        ATOM_DIM * self.field_dim * self.mirror_dim
    }

    /// Flat index of `|atom, n, m⟩`.
    #[inline]
    pub fn index(&self, atom: usize, n: usize, m: usize) -> usize {
        debug_assert!(atom < ATOM_DIM && n < self.field_dim && m < self.mirror_dim);
        (atom * self.field_dim + n) * self.mirror_dim + m
    }

    /// Inverse of [`TensorLayout::index`].
    #[inline]
    pub fn decompose(&self, index: usize) -> (usize, usize, usize) {
        let m = index % self.mirror_dim;
        let rest = index / self.mirror_dim;
        (rest / self.field_dim, rest % self.field_dim, m)
    }

    /// True when the field index of `index` is below the top level, i.e. the
    /// basis state lies off the truncation boundary of `V V†`.
    pub fn is_interior(&self, index: usize) -> bool {
        self.decompose(index).1 + 1 < self.field_dim
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.total_dim())
            .filter(|&i| self.is_interior(i))
            .collect()
    }
}

impl fmt::Display for TensorLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(2, {}, {})", self.field_dim, self.mirror_dim)
    }
}
