//! Truncated ladder, Susskind-Glogower and atomic operators, and their
//! embedding into the atom ⊗ field ⊗ mirror space.

use crate::error::{Error, Result};
use crate::layout::{Slot, TensorLayout, ATOM_DIM, EXCITED, GROUND};
use crate::matrix::{OperatorMatrix, C64, ONE};

#[derive(Debug, Clone)]
pub struct Ladder {
    pub lowering: OperatorMatrix,
    pub raising: OperatorMatrix,
    pub number: OperatorMatrix,
}

/// `a|n⟩ = √n |n−1⟩`, its adjoint, and `a†a = diag(0, …, dim−1)`.
///
/// The truncated commutator `[a, a†]` equals the identity except for the
/// corner entry `−(dim−1)`; this artifact is left in place.
pub fn ladder_ops(dim: usize) -> Result<Ladder> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim });
    }
    let mut lowering = OperatorMatrix::zeros(dim);
    for n in 1..dim {
        lowering.set(n - 1, n, C64::new((n as f64).sqrt(), 0.0));
    }
    let raising = lowering.adjoint();
    let number =
        OperatorMatrix::from_real_diagonal(&(0..dim).map(|n| n as f64).collect::<Vec<_>>());
    Ok(Ladder {
        lowering,
        raising,
        number,
    })
}

#[derive(Debug, Clone)]
pub struct SusskindGlogower {
    pub v: OperatorMatrix,
    pub vdag: OperatorMatrix,
}

/// Phase operators `V = (n̂+1)^{−1/2} a` and `V†`.
///
/// `V` is the unit shift `V|n+1⟩ = |n⟩`, `V|0⟩ = 0`. In the truncated space
/// `V†V = I − |0⟩⟨0|` holds exactly while `V V† = I − |dim−1⟩⟨dim−1|`.
pub fn sg_ops(dim: usize) -> Result<SusskindGlogower> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim });
    }
    let mut v = OperatorMatrix::zeros(dim);
    for n in 1..dim {
        v.set(n - 1, n, ONE);
    }
    let vdag = v.adjoint();
    Ok(SusskindGlogower { v, vdag })
}

#[derive(Debug, Clone)]
pub struct AtomOps {
    pub sigma_plus: OperatorMatrix,
    pub sigma_minus: OperatorMatrix,
    pub sigma_z: OperatorMatrix,
}

/// Pauli-convention atomic operators in the `(|e⟩, |g⟩)` basis:
/// `σ₊ = |e⟩⟨g|`, `σ₋ = |g⟩⟨e|`, `σ_z = diag(1, −1)`.
pub fn atom_ops() -> AtomOps {
    let mut sigma_plus = OperatorMatrix::zeros(ATOM_DIM);
    sigma_plus.set(EXCITED, GROUND, ONE);
    AtomOps {
        sigma_minus: sigma_plus.adjoint(),
        sigma_plus,
        sigma_z: OperatorMatrix::from_real_diagonal(&[1.0, -1.0]),
    }
}

/// Lifts a subsystem-local operator to the full space as
/// `I ⊗ … ⊗ op ⊗ … ⊗ I` in atom-field-mirror order.
pub fn embed(op: &OperatorMatrix, slot: Slot, layout: TensorLayout) -> Result<OperatorMatrix> {
    let expected = layout.slot_dim(slot);
    if op.dim() != expected {
        return Err(Error::Layout(format!(
            "operator of side {} cannot be embedded in the {slot} slot of dimension {expected}",
            op.dim()
        )));
    }
    let id = |d| OperatorMatrix::identity(d);
    let full = match slot {
        Slot::Atom => op.kron(&id(layout.field_dim() * layout.mirror_dim())),
        Slot::Field => id(ATOM_DIM).kron(&op.kron(&id(layout.mirror_dim()))),
        Slot::Mirror => id(ATOM_DIM * layout.field_dim()).kron(op),
    };
    let full = match op.hermitian_hint() {
        Some(h) => full.with_hermitian_hint(h),
        None => full,
    };
    full.with_layout(layout)
}

/// Diagonal full-space operator `f(n̂)` acting on the field photon number.
pub fn field_function(layout: TensorLayout, f: impl Fn(usize) -> f64) -> OperatorMatrix {
    let diag: Vec<f64> = (0..layout.total_dim())
        .map(|i| f(layout.decompose(i).1))
        .collect();
    OperatorMatrix::from_real_diagonal(&diag)
        .with_layout(layout)
        .expect("diagonal built on layout")
}

/// Every embedded operator the Hamiltonian builders need, built once.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub layout: TensorLayout,
    pub identity: OperatorMatrix,
    /// Field `a`, `a†`, `n̂`.
    pub a: OperatorMatrix,
    pub adag: OperatorMatrix,
    pub n: OperatorMatrix,
    /// Mirror `b`, `b†`, `N̂`, and the quadrature `X = b + b†`.
    pub b: OperatorMatrix,
    pub bdag: OperatorMatrix,
    pub big_n: OperatorMatrix,
    pub x: OperatorMatrix,
    /// `X²` as the product of the truncated quadratures.
    pub x2: OperatorMatrix,
    pub sigma_plus: OperatorMatrix,
    pub sigma_minus: OperatorMatrix,
    pub sigma_z: OperatorMatrix,
    pub sigma_x: OperatorMatrix,
    /// Atomic projectors `|e⟩⟨e|` and `|g⟩⟨g|`.
    pub proj_e: OperatorMatrix,
    pub proj_g: OperatorMatrix,
}

impl OperatorSet {
    pub fn new(layout: TensorLayout) -> Result<Self> {
        let field = ladder_ops(layout.field_dim())?;
        let mirror = ladder_ops(layout.mirror_dim())?;
        let atom = atom_ops();
        let sigma_x_local = &atom.sigma_plus + &atom.sigma_minus;
        let mut pe = OperatorMatrix::zeros(ATOM_DIM);
        pe.set(EXCITED, EXCITED, ONE);
        let mut pg = OperatorMatrix::zeros(ATOM_DIM);
        pg.set(GROUND, GROUND, ONE);

        let b = embed(&mirror.lowering, Slot::Mirror, layout)?;
        let bdag = embed(&mirror.raising, Slot::Mirror, layout)?;
        let x = (&b + &bdag).with_hermitian_hint(true);
        let x2 = x.matmul(&x).with_hermitian_hint(true);
        Ok(OperatorSet {
            layout,
            identity: OperatorMatrix::identity(layout.total_dim()).with_layout(layout)?,
            a: embed(&field.lowering, Slot::Field, layout)?,
            adag: embed(&field.raising, Slot::Field, layout)?,
            n: embed(&field.number, Slot::Field, layout)?,
            b,
            bdag,
            big_n: embed(&mirror.number, Slot::Mirror, layout)?,
            x,
            x2,
            sigma_plus: embed(&atom.sigma_plus, Slot::Atom, layout)?,
            sigma_minus: embed(&atom.sigma_minus, Slot::Atom, layout)?,
            sigma_z: embed(&atom.sigma_z, Slot::Atom, layout)?,
            sigma_x: embed(&sigma_x_local.with_hermitian_hint(true), Slot::Atom, layout)?,
            proj_e: embed(&pe.with_hermitian_hint(true), Slot::Atom, layout)?,
            proj_g: embed(&pg.with_hermitian_hint(true), Slot::Atom, layout)?,
        })
    }

    pub fn field_function(&self, f: impl Fn(usize) -> f64) -> OperatorMatrix {
        field_function(self.layout, f)
    }
}
