//! The transformation chain as explicit operators.
//!
//! `M = diag(1, V)` in the atomic basis maps the interaction Hamiltonian
//! onto `H̃`, in which the photon number is a constant of motion; the exact
//! rotation `R` turns `H̃` into `H_R`; the small rotations `U₁, U₂` remove
//! the atom-mirror exchange terms to first order in `ξ`.
//!
//! `M` is only an isometry on the truncated space: `M†M = I − P_g0` (exact,
//! from `V†V = I − |0⟩⟨0|`) and `M M† = I − P_top` (truncation artifact of
//! `V V†`). Propagators built through `M` therefore carry the vacuum
//! correction `P_g0 e^{−iρ̂₂₂⁰t}` and agree with the direct propagator on
//! the interior subspace (field index below the top level).

use crate::error::{Error, Result};
use crate::hamiltonians::{self, first_order_coefficients, ExpansionForm, XiChoice};
use crate::layout::{Slot, TensorLayout, ATOM_DIM, EXCITED, GROUND};
use crate::matrix::{OperatorMatrix, C64, ONE};
use crate::ops::{embed, sg_ops, OperatorSet};
use crate::params::{EffVariant, SystemParams};
use crate::sparse::SparseMatrix;
use crate::spectral::{expm_hermitian, SpectralDecomposition};

/// `M = |e⟩⟨e| ⊗ I + |g⟩⟨g| ⊗ V` and its adjoint, identity on the mirror.
pub fn m_ops(layout: TensorLayout) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let sg = sg_ops(layout.field_dim())?;
    let mut pe = OperatorMatrix::zeros(ATOM_DIM);
    pe.set(EXCITED, EXCITED, ONE);
    let mut pg = OperatorMatrix::zeros(ATOM_DIM);
    pg.set(GROUND, GROUND, ONE);
    let id_f = OperatorMatrix::identity(layout.field_dim());
    let id_m = OperatorMatrix::identity(layout.mirror_dim());
    let m = &pe.kron(&id_f).kron(&id_m) + &pg.kron(&sg.v).kron(&id_m);
    let m = m.with_layout(layout)?;
    let mdag = m.adjoint();
    Ok((m, mdag))
}

/// `R = (1/√2)[[1, 1], [−1, 1]]` on the atom, identity elsewhere.
pub fn r_op(layout: TensorLayout) -> Result<OperatorMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = OperatorMatrix::from_real_rows(&[&[s, s], &[-s, s]]);
    embed(&r, Slot::Atom, layout)
}

/// `P_g0 = |g⟩⟨g| ⊗ |0⟩⟨0| ⊗ I`.
pub fn vacuum_projector(layout: TensorLayout) -> OperatorMatrix {
    let diag: Vec<f64> = (0..layout.total_dim())
        .map(|i| {
            let (a, n, _) = layout.decompose(i);
            if a == GROUND && n == 0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    OperatorMatrix::from_real_diagonal(&diag)
        .with_layout(layout)
        .expect("diagonal built on layout")
}

/// `P_top = |g⟩⟨g| ⊗ |N_f−1⟩⟨N_f−1| ⊗ I`, the defect of `M M†`.
pub fn top_projector(layout: TensorLayout) -> OperatorMatrix {
    let top = layout.field_dim() - 1;
    let diag: Vec<f64> = (0..layout.total_dim())
        .map(|i| {
            let (a, n, _) = layout.decompose(i);
            if a == GROUND && n == top {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    OperatorMatrix::from_real_diagonal(&diag)
        .with_layout(layout)
        .expect("diagonal built on layout")
}

/// Treatment of photon sectors that sit on a small-rotation pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolePolicy {
    /// Any pole sector below the field cutoff is an error.
    #[default]
    Strict,
    /// Pole sectors get `ξ₁ = ξ₂ = 0`. Only sound when the state never
    /// populates them; the affected sectors are reported.
    Neutralize,
}

struct Generators {
    k1: OperatorMatrix,
    k2: OperatorMatrix,
    neutralized: Vec<usize>,
}

/// Hermitian generators `K` with `U = exp(−iK)`:
/// `K₁ = i ξ₁(n̂)(b†σ₊ − bσ₋)`, `K₂ = i ξ₂(n̂)(bσ₊ − b†σ₋)`.
fn rotation_generators(
    params: &SystemParams,
    layout: TensorLayout,
    policy: PolePolicy,
) -> Result<Generators> {
    let o = OperatorSet::new(layout)?;
    let mut neutralized = Vec::new();
    let mut xi = Vec::with_capacity(layout.field_dim());
    for n in 0..layout.field_dim() {
        match (XiChoice::Chosen.resolve(n, params), policy) {
            (Ok(pair), _) => xi.push(pair),
            (Err(Error::Pole { .. }), PolePolicy::Neutralize) => {
                neutralized.push(n);
                xi.push((0.0, 0.0));
            }
            (Err(e), _) => return Err(e),
        }
    }
    let xi1 = o.field_function(|n| xi[n].0);
    let xi2 = o.field_function(|n| xi[n].1);
    let s1 = &o.bdag.matmul(&o.sigma_plus) - &o.b.matmul(&o.sigma_minus);
    let s2 = &o.b.matmul(&o.sigma_plus) - &o.bdag.matmul(&o.sigma_minus);
    let i = C64::new(0.0, 1.0);
    Ok(Generators {
        k1: xi1.matmul(&s1).scale_complex(i),
        k2: xi2.matmul(&s2).scale_complex(i),
        neutralized,
    })
}

/// `U₁ = exp(ξ₁(n̂)(b†σ₊ − bσ₋))`, `U₂ = exp(ξ₂(n̂)(bσ₊ − b†σ₋))`, with the
/// chosen angles, exponentiated exactly.
pub fn small_rotations(
    params: &SystemParams,
    layout: TensorLayout,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    params.validate()?;
    let g = rotation_generators(params, layout, PolePolicy::Strict)?;
    Ok((expm_hermitian(&g.k1, 1.0)?, expm_hermitian(&g.k2, 1.0)?))
}

/// First-order generator terms `Ξ₁ = ξ₁(n̂)(b†σ₊ − bσ₋)` and
/// `Ξ₂ = ξ₂(n̂)(bσ₊ − b†σ₋)`.
pub fn rotation_generator_terms(
    params: &SystemParams,
    layout: TensorLayout,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let g = rotation_generators(params, layout, PolePolicy::Strict)?;
    let minus_i = C64::new(0.0, -1.0);
    Ok((g.k1.scale_complex(minus_i), g.k2.scale_complex(minus_i)))
}

/// `‖U₂U₁ H_R U₁†U₂† − H₂‖_max` with `H₂` the first-order expansion in the
/// given form and the chosen angles. Quadratic in `χ` for the consistent form.
pub fn first_order_defect(
    params: &SystemParams,
    layout: TensorLayout,
    form: ExpansionForm,
) -> Result<f64> {
    let (u1, u2) = small_rotations(params, layout)?;
    let exact = u2
        .matmul(&u1)
        .conjugate(&hamiltonians::build_h_rotated(params, layout)?);
    let first = hamiltonians::build_h2_first_order(params, layout, &XiChoice::Chosen, form)?;
    Ok(exact.max_abs_diff(&first))
}

/// Residuals of the exchange-term cancellation for one photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationResidual {
    pub n: usize,
    pub c_jc: f64,
    pub c_ajc: f64,
}

/// `c_jc(n)` and `c_ajc(n)` for `n = 0..=n_max`.
///
/// With [`XiChoice::Chosen`] and [`ExpansionForm::AsPrinted`] these are
/// `χ/2 − ξ₁(ν+λ√(n+1))` and `χ/2 + ξ₂(ν−λ√(n+1))`, zero up to rounding.
pub fn cancellation_residuals(
    params: &SystemParams,
    n_max: usize,
    xi: &XiChoice,
    form: ExpansionForm,
) -> Result<Vec<CancellationResidual>> {
    (0..=n_max)
        .map(|n| {
            let c = first_order_coefficients(n, xi.resolve(n, params)?, params, form);
            Ok(CancellationResidual {
                n,
                c_jc: c.c_jc,
                c_ajc: c.c_ajc,
            })
        })
        .collect()
}

/// Phases `e^{−iρ̂t}` of the diagonal vacuum part and the entries of
/// `P_g0`, shared by both composed propagators.
#[derive(Debug, Clone)]
struct VacuumPart {
    rho_diag: Vec<f64>,
    p_g0: Vec<(usize, C64)>,
}

impl VacuumPart {
    fn new(params: &SystemParams, layout: TensorLayout) -> Result<Self> {
        params.validate()?;
        // ρ̂ is diagonal: ν m on |g, 0, m⟩.
        let mut rho_diag = vec![0.0; layout.total_dim()];
        for m in 0..layout.mirror_dim() {
            rho_diag[layout.index(GROUND, 0, m)] = params.nu * m as f64;
        }
        Ok(VacuumPart {
            rho_diag,
            p_g0: (0..layout.mirror_dim())
                .map(|m| (layout.index(GROUND, 0, m), ONE))
                .collect(),
        })
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.rho_diag
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * t))
            .collect()
    }

    /// `(core + P_g0) e^{−iρ̂t}`.
    fn finish(&self, core: SparseMatrix, t: f64) -> SparseMatrix {
        core.add_diagonal(&self.p_g0).scale_columns(&self.phases(t))
    }

    /// Returns `e^{−iρ̂t}ψ`.
    fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        psi.iter().zip(self.phases(t)).map(|(a, p)| a * p).collect()
    }

    fn add_vacuum_term(&self, out: &mut [C64], after_rho: &[C64]) {
        for &(i, _) in &self.p_g0 {
            out[i] += after_rho[i];
        }
    }
}

/// Propagator assembled through the Susskind-Glogower transform:
/// `Û(t) = M† e^{−iH̃t} M e^{−iρ̂t} + P_g0 e^{−iρ̂t}`.
#[derive(Debug, Clone)]
pub struct FormulaPropagator {
    layout: TensorLayout,
    m: SparseMatrix,
    mdag: SparseMatrix,
    vacuum: VacuumPart,
    tilde: SpectralDecomposition,
}

impl FormulaPropagator {
    pub fn new(params: &SystemParams, layout: TensorLayout) -> Result<Self> {
        Self::from_tilde(
            params,
            layout,
            &hamiltonians::build_h_tilde(params, layout)?,
        )
    }

    pub(crate) fn from_tilde(
        params: &SystemParams,
        layout: TensorLayout,
        h_tilde: &OperatorMatrix,
    ) -> Result<Self> {
        let (m, mdag) = m_ops(layout)?;
        Ok(FormulaPropagator {
            layout,
            m: SparseMatrix::from_dense(&m),
            mdag: SparseMatrix::from_dense(&mdag),
            vacuum: VacuumPart::new(params, layout)?,
            tilde: SpectralDecomposition::new(h_tilde)?,
        })
    }

    pub(crate) fn propagator_sparse(&self, t: f64) -> SparseMatrix {
        let core = self
            .mdag
            .matmul(&self.tilde.propagator_sparse(t))
            .matmul(&self.m);
        self.vacuum.finish(core, t)
    }

    pub fn propagator(&self, t: f64) -> OperatorMatrix {
        self.propagator_sparse(t)
            .to_dense()
            .with_layout(self.layout)
            .expect("layout preserved")
    }

    pub fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let after_rho = self.vacuum.evolve(psi, t);
        let inner = self.tilde.evolve(&self.m.apply(&after_rho), t);
        let mut out = self.mdag.apply(&inner);
        self.vacuum.add_vacuum_term(&mut out, &after_rho);
        out
    }
}

/// `Û(t)` from the Susskind-Glogower formula, as a matrix.
pub fn evolution_formula(
    t: f64,
    params: &SystemParams,
    layout: TensorLayout,
) -> Result<OperatorMatrix> {
    Ok(FormulaPropagator::new(params, layout)?.propagator(t))
}

/// The full chain `M → R → U₁ → U₂` with the effective Hamiltonian in the
/// final frame. The composed effective propagator is
///
/// ```text
/// Û_eff(t) = W† e^{−iH_eff t} W e^{−iρ̂t} + P_g0 e^{−iρ̂t},   W = U₂U₁RM
/// ```
///
/// which reduces to the formula propagator when `U₁ = U₂ = I` and
/// `H_eff` is replaced by `R H̃ R†`.
#[derive(Debug, Clone)]
pub struct TransformChain {
    pub params: SystemParams,
    pub layout: TensorLayout,
    pub variant: EffVariant,
    pub m: OperatorMatrix,
    pub mdag: OperatorMatrix,
    pub r: OperatorMatrix,
    pub u1: OperatorMatrix,
    pub u2: OperatorMatrix,
    /// Photon sectors whose rotation angles were zeroed at a pole.
    pub neutralized: Vec<usize>,
    w: OperatorMatrix,
    w_sparse: SparseMatrix,
    wdag_sparse: SparseMatrix,
    vacuum: VacuumPart,
    effective: SpectralDecomposition,
}

impl TransformChain {
    pub fn new(params: &SystemParams, layout: TensorLayout, variant: EffVariant) -> Result<Self> {
        Self::with_policy(params, layout, variant, PolePolicy::Strict)
    }

    pub fn with_policy(
        params: &SystemParams,
        layout: TensorLayout,
        variant: EffVariant,
        policy: PolePolicy,
    ) -> Result<Self> {
        params.validate()?;
        if params.lambda == 0.0 {
            return Err(Error::Domain(
                "the effective chain requires lambda > 0".into(),
            ));
        }
        let (m, mdag) = m_ops(layout)?;
        let r = r_op(layout)?;
        let g = rotation_generators(params, layout, policy)?;
        let u1 = expm_hermitian(&g.k1, 1.0)?;
        let u2 = expm_hermitian(&g.k2, 1.0)?;
        let w = u2.matmul(&u1).matmul(&r).matmul(&m);
        let w_sparse = SparseMatrix::from_dense(&w);
        let effective =
            SpectralDecomposition::new(&hamiltonians::build_h_effective(params, layout, variant)?)?;
        Ok(TransformChain {
            params: *params,
            layout,
            variant,
            m,
            mdag,
            r,
            u1,
            u2,
            neutralized: g.neutralized,
            wdag_sparse: w_sparse.adjoint(),
            w_sparse,
            w,
            vacuum: VacuumPart::new(params, layout)?,
            effective,
        })
    }

    pub(crate) fn propagator_sparse(&self, t: f64) -> SparseMatrix {
        let core = self
            .wdag_sparse
            .matmul(&self.effective.propagator_sparse(t))
            .matmul(&self.w_sparse);
        self.vacuum.finish(core, t)
    }

    pub fn propagator(&self, t: f64) -> OperatorMatrix {
        self.propagator_sparse(t)
            .to_dense()
            .with_layout(self.layout)
            .expect("layout preserved")
    }

    pub fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let after_rho = self.vacuum.evolve(psi, t);
        let inner = self.effective.evolve(&self.w_sparse.apply(&after_rho), t);
        let mut out = self.wdag_sparse.apply(&inner);
        self.vacuum.add_vacuum_term(&mut out, &after_rho);
        out
    }

    /// `W = U₂U₁RM`.
    pub fn forward_map(&self) -> &OperatorMatrix {
        &self.w
    }
}

/// `Û_eff(t)` as a matrix; see [`TransformChain`].
pub fn effective_propagator(
    t: f64,
    params: &SystemParams,
    layout: TensorLayout,
    variant: EffVariant,
) -> Result<OperatorMatrix> {
    Ok(TransformChain::new(params, layout, variant)?.propagator(t))
}

/// `‖(A − B)·P_interior‖_max`, the distance used for propagators built
/// through `M`.
pub fn interior_distance(a: &OperatorMatrix, b: &OperatorMatrix, layout: TensorLayout) -> f64 {
    interior_distance_sparse(
        &SparseMatrix::from_dense(a),
        &SparseMatrix::from_dense(b),
        layout,
    )
}

pub(crate) fn interior_distance_sparse(
    a: &SparseMatrix,
    b: &SparseMatrix,
    layout: TensorLayout,
) -> f64 {
    a.max_abs_diff_columns(b, |j| layout.is_interior(j))
}

#[cfg(test)]
fn interior_distance_dense(a: &OperatorMatrix, b: &OperatorMatrix, layout: TensorLayout) -> f64 {
    let d = layout.total_dim();
    let mut worst = 0.0f64;
    for j in (0..d).filter(|&j| layout.is_interior(j)) {
        for i in 0..d {
            worst = worst.max((a.get(i, j) - b.get(i, j)).norm());
        }
    }
    worst
}
