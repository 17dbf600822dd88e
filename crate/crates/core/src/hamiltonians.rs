//! Hamiltonians of the mirror-field-atom problem and the coefficients of its
//! reduction.
//!
//! Every builder returns a full-space operator on a [`TensorLayout`]. Field
//! functions such as `√(n̂+1)` or `ξ(n̂)` are diagonal in the photon number
//! and commute with all atomic and mirror operators, so they are applied
//! sector by sector as diagonal matrices.

use crate::error::{Error, Result};
use crate::layout::TensorLayout;
use crate::matrix::{OperatorMatrix, HERMITIAN_HINT_TOL};
use crate::ops::OperatorSet;
use crate::params::{EffVariant, SystemParams};
use crate::transforms;

/// Lab-frame models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabModel {
    /// Field and mirror only.
    FieldMirror,
    /// Field, mirror and a two-level atom.
    AtomFieldMirror,
}

fn finish(h: OperatorMatrix, layout: TensorLayout) -> Result<OperatorMatrix> {
    let h = h.with_layout(layout)?;
    h.check_hermitian(HERMITIAN_HINT_TOL)?;
    Ok(h.with_hermitian_hint(true))
}

/// `ω a†a + ν b†b − g a†a(b†+b)`, plus `ω₀σ_z/2 + λ(aσ₊ + a†σ₋)` for the
/// atom model. The mirror coupling is `g = |χ|`.
pub fn build_h_lab(
    params: &SystemParams,
    layout: TensorLayout,
    model: LabModel,
) -> Result<OperatorMatrix> {
    params.validate()?;
    let o = OperatorSet::new(layout)?;
    let g = params.chi.abs();
    let mut h = &(&o.n * params.omega) + &(&o.big_n * params.nu);
    h = &h - &o.n.matmul(&o.x).scale(g);
    if model == LabModel::AtomFieldMirror {
        h = &h + &(&o.sigma_z * (params.omega0 / 2.0));
        h = &h + &jaynes_cummings(&o, params.lambda);
    }
    finish(h, layout)
}

fn jaynes_cummings(o: &OperatorSet, lambda: f64) -> OperatorMatrix {
    let jc = &o.a.matmul(&o.sigma_plus) + &o.adag.matmul(&o.sigma_minus);
    &jc * lambda
}

/// Interaction-picture Hamiltonian `ν N̂ + χ n̂(b+b†) + λ(aσ₊ + a†σ₋)`.
///
/// Requires `ω = ω₀`.
pub fn build_h_int(params: &SystemParams, layout: TensorLayout) -> Result<OperatorMatrix> {
    params.validate()?;
    params.check_resonance()?;
    build_h_int_with(&OperatorSet::new(layout)?, params)
}

pub(crate) fn build_h_int_with(o: &OperatorSet, params: &SystemParams) -> Result<OperatorMatrix> {
    let h = &(&o.big_n * params.nu) + &o.n.matmul(&o.x).scale(params.chi);
    finish(&h + &jaynes_cummings(o, params.lambda), o.layout)
}

/// `H̃` in atomic block form (row 1 = `|e⟩`):
///
/// ```text
/// [ ν N̂ + χ n̂ (b+b†)      λ√(n̂+1)              ]
/// [ λ√(n̂+1)              ν N̂ + χ(n̂+1)(b+b†)   ]
/// ```
///
/// Every field operator in it is a function of `n̂`.
pub fn build_h_tilde(params: &SystemParams, layout: TensorLayout) -> Result<OperatorMatrix> {
    params.validate()?;
    build_h_tilde_with(&OperatorSet::new(layout)?, params)
}

pub(crate) fn build_h_tilde_with(o: &OperatorSet, params: &SystemParams) -> Result<OperatorMatrix> {
    let chi_n = o.field_function(|n| params.chi * n as f64);
    let chi_n1 = o.field_function(|n| params.chi * (n + 1) as f64);
    let rabi = o.field_function(|n| params.rabi(n));
    let diag_e = &(&o.big_n * params.nu) + &chi_n.matmul(&o.x);
    let diag_g = &(&o.big_n * params.nu) + &chi_n1.matmul(&o.x);
    let h = &(&o.proj_e.matmul(&diag_e) + &o.proj_g.matmul(&diag_g)) + &rabi.matmul(&o.sigma_x);
    finish(h, o.layout)
}

/// `ρ̂₂₂⁰ = |g⟩⟨g| ⊗ |0⟩⟨0| ⊗ ν N̂`.
pub fn build_rho22(params: &SystemParams, layout: TensorLayout) -> Result<OperatorMatrix> {
    params.validate()?;
    build_rho22_with(&OperatorSet::new(layout)?, params)
}

pub(crate) fn build_rho22_with(o: &OperatorSet, params: &SystemParams) -> Result<OperatorMatrix> {
    let vacuum = o.field_function(|n| if n == 0 { 1.0 } else { 0.0 });
    let h = o.proj_g.matmul(&vacuum).matmul(&o.big_n).scale(params.nu);
    finish(h, o.layout)
}

/// `Ĥ_V = M† H̃ M`.
pub fn build_h_v(params: &SystemParams, layout: TensorLayout) -> Result<OperatorMatrix> {
    build_h_v_from(&build_h_tilde(params, layout)?, layout)
}

pub(crate) fn build_h_v_from(
    h_tilde: &OperatorMatrix,
    layout: TensorLayout,
) -> Result<OperatorMatrix> {
    let (m, mdag) = transforms::m_ops(layout)?;
    finish(mdag.matmul(h_tilde).matmul(&m), layout)
}

/// `H_R = ν N̂ + χ(n̂+½)(b+b†) + λσ_z√(n̂+1) + (χ/2)(σ₊+σ₋)(b+b†)`.
pub fn build_h_rotated(params: &SystemParams, layout: TensorLayout) -> Result<OperatorMatrix> {
    params.validate()?;
    build_h_rotated_with(&OperatorSet::new(layout)?, params)
}

pub(crate) fn build_h_rotated_with(
    o: &OperatorSet,
    params: &SystemParams,
) -> Result<OperatorMatrix> {
    let kappa = o.field_function(|n| params.chi * (n as f64 + 0.5));
    let rabi = o.field_function(|n| params.rabi(n));
    let mut h = &(&o.big_n * params.nu) + &kappa.matmul(&o.x);
    h = &h + &rabi.matmul(&o.sigma_z);
    h = &h + &o.sigma_x.matmul(&o.x).scale(params.chi / 2.0);
    finish(h, o.layout)
}

/// Small-rotation angles for one photon sector, with the closed forms of
/// their sum and difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiCoefficients {
    pub n: usize,
    pub xi1: f64,
    pub xi2: f64,
    /// `λχ√(n+1) / (λ²(n+1) − ν²)`.
    pub xi_sum: f64,
    /// `χν / (λ²(n+1) − ν²)`.
    pub xi_diff: f64,
}

/// `ξ₁ = χ / (2(ν + λ√(n+1)))`, `ξ₂ = −χ / (2(ν − λ√(n+1)))`.
///
/// These are the angles that remove the `b†σ₊ + bσ₋` and `bσ₊ + b†σ₋`
/// couplings in the first-order expansion as it is usually written. Fails
/// within the pole guard of `ν = λ√(n+1)`.
pub fn xi_coefficients(n: usize, params: &SystemParams) -> Result<XiCoefficients> {
    params.check_pole(n)?;
    let rabi = params.rabi(n);
    let (nu, chi) = (params.nu, params.chi);
    let denom = rabi * rabi - nu * nu;
    Ok(XiCoefficients {
        n,
        xi1: chi / (2.0 * (nu + rabi)),
        xi2: -chi / (2.0 * (nu - rabi)),
        xi_sum: params.lambda * chi * ((n + 1) as f64).sqrt() / denom,
        xi_diff: chi * nu / denom,
    })
}

/// Source of the rotation angles used by the first-order Hamiltonian and
/// the cancellation residuals.
#[derive(Debug, Clone, PartialEq)]
pub enum XiChoice {
    /// The closed-form angles of [`xi_coefficients`].
    Chosen,
    /// `ξ₁ = ξ₂ = 0`.
    Zero,
    /// Caller-supplied `(ξ₁, ξ₂)` per photon number, indexed by `n`.
    Custom(Vec<(f64, f64)>),
}

impl XiChoice {
    pub fn resolve(&self, n: usize, params: &SystemParams) -> Result<(f64, f64)> {
        match self {
            XiChoice::Chosen => xi_coefficients(n, params).map(|x| (x.xi1, x.xi2)),
            XiChoice::Zero => Ok((0.0, 0.0)),
            XiChoice::Custom(values) => values.get(n).copied().ok_or_else(|| {
                Error::Domain(format!(
                    "custom rotation angles missing for photon number {n}"
                ))
            }),
        }
    }
}

/// Form of the first-order expansion of `U₂U₁ H_R U₁†U₂†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpansionForm {
    /// `H_R + [S₁+S₂, H_R]` evaluated with Pauli `σ_z`, whose commutators
    /// are `[σ_z, σ±] = ±2σ±`. This is the true first-order expansion.
    #[default]
    Consistent,
    /// The expansion as usually printed. Its commutator algebra uses
    /// `[σ_z, σ±] = ±σ±` while `H_R` carries Pauli `σ_z`, so it differs from
    /// the true expansion at first order: the residual brackets contain
    /// `λ√(n̂+1)` instead of `2λ√(n̂+1)`, and the `σ_z(b+b†)²` term carries
    /// `χ` instead of `χ/2`.
    AsPrinted,
}

/// The per-sector coefficients of the first-order Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderCoefficients {
    /// Multiplies `σ_z (b+b†)²`.
    pub squeeze: f64,
    /// `ξ₂ − ξ₁`; multiplies `(χ/2)·I + χ(n+½)σ_x`.
    pub xi_diff: f64,
    /// Residual coefficient of `b†σ₊ + bσ₋`.
    pub c_jc: f64,
    /// Residual coefficient of `bσ₊ + b†σ₋`.
    pub c_ajc: f64,
}

/// Evaluates the first-order coefficients for photon number `n` and angles
/// `(ξ₁, ξ₂)`.
pub fn first_order_coefficients(
    n: usize,
    xi: (f64, f64),
    params: &SystemParams,
    form: ExpansionForm,
) -> FirstOrderCoefficients {
    let (xi1, xi2) = xi;
    let (nu, chi) = (params.nu, params.chi);
    // Effective splitting seen by the commutator algebra.
    let split = match form {
        ExpansionForm::Consistent => 2.0 * params.rabi(n),
        ExpansionForm::AsPrinted => params.rabi(n),
    };
    let squeeze_factor = match form {
        ExpansionForm::Consistent => chi / 2.0,
        ExpansionForm::AsPrinted => chi,
    };
    FirstOrderCoefficients {
        squeeze: (xi1 + xi2) * squeeze_factor,
        xi_diff: xi2 - xi1,
        c_jc: chi / 2.0 - xi1 * (nu + split),
        c_ajc: chi / 2.0 + xi2 * (nu - split),
    }
}

/// First-order expansion of the small-rotation conjugation of `H_R`:
///
/// ```text
/// ν N̂ + λ√(n̂+1)σ_z + χ(n̂+½)(b+b†) + c_sq σ_z(b+b†)²
///   + (ξ₂−ξ₁)[(χ/2)(σ₊+σ₋)² + χ(n̂+½)(σ₊+σ₋)]
///   + c_jc (b†σ₊ + bσ₋) + c_ajc (bσ₊ + b†σ₋)
/// ```
///
/// with all coefficients functions of `n̂` (see [`first_order_coefficients`]).
/// With [`XiChoice::Chosen`] and [`ExpansionForm::AsPrinted`] both residual
/// coefficients vanish identically.
pub fn build_h2_first_order(
    params: &SystemParams,
    layout: TensorLayout,
    xi: &XiChoice,
    form: ExpansionForm,
) -> Result<OperatorMatrix> {
    params.validate()?;
    let o = OperatorSet::new(layout)?;
    let coeffs = (0..layout.field_dim())
        .map(|n| {
            Ok(first_order_coefficients(
                n,
                xi.resolve(n, params)?,
                params,
                form,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let by_n = |f: fn(&FirstOrderCoefficients) -> f64| o.field_function(|n| f(&coeffs[n]));

    let kappa = o.field_function(|n| params.chi * (n as f64 + 0.5));
    let rabi = o.field_function(|n| params.rabi(n));
    let mut h = &(&o.big_n * params.nu) + &rabi.matmul(&o.sigma_z);
    h = &h + &kappa.matmul(&o.x);
    h = &h + &by_n(|c| c.squeeze).matmul(&o.sigma_z).matmul(&o.x2);

    let sigma_x_sq = o.sigma_x.matmul(&o.sigma_x);
    let bracket = &sigma_x_sq.scale(params.chi / 2.0) + &kappa.matmul(&o.sigma_x);
    h = &h + &by_n(|c| c.xi_diff).matmul(&bracket);

    let jc = &o.bdag.matmul(&o.sigma_plus) + &o.b.matmul(&o.sigma_minus);
    let ajc = &o.b.matmul(&o.sigma_plus) + &o.bdag.matmul(&o.sigma_minus);
    h = &h + &by_n(|c| c.c_jc).matmul(&jc);
    h = &h + &by_n(|c| c.c_ajc).matmul(&ajc);
    finish(h, layout)
}

/// Quadratic mirror coefficient of the effective Hamiltonian in the
/// `(n, s)` sector, before the optional `σ_z` factor: `χ²/(λ√(n+1))`.
fn quadratic_coefficient(n: usize, params: &SystemParams) -> Result<f64> {
    if params.lambda == 0.0 {
        return Err(Error::Domain(
            "the effective Hamiltonian divides by lambda*sqrt(n+1); lambda must be positive".into(),
        ));
    }
    Ok(params.chi * params.chi / params.rabi(n))
}

/// Effective dispersive Hamiltonian
/// `ν N̂ + χ(n̂+½)(b+b†) + λ√(n̂+1)σ_z + (χ²/(λ√(n̂+1))) [σ_z] (b+b†)²`,
/// where the bracketed `σ_z` is present for [`EffVariant::Derivation`].
///
/// It commutes with `n̂` and `σ_z`, so it is block diagonal in `(n, s)`.
pub fn build_h_effective(
    params: &SystemParams,
    layout: TensorLayout,
    variant: EffVariant,
) -> Result<OperatorMatrix> {
    params.validate()?;
    build_h_effective_with(&OperatorSet::new(layout)?, params, variant)
}

pub(crate) fn build_h_effective_with(
    o: &OperatorSet,
    params: &SystemParams,
    variant: EffVariant,
) -> Result<OperatorMatrix> {
    let quad = (0..o.layout.field_dim())
        .map(|n| quadratic_coefficient(n, params))
        .collect::<Result<Vec<_>>>()?;
    let kappa = o.field_function(|n| params.chi * (n as f64 + 0.5));
    let rabi = o.field_function(|n| params.rabi(n));
    let q = o.field_function(|n| quad[n]);
    let mut h = &(&o.big_n * params.nu) + &kappa.matmul(&o.x);
    h = &h + &rabi.matmul(&o.sigma_z);
    let squeeze = match variant {
        EffVariant::Derivation => q.matmul(&o.sigma_z).matmul(&o.x2),
        EffVariant::AsPrinted => q.matmul(&o.x2),
    };
    finish(&h + &squeeze, o.layout)
}

/// The effective Hamiltonian restricted to photon number `n` and `σ_z = s`:
/// `ν N̂ + κ(b+b†) + μ(b+b†)² + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorSpec {
    pub n: usize,
    pub s: i8,
    pub kappa: f64,
    pub mu: f64,
    pub offset: f64,
    /// `ν + 4μ > 0`: the sector is a bounded oscillator.
    pub stable: bool,
}

pub fn sector_params(
    n: usize,
    s: i8,
    params: &SystemParams,
    variant: EffVariant,
) -> Result<SectorSpec> {
    if s != 1 && s != -1 {
        return Err(Error::Domain(format!(
            "sigma_z eigenvalue must be +1 or -1, got {s}"
        )));
    }
    params.validate()?;
    let q = quadratic_coefficient(n, params)?;
    let sign = f64::from(s);
    let mu = match variant {
        EffVariant::Derivation => sign * q,
        EffVariant::AsPrinted => q,
    };
    Ok(SectorSpec {
        n,
        s,
        kappa: params.chi * (n as f64 + 0.5),
        mu,
        offset: sign * params.rabi(n),
        stable: params.nu + 4.0 * mu > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{EXCITED, GROUND};
    use crate::matrix::{C64, ZERO};

    fn layout(f: usize, m: usize) -> TensorLayout {
        TensorLayout::new(f, m).unwrap()
    }

    fn real(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn field_mirror_decoupled_limit() {
        let l = layout(4, 3);
        let p = SystemParams {
            omega: 1.3,
            ..SystemParams::resonant(0.4, 1.0, 0.0)
        };
        let h = build_h_lab(&p, l, LabModel::FieldMirror).unwrap();
        assert!(h.is_diagonal());
        for i in 0..l.total_dim() {
            let (_, n, m) = l.decompose(i);
            assert_eq!(h.get(i, i), real(1.3 * n as f64 + 0.4 * m as f64));
        }
    }

    #[test]
    fn field_vacuum_decouples_mirror_displacement() {
        let l = layout(4, 4);
        let p = SystemParams::resonant(0.4, 1.0, 0.2);
        let h = build_h_lab(&p, l, LabModel::FieldMirror).unwrap();
        for a in 0..2 {
            for m in 0..4 {
                for mp in 0..4 {
                    let v = h.get(l.index(a, 0, m), l.index(a, 0, mp));
                    let expected = if m == mp { 0.4 * m as f64 } else { 0.0 };
                    assert_eq!(v, real(expected));
                }
            }
        }
    }

    #[test]
    fn atom_field_mirror_free_limit() {
        let l = layout(3, 3);
        let p = SystemParams {
            omega: 1.3,
            omega0: 0.7,
            ..SystemParams::resonant(0.4, 0.0, 0.0)
        };
        let h = build_h_lab(&p, l, LabModel::AtomFieldMirror).unwrap();
        assert!(h.is_diagonal());
        for i in 0..l.total_dim() {
            let (a, n, m) = l.decompose(i);
            let s = if a == EXCITED { 1.0 } else { -1.0 };
            let e = 0.7 * s / 2.0 + 1.3 * n as f64 + 0.4 * m as f64;
            assert!((h.get(i, i).re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn h_int_action_on_ground_vacuum_phonon() {
        let l = layout(4, 4);
        let p = SystemParams::resonant(0.3, 1.1, 0.07);
        let h = build_h_int(&p, l).unwrap();
        let mut psi = vec![ZERO; l.total_dim()];
        psi[l.index(GROUND, 0, 1)] = real(1.0);
        let out = h.apply(&psi);
        for (i, v) in out.iter().enumerate() {
            let expected = if i == l.index(GROUND, 0, 1) { 0.3 } else { 0.0 };
            assert!((v - real(expected)).norm() < 1e-15);
        }
    }

    #[test]
    fn h_int_rejects_detuning() {
        let p = SystemParams {
            omega0: 1.2,
            ..SystemParams::resonant(0.3, 1.0, 0.1)
        };
        assert!(matches!(
            build_h_int(&p, layout(3, 3)),
            Err(Error::ModelAssumption(_))
        ));
    }

    #[test]
    fn h_int_limits() {
        let l = layout(5, 4);
        let o = OperatorSet::new(l).unwrap();
        let no_mirror = build_h_int(&SystemParams::resonant(0.3, 1.0, 0.0), l).unwrap();
        let jc = &(&o.big_n * 0.3) + &jaynes_cummings(&o, 1.0);
        assert_eq!(no_mirror.max_abs_diff(&jc), 0.0);
        let no_atom = build_h_int(&SystemParams::resonant(0.3, 0.0, 0.2), l).unwrap();
        assert_eq!(no_atom.commutator(&o.n).max_abs(), 0.0);
        // Excitation number n + σ_z/2 is conserved.
        let full = build_h_int(&SystemParams::resonant(0.3, 1.0, 0.2), l).unwrap();
        let exc = &o.n + &(&o.sigma_z * 0.5);
        assert!(full.commutator(&exc).max_abs() <= 1e-12);
    }

    #[test]
    fn h_tilde_reading() {
        let l = layout(4, 3);
        let p = SystemParams::resonant(0.3, 0.9, 0.05);
        let h = build_h_tilde(&p, l).unwrap();
        for n in 0..4 {
            for m in 0..3 {
                for mp in 0..3 {
                    let v = h.get(l.index(EXCITED, n, m), l.index(GROUND, n, mp));
                    let expected = if m == mp {
                        0.9 * ((n + 1) as f64).sqrt()
                    } else {
                        0.0
                    };
                    assert!((v - real(expected)).norm() < 1e-15);
                }
            }
        }
        let o = OperatorSet::new(l).unwrap();
        assert_eq!(h.commutator(&o.n).max_abs(), 0.0);
    }

    #[test]
    fn h_tilde_single_sector_by_hand() {
        // n = 0, N_m = 2, basis (e,0,0), (e,0,1), (g,0,0), (g,0,1):
        // the e block is ν N̂, the g block ν N̂ + χ(b+b†), coupling λ.
        let (nu, lam, chi) = (0.3, 0.8, 0.11);
        let expected = OperatorMatrix::from_real_rows(&[
            &[0.0, 0.0, lam, 0.0],
            &[0.0, nu, 0.0, lam],
            &[lam, 0.0, 0.0, chi],
            &[0.0, lam, chi, nu],
        ]);
        let l = layout(2, 2);
        let h = build_h_tilde(&SystemParams::resonant(nu, lam, chi), l).unwrap();
        let idx = [
            l.index(EXCITED, 0, 0),
            l.index(EXCITED, 0, 1),
            l.index(GROUND, 0, 0),
            l.index(GROUND, 0, 1),
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert!(
                    (h.get(idx[r], idx[c]) - expected.get(r, c)).norm() < 1e-15,
                    "({r},{c})"
                );
            }
        }
    }

    #[test]
    fn rho22_support() {
        let l = layout(3, 4);
        let rho = build_rho22(&SystemParams::resonant(0.25, 1.0, 0.1), l).unwrap();
        assert!(rho.is_diagonal());
        for i in 0..l.total_dim() {
            let (a, n, m) = l.decompose(i);
            let expected = if a == GROUND && n == 0 {
                0.25 * m as f64
            } else {
                0.0
            };
            assert_eq!(rho.get(i, i), real(expected));
        }
    }

    #[test]
    fn rotated_diagonal_and_chi_zero_limit() {
        let l = layout(4, 3);
        let p = SystemParams::resonant(0.2, 1.5, 0.0);
        let h = build_h_rotated(&p, l).unwrap();
        assert!(h.is_diagonal());
        let h = build_h_rotated(&p.with_chi(0.03), l).unwrap();
        for n in 0..4 {
            for m in 0..3 {
                let i = l.index(EXCITED, n, m);
                let expected = 0.2 * m as f64 + 1.5 * ((n + 1) as f64).sqrt();
                assert!((h.get(i, i).re - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn xi_examples() {
        let zero = xi_coefficients(0, &SystemParams::resonant(1.0, 10.0, 0.0)).unwrap();
        assert_eq!((zero.xi1, zero.xi2), (0.0, 0.0));
        let x = xi_coefficients(0, &SystemParams::resonant(1.0, 10.0, 0.1)).unwrap();
        assert!((x.xi1 - 0.1 / 22.0).abs() < 1e-16);
        assert!((x.xi2 - 0.1 / 18.0).abs() < 1e-16);
        assert!((x.xi1 - 0.0045455).abs() < 1e-7);
        assert!((x.xi2 - 0.0055556).abs() < 1e-7);
        assert!(((x.xi1 + x.xi2) - x.xi_sum).abs() <= 1e-12 * x.xi_sum.abs());
        assert!(((x.xi2 - x.xi1) - x.xi_diff).abs() <= 1e-12 * x.xi_diff.abs());
        // ν = λ√(n+1) at n = 3.
        let pole = SystemParams::resonant(2.0, 1.0, 0.1);
        assert!(matches!(
            xi_coefficients(3, &pole),
            Err(Error::Pole { n: 3, .. })
        ));
    }

    #[test]
    fn first_order_zero_rotation_is_h_rotated() {
        let l = layout(4, 5);
        let p = SystemParams::resonant(0.1, 1.0, 0.04);
        let r = build_h_rotated(&p, l).unwrap();
        for form in [ExpansionForm::Consistent, ExpansionForm::AsPrinted] {
            let h2 = build_h2_first_order(&p, l, &XiChoice::Zero, form).unwrap();
            assert!(h2.max_abs_diff(&r) <= 1e-15 * r.max_abs());
        }
    }

    #[test]
    fn as_printed_chosen_angles_cancel_exchange_terms() {
        let p = SystemParams::resonant(0.1, 1.0, 0.04);
        for n in 0..10 {
            let xi = XiChoice::Chosen.resolve(n, &p).unwrap();
            let c = first_order_coefficients(n, xi, &p, ExpansionForm::AsPrinted);
            assert!(c.c_jc.abs() <= 1e-14 * p.chi.abs());
            assert!(c.c_ajc.abs() <= 1e-14 * p.chi.abs());
            // The Pauli-consistent expansion leaves a residual with the same angles.
            let c = first_order_coefficients(n, xi, &p, ExpansionForm::Consistent);
            assert!(c.c_jc.abs() > 1e-3 * p.chi.abs());
        }
    }

    #[test]
    fn effective_hamiltonian_structure() {
        let l = layout(4, 5);
        let o = OperatorSet::new(l).unwrap();
        let p = SystemParams::resonant(0.1, 1.0, 0.0);
        let free = &(&o.big_n * 0.1)
            + &o.field_function(|n| ((n + 1) as f64).sqrt())
                .matmul(&o.sigma_z);
        for v in EffVariant::ALL {
            assert_eq!(
                build_h_effective(&p, l, v).unwrap().max_abs_diff(&free),
                0.0
            );
            let h = build_h_effective(&p.with_chi(0.05), l, v).unwrap();
            assert_eq!(h.commutator(&o.sigma_z).max_abs(), 0.0);
            assert_eq!(h.commutator(&o.n).max_abs(), 0.0);
        }
        let no_lambda = SystemParams::resonant(0.1, 0.0, 0.05);
        assert!(matches!(
            build_h_effective(&no_lambda, l, EffVariant::Derivation),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sector_examples() {
        let p = SystemParams::resonant(1.0, 1.0, 0.5);
        let s = sector_params(0, 1, &p, EffVariant::AsPrinted).unwrap();
        assert_eq!((s.kappa, s.mu, s.offset, s.stable), (0.25, 0.25, 1.0, true));
        let free = sector_params(3, -1, &p.with_chi(0.0), EffVariant::Derivation).unwrap();
        assert_eq!((free.kappa, free.mu), (0.0, 0.0));
        assert_eq!(free.offset, -2.0);
        let d = sector_params(0, -1, &p, EffVariant::Derivation).unwrap();
        assert_eq!(d.mu, -0.25);
        let a = sector_params(0, -1, &p, EffVariant::AsPrinted).unwrap();
        assert_eq!(a.mu, 0.25);
        assert!(sector_params(0, 0, &p, EffVariant::AsPrinted).is_err());
        assert!(sector_params(
            0,
            1,
            &SystemParams::resonant(1.0, 0.0, 0.5),
            EffVariant::AsPrinted
        )
        .is_err());
    }
}
