//! Exact-identity and property checks on a configured truncation.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hamiltonians::{self, ExpansionForm, XiChoice};
use crate::layout::TensorLayout;
use crate::matrix::OperatorMatrix;
use crate::ops::{field_function, ladder_ops, sg_ops, OperatorSet};
use crate::output::{Cell, Tabular};
use crate::params::SystemParams;
use crate::spectral::SpectralDecomposition;
use crate::transforms::{self, FormulaPropagator};

/// Times `tλ` at which the composed propagator is checked.
pub const CHECK_TIMES: [f64; 3] = [1.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub params: SystemParams,
    pub field_dim: usize,
    pub mirror_dim: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Fixed-width pass/fail table for terminals.
    pub fn table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!(
            "{:<width$}  {:>12}  {:>12}  result\n",
            "check", "value", "tolerance"
        );
        for c in &self.checks {
            out += &format!(
                "{:<width$}  {:>12.3e}  {:>12.3e}  {}\n",
                c.name,
                c.value,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

impl Tabular for ValidationReport {
    fn columns(&self) -> Vec<String> {
        ["check", "value", "tolerance", "passed"]
            .map(String::from)
            .to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        self.checks
            .iter()
            .map(|c| {
                vec![
                    Cell::Text(c.name.clone()),
                    Cell::Num(c.value),
                    Cell::Num(c.tolerance),
                    Cell::Int(i64::from(c.passed)),
                ]
            })
            .collect()
    }
}

/// Runs the identity suite.
///
/// Exact identities hold to rounding: `M†H̃M + ρ̂₂₂⁰ = Ĥ` and the composed
/// propagator agree with the direct ones on the interior subspace, and with
/// the chosen angles the printed expansion cancels the exchange terms. The
/// property checks cover hermiticity, unitarity, conservation of
/// `n̂ + σ_z/2` and the truncated ladder and phase-operator algebra.
pub fn run_validation(params: &SystemParams, layout: TensorLayout) -> Result<ValidationReport> {
    params.validate()?;
    params.check_resonance()?;
    let mut checks = Vec::new();
    let o = OperatorSet::new(layout)?;
    let h = hamiltonians::build_h_int_with(&o, params)?;
    let h_scale = h.max_abs();
    let h_tilde = hamiltonians::build_h_tilde_with(&o, params)?;
    let rho = hamiltonians::build_rho22_with(&o, params)?;
    let h_v = hamiltonians::build_h_v_from(&h_tilde, layout)?;

    checks.push(Check::new(
        "decomposition M'HtM + rho = H (interior, relative)",
        transforms::interior_distance(&(&h_v + &rho), &h, layout) / h_scale.max(f64::MIN_POSITIVE),
        1e-12,
    ));
    checks.push(Check::new(
        "commutator [H_V, rho]",
        h_v.commutator(&rho).max_abs(),
        1e-12,
    ));
    let r = transforms::r_op(layout)?;
    checks.push(Check::new(
        "rotation R Ht R' = H_R",
        r.conjugate(&h_tilde)
            .max_abs_diff(&hamiltonians::build_h_rotated_with(&o, params)?),
        1e-12,
    ));

    let direct = SpectralDecomposition::new(&h)?;
    let formula = FormulaPropagator::from_tilde(params, layout, &h_tilde)?;
    let time_unit = if params.lambda > 0.0 {
        1.0 / params.lambda
    } else {
        1.0
    };
    for tl in CHECK_TIMES {
        let t = tl * time_unit;
        let u = direct.propagator(t);
        checks.push(Check::new(
            format!("formula vs direct propagator, t*lambda = {tl}"),
            transforms::interior_distance(&formula.propagator(t), &u, layout),
            1e-8,
        ));
        checks.push(Check::new(
            format!("unitarity, t*lambda = {tl}"),
            u.unitarity_defect(),
            1e-10,
        ));
    }

    let n_max = layout.field_dim().saturating_sub(2);
    let residuals = transforms::cancellation_residuals(
        params,
        n_max,
        &XiChoice::Chosen,
        ExpansionForm::AsPrinted,
    )?;
    let worst = residuals
        .iter()
        .map(|r| r.c_jc.abs().max(r.c_ajc.abs()))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "cancellation residuals",
        worst,
        1e-14 * params.chi.abs(),
    ));

    let excitation = &o.n + &o.sigma_z.scale(0.5);
    checks.push(Check::new(
        "excitation number conserved",
        h.commutator(&excitation).max_abs(),
        1e-12,
    ));
    checks.push(Check::new(
        "photon number conserved by H_tilde",
        h_tilde.commutator(&o.n).max_abs(),
        1e-12,
    ));
    let h_eff = hamiltonians::build_h_effective_with(&o, params, params.eff_variant);
    // The effective Hamiltonian is undefined at lambda = 0.
    if let Ok(h_eff) = h_eff {
        checks.push(Check::new(
            "hermiticity of H_eff",
            h_eff.hermiticity_deviation(),
            0.0,
        ));
        let z = &o.sigma_z;
        checks.push(Check::new(
            "H_eff block diagonal in (n, sigma_z)",
            h_eff
                .commutator(&o.n)
                .max_abs()
                .max(h_eff.commutator(z).max_abs()),
            1e-12,
        ));
    }
    for (name, op) in [("H", &h), ("H_tilde", &h_tilde), ("H_V", &h_v)] {
        checks.push(Check::new(
            format!("hermiticity of {name}"),
            op.hermiticity_deviation(),
            0.0,
        ));
    }
    checks.extend(algebra_checks(&o)?);

    Ok(ValidationReport {
        params: *params,
        field_dim: layout.field_dim(),
        mirror_dim: layout.mirror_dim(),
        checks,
    })
}

fn algebra_checks(o: &OperatorSet) -> Result<Vec<Check>> {
    let layout = o.layout;
    let f = layout.field_dim();
    let sg = sg_ops(f)?;
    let id = OperatorMatrix::identity(f);
    let corner = |k: usize| {
        let mut p = OperatorMatrix::zeros(f);
        p.set(k, k, crate::matrix::ONE);
        p
    };
    let l = ladder_ops(f)?;
    let mut truncated = id.clone();
    truncated.set(f - 1, f - 1, crate::matrix::C64::new(1.0 - f as f64, 0.0));
    let (m, mdag) = transforms::m_ops(layout)?;
    let total = OperatorMatrix::identity(layout.total_dim());
    Ok(vec![
        Check::new(
            "V'V = I - |0><0|",
            sg.vdag.matmul(&sg.v).max_abs_diff(&(&id - &corner(0))),
            0.0,
        ),
        Check::new(
            "VV' = I - |top><top|",
            sg.v.matmul(&sg.vdag).max_abs_diff(&(&id - &corner(f - 1))),
            0.0,
        ),
        Check::new(
            "[a, a'] = I with truncation corner",
            l.lowering.commutator(&l.raising).max_abs_diff(&truncated),
            1e-12,
        ),
        Check::new(
            "V = (n+1)^(-1/2) a",
            sg.v.max_abs_diff(
                &OperatorMatrix::from_real_diagonal(
                    &(0..f)
                        .map(|n| 1.0 / ((n + 1) as f64).sqrt())
                        .collect::<Vec<_>>(),
                )
                .matmul(&l.lowering),
            ),
            1e-15,
        ),
        Check::new(
            "M'M = I - P_g0",
            mdag.matmul(&m)
                .max_abs_diff(&(&total - &transforms::vacuum_projector(layout))),
            0.0,
        ),
        Check::new(
            "MM' = I - P_top",
            m.matmul(&mdag)
                .max_abs_diff(&(&total - &transforms::top_projector(layout))),
            0.0,
        ),
        Check::new(
            "n commutes with field functions",
            field_function(layout, |n| (n as f64).sqrt())
                .commutator(&o.n)
                .max_abs(),
            0.0,
        ),
    ])
}
