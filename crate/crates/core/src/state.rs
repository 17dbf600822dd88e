//! Product initial states, expectation values, fidelity and truncation
//! leakage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Slot, TensorLayout, EXCITED, GROUND};
use crate::matrix::{OperatorMatrix, C64, ONE, ZERO};

pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_GUARD: usize = 2;

/// Atomic part of a product state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomSpec {
    Excited,
    Ground,
    /// `c_e|e⟩ + c_g|g⟩`, normalized on construction. Amplitudes are `[re, im]`.
    Superposition {
        excited: [f64; 2],
        ground: [f64; 2],
    },
}

/// Field or mirror part of a product state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    Fock(usize),
    /// Coherent amplitude `α = [re, im]`.
    Coherent([f64; 2]),
}

impl ModeSpec {
    pub fn coherent(alpha: f64) -> Self {
        ModeSpec::Coherent([alpha, 0.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub atom: AtomSpec,
    pub field: ModeSpec,
    pub mirror: ModeSpec,
}

impl StateSpec {
    pub fn new(atom: AtomSpec, field: ModeSpec, mirror: ModeSpec) -> Self {
        StateSpec {
            atom,
            field,
            mirror,
        }
    }
}

/// Thresholds applied by [`make_state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateOptions {
    pub leakage_threshold: f64,
    pub guard: usize,
    /// Accept coherent inputs whose leakage exceeds the threshold.
    pub allow_leakage: bool,
}

impl Default for StateOptions {
    fn default() -> Self {
        StateOptions {
            leakage_threshold: DEFAULT_LEAKAGE_THRESHOLD,
            guard: DEFAULT_GUARD,
            allow_leakage: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    layout: TensorLayout,
    leakage: f64,
}

impl StateVector {
    /// Normalizes `amplitudes`; leakage is measured with the default guard.
    pub fn from_amplitudes(amplitudes: Vec<C64>, layout: TensorLayout) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::Layout(format!(
                "state of length {} on layout {}",
                amplitudes.len(),
                layout
            )));
        }
        let norm = norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain(
                "state vector has zero or non-finite norm".into(),
            ));
        }
        let amplitudes: Vec<C64> = amplitudes.into_iter().map(|a| a / norm).collect();
        let mut s = StateVector {
            amplitudes,
            layout,
            leakage: 0.0,
        };
        s.leakage = guard_mass(&s, DEFAULT_GUARD.min(min_dim(layout) - 1));
        Ok(s)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn layout(&self) -> TensorLayout {
        self.layout
    }

    /// Probability mass in (or, for coherent inputs, beyond) the guard band.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Replaces the amplitudes, keeping layout; used for evolved states.
    pub(crate) fn evolved(&self, amplitudes: Vec<C64>) -> Self {
        StateVector {
            amplitudes,
            layout: self.layout,
            leakage: self.leakage,
        }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn min_dim(layout: TensorLayout) -> usize {
    layout.field_dim().min(layout.mirror_dim())
}

/// Raw coherent-state amplitudes `e^{−|α|²/2} αⁿ/√(n!)` for `n < dim`.
fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps.push(c);
    }
    amps
}

/// Poisson mass `Σ_{n ≥ cutoff} e^{−μ} μⁿ/n!` with `μ = |α|²`, summed
/// directly so tiny tails keep full relative precision.
pub fn coherent_tail(alpha_sq: f64, cutoff: usize) -> f64 {
    if alpha_sq == 0.0 {
        return if cutoff == 0 { 1.0 } else { 0.0 };
    }
    let ln_mu = alpha_sq.ln();
    let mut log_p = -alpha_sq;
    for n in 1..=cutoff {
        log_p += ln_mu - (n as f64).ln();
    }
    let stop_after = alpha_sq + 50.0 * alpha_sq.sqrt() + 50.0;
    let mut total = 0.0;
    let mut n = cutoff;
    loop {
        let p = log_p.exp();
        total += p;
        n += 1;
        log_p += ln_mu - (n as f64).ln();
        if n as f64 > alpha_sq && (p <= total * 1e-17 || n as f64 > stop_after) {
            break;
        }
    }
    total.min(1.0)
}

/// Smallest mode dimension whose guard band carries less than `threshold`.
pub fn required_coherent_dim(alpha_sq: f64, guard: usize, threshold: f64) -> usize {
    let mut cutoff = 0;
    while coherent_tail(alpha_sq, cutoff) >= threshold {
        cutoff += 1;
    }
    (cutoff + guard).max(2)
}

fn mode_vector(
    spec: ModeSpec,
    slot: Slot,
    dim: usize,
    opts: &StateOptions,
) -> Result<(Vec<C64>, f64)> {
    let band_start = dim.saturating_sub(opts.guard);
    match spec {
        ModeSpec::Fock(n) => {
            if n >= dim {
                return Err(Error::OutOfRange {
                    slot,
                    index: n,
                    dim,
                });
            }
            let mut v = vec![ZERO; dim];
            v[n] = ONE;
            Ok((v, if n >= band_start { 1.0 } else { 0.0 }))
        }
        ModeSpec::Coherent([re, im]) => {
            let alpha = C64::new(re, im);
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Domain("coherent amplitude must be finite".into()));
            }
            let leak = coherent_tail(alpha.norm_sqr(), band_start);
            if leak > opts.leakage_threshold && !opts.allow_leakage {
                return Err(Error::Truncation {
                    slot,
                    leakage: leak,
                    threshold: opts.leakage_threshold,
                    required_dim: required_coherent_dim(
                        alpha.norm_sqr(),
                        opts.guard,
                        opts.leakage_threshold,
                    ),
                });
            }
            let mut v = coherent_amplitudes(alpha, dim);
            let n = norm(&v);
            v.iter_mut().for_each(|a| *a /= n);
            Ok((v, leak))
        }
    }
}

/// Builds the normalized product state described by `spec`.
///
/// Coherent amplitudes are truncated and renormalized; the recorded
/// leakage is the raw (pre-renormalization) probability of the untruncated
/// state in or beyond the guard band of either mode.
pub fn make_state(
    spec: &StateSpec,
    layout: TensorLayout,
    opts: &StateOptions,
) -> Result<StateVector> {
    if opts.guard >= min_dim(layout) {
        return Err(Error::Domain(format!(
            "guard band {} must be smaller than every mode dimension of {layout}",
            opts.guard
        )));
    }
    let atom = match spec.atom {
        AtomSpec::Excited => {
            let mut v = vec![ZERO; 2];
            v[EXCITED] = ONE;
            v
        }
        AtomSpec::Ground => {
            let mut v = vec![ZERO; 2];
            v[GROUND] = ONE;
            v
        }
        AtomSpec::Superposition { excited, ground } => {
            let mut v = vec![ZERO; 2];
            v[EXCITED] = C64::new(excited[0], excited[1]);
            v[GROUND] = C64::new(ground[0], ground[1]);
            let n = norm(&v);
            if n == 0.0 || !n.is_finite() {
                return Err(Error::Domain("atomic superposition has zero norm".into()));
            }
            v.iter_mut().for_each(|a| *a /= n);
            v
        }
    };
    let (field, leak_f) = mode_vector(spec.field, Slot::Field, layout.field_dim(), opts)?;
    let (mirror, leak_m) = mode_vector(spec.mirror, Slot::Mirror, layout.mirror_dim(), opts)?;

    let mut amplitudes = Vec::with_capacity(layout.total_dim());
    for &ca in &atom {
        for &cf in &field {
            for &cm in &mirror {
                amplitudes.push(ca * cf * cm);
            }
        }
    }
    Ok(StateVector {
        amplitudes,
        layout,
        leakage: 1.0 - (1.0 - leak_f) * (1.0 - leak_m),
    })
}

fn check_op(state: &StateVector, op: &OperatorMatrix) -> Result<()> {
    if op.dim() != state.layout.total_dim() || op.layout().is_some_and(|l| l != state.layout) {
        return Err(Error::Layout(format!(
            "operator of side {} does not act on state layout {}",
            op.dim(),
            state.layout
        )));
    }
    Ok(())
}

/// `⟨ψ|A|ψ⟩`.
pub fn expectation(state: &StateVector, op: &OperatorMatrix) -> Result<C64> {
    check_op(state, op)?;
    let applied = op.apply(&state.amplitudes);
    Ok(state
        .amplitudes
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// `|⟨ψ|φ⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    if psi.layout != phi.layout {
        return Err(Error::Layout(format!(
            "fidelity between layouts {} and {}",
            psi.layout, phi.layout
        )));
    }
    let overlap: C64 = psi
        .amplitudes
        .iter()
        .zip(&phi.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

fn guard_mass(state: &StateVector, guard: usize) -> f64 {
    let l = state.layout;
    let (f0, m0) = (l.field_dim() - guard, l.mirror_dim() - guard);
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let (_, n, m) = l.decompose(*i);
            n >= f0 || m >= m0
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Probability on basis states whose field index is `≥ N_f − guard` or whose
/// mirror index is `≥ N_m − guard`.
pub fn leakage(state: &StateVector, guard: usize) -> Result<f64> {
    if guard >= min_dim(state.layout) {
        return Err(Error::Domain(format!(
            "guard band {guard} must be smaller than every mode dimension of {}",
            state.layout
        )));
    }
    Ok(guard_mass(state, guard))
}

/// Guard-band mass split by mode: `(field, mirror)`.
pub fn leakage_by_mode(state: &StateVector, guard: usize) -> (f64, f64) {
    let l = state.layout;
    let (f0, m0) = (
        l.field_dim().saturating_sub(guard),
        l.mirror_dim().saturating_sub(guard),
    );
    let mut field = 0.0;
    let mut mirror = 0.0;
    for (i, a) in state.amplitudes.iter().enumerate() {
        let (_, n, m) = l.decompose(i);
        if n >= f0 {
            field += a.norm_sqr();
        }
        if m >= m0 {
            mirror += a.norm_sqr();
        }
    }
    (field, mirror)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::OperatorSet;
    use proptest::prelude::*;

    fn layout(f: usize, m: usize) -> TensorLayout {
        TensorLayout::new(f, m).unwrap()
    }

    fn vacuum(atom: AtomSpec) -> StateSpec {
        StateSpec::new(atom, ModeSpec::Fock(0), ModeSpec::Fock(0))
    }

    #[test]
    fn excited_vacuum_is_first_basis_vector() {
        let s = make_state(
            &vacuum(AtomSpec::Excited),
            layout(4, 3),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(s.amplitudes()[0], ONE);
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let spec = StateSpec::new(AtomSpec::Ground, ModeSpec::coherent(0.0), ModeSpec::Fock(0));
        let l = layout(5, 3);
        let s = make_state(&spec, l, &Default::default()).unwrap();
        assert!((s.amplitudes()[l.index(GROUND, 0, 0)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn coherent_alpha_one_vacuum_amplitude() {
        let spec = StateSpec::new(
            AtomSpec::Excited,
            ModeSpec::coherent(1.0),
            ModeSpec::Fock(0),
        );
        let l = layout(32, 3);
        let s = make_state(&spec, l, &Default::default()).unwrap();
        let c0 = s.amplitudes()[l.index(EXCITED, 0, 0)];
        assert!((c0.re - (-0.5f64).exp()).abs() < 1e-12);
        assert!((c0.re - 0.60653).abs() < 1e-5);
        assert!(s.leakage() < 1e-10);
        let ops = OperatorSet::new(l).unwrap();
        let mean_n = expectation(&s, &ops.n).unwrap();
        assert!((mean_n.re - 1.0).abs() < 1e-9);
        assert!(mean_n.im.abs() < 1e-12);
    }

    #[test]
    fn fock_out_of_range() {
        let spec = StateSpec::new(AtomSpec::Excited, ModeSpec::Fock(4), ModeSpec::Fock(0));
        assert!(matches!(
            make_state(&spec, layout(4, 3), &Default::default()),
            Err(Error::OutOfRange {
                slot: Slot::Field,
                index: 4,
                dim: 4
            })
        ));
    }

    #[test]
    fn large_coherent_in_small_space_reports_required_dim() {
        let spec = StateSpec::new(
            AtomSpec::Excited,
            ModeSpec::coherent(4.0),
            ModeSpec::Fock(0),
        );
        match make_state(&spec, layout(8, 4), &Default::default()) {
            Err(Error::Truncation {
                slot,
                required_dim,
                leakage,
                ..
            }) => {
                assert_eq!(slot, Slot::Field);
                assert!(leakage > 0.1);
                assert!(required_dim > 16);
                // The reported dimension is actually sufficient.
                let ok = make_state(&spec, layout(required_dim, 4), &Default::default());
                assert!(ok.is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn leakage_examples() {
        let l = layout(8, 6);
        let vac = make_state(&vacuum(AtomSpec::Excited), l, &Default::default()).unwrap();
        assert_eq!(leakage(&vac, 2).unwrap(), 0.0);
        let top = StateSpec::new(AtomSpec::Excited, ModeSpec::Fock(7), ModeSpec::Fock(0));
        let top = make_state(&top, l, &Default::default()).unwrap();
        assert_eq!(leakage(&top, 1).unwrap(), 1.0);
        let opts = StateOptions {
            allow_leakage: true,
            ..Default::default()
        };
        let hot = StateSpec::new(
            AtomSpec::Excited,
            ModeSpec::coherent(4.0),
            ModeSpec::Fock(0),
        );
        let hot = make_state(&hot, l, &opts).unwrap();
        assert!(leakage(&hot, 2).unwrap() > 0.1);
        assert!(leakage(&vac, 6).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let l = layout(3, 3);
        let e = make_state(&vacuum(AtomSpec::Excited), l, &Default::default()).unwrap();
        let g = make_state(&vacuum(AtomSpec::Ground), l, &Default::default()).unwrap();
        let plus = make_state(
            &vacuum(AtomSpec::Superposition {
                excited: [1.0, 0.0],
                ground: [1.0, 0.0],
            }),
            l,
            &Default::default(),
        )
        .unwrap();
        assert!((fidelity(&e, &e).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&e, &g).unwrap(), 0.0);
        assert!((fidelity(&plus, &e).unwrap() - 0.5).abs() < 1e-15);
        let other = make_state(
            &vacuum(AtomSpec::Excited),
            layout(3, 4),
            &Default::default(),
        )
        .unwrap();
        assert!(fidelity(&e, &other).is_err());
    }

    #[test]
    fn expectation_examples() {
        let l = layout(3, 3);
        let ops = OperatorSet::new(l).unwrap();
        let e = make_state(&vacuum(AtomSpec::Excited), l, &Default::default()).unwrap();
        assert_eq!(expectation(&e, &ops.sigma_z).unwrap(), ONE);
        assert_eq!(expectation(&e, &ops.big_n).unwrap(), ZERO);
        let wrong = OperatorSet::new(layout(3, 4)).unwrap();
        assert!(expectation(&e, &wrong.sigma_z).is_err());
    }

    #[test]
    fn coherent_tail_matches_complement() {
        for (a2, cut) in [(1.0f64, 3usize), (4.0, 2), (16.0, 10)] {
            let head: f64 = (0..cut)
                .map(|n| {
                    let mut p = (-a2).exp();
                    for k in 1..=n {
                        p *= a2 / k as f64;
                    }
                    p
                })
                .sum();
            assert!((coherent_tail(a2, cut) - (1.0 - head)).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn made_states_are_normalized(alpha in 0.0f64..2.0, phase in 0.0f64..std::f64::consts::TAU, f in 14usize..24, m in 3usize..6) {
            let spec = StateSpec::new(
                AtomSpec::Superposition { excited: [0.3, 0.1], ground: [0.5, -0.2] },
                ModeSpec::Coherent([alpha * phase.cos(), alpha * phase.sin()]),
                ModeSpec::Fock(0),
            );
            let opts = StateOptions { allow_leakage: true, ..Default::default() };
            let s = make_state(&spec, layout(f, m), &opts).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn leakage_non_increasing_in_dim(alpha in 0.1f64..4.0, dim in 3usize..40) {
            let opts = StateOptions { allow_leakage: true, ..Default::default() };
            let leak = |d: usize| {
                let spec = StateSpec::new(AtomSpec::Excited, ModeSpec::coherent(alpha), ModeSpec::Fock(0));
                make_state(&spec, layout(d, 3), &opts).unwrap().leakage()
            };
            prop_assert!(leak(dim + 1) <= leak(dim));
        }
    }
}
