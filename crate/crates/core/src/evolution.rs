//! Time evolution, observables, exact-vs-effective comparison, sector
//! spectra and dispersive-regime diagnostics.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{self, sector_params, SectorSpec};
use crate::layout::{Slot, TensorLayout};
use crate::matrix::{OperatorMatrix, C64};
use crate::ops::{ladder_ops, OperatorSet};
use crate::params::{EffVariant, SystemParams};
use crate::sparse::SparseMatrix;
use crate::spectral::SpectralDecomposition;
use crate::state::{self, StateVector, DEFAULT_GUARD, DEFAULT_LEAKAGE_THRESHOLD};
use crate::transforms::{interior_distance_sparse, FormulaPropagator, PolePolicy, TransformChain};

/// Largest rotation angle still considered safely dispersive.
pub const MARGINAL_XI: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        let grid = TimeGrid {
            t_start,
            t_end,
            steps,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_start < 0.0 {
            return Err(Error::Domain("time grid needs finite t_start >= 0".into()));
        }
        if self.t_end <= self.t_start {
            return Err(Error::Domain(format!(
                "time grid needs t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.steps == 0 {
            return Err(Error::Domain("time grid needs at least one step".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    /// The `steps + 1` sample times, both ends included.
    pub fn times(&self) -> Vec<f64> {
        let h = self.step();
        (0..=self.steps)
            .map(|k| {
                if k == self.steps {
                    self.t_end
                } else {
                    self.t_start + k as f64 * h
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionKind {
    /// `exp(−iĤt)` of the interaction-picture Hamiltonian.
    Exact,
    /// The Susskind-Glogower propagator formula.
    Formula,
    /// The transformation chain with the effective Hamiltonian.
    Effective,
}

impl EvolutionKind {
    pub const ALL: [EvolutionKind; 3] = [
        EvolutionKind::Exact,
        EvolutionKind::Formula,
        EvolutionKind::Effective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvolutionKind::Exact => "exact",
            EvolutionKind::Formula => "formula",
            EvolutionKind::Effective => "effective",
        }
    }
}

impl fmt::Display for EvolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvolutionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EvolutionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown evolution kind `{s}`")))
    }
}

/// Observables sampled on a time grid. `energy` is `⟨Ĥ⟩` of the
/// interaction-picture Hamiltonian for every kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub inversion: Vec<f64>,
    pub photon: Vec<f64>,
    pub phonon: Vec<f64>,
    pub quadrature: Vec<f64>,
    pub leakage: Vec<f64>,
    pub energy: Vec<f64>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Run-time thresholds shared by [`evolve`] and [`compare`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub leakage_threshold: f64,
    pub guard: usize,
    /// Record leakage above threshold instead of failing.
    pub allow_leakage: bool,
    /// Proceed even when the regime verdict is invalid.
    pub override_regime: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            leakage_threshold: DEFAULT_LEAKAGE_THRESHOLD,
            guard: DEFAULT_GUARD,
            allow_leakage: false,
            override_regime: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    DispersiveOk,
    Marginal,
    Invalid,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::DispersiveOk => "dispersive_ok",
            Verdict::Marginal => "marginal",
            Verdict::Invalid => "invalid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n_max: usize,
    /// Largest `|ξ₁|`, `|ξ₂|` over the sectors `n ≤ n_max` off the pole.
    pub max_xi1: f64,
    pub max_xi2: f64,
    /// `min |ν − λ√(n+1)|` and the sector attaining it.
    pub min_resonance_distance: f64,
    pub closest_sector: usize,
    pub pole_sectors: Vec<usize>,
    /// `None` when `λ = 0`.
    pub chi_over_lambda: Option<f64>,
    pub nu_over_lambda: Option<f64>,
    pub pole_guard: f64,
    pub marginal_xi: f64,
    pub verdict: Verdict,
}

/// Dispersive-regime diagnostics over photon numbers `0..=n_max`. Never
/// fails; invalid parameters show up in the verdict.
pub fn regime_check(params: &SystemParams, n_max: usize) -> RegimeReport {
    let mut report = RegimeReport {
        n_max,
        max_xi1: 0.0,
        max_xi2: 0.0,
        min_resonance_distance: f64::INFINITY,
        closest_sector: 0,
        pole_sectors: Vec::new(),
        chi_over_lambda: (params.lambda > 0.0).then(|| params.chi / params.lambda),
        nu_over_lambda: (params.lambda > 0.0).then(|| params.nu / params.lambda),
        pole_guard: params.pole_guard,
        marginal_xi: MARGINAL_XI,
        verdict: Verdict::DispersiveOk,
    };
    for n in 0..=n_max {
        let d = params.resonance_distance(n);
        if d < report.min_resonance_distance {
            report.min_resonance_distance = d;
            report.closest_sector = n;
        }
        match hamiltonians::xi_coefficients(n, params) {
            Ok(x) => {
                report.max_xi1 = report.max_xi1.max(x.xi1.abs());
                report.max_xi2 = report.max_xi2.max(x.xi2.abs());
            }
            Err(_) => report.pole_sectors.push(n),
        }
    }
    report.verdict = if !report.pole_sectors.is_empty() || params.validate().is_err() {
        Verdict::Invalid
    } else if report.max_xi1.max(report.max_xi2) > MARGINAL_XI {
        Verdict::Marginal
    } else {
        Verdict::DispersiveOk
    };
    report
}

/// Highest photon sector reachable from `psi`: the largest field index
/// carrying more than `threshold` probability, plus one for the
/// `|e, n⟩ ↔ |g, n+1⟩` exchange, capped at the field cutoff.
pub fn occupied_n_max(psi: &StateVector, threshold: f64) -> usize {
    let layout = psi.layout();
    let mut marginal = vec![0.0; layout.field_dim()];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        marginal[layout.decompose(i).1] += a.norm_sqr();
    }
    let top = marginal.iter().rposition(|&p| p > threshold).unwrap_or(0);
    (top + 1).min(layout.field_dim() - 1)
}

enum Propagator {
    Exact(SpectralDecomposition),
    Formula(Box<FormulaPropagator>),
    Effective(Box<TransformChain>),
}

impl Propagator {
    fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        match self {
            Propagator::Exact(s) => s.evolve(psi, t),
            Propagator::Formula(f) => f.evolve(psi, t),
            Propagator::Effective(c) => c.evolve(psi, t),
        }
    }

    fn matrix(&self, t: f64) -> SparseMatrix {
        match self {
            Propagator::Exact(s) => s.propagator_sparse(t),
            Propagator::Formula(f) => f.propagator_sparse(t),
            Propagator::Effective(c) => c.propagator_sparse(t),
        }
    }
}

fn check_initial(psi0: &StateVector, opts: &EvolveOptions) -> Result<()> {
    let band = state::leakage(psi0, opts.guard)?;
    let leak = band.max(psi0.leakage());
    if leak > opts.leakage_threshold && !opts.allow_leakage {
        return Err(truncation_error(psi0, opts, leak));
    }
    Ok(())
}

/// Builds the truncation error for a state, estimating the dimension the
/// offending mode needs from where its probability mass actually sits.
fn truncation_error(psi: &StateVector, opts: &EvolveOptions, leakage: f64) -> Error {
    let layout = psi.layout();
    let (field, mirror) = state::leakage_by_mode(psi, opts.guard);
    let slot = if field >= mirror {
        Slot::Field
    } else {
        Slot::Mirror
    };
    let dim = layout.slot_dim(slot);
    let mut marginal = vec![0.0; dim];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let (_, n, m) = layout.decompose(i);
        marginal[if slot == Slot::Field { n } else { m }] += a.norm_sqr();
    }
    let mut tail = 0.0;
    let mut cutoff = dim;
    while cutoff > 0 && tail + marginal[cutoff - 1] < opts.leakage_threshold {
        tail += marginal[cutoff - 1];
        cutoff -= 1;
    }
    // Mass reaching the top level means the true support extends further.
    let required_dim = if cutoff == dim {
        dim + opts.guard + 1
    } else {
        cutoff + opts.guard
    };
    Error::Truncation {
        slot,
        leakage,
        threshold: opts.leakage_threshold,
        required_dim: required_dim.max(dim + 1),
    }
}

fn prepare(
    psi0: &StateVector,
    kind: EvolutionKind,
    params: &SystemParams,
    variant: EffVariant,
    opts: &EvolveOptions,
) -> Result<Propagator> {
    let layout = psi0.layout();
    params.validate()?;
    check_initial(psi0, opts)?;
    Ok(match kind {
        EvolutionKind::Exact => Propagator::Exact(SpectralDecomposition::new(
            &hamiltonians::build_h_int(params, layout)?,
        )?),
        EvolutionKind::Formula => {
            Propagator::Formula(Box::new(FormulaPropagator::new(params, layout)?))
        }
        EvolutionKind::Effective => {
            checked_regime(psi0, params, opts)?;
            Propagator::Effective(Box::new(TransformChain::with_policy(
                params,
                layout,
                variant,
                PolePolicy::Neutralize,
            )?))
        }
    })
}

fn checked_regime(
    psi0: &StateVector,
    params: &SystemParams,
    opts: &EvolveOptions,
) -> Result<RegimeReport> {
    let regime = regime_check(params, occupied_n_max(psi0, opts.leakage_threshold));
    if regime.verdict == Verdict::Invalid && !opts.override_regime {
        return Err(Error::RegimeInvalid(format!(
            "small-rotation pole in occupied photon sectors {:?}: min |nu - lambda*sqrt(n+1)| = {:e} at n = {}",
            regime.pole_sectors, regime.min_resonance_distance, regime.closest_sector
        )));
    }
    Ok(regime)
}

struct Observables {
    ops: OperatorSet,
    h: OperatorMatrix,
}

impl Observables {
    fn new(params: &SystemParams, layout: TensorLayout) -> Result<Self> {
        Ok(Observables {
            ops: OperatorSet::new(layout)?,
            h: hamiltonians::build_h_int(params, layout)?,
        })
    }

    fn sample(&self, psi: &StateVector) -> Result<[f64; 5]> {
        let ev = |op: &OperatorMatrix| state::expectation(psi, op).map(|z| z.re);
        Ok([
            ev(&self.ops.sigma_z)?,
            ev(&self.ops.n)?,
            ev(&self.ops.big_n)?,
            ev(&self.ops.x)?,
            ev(&self.h)?,
        ])
    }
}

/// Evolves `psi0` on `grid` and records observables. Every sample is
/// computed directly from `psi0`, so errors do not accumulate along the
/// grid.
pub fn evolve(
    psi0: &StateVector,
    kind: EvolutionKind,
    grid: &TimeGrid,
    params: &SystemParams,
    variant: EffVariant,
    opts: &EvolveOptions,
) -> Result<ObservableSeries> {
    grid.validate()?;
    let propagator = prepare(psi0, kind, params, variant, opts)?;
    let observables = Observables::new(params, psi0.layout())?;
    let times = grid.times();
    let rows = times
        .par_iter()
        .map(|&t| {
            let psi = psi0.evolved(propagator.evolve(psi0.amplitudes(), t));
            let leak = state::leakage(&psi, opts.guard)?;
            if leak > opts.leakage_threshold && !opts.allow_leakage {
                return Err(truncation_error(&psi, opts, leak));
            }
            Ok((observables.sample(&psi)?, leak))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series = ObservableSeries {
        times,
        ..Default::default()
    };
    for ([inv, n, big_n, x, e], leak) in rows {
        series.inversion.push(inv);
        series.photon.push(n);
        series.phonon.push(big_n);
        series.quadrature.push(x);
        series.leakage.push(leak);
        series.energy.push(e);
    }
    Ok(series)
}

/// Fidelity and operator-distance series for one effective variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub variant: EffVariant,
    pub fidelity: Vec<f64>,
    pub min_fidelity: f64,
    pub operator_distance: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub variant: EffVariant,
    pub fidelity: Vec<f64>,
    pub min_fidelity: f64,
    /// `‖(Û_exact − Û_eff) P_interior‖_max` per sample, unless skipped.
    pub operator_distance: Option<Vec<f64>>,
    pub regime: RegimeReport,
    /// Photon sectors on a pole whose rotations were zeroed.
    pub neutralized_sectors: Vec<usize>,
    /// The other variant, when requested.
    pub alternate: Option<VariantComparison>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompareOptions {
    pub evolve: EvolveOptions,
    pub both_variants: bool,
    /// Skip the per-sample propagator distance (the costliest part).
    pub skip_operator_distance: bool,
}

/// Exact versus effective evolution from the same initial state.
pub fn compare(
    psi0: &StateVector,
    params: &SystemParams,
    grid: &TimeGrid,
    variant: EffVariant,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    grid.validate()?;
    let layout = psi0.layout();
    let exact = prepare(psi0, EvolutionKind::Exact, params, variant, &opts.evolve)?;
    let regime = checked_regime(psi0, params, &opts.evolve)?;
    let times = grid.times();
    let exact_states: Vec<StateVector> = times
        .par_iter()
        .map(|&t| psi0.evolved(exact.evolve(psi0.amplitudes(), t)))
        .collect();

    let mut variants = vec![variant];
    if opts.both_variants {
        variants.push(match variant {
            EffVariant::Derivation => EffVariant::AsPrinted,
            EffVariant::AsPrinted => EffVariant::Derivation,
        });
    }
    let chains = variants
        .iter()
        .map(|&v| {
            TransformChain::with_policy(params, layout, v, PolePolicy::Neutralize)
                .map(|c| Propagator::Effective(Box::new(c)))
        })
        .collect::<Result<Vec<_>>>()?;
    let neutralized_sectors = match &chains[0] {
        Propagator::Effective(c) => c.neutralized.clone(),
        _ => unreachable!("chains hold effective propagators"),
    };

    // One row per sample: (fidelity, distance) for each variant.
    let samples = times
        .par_iter()
        .zip(&exact_states)
        .map(|(&t, exact_psi)| {
            let exact_u = (!opts.skip_operator_distance).then(|| exact.matrix(t));
            chains
                .iter()
                .map(|chain| {
                    let psi = psi0.evolved(chain.evolve(psi0.amplitudes(), t));
                    let f = state::fidelity(exact_psi, &psi)?;
                    let d = exact_u
                        .as_ref()
                        .map(|u| interior_distance_sparse(u, &chain.matrix(t), layout));
                    Ok((f, d))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_variant = variants.iter().enumerate().map(|(k, &v)| {
        let (fidelity, distance): (Vec<f64>, Vec<Option<f64>>) =
            samples.iter().map(|row| row[k]).unzip();
        let operator_distance = distance.into_iter().collect::<Option<Vec<f64>>>();
        VariantComparison {
            variant: v,
            min_fidelity: fidelity.iter().copied().fold(f64::INFINITY, f64::min),
            fidelity,
            operator_distance,
        }
    });
    let main = per_variant.next().expect("at least one variant");
    let alternate = per_variant.next();
    Ok(ComparisonReport {
        times,
        variant,
        fidelity: main.fidelity,
        min_fidelity: main.min_fidelity,
        operator_distance: main.operator_distance,
        regime,
        neutralized_sectors,
        alternate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Analytic,
    Numeric,
}

impl FromStr for SpectrumMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(SpectrumMethod::Analytic),
            "numeric" => Ok(SpectrumMethod::Numeric),
            other => Err(Error::Config(format!("unknown spectrum method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpectrum {
    pub n: usize,
    pub s: i8,
    pub kappa: f64,
    pub mu: f64,
    pub offset: f64,
    pub stable: bool,
    pub method: SpectrumMethod,
    /// Ascending levels, one per mirror basis state.
    pub levels: Vec<f64>,
    /// Set for numeric spectra of unstable sectors, whose low levels are
    /// artifacts of the mirror cutoff.
    pub truncation_artifact: bool,
}

/// Levels of `ν N̂ + κ(b+b†) + μ(b+b†)² + offset` on `mirror_dim` states.
///
/// The analytic form completes the square in the quadrature:
/// `E_m = √(ν(ν+4μ))(m+½) − ν/2 − κ²/(ν+4μ) + offset`, valid for
/// `ν + 4μ > 0`. The numeric form diagonalizes the truncated block with
/// `(b+b†)²` taken as the product of truncated quadratures.
pub fn sector_levels(
    spec: &SectorSpec,
    nu: f64,
    mirror_dim: usize,
    method: SpectrumMethod,
) -> Result<SectorSpectrum> {
    let stiffness = nu + 4.0 * spec.mu;
    let stable = stiffness > 0.0;
    let levels = match method {
        SpectrumMethod::Analytic => {
            if !stable {
                return Err(Error::Domain(format!(
                    "sector (n = {}, s = {}) is unbounded below: nu + 4 mu = {stiffness:e}",
                    spec.n, spec.s
                )));
            }
            let omega = (nu * stiffness).sqrt();
            let shift = -nu / 2.0 - spec.kappa * spec.kappa / stiffness + spec.offset;
            (0..mirror_dim)
                .map(|m| omega * (m as f64 + 0.5) + shift)
                .collect()
        }
        SpectrumMethod::Numeric => numeric_levels(spec, nu, mirror_dim)?,
    };
    Ok(SectorSpectrum {
        n: spec.n,
        s: spec.s,
        kappa: spec.kappa,
        mu: spec.mu,
        offset: spec.offset,
        stable,
        method,
        levels,
        truncation_artifact: method == SpectrumMethod::Numeric && !stable,
    })
}

fn numeric_levels(spec: &SectorSpec, nu: f64, mirror_dim: usize) -> Result<Vec<f64>> {
    let l = ladder_ops(mirror_dim)?;
    let x = &l.lowering + &l.raising;
    let block = &(&(&l.number * nu) + &(&x * spec.kappa)) + &(&x.matmul(&x) * spec.mu);
    let real = DMatrix::from_fn(mirror_dim, mirror_dim, |i, j| {
        let v = block.get(i, j).re;
        if i == j {
            v + spec.offset
        } else {
            v
        }
    });
    let mut levels: Vec<f64> = SymmetricEigen::new(real)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

/// Spectrum of the effective Hamiltonian in the `(n, s)` sector.
pub fn sector_spectrum(
    n: usize,
    s: i8,
    params: &SystemParams,
    variant: EffVariant,
    method: SpectrumMethod,
    mirror_dim: usize,
) -> Result<SectorSpectrum> {
    sector_levels(
        &sector_params(n, s, params, variant)?,
        params.nu,
        mirror_dim,
        method,
    )
}
