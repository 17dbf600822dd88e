//! Run configuration: a TOML document with one table per concern.
//!
//! ```toml
//! [params]            # required: nu, lambda, chi
//! nu = 0.1
//! lambda = 1.0
//! chi = 0.005
//! # omega = 1.0, omega0 = omega, cavity_length, mirror_mass
//!
//! [layout]            # field_dim = 16, mirror_dim = 32, max_total_dim = 8192
//! [state]             # atom = "excited", field = { fock = 0 }, mirror = { fock = 0 }
//! [grid]              # t_start = 0, t_end = 10, steps = 200
//! [thresholds]        # leakage = 1e-8, guard = 2, pole_guard = 1e-6, fidelity_floor
//! [run]               # kind, variant, both_variants, override_regime, ...
//! [spectrum]          # n_max = 8, mirror_dim = layout.mirror_dim
//! [[sweep.axes]]      # name = "chi", values = [...] or start/end/count
//! ```
//!
//! Unknown keys are rejected everywhere. Parsing fills every default in
//! place, so serializing a parsed [`RunConfig`] yields the fully resolved
//! configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{CompareOptions, EvolutionKind, EvolveOptions, TimeGrid};
use crate::layout::TensorLayout;
use crate::params::{EffVariant, SystemParams, DEFAULT_POLE_GUARD};
use crate::state::{
    AtomSpec, ModeSpec, StateOptions, StateSpec, DEFAULT_GUARD, DEFAULT_LEAKAGE_THRESHOLD,
};

pub const DEFAULT_FIELD_DIM: usize = 16;
pub const DEFAULT_MIRROR_DIM: usize = 32;
pub const DEFAULT_MAX_TOTAL_DIM: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub nu: f64,
    pub lambda: f64,
    pub chi: f64,
    #[serde(default = "one")]
    pub omega: f64,
    /// Defaults to `omega`.
    #[serde(default)]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror_mass: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSection {
    pub field_dim: usize,
    pub mirror_dim: usize,
    pub max_total_dim: usize,
}

impl Default for LayoutSection {
    fn default() -> Self {
        LayoutSection {
            field_dim: DEFAULT_FIELD_DIM,
            mirror_dim: DEFAULT_MIRROR_DIM,
            max_total_dim: DEFAULT_MAX_TOTAL_DIM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    #[serde(default = "excited")]
    pub atom: AtomSpec,
    #[serde(default = "vacuum")]
    pub field: ModeSpec,
    #[serde(default = "vacuum")]
    pub mirror: ModeSpec,
}

impl Default for StateSection {
    fn default() -> Self {
        StateSection {
            atom: AtomSpec::Excited,
            field: ModeSpec::Fock(0),
            mirror: ModeSpec::Fock(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "ten")]
    pub t_end: f64,
    #[serde(default = "two_hundred")]
    pub steps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            t_start: 0.0,
            t_end: 10.0,
            steps: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub leakage: f64,
    pub guard: usize,
    pub pole_guard: f64,
    /// Minimum acceptable exact-vs-effective fidelity for `compare`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_floor: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            leakage: DEFAULT_LEAKAGE_THRESHOLD,
            guard: DEFAULT_GUARD,
            pole_guard: DEFAULT_POLE_GUARD,
            fidelity_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Propagator used by `evolve`.
    pub kind: EvolutionKind,
    pub variant: EffVariant,
    /// `compare` also reports the other effective variant.
    pub both_variants: bool,
    pub override_regime: bool,
    /// Keep going when states leak into the guard band.
    pub allow_leakage: bool,
    /// `compare` computes the interior propagator distance.
    pub operator_distance: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            kind: EvolutionKind::Exact,
            variant: EffVariant::Derivation,
            both_variants: false,
            override_regime: false,
            allow_leakage: false,
            operator_distance: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Sectors `n = 0..=n_max`, both `s = ±1`.
    #[serde(default = "eight")]
    pub n_max: usize,
    /// Defaults to `layout.mirror_dim`.
    #[serde(default)]
    pub mirror_dim: Option<usize>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            n_max: 8,
            mirror_dim: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Nu,
    Lambda,
    Chi,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Nu => "nu",
            SweepParam::Lambda => "lambda",
            SweepParam::Chi => "chi",
        }
    }

    pub fn apply(self, params: &mut SystemParams, value: f64) {
        match self {
            SweepParam::Nu => params.nu = value,
            SweepParam::Lambda => params.lambda = value,
            SweepParam::Chi => params.chi = value,
        }
    }
}

/// One sweep axis: explicit `values`, or `count` evenly spaced points from
/// `start` to `end` inclusive. Resolution always fills `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: SweepParam,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl SweepAxis {
    fn resolve(&mut self) -> Result<()> {
        let name = self.name.name();
        match (self.values.is_empty(), self.start, self.end, self.count) {
            (false, None, None, None) => {}
            (true, Some(a), Some(b), Some(k)) => {
                if k == 0 || !a.is_finite() || !b.is_finite() {
                    return Err(Error::Config(format!(
                        "sweep axis `{name}` needs finite start/end and count >= 1"
                    )));
                }
                self.values = if k == 1 {
                    vec![a]
                } else {
                    (0..k)
                        .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
                        .collect()
                };
            }
            _ => {
                return Err(Error::Config(format!(
                    "sweep axis `{name}` needs either `values` or all of `start`, `end`, `count`"
                )))
            }
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "sweep axis `{name}` has non-finite value {v}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
    /// Also compute the interior propagator distance per point.
    #[serde(default)]
    pub operator_distance: bool,
}

impl SweepSection {
    /// Cartesian product of the axes, first axis slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.axes.iter().fold(vec![Vec::new()], |acc, axis| {
            acc.into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSection,
    #[serde(default)]
    pub layout: LayoutSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn two_hundred() -> usize {
    200
}
fn eight() -> usize {
    8
}
fn excited() -> AtomSpec {
    AtomSpec::Excited
}
fn vacuum() -> ModeSpec {
    ModeSpec::Fock(0)
}

/// Parses, fills defaults and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut config: RunConfig =
        toml::from_str(text).map_err(|e| Error::Config(syntax_message(&e, text)))?;
    config.resolve()?;
    Ok(config)
}

fn syntax_message(e: &toml::de::Error, text: &str) -> String {
    let detail = e.message();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            format!("line {line}, column {column}: {detail}")
        }
        None => detail.to_string(),
    }
}

impl RunConfig {
    /// The configuration used when no document is given: the dispersive
    /// reference point `λ = 1, ν = 0.1, χ = 0.005` with `|e, α=1, 0⟩`.
    pub fn reference() -> Self {
        let mut config = RunConfig {
            params: ParamsSection {
                nu: 0.1,
                lambda: 1.0,
                chi: 0.005,
                omega: 1.0,
                omega0: None,
                cavity_length: None,
                mirror_mass: None,
            },
            layout: LayoutSection::default(),
            state: StateSection {
                field: ModeSpec::coherent(1.0),
                ..Default::default()
            },
            grid: GridSection::default(),
            thresholds: Thresholds::default(),
            run: RunSection::default(),
            spectrum: SpectrumSection::default(),
            sweep: None,
        };
        config.resolve().expect("reference configuration is valid");
        config
    }

    /// Fills derived defaults and checks every invariant.
    pub fn resolve(&mut self) -> Result<()> {
        self.params.omega0.get_or_insert(self.params.omega);
        self.spectrum
            .mirror_dim
            .get_or_insert(self.layout.mirror_dim);

        let t = &self.thresholds;
        if !(t.leakage > 0.0 && t.leakage.is_finite()) {
            return Err(Error::Config("thresholds.leakage must be positive".into()));
        }
        if !(t.pole_guard > 0.0 && t.pole_guard.is_finite()) {
            return Err(Error::Config(
                "thresholds.pole_guard must be positive".into(),
            ));
        }
        if let Some(f) = t.fidelity_floor {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(
                    "thresholds.fidelity_floor must lie in (0, 1]".into(),
                ));
            }
        }
        let l = &self.layout;
        if l.field_dim < 2 || l.mirror_dim < 2 {
            return Err(Error::Config("layout dimensions must be at least 2".into()));
        }
        let total = 2 * l.field_dim * l.mirror_dim;
        if total > l.max_total_dim {
            return Err(Error::Config(format!(
                "layout total dimension {total} exceeds layout.max_total_dim = {}",
                l.max_total_dim
            )));
        }
        if t.guard >= l.field_dim.min(l.mirror_dim) {
            return Err(Error::Config(format!(
                "thresholds.guard = {} must be smaller than both mode dimensions",
                t.guard
            )));
        }
        if self.spectrum.mirror_dim.is_some_and(|d| d < 2) {
            return Err(Error::Config(
                "spectrum.mirror_dim must be at least 2".into(),
            ));
        }
        TimeGrid::from(self.grid)
            .validate()
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        if let Some(sweep) = &mut self.sweep {
            if sweep.axes.is_empty() {
                return Err(Error::Config("sweep.axes must not be empty".into()));
            }
            for axis in &mut sweep.axes {
                axis.resolve()?;
            }
        }
        let params = self.system_params();
        params.validate().map_err(|e| match e {
            Error::Domain(msg) => Error::Config(format!("params: {msg}")),
            other => other,
        })?;
        params.check_resonance()?;
        Ok(())
    }

    pub fn system_params(&self) -> SystemParams {
        let p = &self.params;
        SystemParams {
            nu: p.nu,
            omega: p.omega,
            omega0: p.omega0.unwrap_or(p.omega),
            lambda: p.lambda,
            chi: p.chi,
            cavity_length: p.cavity_length,
            mirror_mass: p.mirror_mass,
            eff_variant: self.run.variant,
            pole_guard: self.thresholds.pole_guard,
        }
    }

    pub fn layout(&self) -> TensorLayout {
        TensorLayout::new(self.layout.field_dim, self.layout.mirror_dim)
            .expect("validated in resolve")
    }

    pub fn state_spec(&self) -> StateSpec {
        StateSpec::new(self.state.atom, self.state.field, self.state.mirror)
    }

    pub fn state_options(&self) -> StateOptions {
        StateOptions {
            leakage_threshold: self.thresholds.leakage,
            guard: self.thresholds.guard,
            allow_leakage: self.run.allow_leakage,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid.into()
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            leakage_threshold: self.thresholds.leakage,
            guard: self.thresholds.guard,
            allow_leakage: self.run.allow_leakage,
            override_regime: self.run.override_regime,
        }
    }

    pub fn compare_options(&self) -> CompareOptions {
        CompareOptions {
            evolve: self.evolve_options(),
            both_variants: self.run.both_variants,
            skip_operator_distance: !self.run.operator_distance,
        }
    }

    /// Resolved configuration as TOML, suitable for re-running.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

impl From<GridSection> for TimeGrid {
    fn from(g: GridSection) -> Self {
        TimeGrid {
            t_start: g.t_start,
            t_end: g.t_end,
            steps: g.steps,
        }
    }
}
