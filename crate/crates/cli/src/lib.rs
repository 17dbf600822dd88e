//! Batch driver behind the `mirrorfield` binary.
//!
//! Every subcommand reads one resolved [`RunConfig`], writes its outputs
//! atomically into the output directory and maps failures onto exit codes:
//! 0 success, 2 configuration, 3 physics assumption, 1 anything else.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mirrorfield::config::{parse_config, RunConfig};
use mirrorfield::evolution::{self, EvolutionKind, SectorSpectrum, SpectrumMethod, Verdict};
use mirrorfield::output::{write_report, Cell, Format, Metadata, Tabular};
use mirrorfield::state::make_state;
use mirrorfield::validate::run_validation;
use mirrorfield::{EffVariant, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MIRRORFIELD_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "mirrorfield",
    version,
    about = "Atom, cavity field and moving mirror in a truncated Fock space"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration; the built-in reference point when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $MIRRORFIELD_OUT_DIR or .]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format, default_value = "csv")]
    pub format: Format,
    /// Effective Hamiltonian variant: derivation or as_printed.
    #[arg(long, global = true, value_parser = parse_variant)]
    pub variant: Option<EffVariant>,
    /// Run even when the dispersive regime check fails.
    #[arg(long, global = true)]
    pub override_regime: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check the exact identities and operator properties.
    Validate,
    /// Evolve the initial state and record observables.
    Evolve {
        /// exact, formula or effective [default: run.kind]
        #[arg(long, value_parser = parse_kind)]
        kind: Option<EvolutionKind>,
    },
    /// Exact versus effective evolution.
    Compare,
    /// Sector spectra of the effective Hamiltonian.
    Spectrum,
    /// Compare over a parameter grid.
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Evolve { .. } => "evolve",
            Command::Compare => "compare",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
        }
    }
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> std::result::Result<EffVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<EvolutionKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        _ if err.is_physics() => EXIT_PHYSICS,
        Error::Config(_)
        | Error::Domain(_)
        | Error::OutOfRange { .. }
        | Error::InvalidDimension { .. } => EXIT_CONFIG,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for path in &outcome.written {
                eprintln!("wrote {}", path.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("mirrorfield {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

/// What a successful command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?
        }
        None => RunConfig::reference(),
    };
    if let Some(v) = common.variant {
        config.run.variant = v;
    }
    config.run.override_regime |= common.override_regime;
    Ok(config)
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let config = load_config(&cli.common)?;
    let dir = out_dir(&cli.common);
    let format = cli.common.format;
    match &cli.command {
        Command::Validate => run_validate(&config, &dir, format),
        Command::Evolve { kind } => {
            run_evolve(&config, kind.unwrap_or(config.run.kind), &dir, format)
        }
        Command::Compare => run_compare(&config, &dir, format),
        Command::Spectrum => run_spectrum(&config, &dir, format),
        Command::Sweep => run_sweep(&config, &dir, format),
    }
}

pub fn run_validate(config: &RunConfig, dir: &Path, format: Format) -> Result<Outcome> {
    let report = run_validation(&config.system_params(), config.layout())?;
    print!("{}", report.table());
    let written = write_report(
        &report,
        dir,
        "validate",
        format,
        &Metadata::new("validate", config),
    )?;
    let failed = report.failures().count();
    if let Some(first) = report.failures().next() {
        return Err(Error::Layout(format!(
            "{failed} identity check(s) failed, first: {} = {:e} > {:e}",
            first.name, first.value, first.tolerance
        )));
    }
    Ok(Outcome { written })
}

pub fn run_evolve(
    config: &RunConfig,
    kind: EvolutionKind,
    dir: &Path,
    format: Format,
) -> Result<Outcome> {
    let psi0 = make_state(
        &config.state_spec(),
        config.layout(),
        &config.state_options(),
    )?;
    let series = evolution::evolve(
        &psi0,
        kind,
        &config.grid(),
        &config.system_params(),
        config.run.variant,
        &config.evolve_options(),
    )?;
    let mut resolved = config.clone();
    resolved.run.kind = kind;
    let written = write_report(
        &series,
        dir,
        "evolve",
        format,
        &Metadata::new("evolve", &resolved),
    )?;
    Ok(Outcome { written })
}

/// The alternate variant of a comparison, as its own table.
struct Alternate<'a> {
    times: &'a [f64],
    inner: &'a evolution::VariantComparison,
}

impl Serialize for Alternate<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.inner.serialize(s)
    }
}

impl Tabular for Alternate<'_> {
    fn columns(&self) -> Vec<String> {
        ["t", "fidelity", "operator_distance"]
            .map(String::from)
            .to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        (0..self.times.len())
            .map(|k| {
                vec![
                    Cell::Num(self.times[k]),
                    Cell::Num(self.inner.fidelity[k]),
                    self.inner
                        .operator_distance
                        .as_ref()
                        .map_or(Cell::Empty, |d| Cell::Num(d[k])),
                ]
            })
            .collect()
    }
}

pub fn run_compare(config: &RunConfig, dir: &Path, format: Format) -> Result<Outcome> {
    let psi0 = make_state(
        &config.state_spec(),
        config.layout(),
        &config.state_options(),
    )?;
    let report = evolution::compare(
        &psi0,
        &config.system_params(),
        &config.grid(),
        config.run.variant,
        &config.compare_options(),
    )?;
    let meta = Metadata::new("compare", config);
    let mut written = write_report(&report, dir, "compare", format, &meta)?;
    // JSON already carries the alternate inside the report.
    if let (Some(alt), Format::Csv) = (&report.alternate, format) {
        let table = Alternate {
            times: &report.times,
            inner: alt,
        };
        written.extend(write_report(
            &table,
            dir,
            &format!("compare_{}", alt.variant.name()),
            format,
            &meta,
        )?);
    }
    if !report.neutralized_sectors.is_empty() {
        eprintln!(
            "warning: rotations zeroed in pole sectors {:?} (regime override)",
            report.neutralized_sectors
        );
    }
    if let Some(floor) = config.thresholds.fidelity_floor {
        if report.min_fidelity < floor {
            return Err(Error::RegimeInvalid(format!(
                "minimum fidelity {:.12} is below thresholds.fidelity_floor = {floor}",
                report.min_fidelity
            )));
        }
    }
    Ok(Outcome { written })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRow {
    pub analytic: Option<SectorSpectrum>,
    pub numeric: SectorSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub variant: EffVariant,
    pub mirror_dim: usize,
    pub sectors: Vec<SectorRow>,
}

impl Tabular for SpectrumReport {
    fn columns(&self) -> Vec<String> {
        ["n", "s", "level", "analytic", "numeric", "stable"]
            .map(String::from)
            .to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let mut rows = Vec::new();
        for sector in &self.sectors {
            let num = &sector.numeric;
            for (m, &e) in num.levels.iter().enumerate() {
                rows.push(vec![
                    Cell::Int(num.n as i64),
                    Cell::Int(num.s.into()),
                    Cell::Int(m as i64),
                    sector
                        .analytic
                        .as_ref()
                        .map_or(Cell::Empty, |a| Cell::Num(a.levels[m])),
                    Cell::Num(e),
                    Cell::Int(num.stable.into()),
                ]);
            }
        }
        rows
    }
}

pub fn spectrum_report(config: &RunConfig) -> Result<SpectrumReport> {
    let params = config.system_params();
    let variant = config.run.variant;
    let mirror_dim = config
        .spectrum
        .mirror_dim
        .unwrap_or(config.layout.mirror_dim);
    let mut sectors = Vec::new();
    for n in 0..=config.spectrum.n_max {
        for s in [1i8, -1] {
            let numeric = evolution::sector_spectrum(
                n,
                s,
                &params,
                variant,
                SpectrumMethod::Numeric,
                mirror_dim,
            )?;
            let analytic = numeric
                .stable
                .then(|| {
                    evolution::sector_spectrum(
                        n,
                        s,
                        &params,
                        variant,
                        SpectrumMethod::Analytic,
                        mirror_dim,
                    )
                })
                .transpose()?;
            sectors.push(SectorRow { analytic, numeric });
        }
    }
    Ok(SpectrumReport {
        variant,
        mirror_dim,
        sectors,
    })
}

pub fn run_spectrum(config: &RunConfig, dir: &Path, format: Format) -> Result<Outcome> {
    let report = spectrum_report(config)?;
    let unstable: Vec<_> = report
        .sectors
        .iter()
        .filter(|s| !s.numeric.stable)
        .map(|s| (s.numeric.n, s.numeric.s))
        .collect();
    if !unstable.is_empty() {
        eprintln!("warning: sectors {unstable:?} are unbounded below; their numeric levels are cutoff artifacts");
    }
    let written = write_report(
        &report,
        dir,
        "spectrum",
        format,
        &Metadata::new("spectrum", config),
    )?;
    Ok(Outcome { written })
}

/// One sweep point. Failed points keep their parameters and the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub values: Vec<f64>,
    pub min_fidelity: Option<f64>,
    pub max_operator_distance: Option<f64>,
    pub verdict: Option<Verdict>,
    pub max_xi: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axes: Vec<String>,
    pub points: Vec<SweepPoint>,
}

impl Tabular for SweepReport {
    fn columns(&self) -> Vec<String> {
        let mut cols = self.axes.clone();
        cols.extend(
            [
                "min_fidelity",
                "max_operator_distance",
                "verdict",
                "max_xi",
                "status",
            ]
            .map(String::from),
        );
        cols
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let opt = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Num);
        self.points
            .iter()
            .map(|p| {
                let mut row: Vec<Cell> = p.values.iter().copied().map(Cell::Num).collect();
                row.push(opt(p.min_fidelity));
                row.push(opt(p.max_operator_distance));
                row.push(p.verdict.map_or(Cell::Empty, |v| Cell::Text(v.to_string())));
                row.push(opt(p.max_xi));
                row.push(Cell::Text(p.error.clone().unwrap_or_else(|| "ok".into())));
                row
            })
            .collect()
    }
}

/// Runs the comparison at every sweep point, in parallel, keeping input
/// order. Physics failures at a point are recorded rather than fatal.
pub fn sweep_report(config: &RunConfig) -> Result<SweepReport> {
    let sweep = config.sweep.as_ref().ok_or_else(|| {
        Error::Config("the sweep command needs a [sweep] table with at least one axis".into())
    })?;
    let psi0 = make_state(
        &config.state_spec(),
        config.layout(),
        &config.state_options(),
    )?;
    let mut opts = config.compare_options();
    opts.skip_operator_distance = !sweep.operator_distance;
    opts.both_variants = false;
    let grid = config.grid();
    let points = sweep
        .points()
        .into_par_iter()
        .map(|values| {
            let mut params = config.system_params();
            for (axis, &v) in sweep.axes.iter().zip(&values) {
                axis.name.apply(&mut params, v);
            }
            let result = params
                .validate()
                .and_then(|_| evolution::compare(&psi0, &params, &grid, config.run.variant, &opts));
            match result {
                Ok(r) => Ok(SweepPoint {
                    values,
                    min_fidelity: Some(r.min_fidelity),
                    max_operator_distance: r
                        .operator_distance
                        .map(|d| d.into_iter().fold(0.0, f64::max)),
                    verdict: Some(r.regime.verdict),
                    max_xi: Some(r.regime.max_xi1.max(r.regime.max_xi2)),
                    error: None,
                }),
                Err(e) if e.is_physics() || matches!(e, Error::Domain(_)) => Ok(SweepPoint {
                    values,
                    min_fidelity: None,
                    max_operator_distance: None,
                    verdict: None,
                    max_xi: None,
                    error: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        axes: sweep
            .axes
            .iter()
            .map(|a| a.name.name().to_string())
            .collect(),
        points,
    })
}

pub fn run_sweep(config: &RunConfig, dir: &Path, format: Format) -> Result<Outcome> {
    let report = sweep_report(config)?;
    let written = write_report(
        &report,
        dir,
        "sweep",
        format,
        &Metadata::new("sweep", config),
    )?;
    let failed = report.points.iter().filter(|p| p.error.is_some()).count();
    if failed > 0 {
        return Err(Error::RegimeInvalid(format!(
            "{failed} of {} sweep points failed; see the status column",
            report.points.len()
        )));
    }
    Ok(Outcome { written })
}
