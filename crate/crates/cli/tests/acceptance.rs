//! Acceptance criteria 1 to 7. Runs without the libtest harness so that
//! every criterion prints one PASS/FAIL line; exits non-zero on any FAIL.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mirrorfield::evolution::{
    compare, evolve, sector_spectrum, CompareOptions, EvolutionKind, EvolveOptions, SpectrumMethod,
    TimeGrid,
};
use mirrorfield::hamiltonians::{build_h_int, ExpansionForm};
use mirrorfield::spectral::SpectralDecomposition;
use mirrorfield::state::{make_state, AtomSpec, ModeSpec, StateOptions, StateSpec, StateVector};
use mirrorfield::transforms::{first_order_defect, r_op, small_rotations};
use mirrorfield::validate::run_validation;
use mirrorfield::{EffVariant, Error, SystemParams, TensorLayout};

const BIN: &str = env!("CARGO_BIN_EXE_mirrorfield");

/// Regression floor for the reference comparison. Measured minimum:
/// 0.999996391173 (derivation variant).
const PINNED_FIDELITY_FLOOR: f64 = 0.99999;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn headline_layout() -> TensorLayout {
    TensorLayout::new(16, 32).unwrap()
}

fn reference_state(layout: TensorLayout) -> StateVector {
    let spec = StateSpec::new(
        AtomSpec::Excited,
        ModeSpec::coherent(1.0),
        ModeSpec::Fock(0),
    );
    make_state(&spec, layout, &StateOptions::default()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let layout = headline_layout();
    let mut failures = Vec::new();
    let mut checks = 0;
    for draw in 0..20 {
        let lambda = rng.gen_range(0.5..2.0);
        let nu = rng.gen_range(0.05..0.5);
        let chi = rng.gen_range(0.0..0.05);
        let report = run_validation(&SystemParams::resonant(nu, lambda, chi), layout)
            .map_err(|e| e.to_string())?;
        checks += report.checks.len();
        failures.extend(report.failures().map(|c| {
            format!(
                "draw {draw}: {} = {:e} > {:e}",
                c.name, c.value, c.tolerance
            )
        }));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("20 draws, {checks} checks")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_2() -> Outcome {
    let layout = headline_layout();
    let d = [0.05, 0.025, 0.0125].map(|chi| {
        first_order_defect(
            &SystemParams::resonant(0.1, 1.0, chi),
            layout,
            ExpansionForm::Consistent,
        )
    });
    let d = d
        .into_iter()
        .collect::<Result<Vec<_>, Error>>()
        .map_err(|e| e.to_string())?;
    let (r1, r2) = (d[0] / d[1], d[1] / d[2]);
    let ok = [r1, r2].iter().all(|r| (3.2..=4.8).contains(r));
    check(
        ok,
        format!(
            "D = {:.6e} {:.6e} {:.6e}, ratios {r1:.4} and {r2:.4}",
            d[0], d[1], d[2]
        ),
    )
}

fn criterion_3() -> Outcome {
    let layout = headline_layout();
    let psi = reference_state(layout);
    let grid = TimeGrid::new(0.0, 10.0, 200).unwrap();
    let opts = CompareOptions {
        skip_operator_distance: true,
        ..Default::default()
    };
    let mut mins = Vec::new();
    for chi in [0.00125, 0.0025, 0.005, 0.01] {
        let r = compare(
            &psi,
            &SystemParams::resonant(0.1, 1.0, chi),
            &grid,
            EffVariant::Derivation,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        mins.push(r.min_fidelity);
    }
    let headline = mins[2];
    let monotone = mins.windows(2).all(|w| w[1] <= w[0]);
    let meets_criterion = headline >= 0.99;
    let meets_pin = headline >= PINNED_FIDELITY_FLOOR;
    check(
        meets_criterion && meets_pin && monotone,
        format!("min fidelity at chi = 0.005: {headline:.12}; across chi: {mins:.12?}; monotone: {monotone}"),
    )
}

fn criterion_4() -> Outcome {
    let layout = headline_layout();
    let psi = reference_state(layout);
    let opts = EvolveOptions::default();
    let free = SystemParams::resonant(0.1, 1.0, 0.0);

    // (a) Resonant Jaynes-Cummings inversion Σ p_n cos(2λ√(n+1) t).
    let grid = TimeGrid::new(0.0, 25.0, 500).unwrap();
    let s = evolve(
        &psi,
        EvolutionKind::Exact,
        &grid,
        &free,
        EffVariant::Derivation,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let p: Vec<f64> = (0..layout.field_dim())
        .map(|n| psi.amplitudes()[layout.index(0, n, 0)].norm_sqr())
        .collect();
    let jc_err = s
        .times
        .iter()
        .zip(&s.inversion)
        .map(|(&t, &w)| {
            let closed: f64 = p
                .iter()
                .enumerate()
                .map(|(n, pn)| pn * (2.0 * free.rabi(n) * t).cos())
                .sum();
            (w - closed).abs()
        })
        .fold(0.0, f64::max);

    // (b) Uncoupled mirror: the effective chain is exact.
    let r = compare(
        &psi,
        &free,
        &TimeGrid::new(0.0, 10.0, 200).unwrap(),
        EffVariant::Derivation,
        &CompareOptions {
            skip_operator_distance: true,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;

    // (c) Uncoupled atom: photon number is conserved.
    let no_atom = SystemParams::resonant(0.1, 0.0, 0.01);
    let s = evolve(
        &psi,
        EvolutionKind::Exact,
        &TimeGrid::new(0.0, 10.0, 100).unwrap(),
        &no_atom,
        EffVariant::Derivation,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let n_drift = s
        .photon
        .iter()
        .map(|n| (n - s.photon[0]).abs())
        .fold(0.0, f64::max);

    check(
        jc_err <= 1e-6 && r.min_fidelity >= 1.0 - 1e-9 && n_drift <= 1e-10,
        format!(
            "(a) JC inversion error {jc_err:.3e}; (b) min fidelity {:.15}; (c) photon drift {n_drift:.3e}",
            r.min_fidelity
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mirror_dim = 32;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let lambda = rng.gen_range(0.5..2.0);
        let nu = rng.gen_range(0.05..0.5);
        let chi = rng.gen_range(0.0..0.05) * nu;
        let params = SystemParams::resonant(nu, lambda, chi);
        for n in 0..=8 {
            for s in [1i8, -1] {
                let get = |method| {
                    sector_spectrum(n, s, &params, EffVariant::Derivation, method, mirror_dim)
                        .map_err(|e| e.to_string())
                };
                let (analytic, numeric) = (
                    get(SpectrumMethod::Analytic)?,
                    get(SpectrumMethod::Numeric)?,
                );
                for m in 0..mirror_dim / 2 {
                    worst = worst.max((analytic.levels[m] - numeric.levels[m]).abs() / nu);
                }
            }
        }
    }
    check(
        worst <= 1e-8,
        format!("worst |analytic - numeric| / nu = {worst:.3e} over 10 draws x 18 sectors"),
    )
}

fn cli_exit(dir: &Path, name: &str, config: &str, args: &[&str]) -> Option<i32> {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, config).unwrap();
    Command::new(BIN)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join(name))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
}

fn criterion_6() -> Outcome {
    let layout = headline_layout();
    let params = SystemParams::resonant(0.1, 1.0, 0.005);
    let mut parts = Vec::new();
    let mut ok = true;

    let h = build_h_int(&params, layout).map_err(|e| e.to_string())?;
    let spectral = SpectralDecomposition::new(&h).map_err(|e| e.to_string())?;
    let (u1, u2) = small_rotations(&params, layout).map_err(|e| e.to_string())?;
    let mut unitaries = vec![u1, u2, r_op(layout).unwrap()];
    unitaries.extend([0.5, 2.5, 5.0, 10.0].map(|t| spectral.propagator(t)));
    let defect = unitaries
        .iter()
        .map(|u| u.unitarity_defect())
        .fold(0.0, f64::max);
    ok &= defect <= 1e-10;
    parts.push(format!("unitarity defect {defect:.3e}"));

    let spec = StateSpec::new(
        AtomSpec::Superposition {
            excited: [1.0, 0.0],
            ground: [0.0, 1.0],
        },
        ModeSpec::coherent(1.0),
        ModeSpec::coherent(0.5),
    );
    let psi = make_state(&spec, layout, &StateOptions::default()).unwrap();
    let s = evolve(
        &psi,
        EvolutionKind::Exact,
        &TimeGrid::new(0.0, 10.0, 200).unwrap(),
        &params,
        EffVariant::Derivation,
        &EvolveOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let e0 = s.energy[0];
    let drift = s.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs();
    ok &= drift <= 1e-8;
    parts.push(format!("relative energy drift {drift:.3e} (E0 = {e0:.6})"));

    let leaky = StateSpec::new(
        AtomSpec::Excited,
        ModeSpec::coherent(4.0),
        ModeSpec::Fock(0),
    );
    let leak = make_state(
        &leaky,
        TensorLayout::new(8, 8).unwrap(),
        &StateOptions::default(),
    );
    let leak_ok = matches!(leak, Err(Error::Truncation { .. }));
    ok &= leak_ok;
    parts.push(format!("alpha = 4 in field dim 8 refused: {leak_ok}"));

    let dir = tempfile::tempdir().unwrap();
    let pole = |nu: &str, lambda: &str| {
        format!(
            "[params]\nnu = {nu}\nlambda = {lambda}\nchi = 0.005\n[layout]\nfield_dim = 8\nmirror_dim = 8\n[grid]\nt_end = 1.0\nsteps = 4\n"
        )
    };
    let codes = [
        cli_exit(dir.path(), "pole_n0", &pole("1.0", "1.0"), &["compare"]),
        cli_exit(
            dir.path(),
            "pole_n1",
            &pole(&format!("{}", 0.5 * 2f64.sqrt()), "0.5"),
            &["compare"],
        ),
        cli_exit(
            dir.path(),
            "pole_evolve",
            &pole("1.0", "1.0"),
            &["evolve", "--kind", "effective"],
        ),
    ];
    let codes_ok = codes.iter().all(|c| *c == Some(3));
    ok &= codes_ok;
    parts.push(format!("CLI exit codes at resonance {codes:?}"));
    check(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = "[params]\nnu = 0.1\nlambda = 1.0\nchi = 0.005\n[state]\nfield = { coherent = [1.0, 0.0] }\n[grid]\nt_end = 5.0\nsteps = 20\n[run]\nboth_variants = true\n";
    let path = dir.path().join("run.toml");
    fs::write(&path, config).unwrap();
    let runs = [("a", "csv"), ("b", "csv"), ("c", "json"), ("d", "json")];
    for (out, format) in runs {
        for command in ["evolve", "compare"] {
            let status = Command::new(BIN)
                .arg("--config")
                .arg(&path)
                .args([
                    "--out",
                    dir.path().join(out).to_str().unwrap(),
                    "--format",
                    format,
                    command,
                ])
                .output()
                .unwrap()
                .status;
            if !status.success() {
                return Err(format!("{command} --format {format} exited with {status}"));
            }
        }
    }
    let mut compared = 0;
    for (first, second) in [("a", "b"), ("c", "d")] {
        let mut names: Vec<_> = fs::read_dir(dir.path().join(first))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for name in names {
            let x = fs::read(dir.path().join(first).join(&name)).unwrap();
            let y = fs::read(dir.path().join(second).join(&name))
                .map_err(|e| format!("{name:?}: {e}"))?;
            if x != y {
                return Err(format!("{name:?} differs between runs"));
            }
            compared += 1;
        }
    }
    check(
        compared >= 8,
        format!("{compared} files byte-identical across consecutive runs"),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("exact-identity suite", criterion_1),
        ("perturbative scaling", criterion_2),
        ("dynamics fidelity", criterion_3),
        ("limit oracles", criterion_4),
        ("sector spectra", criterion_5),
        ("safety and honesty", criterion_6),
        ("determinism", criterion_7),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.1} s) {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1} s) {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} of 7 passed in {:.1} s",
        7 - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
