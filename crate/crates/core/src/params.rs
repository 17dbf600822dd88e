//! Physical constants of the mirror-field-atom system (ℏ = 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative distance from the resonance `ν = λ√(n+1)` below which
/// the small-rotation angles are refused.
pub const DEFAULT_POLE_GUARD: f64 = 1e-6;

/// Relative tolerance of the `ω = ω₀` check.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Which reading of the effective Hamiltonian's quadratic mirror term to use.
///
/// The term descends from `(ξ₁+ξ₂)χσ_z(b+b†)²`, so it carries `σ_z`
/// (`Derivation`); the closed form as usually printed drops it (`AsPrinted`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffVariant {
    #[default]
    Derivation,
    AsPrinted,
}

impl EffVariant {
    pub const ALL: [EffVariant; 2] = [EffVariant::Derivation, EffVariant::AsPrinted];

    pub fn name(self) -> &'static str {
        match self {
            EffVariant::Derivation => "derivation",
            EffVariant::AsPrinted => "as_printed",
        }
    }
}

impl std::str::FromStr for EffVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derivation" => Ok(EffVariant::Derivation),
            "as_printed" => Ok(EffVariant::AsPrinted),
            other => Err(Error::Config(format!(
                "unknown variant `{other}`; expected `derivation` or `as_printed`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mirror frequency ν.
    pub nu: f64,
    /// Field frequency ω.
    pub omega: f64,
    /// Atomic transition frequency ω₀.
    pub omega0: f64,
    /// Atom-field coupling λ.
    pub lambda: f64,
    /// Mirror-field coupling χ (signed).
    pub chi: f64,
    /// Cavity length L.
    pub cavity_length: Option<f64>,
    /// Mirror mass m.
    pub mirror_mass: Option<f64>,
    pub eff_variant: EffVariant,
    pub pole_guard: f64,
}

impl SystemParams {
    /// Resonant parameters with `ω = ω₀ = 1`.
    pub fn resonant(nu: f64, lambda: f64, chi: f64) -> Self {
        SystemParams {
            nu,
            omega: 1.0,
            omega0: 1.0,
            lambda,
            chi,
            cavity_length: None,
            mirror_mass: None,
            eff_variant: EffVariant::default(),
            pole_guard: DEFAULT_POLE_GUARD,
        }
    }

    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi = chi;
        self
    }

    pub fn with_variant(mut self, variant: EffVariant) -> Self {
        self.eff_variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.nu,
            self.omega,
            self.omega0,
            self.lambda,
            self.chi,
            self.pole_guard,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("all parameters must be finite".into()));
        }
        for (name, v) in [
            ("nu", self.nu),
            ("omega", self.omega),
            ("omega0", self.omega0),
        ] {
            if v <= 0.0 {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.lambda < 0.0 {
            return Err(Error::Domain(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if self.pole_guard <= 0.0 {
            return Err(Error::Domain("pole_guard must be positive".into()));
        }
        match (self.cavity_length, self.mirror_mass) {
            (Some(l), Some(m)) => {
                let g = coupling_g(self.omega, l, m, self.nu)?;
                if (g - self.chi.abs()).abs() > 1e-12 * g.max(self.chi.abs()) {
                    return Err(Error::Domain(format!(
                        "|chi| = {} disagrees with g(omega, L, m, nu) = {g}",
                        self.chi.abs()
                    )));
                }
            }
            (None, None) => {}
            _ => {
                return Err(Error::Domain(
                    "cavity_length and mirror_mass must be given together".into(),
                ))
            }
        }
        Ok(())
    }

    /// Fails unless `ω = ω₀`, the premise of the interaction picture.
    pub fn check_resonance(&self) -> Result<()> {
        if (self.omega - self.omega0).abs()
            > RESONANCE_TOL * self.omega.abs().max(self.omega0.abs())
        {
            return Err(Error::ModelAssumption(format!(
                "the interaction-picture Hamiltonian requires on-resonant coupling omega = omega0, \
                 got omega = {} and omega0 = {}",
                self.omega, self.omega0
            )));
        }
        Ok(())
    }

    /// `λ√(n+1)`.
    pub fn rabi(&self, n: usize) -> f64 {
        self.lambda * ((n + 1) as f64).sqrt()
    }

    /// Distance from the small-rotation pole, `|ν − λ√(n+1)|`.
    pub fn resonance_distance(&self, n: usize) -> f64 {
        (self.nu - self.rabi(n)).abs()
    }

    /// Fails when `n` sits within the pole guard of `ν = λ√(n+1)`.
    pub fn check_pole(&self, n: usize) -> Result<()> {
        let distance = self.resonance_distance(n);
        let guard = self.pole_guard * self.nu.max(self.lambda);
        if distance <= guard {
            return Err(Error::Pole { n, distance, guard });
        }
        Ok(())
    }
}

/// Optomechanical coupling `g = (ω/L)·√(1/(2mν))` with ℏ = 1.
pub fn coupling_g(omega: f64, cavity_length: f64, mirror_mass: f64, nu: f64) -> Result<f64> {
    for (name, v) in [
        ("omega", omega),
        ("cavity_length", cavity_length),
        ("mirror_mass", mirror_mass),
        ("nu", nu),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Domain(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(omega / cavity_length * (1.0 / (2.0 * mirror_mass * nu)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_examples() {
        assert!((coupling_g(2.0, 1.0, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((coupling_g(1.0, 1.0, 0.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let g1 = coupling_g(1.3, 0.7, 2.0, 0.4).unwrap();
        let g2 = coupling_g(1.3, 1.4, 2.0, 0.4).unwrap();
        assert!((g1 - 2.0 * g2).abs() < 1e-15);
        assert!(coupling_g(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(coupling_g(1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn validation() {
        let p = SystemParams::resonant(0.1, 1.0, 0.005);
        assert!(p.validate().is_ok());
        assert!(SystemParams { nu: 0.0, ..p }.validate().is_err());
        assert!(SystemParams { lambda: -1.0, ..p }.validate().is_err());
        let g = coupling_g(1.0, 2.0, 3.0, 0.1).unwrap();
        let with_lm = SystemParams {
            cavity_length: Some(2.0),
            mirror_mass: Some(3.0),
            chi: -g,
            ..p
        };
        assert!(with_lm.validate().is_ok());
        assert!(SystemParams {
            chi: 2.0 * g,
            ..with_lm
        }
        .validate()
        .is_err());
        assert!(SystemParams {
            mirror_mass: None,
            ..with_lm
        }
        .validate()
        .is_err());
    }

    #[test]
    fn resonance_and_pole_checks() {
        let p = SystemParams::resonant(1.0, 1.0, 0.1);
        assert!(matches!(p.check_pole(0), Err(Error::Pole { n: 0, .. })));
        assert!(p.check_pole(1).is_ok());
        let off = SystemParams { omega0: 1.1, ..p };
        assert!(matches!(
            off.check_resonance(),
            Err(Error::ModelAssumption(_))
        ));
    }
}
