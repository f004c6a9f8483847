//! Adiabatic elimination of the atom: stationary moment expansions and the
//! complex Kerr susceptibilities extracted from them.
//!
//! The closure is semiclassical: a bilinear term such as `⟨σ₃₃ a₁⟩` is
//! evaluated by multiplying the already-solved lower-order expansion of
//! `⟨σ₃₃⟩` by the monomial of `a₁`. [`conditional_phase_oracle`] measures the
//! error this introduces against the full master equation.

mod moments;
mod oracle;
mod sweep;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nscheme::{adiabatic_check, Convention, NSchemeParams};

pub use oracle::{conditional_phase_oracle, OracleEstimate, OracleOptions, ORACLE_FIT_THRESHOLD};
pub use sweep::{sweep, SweepAxis, SweepCell, SweepParameter, SweepTable};

/// Highest order of the expansion that is supported.
pub const MAX_ORDER: usize = 3;

/// Normally ordered monomial `a₁†ᵖ a₁^q a₂†ʳ a₂ˢ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub p: u8,
    pub q: u8,
    pub r: u8,
    pub s: u8,
}

impl Monomial {
    pub const ONE: Self = Self::new(0, 0, 0, 0);

    pub const fn new(p: u8, q: u8, r: u8, s: u8) -> Self {
        Self { p, q, r, s }
    }

    pub fn degree(&self) -> usize {
        (self.p + self.q + self.r + self.s) as usize
    }

    /// Multiply by `a†_m` from the left (`m` = 0 for mode 1, 1 for mode 2).
    pub(crate) fn raised(self, m: usize) -> Self {
        match m {
            0 => Self { p: self.p + 1, ..self },
            _ => Self { r: self.r + 1, ..self },
        }
    }

    /// Multiply by `a_m` from the right.
    pub(crate) fn lowered(self, m: usize) -> Self {
        match m {
            0 => Self { q: self.q + 1, ..self },
            _ => Self { s: self.s + 1, ..self },
        }
    }
}

impl std::fmt::Display for Monomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.p, self.q, self.r, self.s)
    }
}

/// Stationary `⟨σ_jk⟩` as a polynomial in the mode operators.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentExpansion {
    /// 1-based level labels `(j, k)`.
    pub target: (usize, usize),
    pub terms: BTreeMap<Monomial, Complex64>,
}

impl MomentExpansion {
    /// Coefficient of a monomial, zero when absent.
    pub fn coefficient(&self, m: Monomial) -> Complex64 {
        self.terms.get(&m).copied().unwrap_or_default()
    }

    /// Terms of total degree exactly `n`.
    pub fn order(&self, n: usize) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter().filter(move |(m, _)| m.degree() == n)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// All sixteen atomic moments, solved through a given order.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryMoments {
    pub order: usize,
    pub convention: Convention,
    /// True when the generator was singular and the zero-decay limit was taken.
    pub zero_decay_limit: bool,
    expansions: Vec<MomentExpansion>,
}

impl StationaryMoments {
    /// Expansion of `⟨σ_jk⟩` with 1-based labels.
    pub fn get(&self, j: usize, k: usize) -> &MomentExpansion {
        assert!((1..=4).contains(&j) && (1..=4).contains(&k), "atomic labels are 1..=4");
        &self.expansions[4 * (j - 1) + (k - 1)]
    }

    /// The ten independent moments `σ_jk` with `j ≤ k`.
    pub fn independent(&self) -> impl Iterator<Item = &MomentExpansion> {
        self.expansions.iter().filter(|e| e.target.0 <= e.target.1)
    }

    pub fn all(&self) -> &[MomentExpansion] {
        &self.expansions
    }
}

/// Knobs for [`stationary_moments_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationOptions {
    pub order: usize,
    pub convention: Convention,
    /// Refuse parameter sets that fail [`adiabatic_check`].
    pub enforce_adiabatic: bool,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        Self {
            order: MAX_ORDER,
            convention: Convention::Hermitian,
            enforce_adiabatic: true,
        }
    }
}

impl EliminationOptions {
    pub fn unchecked() -> Self {
        Self {
            enforce_adiabatic: false,
            ..Self::default()
        }
    }
}

pub fn stationary_moments(p: &NSchemeParams, order: usize) -> Result<StationaryMoments> {
    stationary_moments_with(p, EliminationOptions { order, ..Default::default() })
}

pub fn stationary_moments_with(p: &NSchemeParams, opts: EliminationOptions) -> Result<StationaryMoments> {
    p.validate()?;
    if !(p.pump_rabi > 0.0) {
        return Err(Error::EliminationInvalid("Ω_c > 0".into()));
    }
    if opts.order > MAX_ORDER {
        return Err(Error::InvalidParameters(format!(
            "expansion order {} exceeds {MAX_ORDER}",
            opts.order
        )));
    }
    // Singularities are reported before adiabaticity so a resonance is named.
    let moments = moments::solve_hierarchy(p, opts.order, opts.convention)?;
    if opts.enforce_adiabatic {
        let report = adiabatic_check(p)?;
        if !report.pass {
            return Err(Error::AdiabaticityViolated {
                r1: report.r1,
                r2: report.r2,
            });
        }
    }
    Ok(moments)
}

/// Complex susceptibilities and the diagnostic ratios, all against `Re χ₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Susceptibilities {
    pub chi1: Complex64,
    pub chi3: Complex64,
    pub dispersion_factor: Option<f64>,
    pub linear_absorption_factor: Option<f64>,
    pub nonlinear_absorption_factor: Option<f64>,
    pub relative_decay: Option<f64>,
}

impl Susceptibilities {
    pub fn from_chi(chi1: Complex64, chi3: Complex64) -> Self {
        let ratio = |x: f64| (chi3.re != 0.0).then(|| x / chi3.re);
        Self {
            chi1,
            chi3,
            dispersion_factor: ratio(chi1.re),
            linear_absorption_factor: ratio(chi1.im),
            nonlinear_absorption_factor: ratio(chi3.im),
            relative_decay: ratio(chi3.im).map(f64::abs),
        }
    }
}

/// Phase that maps the `⟨σ₁₃⟩` source term onto the mode equation.
fn source_phase(convention: Convention) -> Complex64 {
    match convention {
        Convention::Hermitian => Complex64::new(0.0, -1.0),
        Convention::AntiHermitian => Complex64::new(1.0, 0.0),
    }
}

/// Read `χ₁` and `χ₃` off the probe coherence `⟨σ₁₃⟩`.
pub fn extract_susceptibilities(p: &NSchemeParams, moments: &StationaryMoments) -> Susceptibilities {
    let f = source_phase(moments.convention);
    let s13 = moments.get(1, 3);
    let c1 = s13.coefficient(Monomial::new(0, 1, 0, 0));
    let c3 = s13.coefficient(Monomial::new(0, 1, 1, 1));
    let g1 = p.probe_coupling;
    let chi1 = -f * g1 * c1;
    let chi3 = -Complex64::i() * f * g1 * c3;
    Susceptibilities::from_chi(chi1, chi3)
}

pub fn susceptibilities(p: &NSchemeParams) -> Result<Susceptibilities> {
    susceptibilities_with(p, EliminationOptions::default())
}

pub fn susceptibilities_with(p: &NSchemeParams, opts: EliminationOptions) -> Result<Susceptibilities> {
    let moments = stationary_moments_with(p, opts)?;
    Ok(extract_susceptibilities(p, &moments))
}

/// Analytic `χ₁` and `χ₃` for regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    /// `g₁²γ₅ / (Ω_c² + γ₁γ₅ + γ₂γ₅ + iδγ₅)`.
    pub chi1: Complex64,
    /// `g₁²g₂² / ((Δ − iγ₃) Ω_c²)`.
    pub chi3: Complex64,
    /// The `χ₃` form is exact only without ground-coherence damping.
    pub chi3_exact: bool,
}

pub fn chi_closed_forms(p: &NSchemeParams) -> ClosedForms {
    let r = p.rates;
    let (g1, g2, omega) = (p.probe_coupling, p.signal_coupling, p.pump_rabi);
    let g5 = r.gamma5();
    let b = Complex64::new(omega * omega + (r.decay_31 + r.decay_32) * g5, p.raman_detuning * g5);
    let chi1 = g1 * g1 * g5 / b;
    let chi3 = (g1 * g2).powi(2) / (Complex64::new(p.signal_detuning, -r.decay_42) * omega * omega);
    ClosedForms {
        chi1,
        chi3,
        chi3_exact: g5 == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nscheme::DecayRates;
    use approx::assert_relative_eq;

    fn anti(p: &NSchemeParams) -> StationaryMoments {
        stationary_moments_with(
            p,
            EliminationOptions {
                convention: Convention::AntiHermitian,
                ..EliminationOptions::unchecked()
            },
        )
        .unwrap()
    }

    #[test]
    fn ground_seed_is_exact() {
        let m = stationary_moments(&NSchemeParams::operating_point(), 0).unwrap();
        let s11 = m.get(1, 1);
        assert_eq!(s11.terms.len(), 1);
        assert_eq!(s11.coefficient(Monomial::ONE), Complex64::from(1.0));
        assert!(m.all().iter().filter(|e| e.target != (1, 1)).all(|e| e.terms.is_empty()));
    }

    #[test]
    fn headline_kerr_coefficient() {
        let chi = susceptibilities(&NSchemeParams::operating_point()).unwrap();
        assert_relative_eq!(chi.chi3.re, 0.0024, max_relative = 1e-10);
        assert!(chi.chi3.im.abs() < 1e-15);
        assert!(chi.chi1.norm() < 1e-15);
    }

    #[test]
    fn both_conventions_give_the_same_susceptibilities() {
        let p = NSchemeParams::operating_point().with_rates(DecayRates {
            decay_31: 0.001,
            decay_32: 0.002,
            decay_42: 0.003,
            decay_21: 0.0004,
            dephasing_21: 0.0002,
            ..DecayRates::default()
        });
        let h = susceptibilities_with(&p, EliminationOptions::unchecked()).unwrap();
        let a = extract_susceptibilities(&p, &anti(&p));
        assert!((h.chi1 - a.chi1).norm() < 1e-14);
        assert!((h.chi3 - a.chi3).norm() < 1e-14);
    }

    #[test]
    fn signal_decay_gives_relative_decay() {
        let p = NSchemeParams::operating_point().with_rates(DecayRates {
            decay_42: 0.0005,
            ..DecayRates::default()
        });
        let chi = susceptibilities(&p).unwrap();
        assert_relative_eq!(chi.relative_decay.unwrap(), 0.0005 / 1.5, max_relative = 1e-10);
        assert_relative_eq!(chi.chi3.re, chi_closed_forms(&p).chi3.re, max_relative = 1e-10);
    }

    #[test]
    fn ground_damping_first_order_coherence() {
        let p = NSchemeParams::operating_point().with_rates(DecayRates {
            decay_21: 0.0005,
            ..DecayRates::default()
        });
        let m = anti(&p);
        let b = 1.5f64 * 1.5;
        let c1 = m.get(1, 3).coefficient(Monomial::new(0, 1, 0, 0));
        assert_relative_eq!(c1.re, -0.0005 * 0.3 / b, max_relative = 1e-10);
        let chi = extract_susceptibilities(&p, &m);
        // 2π·0.02 MHz in ω/2π units is 0.02 MHz = 2e-5 GHz
        assert_relative_eq!(chi.chi1.re, 2e-5, max_relative = 1e-10);
    }

    #[test]
    fn dephasing_without_return_path_is_singular_beyond_first_order() {
        // Nothing brings population back to |1⟩, so second-order populations diverge.
        let p = NSchemeParams::operating_point().with_rates(DecayRates {
            dephasing_21: 0.0005,
            ..DecayRates::default()
        });
        assert!(stationary_moments(&p, 1).is_ok());
        assert!(matches!(
            stationary_moments(&p, 2),
            Err(Error::SingularMoments { order: 2, .. })
        ));
    }

    #[test]
    fn pump_off_is_rejected() {
        let p = NSchemeParams {
            pump_rabi: 0.0,
            ..NSchemeParams::operating_point()
        };
        let err = susceptibilities(&p).unwrap_err();
        assert_eq!(err.to_string(), "elimination requires Ω_c > 0");
    }

    #[test]
    fn non_adiabatic_point_is_refused_unless_overridden() {
        let p = NSchemeParams {
            pump_rabi: 0.8,
            ..NSchemeParams::operating_point()
        };
        assert!(matches!(susceptibilities(&p), Err(Error::AdiabaticityViolated { .. })));
        assert!(susceptibilities_with(&p, EliminationOptions::unchecked()).is_ok());
    }

    #[test]
    fn undefined_ratios_without_kerr() {
        let s = Susceptibilities::from_chi(Complex64::new(1.0, 1.0), Complex64::new(0.0, 1.0));
        assert!(s.dispersion_factor.is_none() && s.relative_decay.is_none());
    }
}
