//! Driven four-level N-scheme coupled to two truncated resonator modes.
//!
//! Composite space `[4, n_max1 + 1, n_max2 + 1]`: the atom first (levels
//! `|1⟩…|4⟩` at indices 0…3), then the probe mode and the signal mode.
//! All analysis happens in the interaction picture, so only detunings appear.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{evolve_lindblad, CollapseOp, Hamiltonian, HilbertSpace, Operator, QuantumState};

/// Decoherence rates in GHz, in the `γ L[c]` convention (populations decay at `2γ`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayRates {
    /// `|3⟩ → |1⟩`.
    pub decay_31: f64,
    /// `|3⟩ → |2⟩`.
    pub decay_32: f64,
    /// `|4⟩ → |2⟩`.
    pub decay_42: f64,
    /// `|2⟩ → |1⟩`.
    pub decay_21: f64,
    /// Pure dephasing of `|2⟩` against `|1⟩`.
    pub dephasing_21: f64,
    pub kappa_probe: f64,
    pub kappa_signal: f64,
}

impl DecayRates {
    /// Total ground-coherence damping `γ₅ = γ₄ + γ_φ`.
    pub fn gamma5(&self) -> f64 {
        self.decay_21 + self.dephasing_21
    }

    /// Set `γ₅`, keeping the current decay/dephasing split (all dephasing if both are zero).
    pub fn with_gamma5(self, total: f64) -> Self {
        let current = self.gamma5();
        let (decay_21, dephasing_21) = if current > 0.0 {
            let share = self.decay_21 / current;
            (total * share, total * (1.0 - share))
        } else {
            (0.0, total)
        };
        Self {
            decay_21,
            dephasing_21,
            ..self
        }
    }

    fn as_array(&self) -> [f64; 7] {
        [
            self.decay_31,
            self.decay_32,
            self.decay_42,
            self.decay_21,
            self.dephasing_21,
            self.kappa_probe,
            self.kappa_signal,
        ]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let [a, b, c, d, e, f, g] = self.as_array().map(|r| r * s);
        Self {
            decay_31: a,
            decay_32: b,
            decay_42: c,
            decay_21: d,
            dephasing_21: e,
            kappa_probe: f,
            kappa_signal: g,
        }
    }
}

/// Parameters of the abstract N-scheme, all in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NSchemeParams {
    /// Probe mode coupling on `|1⟩↔|3⟩`.
    pub probe_coupling: f64,
    /// Signal mode coupling on `|2⟩↔|4⟩`.
    pub signal_coupling: f64,
    /// Classical pump on `|2⟩↔|3⟩`.
    pub pump_rabi: f64,
    /// Detuning of `|3⟩` (zero at Raman resonance).
    pub raman_detuning: f64,
    /// Detuning of `|4⟩`.
    pub signal_detuning: f64,
    #[serde(default)]
    pub rates: DecayRates,
}

impl NSchemeParams {
    /// Reference operating point: couplings 0.3 GHz, pump and signal detuning 1.5 GHz, no decoherence.
    pub fn operating_point() -> Self {
        Self {
            probe_coupling: 0.3,
            signal_coupling: 0.3,
            pump_rabi: 1.5,
            raman_detuning: 0.0,
            signal_detuning: 1.5,
            rates: DecayRates::default(),
        }
    }

    pub fn gamma5(&self) -> f64 {
        self.rates.gamma5()
    }

    pub fn with_rates(self, rates: DecayRates) -> Self {
        Self { rates, ..self }
    }

    /// Multiply every frequency and rate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            probe_coupling: self.probe_coupling * s,
            signal_coupling: self.signal_coupling * s,
            pump_rabi: self.pump_rabi * s,
            raman_detuning: self.raman_detuning * s,
            signal_detuning: self.signal_detuning * s,
            rates: self.rates.scaled(s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.probe_coupling,
            self.signal_coupling,
            self.pump_rabi,
            self.raman_detuning,
            self.signal_detuning,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameters("N-scheme frequencies must be finite".into()));
        }
        for (index, rate) in self.rates.as_array().into_iter().enumerate() {
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::NegativeRate { index, rate });
            }
        }
        Ok(())
    }
}

/// Fock cutoffs of the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_max1: usize,
    pub n_max2: usize,
}

impl Truncation {
    pub const fn new(n_max1: usize, n_max2: usize) -> Self {
        Self { n_max1, n_max2 }
    }

    pub const fn uniform(n_max: usize) -> Self {
        Self::new(n_max, n_max)
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(vec![4, self.n_max1 + 1, self.n_max2 + 1]).expect("positive dims")
    }

    /// Two-mode space without the atom.
    pub fn mode_space(&self) -> HilbertSpace {
        HilbertSpace::new(vec![self.n_max1 + 1, self.n_max2 + 1]).expect("positive dims")
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self::uniform(3)
    }
}

/// Phase convention of the atom–field coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `g(a†σ + σ†a)` and `Ω(σ₂₃ + σ₃₂)`.
    #[default]
    Hermitian,
    /// `i g(a†σ − σ†a)` and `iΩ(σ₂₃ − σ₃₂)`.
    AntiHermitian,
}

/// Atomic transition `|j⟩⟨k|` with one-based level labels, embedded on `space`.
pub fn sigma(space: &HilbertSpace, j: usize, k: usize) -> Result<Operator> {
    if !(1..=4).contains(&j) || !(1..=4).contains(&k) {
        return Err(Error::InvalidParameters(format!("atomic levels are 1..=4, got ({j}, {k})")));
    }
    Operator::embed(space, 0, &Operator::transition(4, j - 1, k - 1)?)
}

/// Annihilation operator of mode 1 (probe) or 2 (signal).
pub fn mode_destroy(t: &Truncation, mode: usize) -> Result<Operator> {
    let space = t.space();
    match mode {
        1 => Operator::embed(&space, 1, &Operator::destroy(t.n_max1)),
        2 => Operator::embed(&space, 2, &Operator::destroy(t.n_max2)),
        _ => Err(Error::InvalidParameters(format!("modes are 1 and 2, got {mode}"))),
    }
}

pub fn mode_number(t: &Truncation, mode: usize) -> Result<Operator> {
    let a = mode_destroy(t, mode)?;
    Ok(a.dagger() * a)
}

/// System Hamiltonian in the Hermitian convention.
pub fn build_hsys(p: &NSchemeParams, t: &Truncation) -> Result<Operator> {
    build_hsys_in(p, t, Convention::Hermitian)
}

pub fn build_hsys_in(p: &NSchemeParams, t: &Truncation, convention: Convention) -> Result<Operator> {
    p.validate()?;
    let space = t.space();
    let s = |j, k| sigma(&space, j, k);
    let a1 = mode_destroy(t, 1)?;
    let a2 = mode_destroy(t, 2)?;
    let atom = s(3, 3)? * p.raman_detuning + s(4, 4)? * p.signal_detuning;
    let probe = a1.dagger() * s(1, 3)?;
    let signal = a2.dagger() * s(2, 4)?;
    let pump = s(2, 3)?;
    let couple = |x: Operator, g: f64| match convention {
        Convention::Hermitian => (x.dagger() + x) * g,
        Convention::AntiHermitian => (x.clone() - x.dagger()) * Complex64::new(0.0, g),
    };
    Ok(atom
        + couple(probe, p.probe_coupling)
        + couple(signal, p.signal_coupling)
        + couple(pump, p.pump_rabi))
}

/// Diagnostics for couplings that act on a mode with no photon capacity.
pub fn truncation_warnings(p: &NSchemeParams, t: &Truncation) -> Vec<String> {
    let mut out = Vec::new();
    if t.n_max1 == 0 && p.probe_coupling != 0.0 {
        out.push("probe mode truncated at 0 photons while its coupling is nonzero".into());
    }
    if t.n_max2 == 0 && p.signal_coupling != 0.0 {
        out.push("signal mode truncated at 0 photons while its coupling is nonzero".into());
    }
    out
}

/// Dissipation channels with zero-rate entries dropped.
///
/// Order: `σ₁₃, σ₂₃, σ₂₄, σ₁₂, σ₂₂, a₁, a₂`.
pub fn collapse_operators(p: &NSchemeParams, t: &Truncation) -> Result<Vec<CollapseOp>> {
    p.validate()?;
    let space = t.space();
    let r = &p.rates;
    let channels = [
        (r.decay_31, sigma(&space, 1, 3)?),
        (r.decay_32, sigma(&space, 2, 3)?),
        (r.decay_42, sigma(&space, 2, 4)?),
        (r.decay_21, sigma(&space, 1, 2)?),
        (r.dephasing_21, sigma(&space, 2, 2)?),
        (r.kappa_probe, mode_destroy(t, 1)?),
        (r.kappa_signal, mode_destroy(t, 2)?),
    ];
    Ok(channels
        .into_iter()
        .filter(|(rate, _)| *rate > 0.0)
        .map(|(rate, op)| CollapseOp::new(rate, op))
        .collect())
}

/// Conserved excitation numbers `(n₁ + σ₂₂ + σ₃₃ + σ₄₄, n₂ + σ₄₄)`.
pub fn excitation_numbers(t: &Truncation) -> Result<(Operator, Operator)> {
    let space = t.space();
    let s44 = sigma(&space, 4, 4)?;
    let n1 = mode_number(t, 1)? + sigma(&space, 2, 2)? + sigma(&space, 3, 3)? + &s44;
    let n2 = mode_number(t, 2)? + s44;
    Ok((n1, n2))
}

/// Default limits on the adiabatic ratios.
pub const PUMP_RATIO_LIMIT: f64 = 0.1;
pub const SIGNAL_RATIO_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticReport {
    /// `(g₁/Ω_c)²`.
    pub r1: f64,
    /// `|g₂/Δ|`.
    pub r2: f64,
    pub r1_ok: bool,
    pub r2_ok: bool,
    pub pass: bool,
}

pub fn adiabatic_check(p: &NSchemeParams) -> Result<AdiabaticReport> {
    if !(p.pump_rabi > 0.0) {
        return Err(Error::EliminationInvalid("Ω_c > 0".into()));
    }
    if p.signal_detuning == 0.0 {
        return Err(Error::EliminationInvalid("Δ ≠ 0".into()));
    }
    let r1 = (p.probe_coupling / p.pump_rabi).powi(2);
    let r2 = (p.signal_coupling / p.signal_detuning).abs();
    let (r1_ok, r2_ok) = (r1 < PUMP_RATIO_LIMIT, r2 < SIGNAL_RATIO_LIMIT);
    Ok(AdiabaticReport {
        r1,
        r2,
        r1_ok,
        r2_ok,
        pass: r1_ok && r2_ok,
    })
}

/// Per-time-point observables recorded by [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub time: f64,
    /// `⟨σ_jj⟩` for `j = 1…4`.
    pub populations: [f64; 4],
    pub n1: f64,
    pub n2: f64,
    pub sigma12: Complex64,
    pub sigma13: Complex64,
    pub sigma24: Complex64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub observables: Vec<Observables>,
}

impl Trajectory {
    /// Expectation of any extra operator along the trajectory.
    pub fn expect(&self, op: &Operator) -> Result<Vec<Complex64>> {
        self.states.iter().map(|s| s.expectation(op)).collect()
    }
}

/// Master-equation run in the Hermitian convention.
pub fn simulate(
    p: &NSchemeParams,
    t: &Truncation,
    rho0: &QuantumState,
    t_grid: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    simulate_in(p, t, Convention::Hermitian, rho0, t_grid, tol)
}

pub fn simulate_in(
    p: &NSchemeParams,
    t: &Truncation,
    convention: Convention,
    rho0: &QuantumState,
    t_grid: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    let h = Hamiltonian::Static(build_hsys_in(p, t, convention)?);
    let c = collapse_operators(p, t)?;
    let states = evolve_lindblad(&h, &c, rho0, t_grid, tol)?;
    let space = t.space();
    let pops: Vec<Operator> = (1..=4).map(|j| sigma(&space, j, j)).collect::<Result<_>>()?;
    let n1 = mode_number(t, 1)?;
    let n2 = mode_number(t, 2)?;
    let (s12, s13, s24) = (sigma(&space, 1, 2)?, sigma(&space, 1, 3)?, sigma(&space, 2, 4)?);
    let observables = states
        .iter()
        .zip(t_grid)
        .map(|(state, &time)| {
            let e = |op: &Operator| state.expectation(op);
            let mut populations = [0.0; 4];
            for (slot, op) in populations.iter_mut().zip(&pops) {
                *slot = e(op)?.re;
            }
            Ok(Observables {
                time,
                populations,
                n1: e(&n1)?.re,
                n2: e(&n2)?.re,
                sigma12: e(&s12)?,
                sigma13: e(&s13)?,
                sigma24: e(&s24)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        observables,
    })
}

/// Product state of an atomic level and two Fock states.
pub fn product_fock(t: &Truncation, level: usize, n1: usize, n2: usize) -> Result<QuantumState> {
    if !(1..=4).contains(&level) {
        return Err(Error::InvalidParameters(format!("atomic levels are 1..=4, got {level}")));
    }
    QuantumState::basis(&t.space(), &[level - 1, n1, n2])
}

/// Atom in `|level⟩` tensored with a two-mode state.
pub fn with_atom(level: usize, modes: &QuantumState) -> Result<QuantumState> {
    let atom = QuantumState::fock(3, level.checked_sub(1).ok_or_else(|| {
        Error::InvalidParameters("atomic levels are 1..=4".into())
    })?)?;
    atom.tensor(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{max_abs, CMatrix};
    use approx::assert_abs_diff_eq;

    #[test]
    fn dimension_and_hermiticity() {
        let h = build_hsys(&NSchemeParams::operating_point(), &Truncation::uniform(2)).unwrap();
        assert_eq!(h.dim(), 36);
        h.check_hermitian().unwrap();
        let ah = build_hsys_in(&NSchemeParams::operating_point(), &Truncation::uniform(2), Convention::AntiHermitian).unwrap();
        ah.check_hermitian().unwrap();
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal() {
        let p = NSchemeParams {
            probe_coupling: 0.0,
            signal_coupling: 0.0,
            pump_rabi: 0.0,
            raman_detuning: 0.2,
            ..NSchemeParams::operating_point()
        };
        let t = Truncation::uniform(2);
        let h = build_hsys(&p, &t).unwrap();
        let space = t.space();
        let expected = sigma(&space, 3, 3).unwrap() * 0.2 + sigma(&space, 4, 4).unwrap() * 1.5;
        assert_eq!(h, expected);
    }

    #[test]
    fn conventions_related_by_atomic_phase() {
        let p = NSchemeParams::operating_point();
        let t = Truncation::uniform(1);
        let herm = build_hsys(&p, &t).unwrap();
        let anti = build_hsys_in(&p, &t, Convention::AntiHermitian).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let u_atom = CMatrix::from_diagonal(&crate::quantum::CVector::from_vec(vec![i, i, 1.0.into(), 1.0.into()]));
        let u = Operator::embed(&t.space(), 0, &Operator::from_matrix(u_atom).unwrap()).unwrap();
        let rotated = u.matrix() * herm.matrix() * u.matrix().adjoint();
        assert!(max_abs(&(rotated - anti.matrix())) < 1e-15);
    }

    #[test]
    fn excitation_numbers_commute() {
        let p = NSchemeParams {
            raman_detuning: 0.01,
            ..NSchemeParams::operating_point()
        };
        let t = Truncation::new(3, 2);
        let h = build_hsys(&p, &t).unwrap();
        let (n1, n2) = excitation_numbers(&t).unwrap();
        assert!(h.commutator(&n1).unwrap().max_abs() < 1e-14);
        assert!(h.commutator(&n2).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn no_rates_no_channels() {
        let c = collapse_operators(&NSchemeParams::operating_point(), &Truncation::uniform(1)).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn adiabatic_ratios() {
        let r = adiabatic_check(&NSchemeParams::operating_point()).unwrap();
        assert_abs_diff_eq!(r.r1, 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(r.r2, 0.2, epsilon = 1e-15);
        assert!(r.pass);
        let p = NSchemeParams {
            probe_coupling: 1.5,
            ..NSchemeParams::operating_point()
        };
        let r = adiabatic_check(&p).unwrap();
        assert_eq!(r.r1, 1.0);
        assert!(!r.pass);
        let p = NSchemeParams {
            signal_coupling: 0.0,
            ..NSchemeParams::operating_point()
        };
        let r = adiabatic_check(&p).unwrap();
        assert_eq!(r.r2, 0.0);
        assert!(r.r2_ok);
    }

    #[test]
    fn elimination_preconditions() {
        let p = NSchemeParams {
            pump_rabi: 0.0,
            ..NSchemeParams::operating_point()
        };
        assert_eq!(
            adiabatic_check(&p).unwrap_err().to_string(),
            "elimination requires Ω_c > 0"
        );
        let p = NSchemeParams {
            signal_detuning: 0.0,
            ..NSchemeParams::operating_point()
        };
        assert!(matches!(adiabatic_check(&p), Err(Error::EliminationInvalid(_))));
    }

    #[test]
    fn gamma5_split() {
        let r = DecayRates {
            decay_21: 1.0,
            dephasing_21: 3.0,
            ..DecayRates::default()
        };
        assert_eq!(r.gamma5(), 4.0);
        let r2 = r.with_gamma5(2.0);
        assert_eq!((r2.decay_21, r2.dephasing_21), (0.5, 1.5));
        let r3 = DecayRates::default().with_gamma5(0.3);
        assert_eq!((r3.decay_21, r3.dephasing_21), (0.0, 0.3));
    }

    #[test]
    fn zero_truncation_warns() {
        let w = truncation_warnings(&NSchemeParams::operating_point(), &Truncation::new(0, 1));
        assert_eq!(w.len(), 1);
    }
}
