use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fidelity;
use super::kerr::{kerr_evolve_lossy, KerrParams};
use crate::elimination::{susceptibilities_with, EliminationOptions};
use crate::error::{Error, Result};
use crate::nscheme::{build_hsys, collapse_operators, with_atom, NSchemeParams, Truncation};
use crate::quantum::{evolve_lindblad, Hamiltonian, QuantumState};

/// Phase of `⟨n,m|ρ|0,0⟩` in the full model minus the effective prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPhaseError {
    pub fock: (usize, usize),
    /// Radians, wrapped to (−π, π].
    pub error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullVsEffective {
    /// `χ₃` used for the effective evolution.
    pub chi3: Complex64,
    pub times: Vec<f64>,
    /// `1 − ⟨ψ_eff|ρ_modes|ψ_eff⟩` with the atom traced out.
    pub infidelity: Vec<f64>,
    pub phase_error: Vec<ComponentPhaseError>,
}

impl FullVsEffective {
    pub fn final_infidelity(&self) -> f64 {
        *self.infidelity.last().expect("at least one sample")
    }
}

fn wrap(angle: f64) -> f64 {
    let a = (angle + PI).rem_euclid(TAU) - PI;
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Evolve the atom-plus-modes model and the Kerr model side by side from
/// `|1⟩ ⊗ ψ₀` and `ψ₀` respectively, at `samples` evenly spaced times.
pub fn compare_full_vs_effective(
    p: &NSchemeParams,
    t: &Truncation,
    psi0: &QuantumState,
    horizon: f64,
    samples: usize,
    tolerance: f64,
) -> Result<FullVsEffective> {
    if psi0.space() != &t.mode_space() {
        return Err(Error::SpaceMismatch {
            left: psi0.space().factor_dims().to_vec(),
            right: t.mode_space().factor_dims().to_vec(),
        });
    }
    if samples < 2 || !(horizon > 0.0) {
        return Err(Error::InvalidParameters("need a positive horizon and at least two samples".into()));
    }
    let chi3 = susceptibilities_with(p, EliminationOptions::unchecked())?.chi3;
    let kerr = KerrParams::cross(chi3);

    let times: Vec<f64> = (0..samples).map(|k| horizon * k as f64 / (samples - 1) as f64).collect();
    let full = evolve_lindblad(
        &Hamiltonian::Static(build_hsys(p, t)?),
        &collapse_operators(p, t)?,
        &with_atom(1, psi0)?,
        &times,
        tolerance,
    )?;

    let d2 = t.n_max2 + 1;
    let amp0 = psi0.density_matrix();
    let tracked: Vec<(usize, usize)> = (1..amp0.nrows())
        .filter(|&i| amp0[(i, 0)].norm() > 1e-12)
        .map(|i| (i / d2, i % d2))
        .collect();
    let mut phase_error: Vec<ComponentPhaseError> = tracked
        .iter()
        .map(|&fock| ComponentPhaseError { fock, error: Vec::with_capacity(samples) })
        .collect();
    let mut infidelity = Vec::with_capacity(samples);

    for (state, &time) in full.iter().zip(&times) {
        let modes = state.partial_trace(&[1, 2])?;
        let effective = kerr_evolve_lossy(&kerr, psi0, time)?.state;
        infidelity.push(1.0 - fidelity(&effective, &modes)?);
        let (rho_full, rho_eff) = (modes.density_matrix(), effective.density_matrix());
        for entry in phase_error.iter_mut() {
            let i = entry.fock.0 * d2 + entry.fock.1;
            entry.error.push(wrap(rho_full[(i, 0)].arg() - rho_eff[(i, 0)].arg()));
        }
    }
    Ok(FullVsEffective {
        chi3,
        times,
        infidelity,
        phase_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap(-PI), PI);
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
