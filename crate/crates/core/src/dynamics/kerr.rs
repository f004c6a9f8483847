use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::QuantumState;

/// Effective two-mode Kerr couplings (GHz), `H = −χ₃ a†b†ab − χ_B b†b†bb`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KerrParams {
    /// Complex cross-Kerr coefficient; a positive imaginary part damps `|n,m⟩` at rate `2π·Im χ₃·nm`.
    pub chi_cross: Complex64,
    #[serde(default)]
    pub chi_self_b: f64,
}

impl KerrParams {
    pub fn cross(chi: Complex64) -> Self {
        Self {
            chi_cross: chi,
            chi_self_b: 0.0,
        }
    }

    /// Time at which `|1,1⟩` picks up a π phase.
    pub fn conditional_pi_time(&self) -> Result<f64> {
        if !(self.chi_cross.re > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "conditional π time needs Re χ₃ > 0, got {}",
                self.chi_cross.re
            )));
        }
        Ok(1.0 / (2.0 * self.chi_cross.re))
    }

    /// Diagonal propagator entry for `|n,m⟩`.
    pub fn factor(&self, n: usize, m: usize, t: f64) -> Complex64 {
        let (n, m) = (n as f64, m as f64);
        let cross = Complex64::i() * TAU * self.chi_cross * t * n * m;
        let self_b = Complex64::new(0.0, TAU * self.chi_self_b * t * m * (m - 1.0));
        (cross + self_b).exp()
    }
}

/// Output of [`kerr_evolve_lossy`].
#[derive(Debug, Clone, PartialEq)]
pub struct KerrEvolution {
    /// Renormalized state.
    pub state: QuantumState,
    /// Norm (or trace) retained by the damped propagator.
    pub success_probability: f64,
}

fn two_mode_dims(state: &QuantumState) -> Result<(usize, usize)> {
    match state.space().factor_dims() {
        &[a, b] => Ok((a, b)),
        other => Err(Error::InvalidSpace(format!(
            "Kerr evolution acts on two modes, state has factors {other:?}"
        ))),
    }
}

/// Exact diagonal evolution; renormalizes when `χ₃` is complex.
pub fn kerr_evolve(k: &KerrParams, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
    Ok(kerr_evolve_lossy(k, psi0, t)?.state)
}

pub fn kerr_evolve_lossy(k: &KerrParams, psi0: &QuantumState, t: f64) -> Result<KerrEvolution> {
    let (_, d2) = two_mode_dims(psi0)?;
    let space = psi0.space().clone();
    let phase = |flat: usize| k.factor(flat / d2, flat % d2, t);
    match psi0 {
        QuantumState::Ket { vector, .. } => {
            let out = vector.map_with_location(|i, _, c| c * phase(i));
            let success_probability = out.norm_squared();
            Ok(KerrEvolution {
                state: QuantumState::ket_normalized(space, out)?,
                success_probability,
            })
        }
        QuantumState::Density { matrix, .. } => {
            let out = matrix.map_with_location(|i, j, c| c * phase(i) * phase(j).conj());
            let trace = out.trace().re;
            if !(trace > 0.0) {
                return Err(Error::InvalidState("Kerr damping removed the whole state".into()));
            }
            Ok(KerrEvolution {
                state: QuantumState::density(space, out.unscale(trace))?,
                success_probability: trace,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{HilbertSpace, CVector};

    fn uniform(n_max: usize) -> QuantumState {
        let space = HilbertSpace::new(vec![n_max + 1, n_max + 1]).unwrap();
        let dim = space.total_dim();
        QuantumState::ket_normalized(space, CVector::from_element(dim, Complex64::from(1.0))).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let psi = uniform(3);
        let k = KerrParams::cross(Complex64::new(0.0024, 1e-6));
        assert_eq!(kerr_evolve(&k, &psi, 0.0).unwrap(), psi);
    }

    #[test]
    fn full_period_is_identity() {
        let psi = uniform(4);
        let k = KerrParams::cross(Complex64::from(0.0024));
        let out = kerr_evolve(&k, &psi, 1.0 / 0.0024).unwrap();
        let diff = out.as_ket().unwrap() - psi.as_ket().unwrap();
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn controlled_z_at_pi_time() {
        let psi = uniform(1);
        let k = KerrParams::cross(Complex64::from(0.0024));
        let t = k.conditional_pi_time().unwrap();
        let out = kerr_evolve(&k, &psi, t).unwrap();
        let v = out.as_ket().unwrap();
        for (i, expected) in [0.5, 0.5, 0.5, -0.5].into_iter().enumerate() {
            assert!((v[i] - Complex64::from(expected)).norm() < 1e-12);
        }
    }

    #[test]
    fn density_and_ket_agree() {
        let psi = uniform(2);
        let k = KerrParams {
            chi_cross: Complex64::new(0.003, 0.0001),
            chi_self_b: 0.001,
        };
        let a = kerr_evolve_lossy(&k, &psi, 37.0).unwrap();
        let b = kerr_evolve_lossy(&k, &psi.to_density(), 37.0).unwrap();
        assert!((a.success_probability - b.success_probability).abs() < 1e-12);
        assert!((a.state.density_matrix() - b.state.density_matrix()).norm() < 1e-12);
    }

    #[test]
    fn rejects_atom_factor() {
        let space = HilbertSpace::new(vec![4, 2, 2]).unwrap();
        let psi = QuantumState::basis(&space, &[0, 0, 0]).unwrap();
        assert!(kerr_evolve(&KerrParams::default(), &psi, 1.0).is_err());
    }
}
