//! Effective photon dynamics under the Kerr Hamiltonian and checks of that
//! description against the full atom-plus-modes model.

mod cat;
mod compare;
mod kerr;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, QuantumState};

pub use cat::{cat_protocol, coherent_overlap, suggested_cutoff, truncation_tail, CatProtocolResult, TRUNCATION_CEILING};
pub use compare::{compare_full_vs_effective, ComponentPhaseError, FullVsEffective};
pub use kerr::{kerr_evolve, kerr_evolve_lossy, KerrEvolution, KerrParams};

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&roots.map(Into::into)) * v.adjoint()
}

/// `|⟨a|b⟩|²` for kets, `⟨a|ρ|a⟩` for a ket and a density matrix, Uhlmann fidelity otherwise.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.space() != b.space() {
        return Err(Error::SpaceMismatch {
            left: a.space().factor_dims().to_vec(),
            right: b.space().factor_dims().to_vec(),
        });
    }
    let f = match (a.as_ket(), b.as_ket()) {
        (Some(x), Some(y)) => x.dotc(y).norm_sqr(),
        (Some(x), None) => (x.adjoint() * b.density_matrix() * x)[(0, 0)].re,
        (None, Some(y)) => (y.adjoint() * a.density_matrix() * y)[(0, 0)].re,
        (None, None) => {
            let root = psd_sqrt(&a.density_matrix());
            let inner = &root * b.density_matrix() * &root;
            let herm = (&inner + inner.adjoint()).scale(0.5);
            SymmetricEigen::new(herm)
                .eigenvalues
                .iter()
                .map(|v| v.max(0.0).sqrt())
                .sum::<f64>()
                .powi(2)
        }
    };
    Ok(f.clamp(0.0, 1.0))
}
