use num_complex::Complex64;

use super::lindblad::{liouvillian, CollapseOp};
use super::operator::{CMatrix, Operator, ONE, ZERO};
use super::state::{CVector, QuantumState};
use crate::error::{Error, Result};

/// Uniqueness gate: the second-smallest singular value must exceed the
/// smallest by this factor.
pub const SPECTRAL_GAP: f64 = 1e6;

/// Stationary density matrix of the Lindblad generator.
///
/// Requires a one-dimensional null space, then solves `L vec(ρ) = 0` with the
/// first row replaced by the trace condition.
pub fn steady_state(h: &Operator, collapse: &[CollapseOp]) -> Result<QuantumState> {
    let d = h.dim();
    let l = liouvillian(h, collapse)?;
    let sv = l.clone().singular_values();
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    let largest = s.last().copied().unwrap_or(0.0);
    let smallest = s[0];
    let second = s.get(1).copied().unwrap_or(largest);
    if !(second > SPECTRAL_GAP * smallest && second > 1e-10 * largest) {
        return Err(Error::DegenerateSteadyState {
            smallest,
            second,
            largest,
        });
    }

    let mut a = l;
    let mut b = CVector::zeros(d * d);
    for col in 0..d * d {
        a[(0, col)] = ZERO;
    }
    for k in 0..d {
        a[(0, k * d + k)] = ONE;
    }
    b[0] = ONE;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularMatrix("trace-constrained Liouvillian".into()))?;
    let rho = CMatrix::from_column_slice(d, d, x.as_slice());
    let mut rho = (&rho + rho.adjoint()).unscale(2.0);
    let tr = rho.trace();
    rho /= Complex64::new(tr.re, 0.0);
    Ok(QuantumState::density_unchecked(h.space().clone(), rho))
}
