use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::operator::{max_abs, CMatrix, Operator, ONE, ZERO};
use super::space::HilbertSpace;
use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;

const NORM_TOL: f64 = 1e-10;
const EIGEN_FLOOR: f64 = -1e-9;

/// Pure or mixed state on a labeled space.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Ket { space: HilbertSpace, vector: CVector },
    Density { space: HilbertSpace, matrix: CMatrix },
}

impl QuantumState {
    /// Validated ket: norm must be 1 within 1e-10.
    pub fn ket(space: HilbertSpace, vector: CVector) -> Result<Self> {
        check_len(&space, vector.len())?;
        let norm = vector.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("ket norm {norm} differs from 1")));
        }
        Ok(Self::Ket { space, vector })
    }

    /// Ket scaled to unit norm.
    pub fn ket_normalized(space: HilbertSpace, vector: CVector) -> Result<Self> {
        let norm = vector.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::ket(space, vector.unscale(norm))
    }

    /// Validated density matrix: unit trace, Hermitian, eigenvalues ≥ −1e-9.
    pub fn density(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        check_len(&space, matrix.nrows())?;
        check_len(&space, matrix.ncols())?;
        let trace = matrix.trace();
        if (trace - ONE).norm() > NORM_TOL {
            return Err(Error::InvalidState(format!("density trace {trace} differs from 1")));
        }
        let dev = max_abs(&(&matrix - matrix.adjoint()));
        if dev > 1e-10 {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({dev:e})")));
        }
        let state = Self::Density { space, matrix };
        let min = state.min_eigenvalue();
        if min < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(state)
    }

    /// Wrap a matrix without validation; used for integrator output.
    pub(crate) fn density_unchecked(space: HilbertSpace, matrix: CMatrix) -> Self {
        Self::Density { space, matrix }
    }

    pub fn basis(space: &HilbertSpace, index: &[usize]) -> Result<Self> {
        let flat = space.flat_index(index)?;
        let mut v = CVector::zeros(space.total_dim());
        v[flat] = ONE;
        Ok(Self::Ket {
            space: space.clone(),
            vector: v,
        })
    }

    pub fn fock(n_max: usize, n: usize) -> Result<Self> {
        Self::basis(&HilbertSpace::single(n_max + 1)?, &[n])
    }

    /// Truncated coherent state, renormalized after truncation.
    pub fn coherent(n_max: usize, alpha: Complex64) -> Result<Self> {
        let amps = coherent_amplitudes(n_max, alpha);
        Self::ket_normalized(HilbertSpace::single(n_max + 1)?, amps)
    }

    /// `I/d` on the given space.
    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self::Density {
            space: space.clone(),
            matrix: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        match self {
            Self::Ket { space, .. } | Self::Density { space, .. } => space,
        }
    }

    pub fn is_ket(&self) -> bool {
        matches!(self, Self::Ket { .. })
    }

    pub fn as_ket(&self) -> Option<&CVector> {
        match self {
            Self::Ket { vector, .. } => Some(vector),
            Self::Density { .. } => None,
        }
    }

    /// Density-matrix form (`|ψ⟩⟨ψ|` for kets).
    pub fn density_matrix(&self) -> CMatrix {
        match self {
            Self::Ket { vector, .. } => vector * vector.adjoint(),
            Self::Density { matrix, .. } => matrix.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self::Density {
            space: self.space().clone(),
            matrix: self.density_matrix(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        match self {
            Self::Ket { vector, .. } => Complex64::new(vector.norm_squared(), 0.0),
            Self::Density { matrix, .. } => matrix.trace(),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            Self::Ket { vector, .. } => vector.norm_squared().powi(2),
            Self::Density { matrix, .. } => (matrix * matrix).trace().re,
        }
    }

    /// Smallest eigenvalue of the Hermitian part of ρ.
    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Self::Ket { .. } => 0.0_f64.min(self.trace().re),
            Self::Density { matrix, .. } => {
                let h = (matrix + matrix.adjoint()).unscale(2.0);
                SymmetricEigen::new(h).eigenvalues.min()
            }
        }
    }

    /// `Tr(Oρ)` or `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        if self.space() != op.space() {
            return Err(Error::SpaceMismatch {
                left: self.space().factor_dims().to_vec(),
                right: op.space().factor_dims().to_vec(),
            });
        }
        Ok(match self {
            Self::Ket { vector, .. } => vector.dotc(&(op.matrix() * vector)),
            Self::Density { matrix, .. } => trace_of_product(op.matrix(), matrix),
        })
    }

    /// Reduced density matrix on the kept factors, in ascending factor order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let dims = self.space().factor_dims().to_vec();
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() {
            return Err(Error::InvalidSpace("partial trace must keep a factor".into()));
        }
        if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
            return Err(Error::DimensionMismatch {
                factor: bad,
                expected: dims.len(),
                found: bad + 1,
            });
        }
        let kept_space = HilbertSpace::new(keep.iter().map(|&k| dims[k]).collect())?;
        let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
        let traced_space = if traced.is_empty() {
            None
        } else {
            Some(HilbertSpace::new(traced.iter().map(|&k| dims[k]).collect())?)
        };
        let rho = self.density_matrix();
        let dk = kept_space.total_dim();
        let dt = traced_space.as_ref().map_or(1, HilbertSpace::total_dim);
        let full = self.space();
        let compose = |ki: usize, ti: usize| -> usize {
            let kidx = kept_space.multi_index(ki);
            let tidx = traced_space.as_ref().map(|s| s.multi_index(ti));
            let mut idx = vec![0; dims.len()];
            for (pos, &k) in keep.iter().enumerate() {
                idx[k] = kidx[pos];
            }
            if let Some(tidx) = tidx {
                for (pos, &k) in traced.iter().enumerate() {
                    idx[k] = tidx[pos];
                }
            }
            full.flat_index(&idx).expect("index within space")
        };
        let map: Vec<Vec<usize>> = (0..dk)
            .map(|ki| (0..dt).map(|ti| compose(ki, ti)).collect())
            .collect();
        let mut out = CMatrix::zeros(dk, dk);
        for i in 0..dk {
            for j in 0..dk {
                out[(i, j)] = (0..dt).map(|t| rho[(map[i][t], map[j][t])]).sum();
            }
        }
        Ok(Self::Density {
            space: kept_space,
            matrix: out,
        })
    }

    /// Tensor product of two states; a ket results only if both are kets.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self> {
        let space = self.space().product(other.space());
        Ok(match (self, other) {
            (Self::Ket { vector: a, .. }, Self::Ket { vector: b, .. }) => Self::Ket {
                space,
                vector: a.kronecker(b),
            },
            _ => Self::Density {
                space,
                matrix: self.density_matrix().kronecker(&other.density_matrix()),
            },
        })
    }
}

/// `Tr(AB)` without forming the product.
/// `½‖ρ − σ‖₁`, accepting kets or density matrices on the same space.
pub fn trace_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.space() != b.space() {
        return Err(Error::SpaceMismatch {
            left: a.space().factor_dims().to_vec(),
            right: b.space().factor_dims().to_vec(),
        });
    }
    let diff = a.density_matrix() - b.density_matrix();
    let h = (&diff + diff.adjoint()).unscale(2.0);
    Ok(0.5 * SymmetricEigen::new(h).eigenvalues.iter().map(|v| v.abs()).sum::<f64>())
}

pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Untruncated-normalization coherent amplitudes `e^{-|α|²/2} αⁿ/√n!` for n ≤ n_max.
pub fn coherent_amplitudes(n_max: usize, alpha: Complex64) -> CVector {
    let mut v = CVector::zeros(n_max + 1);
    let mut amp = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v[0] = amp;
    for n in 1..=n_max {
        amp = amp * alpha / (n as f64).sqrt();
        v[n] = amp;
    }
    v
}

fn check_len(space: &HilbertSpace, len: usize) -> Result<()> {
    if len != space.total_dim() {
        return Err(Error::DimensionMismatch {
            factor: 0,
            expected: space.total_dim(),
            found: len,
        });
    }
    Ok(())
}
