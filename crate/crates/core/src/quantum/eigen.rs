use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::operator::{CMatrix, Operator};
use crate::error::Result;

/// Spectrum of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

/// Diagonalize a Hermitian operator.
///
/// Each eigenvector is rotated so that its largest-magnitude component is
/// real and positive. Ties within 1e-12 go to the lowest index, which keeps
/// outputs identical between runs.
pub fn eig_hermitian(op: &Operator) -> Result<EigenDecomposition> {
    op.check_hermitian()?;
    let m = op.matrix();
    let h = (m + m.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let n = m.nrows();
    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let v = eig.eigenvectors.column(src);
        let peak = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let pivot = v
            .iter()
            .find(|z| z.norm() >= peak - 1e-12)
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        vectors.set_column(col, &(v * phase));
    }
    Ok(EigenDecomposition { values, vectors })
}
