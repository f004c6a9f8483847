use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered tensor product of finite-dimensional factors.
///
/// The composite N-scheme space is `[4, n_max1 + 1, n_max2 + 1]`: the atom
/// first, then the two resonator modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidSpace("at least one factor is required".into()));
        }
        if let Some(i) = factor_dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSpace(format!("factor {i} has dimension 0")));
        }
        Ok(Self { factor_dims })
    }

    /// A space with a single factor of dimension `dim`.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    /// Concatenate factor lists: `self ⊗ other`.
    pub fn product(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        HilbertSpace { factor_dims: dims }
    }

    /// Flat index of a product basis state given per-factor indices.
    ///
    /// The last factor varies fastest, matching the Kronecker-product layout.
    pub fn flat_index(&self, indices: &[usize]) -> Result<usize> {
        if indices.len() != self.factor_dims.len() {
            return Err(Error::InvalidSpace(format!(
                "expected {} indices, got {}",
                self.factor_dims.len(),
                indices.len()
            )));
        }
        let mut flat = 0;
        for (factor, (&i, &d)) in indices.iter().zip(&self.factor_dims).enumerate() {
            if i >= d {
                return Err(Error::DimensionMismatch {
                    factor,
                    expected: d,
                    found: i + 1,
                });
            }
            flat = flat * d + i;
        }
        Ok(flat)
    }

    /// Inverse of [`HilbertSpace::flat_index`].
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.factor_dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.factor_dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dim_is_product() {
        let s = HilbertSpace::new(vec![4, 3, 3]).unwrap();
        assert_eq!(s.total_dim(), 36);
    }

    #[test]
    fn zero_factor_rejected() {
        assert!(HilbertSpace::new(vec![2, 0]).is_err());
        assert!(HilbertSpace::new(vec![]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let s = HilbertSpace::new(vec![4, 3, 2]).unwrap();
        for flat in 0..s.total_dim() {
            assert_eq!(s.flat_index(&s.multi_index(flat)).unwrap(), flat);
        }
        assert_eq!(s.flat_index(&[1, 2, 1]).unwrap(), 6 + 4 + 1);
    }
}
