use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::space::HilbertSpace;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// A dense operator on a labeled tensor-product space.
///
/// Frequencies carried by Hamiltonians are ordinary frequencies in GHz
/// (angular frequency over 2π); time evolution supplies the 2π.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

/// One slot of a tensor product: an operator or an identity placeholder.
#[derive(Debug, Clone, Copy)]
pub enum Factor<'a> {
    Op(&'a Operator),
    Identity(usize),
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                factor: 0,
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    /// Wrap a square matrix as an operator on a single-factor space.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                factor: 0,
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let space = HilbertSpace::single(matrix.nrows())?;
        Ok(Self { space, matrix })
    }

    /// Build a single-factor operator from real row-major entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                factor: 0,
                expected: dim * dim,
                found: rows.len(),
            });
        }
        Self::from_matrix(CMatrix::from_row_iterator(
            dim,
            dim,
            rows.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self::from_matrix(m)
    }

    /// Bosonic annihilation operator truncated at `n_max` photons.
    pub fn destroy(n_max: usize) -> Self {
        let n = n_max + 1;
        let mut m = CMatrix::zeros(n, n);
        for k in 1..n {
            m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
        }
        Self::from_matrix(m).expect("square by construction")
    }

    pub fn create(n_max: usize) -> Self {
        Self::destroy(n_max).dagger()
    }

    pub fn number(n_max: usize) -> Self {
        let values: Vec<f64> = (0..=n_max).map(|k| k as f64).collect();
        Self::diagonal(&values).expect("non-empty")
    }

    /// `|j⟩⟨k|` on a `dim`-level system, zero-based.
    pub fn transition(dim: usize, j: usize, k: usize) -> Result<Self> {
        if j >= dim || k >= dim {
            return Err(Error::DimensionMismatch {
                factor: 0,
                expected: dim,
                found: j.max(k) + 1,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(j, k)] = ONE;
        Self::from_matrix(m)
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
    }

    pub fn pauli_y() -> Self {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        Self::from_matrix(m).expect("2x2")
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0]).expect("2x2")
    }

    /// Place `op` on factor `factor` of `space`, identities elsewhere.
    pub fn embed(space: &HilbertSpace, factor: usize, op: &Operator) -> Result<Self> {
        let dims = space.factor_dims();
        let expected = *dims.get(factor).ok_or(Error::DimensionMismatch {
            factor,
            expected: dims.len(),
            found: factor + 1,
        })?;
        if op.dim() != expected {
            return Err(Error::DimensionMismatch {
                factor,
                expected,
                found: op.dim(),
            });
        }
        let slots: Vec<Factor> = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| if i == factor { Factor::Op(op) } else { Factor::Identity(d) })
            .collect();
        tensor(&slots)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    /// `‖M − M†‖_max`.
    pub fn hermitian_deviation(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Hermiticity test at `‖M − M†‖_max < 1e-12 · ‖M‖_max`.
    pub fn is_hermitian(&self) -> bool {
        self.check_hermitian().is_ok()
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        let scale = self.max_abs();
        if deviation <= 1e-12 * scale {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation, scale })
        }
    }

    pub(crate) fn check_same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.factor_dims().to_vec(),
                right: other.space.factor_dims().to_vec(),
            });
        }
        Ok(())
    }
}

/// Kronecker product of the factors in declared order.
pub fn tensor(factors: &[Factor]) -> Result<Operator> {
    let mut dims = Vec::new();
    let mut matrix: Option<CMatrix> = None;
    for (index, factor) in factors.iter().enumerate() {
        let m = match factor {
            Factor::Op(op) => {
                dims.extend_from_slice(op.space.factor_dims());
                op.matrix.clone()
            }
            Factor::Identity(0) => {
                return Err(Error::DimensionMismatch {
                    factor: index,
                    expected: 1,
                    found: 0,
                })
            }
            Factor::Identity(d) => {
                dims.push(*d);
                CMatrix::identity(*d, *d)
            }
        };
        matrix = Some(match matrix {
            None => m,
            Some(acc) => acc.kronecker(&m),
        });
    }
    let matrix = matrix.ok_or_else(|| Error::InvalidSpace("empty tensor product".into()))?;
    Operator::new(HilbertSpace::new(dims)?, matrix)
}

/// Tensor product checked against a target space, factor by factor.
pub fn tensor_on(space: &HilbertSpace, factors: &[Factor]) -> Result<Operator> {
    let mut slot = 0;
    for (index, factor) in factors.iter().enumerate() {
        let dims: Vec<usize> = match factor {
            Factor::Op(op) => op.space.factor_dims().to_vec(),
            Factor::Identity(d) => vec![*d],
        };
        for d in dims {
            let expected = space.factor_dims().get(slot).copied().unwrap_or(0);
            if d != expected {
                return Err(Error::DimensionMismatch {
                    factor: index,
                    expected,
                    found: d,
                });
            }
            slot += 1;
        }
    }
    if slot != space.num_factors() {
        return Err(Error::DimensionMismatch {
            factor: factors.len(),
            expected: space.num_factors(),
            found: slot,
        });
    }
    tensor(factors)
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operator spaces differ");
                Operator {
                    space: self.space.clone(),
                    matrix: &self.matrix $op &rhs.matrix,
                }
            }
        }
        impl $trait<Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                &self $op &rhs
            }
        }
        impl $trait<&Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                &self $op rhs
            }
        }
    };
}

binary_op!(Add, add, +);
binary_op!(Sub, sub, -);
binary_op!(Mul, mul, *);

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        self.matrix += &rhs.matrix;
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Complex64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: Complex64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}
