use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::ode::{integrate, OdeOptions};
use super::operator::{CMatrix, Operator, I};
use super::space::HilbertSpace;
use super::state::{CVector, QuantumState};
use crate::error::{Error, Result};

/// Real time-dependent envelope `f(t)` with `t` in ns.
pub type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Hamiltonian `H(t) = H_static + Σ f_k(t) O_k` in GHz.
#[derive(Clone)]
pub enum Hamiltonian {
    Static(Operator),
    Driven {
        static_part: Operator,
        terms: Vec<(Envelope, Operator)>,
    },
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Static(h) => f.debug_tuple("Static").field(h).finish(),
            Self::Driven { static_part, terms } => f
                .debug_struct("Driven")
                .field("static_part", static_part)
                .field("terms", &terms.len())
                .finish(),
        }
    }
}

impl From<Operator> for Hamiltonian {
    fn from(op: Operator) -> Self {
        Self::Static(op)
    }
}

impl Hamiltonian {
    pub fn space(&self) -> &HilbertSpace {
        match self {
            Self::Static(h) | Self::Driven { static_part: h, .. } => h.space(),
        }
    }

    /// Instantaneous matrix at time `t`.
    pub fn at(&self, t: f64) -> CMatrix {
        match self {
            Self::Static(h) => h.matrix().clone(),
            Self::Driven { static_part, terms } => {
                let mut m = static_part.matrix().clone();
                for (f, op) in terms {
                    m += op.matrix() * Complex64::new(f(t), 0.0);
                }
                m
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Static(h) => h.check_hermitian(),
            Self::Driven { static_part, terms } => {
                static_part.check_hermitian()?;
                for (_, op) in terms {
                    static_part.check_same_space(op)?;
                    op.check_hermitian()?;
                }
                Ok(())
            }
        }
    }
}

/// Dissipation channel `γ L[c]` with `L[c]ρ = 2cρc† − c†cρ − ρc†c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOp {
    pub rate: f64,
    pub op: Operator,
}

impl CollapseOp {
    pub fn new(rate: f64, op: Operator) -> Self {
        Self { rate, op }
    }
}

fn validate_channels(space: &HilbertSpace, channels: &[CollapseOp]) -> Result<()> {
    for (index, c) in channels.iter().enumerate() {
        if !(c.rate >= 0.0) {
            return Err(Error::NegativeRate { index, rate: c.rate });
        }
        if c.op.space() != space {
            return Err(Error::SpaceMismatch {
                left: space.factor_dims().to_vec(),
                right: c.op.space().factor_dims().to_vec(),
            });
        }
    }
    Ok(())
}

/// `Σ γ c†c`, the anti-Hermitian part of the effective Hamiltonian.
fn loss_matrix(dim: usize, channels: &[CollapseOp]) -> CMatrix {
    channels.iter().fold(CMatrix::zeros(dim, dim), |acc, c| {
        let m = c.op.matrix();
        acc + (m.adjoint() * m) * Complex64::new(c.rate, 0.0)
    })
}

/// Evolve under `dρ/dt = 2π(−i[H,ρ] + Σ γ L[c]ρ)` and sample on `t_grid`.
///
/// Frequencies are in GHz and times in ns. A ket input with no collapse
/// channels is propagated as a ket; all other cases return density matrices.
pub fn evolve_lindblad(
    h: &Hamiltonian,
    collapse: &[CollapseOp],
    rho0: &QuantumState,
    t_grid: &[f64],
    tol: f64,
) -> Result<Vec<QuantumState>> {
    let space = h.space().clone();
    h.validate()?;
    validate_channels(&space, collapse)?;
    if rho0.space() != &space {
        return Err(Error::SpaceMismatch {
            left: space.factor_dims().to_vec(),
            right: rho0.space().factor_dims().to_vec(),
        });
    }
    let opts = OdeOptions::with_tol(tol);
    let active: Vec<&CollapseOp> = collapse.iter().filter(|c| c.rate > 0.0).collect();
    let dim = space.total_dim();

    if active.is_empty() {
        if let Some(psi) = rho0.as_ket() {
            let minus_i_tau = Complex64::new(0.0, -TAU);
            let rhs = |t: f64, y: &CVector, dy: &mut CVector| {
                let hm = h.at(t);
                hm.mul_to(y, dy);
                *dy *= minus_i_tau;
            };
            let traj = integrate(rhs, psi.clone(), t_grid, &opts)?;
            return Ok(traj
                .into_iter()
                .map(|vector| QuantumState::Ket {
                    space: space.clone(),
                    vector,
                })
                .collect());
        }
    }

    let active: Vec<CollapseOp> = active.into_iter().cloned().collect();
    let loss = loss_matrix(dim, &active);
    let jumps: Vec<(CMatrix, CMatrix)> = active
        .iter()
        .map(|c| {
            let m = c.op.matrix() * Complex64::new((2.0 * c.rate).sqrt(), 0.0);
            let md = m.adjoint();
            (m, md)
        })
        .collect();
    let is_static = matches!(h, Hamiltonian::Static(_));
    let static_eff = h.at(0.0) - &loss * I;

    let rhs = |t: f64, y: &CVector, dy: &mut CVector| {
        let rho = CMatrix::from_column_slice(dim, dim, y.as_slice());
        let heff = if is_static {
            None
        } else {
            Some(h.at(t) - &loss * I)
        };
        let heff = heff.as_ref().unwrap_or(&static_eff);
        // Writing ρH_eff† as (H_effρ)† would send the anti-Hermitian roundoff of ρ
        // through −[L, ·], which has growing modes, so both products are kept.
        let mut out = (heff * &rho - &rho * heff.adjoint()) * Complex64::new(0.0, -TAU);
        for (m, md) in &jumps {
            out += (m * &rho * md) * Complex64::new(TAU, 0.0);
        }
        dy.copy_from_slice(out.as_slice());
    };
    let rho = rho0.density_matrix();
    let y0 = CVector::from_column_slice(rho.as_slice());
    let traj = integrate(rhs, y0, t_grid, &opts)?;
    Ok(traj
        .into_iter()
        .map(|y| {
            QuantumState::density_unchecked(
                space.clone(),
                CMatrix::from_column_slice(dim, dim, y.as_slice()),
            )
        })
        .collect())
}

/// Dense superoperator on column-stacked `vec(ρ)`, including the 2π factor.
pub fn liouvillian(h: &Operator, collapse: &[CollapseOp]) -> Result<CMatrix> {
    h.check_hermitian()?;
    validate_channels(h.space(), collapse)?;
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    let heff = h.matrix() - loss_matrix(d, collapse) * I;
    // vec(AXB) = (Bᵀ ⊗ A) vec(X)
    let mut l = (id.kronecker(&heff) - heff.conjugate().kronecker(&id)) * (-I);
    for c in collapse.iter().filter(|c| c.rate > 0.0) {
        let m = c.op.matrix();
        l += m.conjugate().kronecker(m) * Complex64::new(2.0 * c.rate, 0.0);
    }
    Ok(l * Complex64::new(TAU, 0.0))
}

/// Apply the Lindblad generator to a density matrix (for residual checks).
pub fn apply_generator(h: &Operator, collapse: &[CollapseOp], rho: &CMatrix) -> CMatrix {
    let hm = h.matrix();
    let mut out = (hm * rho - rho * hm) * (-I);
    for c in collapse {
        let m = c.op.matrix();
        let md = m.adjoint();
        let mdm = &md * m;
        out += (m * rho * &md * Complex64::new(2.0, 0.0) - &mdm * rho - rho * &mdm)
            * Complex64::new(c.rate, 0.0);
    }
    out * Complex64::new(TAU, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::quantum::{steady_state, trace_distance};

    fn qubit_space() -> HilbertSpace {
        HilbertSpace::single(2).unwrap()
    }

    #[test]
    fn trivial_generator_is_identity() {
        let space = HilbertSpace::new(vec![2, 3]).unwrap();
        let h = Hamiltonian::Static(Operator::zeros(&space));
        let rho0 = QuantumState::maximally_mixed(&space);
        let out = evolve_lindblad(&h, &[], &rho0, &[0.0, 1.0, 5.0], 1e-8).unwrap();
        for s in out {
            assert_eq!(s.density_matrix(), rho0.density_matrix());
        }
    }

    #[test]
    fn long_relaxation_stays_bounded() {
        // Non-normal jumps give H_eff a loss matrix whose commutator has growing
        // modes; the right-hand side must not route roundoff through it.
        let space = HilbertSpace::single(3).unwrap();
        let h = Operator::from_real_rows(3, &[0.4, 0.3, 0.0, 0.3, -0.2, 0.5, 0.0, 0.5, 0.1]).unwrap();
        let c1 = Operator::from_real_rows(3, &[0.2, 1.0, -0.7, 0.4, 0.0, 0.9, -1.0, 0.3, 0.5]).unwrap();
        let c2 = Operator::from_real_rows(3, &[0.0, 0.0, 1.0, 0.8, -0.6, 0.0, 0.3, 0.0, 0.2]).unwrap();
        let collapse = [CollapseOp::new(0.4, c1), CollapseOp::new(0.25, c2)];
        let rho0 = QuantumState::maximally_mixed(&space);
        let out = evolve_lindblad(&Hamiltonian::Static(h.clone()), &collapse, &rho0, &[0.0, 200.0], 1e-10).unwrap();
        let ss = steady_state(&h, &collapse).unwrap();
        assert!(trace_distance(&ss, &out[1]).unwrap() < 1e-8);
    }

    #[test]
    fn spontaneous_decay_at_twice_the_rate() {
        let gamma = 0.07;
        // level 0 is |e⟩, level 1 is |g⟩
        let lower = Operator::transition(2, 1, 0).unwrap();
        let h = Hamiltonian::Static(Operator::zeros(&qubit_space()));
        let rho0 = QuantumState::basis(&qubit_space(), &[0]).unwrap().to_density();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let out = evolve_lindblad(&h, &[CollapseOp::new(gamma, lower)], &rho0, &grid, 1e-10).unwrap();
        let pe = Operator::transition(2, 0, 0).unwrap();
        for (t, s) in grid.iter().zip(&out) {
            let p = s.expectation(&pe).unwrap().re;
            assert_abs_diff_eq!(p, (-2.0 * gamma * TAU * t).exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn detuned_rabi_matches_analytic() {
        let (omega, delta) = (0.2, 0.15);
        // H = δ|e⟩⟨e| + Ω(|e⟩⟨g| + h.c.) with |g⟩ = 0, |e⟩ = 1
        let h = Operator::from_real_rows(2, &[0.0, omega, omega, delta]).unwrap();
        let psi0 = QuantumState::basis(&qubit_space(), &[0]).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let out = evolve_lindblad(&h.into(), &[], &psi0, &grid, 1e-10).unwrap();
        let w = (omega * omega + delta * delta / 4.0).sqrt();
        for (t, s) in grid.iter().zip(&out) {
            let pe = s.as_ket().unwrap()[1].norm_sqr();
            let analytic = (omega / w).powi(2) * (TAU * w * t).sin().powi(2);
            assert!((pe - analytic).abs() < 1e-6, "t={t}: {pe} vs {analytic}");
        }
    }

    #[test]
    fn negative_rate_rejected() {
        let h = Hamiltonian::Static(Operator::zeros(&qubit_space()));
        let rho0 = QuantumState::maximally_mixed(&qubit_space());
        let c = CollapseOp::new(-0.1, Operator::pauli_z());
        assert_eq!(
            evolve_lindblad(&h, &[c], &rho0, &[0.0, 1.0], 1e-8).unwrap_err(),
            Error::NegativeRate { index: 0, rate: -0.1 }
        );
    }

    #[test]
    fn liouvillian_matches_direct_generator() {
        let h = Operator::from_real_rows(2, &[0.3, 0.1, 0.1, -0.2]).unwrap();
        let c = vec![
            CollapseOp::new(0.05, Operator::transition(2, 0, 1).unwrap()),
            CollapseOp::new(0.02, Operator::pauli_z()),
        ];
        let rho = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.6, 0.0),
                Complex64::new(0.1, 0.2),
                Complex64::new(0.1, -0.2),
                Complex64::new(0.4, 0.0),
            ],
        );
        let l = liouvillian(&h, &c).unwrap();
        let v = l * CVector::from_column_slice(rho.as_slice());
        let direct = apply_generator(&h, &c, &rho);
        for (a, b) in v.iter().zip(direct.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
