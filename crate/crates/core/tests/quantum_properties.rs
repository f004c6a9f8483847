//! Randomized invariants of the master-equation core.

use cqed_xpm::quantum::{
    apply_generator, evolve_lindblad, max_abs, steady_state, CMatrix, CollapseOp, Hamiltonian, HilbertSpace,
    Operator, QuantumState,
};
use num_complex::Complex64;
use proptest::prelude::*;

const TOL: f64 = 1e-8;

fn complex_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_map(move |v| CMatrix::from_iterator(n, n, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

fn hamiltonian(n: usize) -> impl Strategy<Value = Operator> {
    complex_matrix(n).prop_map(|a| Operator::from_matrix((&a + a.adjoint()).scale(0.25)).unwrap())
}

fn density(n: usize) -> impl Strategy<Value = QuantumState> {
    complex_matrix(n).prop_map(move |a| {
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        QuantumState::density(HilbertSpace::single(n).unwrap(), rho / tr).unwrap()
    })
}

fn channels(n: usize) -> impl Strategy<Value = Vec<CollapseOp>> {
    prop::collection::vec((0.02..0.5f64, complex_matrix(n)), 1..=2).prop_map(|v| {
        v.into_iter()
            .map(|(rate, m)| CollapseOp::new(rate, Operator::from_matrix(m).unwrap()))
            .collect()
    })
}

/// A random open system of dimension 2–4.
fn open_system() -> impl Strategy<Value = (Operator, Vec<CollapseOp>, QuantumState)> {
    (2usize..=4).prop_flat_map(|n| (hamiltonian(n), channels(n), density(n)))
}

fn grid(end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| end * k as f64 / n as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_is_preserved((h, c, rho0) in open_system()) {
        let out = evolve_lindblad(&Hamiltonian::Static(h), &c, &rho0, &grid(3.0, 6), TOL).unwrap();
        for s in &out {
            prop_assert!((s.trace() - 1.0).norm() < 10.0 * TOL);
        }
    }

    #[test]
    fn evolution_stays_positive((h, c, rho0) in open_system()) {
        let out = evolve_lindblad(&Hamiltonian::Static(h), &c, &rho0, &grid(3.0, 6), TOL).unwrap();
        for s in &out {
            prop_assert!(s.min_eigenvalue() >= -1e-7);
        }
    }

    #[test]
    fn closed_evolution_conserves_purity((h, _, rho0) in open_system()) {
        let times = grid(2.0, 4);
        let out = evolve_lindblad(&Hamiltonian::Static(h), &[], &rho0, &times, 1e-11).unwrap();
        let p0 = rho0.purity();
        for (s, t) in out.iter().zip(&times).skip(1) {
            prop_assert!((s.purity() - p0).abs() / t < 1e-8);
        }
    }

    #[test]
    fn steady_state_is_annihilated_by_the_generator((h, c, _) in open_system()) {
        let ss = steady_state(&h, &c).unwrap();
        prop_assert!((ss.trace() - 1.0).norm() < 1e-12);
        prop_assert!(max_abs(&apply_generator(&h, &c, &ss.density_matrix())) < 1e-9);
    }

    #[test]
    fn ket_and_density_paths_agree((h, _, _) in open_system(), seed in complex_matrix(4)) {
        let n = h.dim();
        let psi = QuantumState::ket_normalized(
            HilbertSpace::single(n).unwrap(),
            seed.column(0).rows(0, n).into_owned(),
        ).unwrap();
        let times = [0.0, 1.5];
        let ham = Hamiltonian::Static(h);
        let ket = evolve_lindblad(&ham, &[], &psi, &times, 1e-10).unwrap();
        let rho = evolve_lindblad(&ham, &[], &psi.to_density(), &times, 1e-10).unwrap();
        prop_assert!(max_abs(&(ket[1].density_matrix() - rho[1].density_matrix())) < 1e-7);
    }

    #[test]
    fn maximally_mixed_expectation_is_normalized_trace((h, _, _) in open_system()) {
        let mixed = QuantumState::maximally_mixed(h.space());
        let expected = h.trace() / h.dim() as f64;
        prop_assert!((mixed.expectation(&h).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_recovers_factors(a in density(2), b in density(3)) {
        let joint = a.tensor(&b).unwrap();
        let left = joint.partial_trace(&[0]).unwrap();
        let right = joint.partial_trace(&[1]).unwrap();
        prop_assert!(max_abs(&(left.density_matrix() - a.density_matrix())) < 1e-14);
        prop_assert!(max_abs(&(right.density_matrix() - b.density_matrix())) < 1e-14);
    }
}
