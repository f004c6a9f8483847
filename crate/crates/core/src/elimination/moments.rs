//! Order-by-order stationary solution of the atomic moment equations.
//!
//! Every atomic expectation `⟨σ_jk⟩` is expanded in normally ordered
//! products of the mode operators. Stationarity of the Heisenberg–Langevin
//! equations gives, for each monomial `μ`,
//!
//! `A x_μ = −Σ_m (R_m x_{μ − a†_m} + L_m x_{μ − a_m})`
//!
//! where `A` is the 16×16 atomic generator and `R_m`, `L_m` carry the
//! couplings to mode `m` from the left (`a†_m`) and right (`a_m`). One row of
//! `A` is replaced by the trace condition.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{Monomial, MomentExpansion, StationaryMoments};
use crate::error::{Error, Result};
use crate::nscheme::{Convention, NSchemeParams};
use crate::quantum::{CMatrix, CVector, Operator};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn sigma(j: usize, k: usize) -> CMatrix {
    Operator::transition(4, j, k).expect("atomic index").into_matrix()
}

/// Row-major flattening: entry `(a, b)` goes to `4a + b`.
fn flatten(m: &CMatrix) -> CVector {
    CVector::from_iterator(16, (0..4).flat_map(|a| (0..4).map(move |b| m[(a, b)])))
}

/// Field-coupling pieces of the moment equations for one parameter set.
#[derive(Debug, Clone)]
pub(crate) struct MomentSystem {
    /// Coefficient of `a†_m ⟨·⟩` for modes 1 and 2.
    pub raise: [CMatrix; 2],
    /// Coefficient of `⟨·⟩ a_m`.
    pub lower: [CMatrix; 2],
}

struct Channel {
    rate: f64,
    op: CMatrix,
}

fn channels(p: &NSchemeParams) -> Vec<Channel> {
    let r = &p.rates;
    [
        (r.decay_31, sigma(0, 2)),
        (r.decay_32, sigma(1, 2)),
        (r.decay_42, sigma(1, 3)),
        (r.decay_21, sigma(0, 1)),
        (r.dephasing_21, sigma(1, 1)),
    ]
    .into_iter()
    .map(|(rate, op)| Channel { rate, op })
    .collect()
}

fn atomic_hamiltonian(p: &NSchemeParams, convention: Convention) -> CMatrix {
    let pump = match convention {
        Convention::Hermitian => (sigma(1, 2) + sigma(2, 1)) * Complex64::from(p.pump_rabi),
        Convention::AntiHermitian => (sigma(1, 2) - sigma(2, 1)) * (I * p.pump_rabi),
    };
    sigma(2, 2) * Complex64::from(p.raman_detuning) + sigma(3, 3) * Complex64::from(p.signal_detuning) + pump
}

/// Atomic part of the `a†_m` coupling, so that `H_int = Σ_m (X_m a†_m + X_m† a_m)`.
fn field_couplings(p: &NSchemeParams, convention: Convention) -> [CMatrix; 2] {
    let phase = match convention {
        Convention::Hermitian => Complex64::from(1.0),
        Convention::AntiHermitian => I,
    };
    [
        sigma(0, 2) * (phase * p.probe_coupling),
        sigma(1, 3) * (phase * p.signal_coupling),
    ]
}

/// Generator rows from the atomic Hamiltonian and atomic decay channels.
pub(crate) fn generator(p: &NSchemeParams, convention: Convention) -> CMatrix {
    let h = atomic_hamiltonian(p, convention);
    let chans = channels(p);
    let mut a = CMatrix::zeros(16, 16);
    for j in 0..4 {
        for k in 0..4 {
            let o = sigma(j, k);
            let mut r = (&h * &o - &o * &h) * I;
            for c in chans.iter().filter(|c| c.rate != 0.0) {
                let cd = c.op.adjoint();
                let cdc = &cd * &c.op;
                r += (&cd * &o * &c.op * Complex64::from(2.0) - &cdc * &o - &o * &cdc) * Complex64::from(c.rate);
            }
            a.set_row(4 * j + k, &flatten(&r).transpose());
        }
    }
    a
}

pub(crate) fn moment_system(p: &NSchemeParams, convention: Convention) -> MomentSystem {
    let xs = field_couplings(p, convention);
    let mut raise = [CMatrix::zeros(16, 16), CMatrix::zeros(16, 16)];
    let mut lower = [CMatrix::zeros(16, 16), CMatrix::zeros(16, 16)];
    for j in 0..4 {
        for k in 0..4 {
            let o = sigma(j, k);
            for (m, x) in xs.iter().enumerate() {
                let xd = x.adjoint();
                raise[m].set_row(4 * j + k, &flatten(&((x * &o - &o * x) * I)).transpose());
                lower[m].set_row(4 * j + k, &flatten(&((&xd * &o - &o * &xd) * I)).transpose());
            }
        }
    }
    MomentSystem {
        raise,
        lower,
    }
}

/// Replace row 0 (the `σ₁₁` equation) by `Σ_j x_jj`.
fn trace_constrained(a: &CMatrix) -> CMatrix {
    let mut m = a.clone();
    m.row_mut(0).fill(Complex64::from(0.0));
    for j in 0..4 {
        m[(0, 5 * j)] = Complex64::from(1.0);
    }
    m
}

/// Relative singular-value floor below which the constrained generator counts as singular.
const SINGULAR_FLOOR: f64 = 1e-11;
/// Sample points on the circle around vanishing decay.
const CONTOUR_NODES: usize = 12;
/// Circle radius as a fraction of the estimated convergence radius in `ε`.
const CONTOUR_FRACTION: f64 = 1e-2;
/// A `1/ε` residue above this fraction of the moment scale means the limit diverges.
const POLE_TOLERANCE: f64 = 1e-6;

type Lu = nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>;

/// How the stationary equations `M x = b` are solved.
///
/// With every upper-level decay positive the constrained generator is
/// invertible. When some are exactly zero it can be singular; the moments are
/// then the `ε → 0` limit of the problem with those decays set to `ε`. The
/// generator is affine in the rates, `M(ε) = M₀ + εM₁`, and each moment is
/// rational in `ε`, so the limit is the mean over a small circle of complex
/// `ε` (Cauchy's formula). The same samples give the `1/ε` residue, which
/// exposes moments that genuinely diverge. Only LU solves are involved.
enum Strategy {
    Direct(Lu),
    Contour { nodes: Vec<(Complex64, Lu)>, radius: f64 },
}

pub(crate) struct StationarySolver {
    strategy: Strategy,
    denominator: String,
}

impl StationarySolver {
    pub fn new(p: &NSchemeParams, convention: Convention) -> Result<Self> {
        let m0 = trace_constrained(&generator(p, convention));
        let denominator = resonant_denominator(p);
        let s0 = m0.singular_values();
        let s_max = s0.max();
        let floor = SINGULAR_FLOOR * s_max;
        if s0.min() > floor {
            return Ok(Self {
                strategy: Strategy::Direct(m0.lu()),
                denominator,
            });
        }
        let r = p.rates;
        if [r.decay_31, r.decay_32, r.decay_42].iter().all(|&g| g != 0.0) {
            return Err(Error::SingularMoments { order: 0, denominator });
        }
        let mut bumped = *p;
        for g in [
            &mut bumped.rates.decay_31,
            &mut bumped.rates.decay_32,
            &mut bumped.rates.decay_42,
        ] {
            if *g == 0.0 {
                *g = 1.0;
            }
        }
        let m1 = trace_constrained(&generator(&bumped, convention)) - &m0;
        // Nearest other singular point of M₀ + εM₁ is roughly σ_min⁺(M₀)/‖M₁‖.
        let gap = s0.iter().copied().filter(|&v| v > floor).fold(f64::INFINITY, f64::min);
        let radius = CONTOUR_FRACTION * gap / m1.norm();
        let nodes = (0..CONTOUR_NODES)
            .map(|k| {
                let angle = std::f64::consts::TAU * (k as f64 + 0.5) / CONTOUR_NODES as f64;
                let eps = Complex64::from_polar(radius, angle);
                (eps, (&m0 + &m1 * eps).lu())
            })
            .collect();
        Ok(Self {
            strategy: Strategy::Contour { nodes, radius },
            denominator,
        })
    }

    pub fn uses_limit(&self) -> bool {
        matches!(self.strategy, Strategy::Contour { .. })
    }

    fn singular(&self, order: usize) -> Error {
        Error::SingularMoments {
            order,
            denominator: self.denominator.clone(),
        }
    }
}

type Level = BTreeMap<Monomial, CVector>;

/// Run the hierarchy through `order` with one factorization of the generator.
fn hierarchy(system: &MomentSystem, lu: &Lu, order: usize, solver: &StationarySolver) -> Result<Vec<Level>> {
    let mut ground = CVector::zeros(16);
    ground[0] = Complex64::from(1.0);
    let mut levels: Vec<Level> = vec![BTreeMap::from([(Monomial::ONE, ground)])];
    for n in 1..=order {
        let mut sources: Level = BTreeMap::new();
        for (mono, x) in &levels[n - 1] {
            for m in 0..2 {
                *sources.entry(mono.raised(m)).or_insert_with(|| CVector::zeros(16)) -= &system.raise[m] * x;
                *sources.entry(mono.lowered(m)).or_insert_with(|| CVector::zeros(16)) -= &system.lower[m] * x;
            }
        }
        let mut level = BTreeMap::new();
        for (mono, mut rhs) in sources {
            rhs[0] = Complex64::from(0.0);
            if rhs.iter().all(|z| *z == Complex64::from(0.0)) {
                continue;
            }
            level.insert(mono, lu.solve(&rhs).ok_or_else(|| solver.singular(n))?);
        }
        levels.push(level);
    }
    Ok(levels)
}

/// Average per-node hierarchies into the `ε → 0` limit, failing at the first order with a pole.
fn contour_limit(runs: &[Vec<Level>], nodes: &[(Complex64, Lu)], radius: f64, solver: &StationarySolver) -> Result<Vec<Level>> {
    let order = runs[0].len() - 1;
    let weight = Complex64::from(1.0 / nodes.len() as f64);
    let mut levels = vec![runs[0][0].clone()];
    for n in 1..=order {
        let keys: std::collections::BTreeSet<Monomial> = runs.iter().flat_map(|r| r[n].keys().copied()).collect();
        let mut level = BTreeMap::new();
        let (mut scale, mut residue) = (0.0_f64, 0.0_f64);
        for mono in keys {
            let mut constant = CVector::zeros(16);
            let mut pole = CVector::zeros(16);
            for (run, (eps, _)) in runs.iter().zip(nodes) {
                if let Some(x) = run[n].get(&mono) {
                    constant += x * weight;
                    pole += x * (weight * eps);
                }
            }
            scale = scale.max(constant.norm());
            residue = residue.max(pole.norm() / radius);
            level.insert(mono, constant);
        }
        if residue > POLE_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(solver.singular(n));
        }
        levels.push(level);
    }
    Ok(levels)
}

/// Name the resonance responsible for a singular generator.
fn resonant_denominator(p: &NSchemeParams) -> String {
    let r = p.rates;
    if p.signal_detuning == 0.0 && r.decay_42 == 0.0 {
        "γ₃ + iΔ".into()
    } else if p.signal_detuning == p.raman_detuning && r.decay_31 + r.decay_32 + r.decay_42 == 0.0 {
        "γ₁ + γ₂ + γ₃ + i(Δ − δ)".into()
    } else if p.raman_detuning == 0.0 && r.decay_31 + r.decay_32 == 0.0 {
        "γ₁ + γ₂ + iδ".into()
    } else {
        "atomic generator (unclassified resonance)".into()
    }
}

/// Solve the hierarchy through `order` and package the expansions.
pub(crate) fn solve_hierarchy(p: &NSchemeParams, order: usize, convention: Convention) -> Result<StationaryMoments> {
    let system = moment_system(p, convention);
    let solver = StationarySolver::new(p, convention)?;
    let levels = match &solver.strategy {
        Strategy::Direct(lu) => hierarchy(&system, lu, order, &solver)?,
        Strategy::Contour { nodes, radius } => {
            let runs = nodes
                .iter()
                .map(|(_, lu)| hierarchy(&system, lu, order, &solver))
                .collect::<Result<Vec<_>>>()?;
            contour_limit(&runs, nodes, *radius, &solver)?
        }
    };

    let mut expansions = Vec::with_capacity(16);
    for j in 0..4 {
        for k in 0..4 {
            let terms = levels
                .iter()
                .flat_map(|lv| lv.iter().map(move |(mono, x)| (*mono, x[4 * j + k])))
                .filter(|(_, c)| *c != Complex64::from(0.0))
                .collect();
            expansions.push(MomentExpansion {
                target: (j + 1, k + 1),
                terms,
            });
        }
    }
    Ok(StationaryMoments {
        order,
        convention,
        zero_decay_limit: solver.uses_limit(),
        expansions,
    })
}
