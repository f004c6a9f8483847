use num_complex::Complex64;

use super::fidelity;
use super::kerr::{kerr_evolve_lossy, KerrParams};
use crate::error::Result;
use crate::nscheme::Truncation;
use crate::quantum::{coherent_amplitudes, CVector, QuantumState};

/// Largest Fock-tail probability for which a run counts as converged.
pub const TRUNCATION_CEILING: f64 = 1e-10;

/// `⟨β|α⟩` for untruncated coherent states.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + beta.conj() * alpha).exp()
}

/// Probability in the top two Fock levels of `|α⟩` cut at `n_max`.
pub fn truncation_tail(n_max: usize, alpha: Complex64) -> f64 {
    let c = coherent_amplitudes(n_max, alpha);
    c.iter().skip(n_max.saturating_sub(1)).map(|z| z.norm_sqr()).sum()
}

/// Smallest cutoff whose tail is below [`TRUNCATION_CEILING`].
pub fn suggested_cutoff(alpha: Complex64) -> usize {
    (1..).find(|&n| truncation_tail(n, alpha) < TRUNCATION_CEILING).expect("coherent tails vanish")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatProtocolResult {
    pub final_state: QuantumState,
    /// `½(|α,β⟩ + |−α,β⟩ + |α,−β⟩ − |−α,−β⟩)` normalized in the truncated space.
    pub ideal_state: QuantumState,
    pub fidelity: f64,
    /// Larger of the two modes' top-two-level probabilities.
    pub truncation_tail: f64,
    pub converged: bool,
    /// Cutoff that would converge, when this one does not.
    pub suggested_n_max: Option<usize>,
    /// Protocol time `1/(2 Re χ₃)` in ns.
    pub time: f64,
    pub success_probability: f64,
    /// `⟨−α|α⟩` and `⟨−β|β⟩`.
    pub branch_overlaps: (Complex64, Complex64),
    /// α or β is zero, so the four branches collapse onto one product state.
    pub degenerate: bool,
}

pub fn cat_protocol(alpha: Complex64, beta: Complex64, chi3: Complex64, t: &Truncation) -> Result<CatProtocolResult> {
    let kerr = KerrParams::cross(chi3);
    let time = kerr.conditional_pi_time()?;
    let space = t.mode_space();

    let product = |a: &CVector, b: &CVector| a.kronecker(b);
    let (ca, cb) = (coherent_amplitudes(t.n_max1, alpha), coherent_amplitudes(t.n_max2, beta));
    let (ma, mb) = (coherent_amplitudes(t.n_max1, -alpha), coherent_amplitudes(t.n_max2, -beta));

    let initial = QuantumState::ket_normalized(space.clone(), product(&ca, &cb))?;
    let ideal = product(&ca, &cb) + product(&ma, &cb) + product(&ca, &mb) - product(&ma, &mb);
    let ideal_state = QuantumState::ket_normalized(space, ideal)?;

    let evolved = kerr_evolve_lossy(&kerr, &initial, time)?;
    let tail = truncation_tail(t.n_max1, alpha).max(truncation_tail(t.n_max2, beta));
    let converged = tail < TRUNCATION_CEILING;
    Ok(CatProtocolResult {
        fidelity: fidelity(&ideal_state, &evolved.state)?,
        final_state: evolved.state,
        ideal_state,
        truncation_tail: tail,
        converged,
        suggested_n_max: (!converged).then(|| suggested_cutoff(alpha).max(suggested_cutoff(beta))),
        time,
        success_probability: evolved.success_probability,
        branch_overlaps: (coherent_overlap(alpha, -alpha), coherent_overlap(beta, -beta)),
        degenerate: alpha == Complex64::from(0.0) || beta == Complex64::from(0.0),
    })
}
