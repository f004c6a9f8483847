//! Two coupled Cooper-pair boxes acting as an N-type four-level molecule.
//!
//! Charge-basis ordering is `|00⟩, |01⟩, |10⟩, |11⟩` with qubit 1 first and
//! `σ_z = diag(1, −1)`. Eigenstates are labelled `|1⟩…|4⟩` in ascending
//! energy and stored zero-based.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nscheme::{DecayRates, NSchemeParams};
use crate::quantum::{eig_hermitian, tensor, CMatrix, Factor, Hamiltonian, Operator};

/// Elementary charge in coulombs.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
const HBAR: f64 = PLANCK / TAU;

const CODEGENERACY: f64 = 0.5;

/// Per-box parameters for the asymmetric pre-reduction Hamiltonian (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub e_j1: f64,
    pub e_j2: f64,
    pub e_c1: f64,
    pub e_c2: f64,
}

/// Circuit parameters of the molecule. Energies are in GHz (E/h), capacitances in farads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoleculeParams {
    /// Josephson energy of each (identical) box.
    pub e_j: f64,
    /// Capacitive inter-box coupling.
    pub e_m: f64,
    /// Coupling-SQUID Josephson energy over `4 E_m`.
    pub b0: f64,
    pub n_g1: f64,
    pub n_g2: f64,
    /// Total capacitance around each box.
    pub c_sigma: f64,
    /// Mutual capacitance of the coupling SQUID.
    pub c_m: f64,
    #[serde(default)]
    pub asymmetry: Option<Asymmetry>,
    /// Accept gate charges away from the co-degeneracy point.
    #[serde(default)]
    pub allow_off_degeneracy: bool,
}

impl Default for MoleculeParams {
    fn default() -> Self {
        Self {
            e_j: 20.0,
            e_m: 5.0,
            b0: 0.0,
            n_g1: CODEGENERACY,
            n_g2: CODEGENERACY,
            c_sigma: 2.0e-15,
            c_m: 0.2e-15,
            asymmetry: None,
            allow_off_degeneracy: false,
        }
    }
}

impl MoleculeParams {
    pub fn with_b0(self, b0: f64) -> Self {
        Self { b0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_j > 0.0) {
            return Err(Error::InvalidParameters(format!("E_J must be > 0, got {}", self.e_j)));
        }
        if !(self.e_m > 0.0) {
            return Err(Error::InvalidParameters(format!("E_m must be > 0, got {}", self.e_m)));
        }
        if !(0.0..=1.0).contains(&self.b0) {
            return Err(Error::InvalidParameters(format!("b0 must lie in [0, 1], got {}", self.b0)));
        }
        let on_point = (self.n_g1 - CODEGENERACY).abs() < 1e-12 && (self.n_g2 - CODEGENERACY).abs() < 1e-12;
        if !on_point && !self.allow_off_degeneracy {
            return Err(Error::InvalidParameters(format!(
                "gate charges ({}, {}) are off the co-degeneracy point 1/2; set allow_off_degeneracy to override",
                self.n_g1, self.n_g2
            )));
        }
        if self.c_sigma <= self.c_m || self.c_m < 0.0 {
            return Err(Error::InvalidParameters("capacitances require C_Σ > C_m ≥ 0".into()));
        }
        Ok(())
    }

    /// Per-box Josephson and charging energies, symmetric unless overridden.
    fn boxes(&self) -> Asymmetry {
        self.asymmetry.unwrap_or_else(|| {
            let e_c = charging_energy(self.c_sigma, self.c_m);
            Asymmetry {
                e_j1: self.e_j,
                e_j2: self.e_j,
                e_c1: e_c,
                e_c2: e_c,
            }
        })
    }

    /// Effective charge biases `(E_b1, E_b2)` of the two-level form.
    pub fn charge_biases(&self) -> (f64, f64) {
        let b = self.boxes();
        let (d1, d2) = (1.0 - 2.0 * self.n_g1, 1.0 - 2.0 * self.n_g2);
        (
            b.e_c1 * d1 + 2.0 * self.e_m * d2,
            b.e_c2 * d2 + 2.0 * self.e_m * d1,
        )
    }
}

/// Cooper-pair charging energy `2e²C_Σ/(C_Σ² − C_m²)` in GHz for identical boxes.
pub fn charging_energy(c_sigma: f64, c_m: f64) -> f64 {
    let joules = 2.0 * ELEMENTARY_CHARGE.powi(2) * c_sigma / (c_sigma.powi(2) - c_m.powi(2));
    joules / PLANCK * 1e-9
}

fn pauli_pair(a: &Operator, b: &Operator) -> Operator {
    tensor(&[Factor::Op(a), Factor::Op(b)]).expect("2x2 factors")
}

fn single(op: &Operator, which: usize) -> Operator {
    let id = Factor::Identity(2);
    let slots = if which == 0 { [Factor::Op(op), id] } else { [id, Factor::Op(op)] };
    tensor(&slots).expect("2x2 factors")
}

fn local_terms(params: &MoleculeParams) -> Operator {
    let boxes = params.boxes();
    let (eb1, eb2) = params.charge_biases();
    let (x, z) = (Operator::pauli_x(), Operator::pauli_z());
    (single(&x, 0) * eb1 + single(&x, 1) * eb2 + single(&z, 0) * boxes.e_j1 + single(&z, 1) * boxes.e_j2) * 0.5
}

/// Two-level molecule Hamiltonian in the charge basis.
///
/// The inter-box exchange enters as `E_m[(1 − b₀)σ_x1σ_x2 − b₀σ_z1σ_z2]`,
/// whose spectrum is the N-type level set of [`level_structure`].
pub fn build_h0(params: &MoleculeParams) -> Result<Operator> {
    params.validate()?;
    let (x, z) = (Operator::pauli_x(), Operator::pauli_z());
    let exchange = pauli_pair(&x, &x) * (1.0 - params.b0) - pauli_pair(&z, &z) * params.b0;
    Ok(exchange * params.e_m + local_terms(params))
}

/// Two-level Hamiltonian with the SQUID term written as `−b₀(σ_zσ_z + σ_yσ_y)`.
///
/// Its `{|00⟩, |11⟩}` block couples with `E_m(1 + b₀)`, so its spectrum agrees
/// with [`build_h0`] only at `b₀ = 0`.
pub fn build_h0_literal(params: &MoleculeParams) -> Result<Operator> {
    params.validate()?;
    let (x, y, z) = (Operator::pauli_x(), Operator::pauli_y(), Operator::pauli_z());
    let exchange = pauli_pair(&x, &x) - (pauli_pair(&z, &z) + pauli_pair(&y, &y)) * params.b0;
    Ok(exchange * params.e_m + local_terms(params))
}

/// Charge-basis Hamiltonian truncated to `n_i ∈ {0, 1}` before the two-level mapping.
///
/// Basis `|n₁n₂⟩`; includes the constant charging offsets, so compare spectra
/// after removing the mean.
pub fn build_charge_hamiltonian(params: &MoleculeParams) -> Result<Operator> {
    params.validate()?;
    let b = params.boxes();
    let e_jm = 4.0 * params.b0 * params.e_m;
    let mut m = CMatrix::zeros(4, 4);
    for n1 in 0..2 {
        for n2 in 0..2 {
            let (q1, q2) = (n1 as f64 - params.n_g1, n2 as f64 - params.n_g2);
            let diag = 4.0 * params.e_m * q1 * q2 + b.e_c1 * q1 * q1 + b.e_c2 * q2 * q2;
            m[(2 * n1 + n2, 2 * n1 + n2)] = diag.into();
        }
    }
    // −E_J cos Φ tunnels one Cooper pair on one box
    for (i, j, e) in [(0, 2, b.e_j1), (1, 3, b.e_j1), (0, 1, b.e_j2), (2, 3, b.e_j2)] {
        m[(i, j)] = (-0.5 * e).into();
        m[(j, i)] = (-0.5 * e).into();
    }
    // −E_Jm cos(Φ₁ − Φ₂) moves a pair between boxes
    m[(1, 2)] = (-0.5 * e_jm).into();
    m[(2, 1)] = (-0.5 * e_jm).into();
    Operator::from_matrix(m)
}

/// Closed-form eigenstructure of the symmetric molecule at co-degeneracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStructure {
    /// `E₁…E₄` in GHz.
    pub energies: [f64; 4],
    /// Mixing angle of `|1⟩` and `|4⟩` in radians.
    pub theta: f64,
    pub e_mn: f64,
    /// `√(E_J² + E_m²)`.
    pub e_big: f64,
    pub e31: f64,
    pub e42: f64,
    pub e32: f64,
    pub e41: f64,
    /// Row `k` holds `|k+1⟩` in the charge basis.
    pub eigenvectors: [[f64; 4]; 4],
}

impl LevelStructure {
    /// `φ = θ + π/4`, the angle of the charge-operator matrix elements.
    pub fn phi(&self) -> f64 {
        self.theta + FRAC_PI_4
    }

    /// Eigenvector matrix with `|k⟩` as column `k`.
    pub fn basis_matrix(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |row, col| self.eigenvectors[col][row].into())
    }
}

/// Largest relative deviation tolerated between closed-form and numeric levels.
pub const LEVEL_CROSS_CHECK: f64 = 1e-9;

/// Closed-form levels, cross-checked against numerical diagonalization of [`build_h0`].
pub fn level_structure(params: &MoleculeParams) -> Result<LevelStructure> {
    let h0 = build_h0(params)?;
    if params.asymmetry.is_some()
        || (params.n_g1 - CODEGENERACY).abs() > 1e-12
        || (params.n_g2 - CODEGENERACY).abs() > 1e-12
    {
        return Err(Error::InvalidParameters(
            "closed-form levels require identical boxes at co-degeneracy".into(),
        ));
    }
    let (ej, em, b0) = (params.e_j, params.e_m, params.b0);
    let coupling = em * (1.0 - b0);
    let e_mn = ej.hypot(coupling);
    let energies = [-e_mn - em * b0, -em * (1.0 - 2.0 * b0), em, e_mn - em * b0];
    let theta = 0.5 * coupling.atan2(ej);
    let (s, c) = theta.sin_cos();
    let r = FRAC_1_SQRT_2;
    let eigenvectors = [
        [-s, 0.0, 0.0, c],
        [0.0, -r, r, 0.0],
        [0.0, r, r, 0.0],
        [c, 0.0, 0.0, s],
    ];

    let numeric = eig_hermitian(&h0)?.values;
    let mut sorted = energies;
    sorted.sort_by(f64::total_cmp);
    let scale = numeric.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let worst = numeric
        .iter()
        .zip(sorted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst > LEVEL_CROSS_CHECK * scale {
        return Err(Error::InvalidParameters(format!(
            "closed-form levels deviate from diagonalization by {worst:e}"
        )));
    }

    Ok(LevelStructure {
        energies,
        theta,
        e_mn,
        e_big: ej.hypot(em),
        // Spacings from their own closed forms rather than energy differences,
        // so E₃₂ = 2E_m(1 − b₀) holds to the last bit.
        e31: e_mn + em * (1.0 + b0),
        e42: e_mn + em * (1.0 - 3.0 * b0),
        e32: 2.0 * coupling,
        e41: 2.0 * e_mn,
        eigenvectors,
    })
}

/// Transition energies at one value of `b₀` (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub b0: f64,
    pub e31: f64,
    pub e42: f64,
    pub e32: f64,
}

pub const LEVELS_CSV_HEADER: &str = "b0,E31,E42,E32";

/// Level spacings along a `b₀` grid.
pub fn level_scan(params: &MoleculeParams, b0_grid: &[f64]) -> Result<Vec<LevelRow>> {
    if b0_grid.is_empty() {
        return Err(Error::InvalidParameters("b0 grid is empty".into()));
    }
    b0_grid
        .iter()
        .map(|&b0| {
            let p = params.with_b0(b0);
            p.validate()?;
            let l = level_structure(&p)?;
            Ok(LevelRow {
                b0,
                e31: l.e31,
                e42: l.e42,
                e32: l.e32,
            })
        })
        .collect()
}

/// CSV with an exact header and shortest round-trip floats.
pub fn levels_csv(rows: &[LevelRow]) -> String {
    let mut out = format!("{LEVELS_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.b0, r.e31, r.e42, r.e32));
    }
    out
}

/// Charge-qubit operators available in the eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChargeOperator {
    SigmaX1,
    SigmaX2,
    SigmaZ1,
    SigmaZ2,
}

impl ChargeOperator {
    /// The operator in the charge basis.
    pub fn charge_basis(self) -> Operator {
        match self {
            Self::SigmaX1 => single(&Operator::pauli_x(), 0),
            Self::SigmaX2 => single(&Operator::pauli_x(), 1),
            Self::SigmaZ1 => single(&Operator::pauli_z(), 0),
            Self::SigmaZ2 => single(&Operator::pauli_z(), 1),
        }
    }
}

/// Matrix of a charge-qubit operator between the eigenstates `|1⟩…|4⟩`.
pub fn operator_in_eigenbasis(params: &MoleculeParams, which: ChargeOperator) -> Result<Operator> {
    let levels = level_structure(params)?;
    let (sp, cp) = levels.phi().sin_cos();
    let (s2, c2) = (2.0 * levels.theta).sin_cos();
    let rows = match which {
        ChargeOperator::SigmaX1 => [
            0.0, -sp, cp, 0.0, //
            -sp, 0.0, 0.0, cp, //
            cp, 0.0, 0.0, sp, //
            0.0, cp, sp, 0.0,
        ],
        ChargeOperator::SigmaX2 => [
            0.0, sp, cp, 0.0, //
            sp, 0.0, 0.0, -cp, //
            cp, 0.0, 0.0, sp, //
            0.0, -cp, sp, 0.0,
        ],
        ChargeOperator::SigmaZ1 | ChargeOperator::SigmaZ2 => {
            let block = if which == ChargeOperator::SigmaZ1 { -1.0 } else { 1.0 };
            [
                -c2, 0.0, 0.0, -s2, //
                0.0, 0.0, block, 0.0, //
                0.0, block, 0.0, 0.0, //
                -s2, 0.0, 0.0, c2,
            ]
        }
    };
    Operator::from_real_rows(4, &rows)
}

/// External flux drive on both boxes in antiphase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpParams {
    /// Modulation amplitude (GHz).
    pub amplitude: f64,
    /// Drive frequency (GHz).
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpMode {
    /// Static `|2⟩↔|3⟩` coupling in the frame rotating at the drive frequency.
    Rwa,
    /// Time-dependent lab-frame drive.
    Full,
}

/// Pump Hamiltonian plus any validity warnings.
#[derive(Debug, Clone)]
pub struct PumpDrive {
    pub hamiltonian: Hamiltonian,
    pub warnings: Vec<String>,
}

/// Pump acting in the eigenbasis.
///
/// `Rwa` gives `−Ω(|2⟩⟨3| + |3⟩⟨2|)`; `Full` gives
/// `Ω cos(2π f t)(σ_z1 − σ_z2)` with `t` in ns and no molecule energies.
pub fn pump_hamiltonian(params: &MoleculeParams, pump: &PumpParams, mode: PumpMode) -> Result<PumpDrive> {
    if !(pump.amplitude >= 0.0) {
        return Err(Error::InvalidParameters(format!(
            "pump amplitude must be ≥ 0, got {}",
            pump.amplitude
        )));
    }
    let levels = level_structure(params)?;
    let mut warnings = Vec::new();
    let hamiltonian = match mode {
        PumpMode::Rwa => {
            if (pump.frequency - levels.e41).abs() < 10.0 * pump.amplitude {
                warnings.push(format!(
                    "drive at {} GHz lies within 10 Ω of the |1⟩↔|4⟩ spacing {} GHz",
                    pump.frequency, levels.e41
                ));
            }
            if (pump.frequency - levels.e32).abs() > 0.1 * levels.e32 {
                warnings.push(format!(
                    "drive at {} GHz is far from the |2⟩↔|3⟩ spacing {} GHz",
                    pump.frequency, levels.e32
                ));
            }
            let swap = Operator::transition(4, 1, 2)? + Operator::transition(4, 2, 1)?;
            Hamiltonian::Static(swap * -pump.amplitude)
        }
        PumpMode::Full => {
            let drive = operator_in_eigenbasis(params, ChargeOperator::SigmaZ1)?
                - operator_in_eigenbasis(params, ChargeOperator::SigmaZ2)?;
            let (amp, freq) = (pump.amplitude, pump.frequency);
            Hamiltonian::Driven {
                static_part: Operator::zeros(drive.space()),
                terms: vec![(Arc::new(move |t: f64| amp * (TAU * freq * t).cos()), drive)],
            }
        }
    };
    Ok(PumpDrive { hamiltonian, warnings })
}

/// Molecule energies plus the full pump, in the lab frame.
pub fn driven_molecule(params: &MoleculeParams, pump: &PumpParams) -> Result<Hamiltonian> {
    let levels = level_structure(params)?;
    let drive = pump_hamiltonian(params, pump, PumpMode::Full)?;
    match drive.hamiltonian {
        Hamiltonian::Driven { terms, .. } => Ok(Hamiltonian::Driven {
            static_part: Operator::diagonal(&levels.energies)?,
            terms,
        }),
        Hamiltonian::Static(_) => unreachable!("full pump is time dependent"),
    }
}

/// Tap positions and capacitors of one resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorTaps {
    /// Resonator length (m).
    pub length: f64,
    /// Fullwave mode frequency (GHz).
    pub frequency: f64,
    /// Capacitor to box 1 and box 2 (F).
    pub c1: f64,
    pub c2: f64,
    /// Tap positions in `[−L/2, L/2]` (m).
    pub x1: f64,
    pub x2: f64,
}

impl ResonatorTaps {
    fn validate(&self, name: &str) -> Result<()> {
        if !(self.length > 0.0) || !(self.frequency > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "resonator {name} needs positive length and frequency"
            )));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::InvalidParameters(format!(
                "resonator {name} has a negative coupling capacitance"
            )));
        }
        let half = 0.5 * self.length;
        for x in [self.x1, self.x2] {
            if x.abs() > half * (1.0 + 1e-12) {
                return Err(Error::InvalidParameters(format!(
                    "resonator {name} tap at {x} m lies outside ±{half} m"
                )));
            }
        }
        Ok(())
    }

    /// `cos(2πx/L)` at each tap.
    pub fn mode_profile(&self) -> (f64, f64) {
        (
            (TAU * self.x1 / self.length).cos(),
            (TAU * self.x2 / self.length).cos(),
        )
    }
}

/// Capacitive layout of the two resonators around the molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingGeometry {
    pub a: ResonatorTaps,
    pub b: ResonatorTaps,
    /// Capacitance per unit length (F/m).
    pub capacitance_per_length: f64,
}

impl CouplingGeometry {
    /// Cross-phase layout: equal capacitors, A tapped at its centre, B at `L/8` and `3L/8`.
    pub fn xpm(length: f64, freq_a: f64, freq_b: f64, cap_a: f64, cap_b: f64, c_per_len: f64) -> Self {
        Self {
            a: ResonatorTaps {
                length,
                frequency: freq_a,
                c1: cap_a,
                c2: cap_a,
                x1: 0.0,
                x2: 0.0,
            },
            b: ResonatorTaps {
                length,
                frequency: freq_b,
                c1: cap_b,
                c2: cap_b,
                x1: length / 8.0,
                x2: 3.0 * length / 8.0,
            },
            capacitance_per_length: c_per_len,
        }
    }
}

/// Transverse (`h`) and rotating-wave (`g`) couplings, all in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CouplingFactors {
    pub h_a1: f64,
    pub h_a2: f64,
    pub h_b1: f64,
    pub h_b2: f64,
    pub g_a1: f64,
    pub g_a2: f64,
    pub g_b1: f64,
    pub g_b2: f64,
}

impl CouplingFactors {
    /// Build from `h` factors and `φ`.
    pub fn from_h(h_a1: f64, h_a2: f64, h_b1: f64, h_b2: f64, phi: f64) -> Self {
        let c = phi.cos();
        Self {
            h_a1,
            h_a2,
            h_b1,
            h_b2,
            g_a1: c * (h_a1 + h_a2),
            g_a2: c * (h_a1 - h_a2),
            g_b1: c * (h_b1 + h_b2),
            g_b2: c * (h_b1 - h_b2),
        }
    }

    /// Direct `g` input with `h` left at zero.
    pub fn direct(g_a1: f64, g_a2: f64, g_b1: f64, g_b2: f64) -> Self {
        Self {
            g_a1,
            g_a2,
            g_b1,
            g_b2,
            ..Self::default()
        }
    }
}

/// Coupling factors from resonator geometry.
pub fn coupling_factors(geom: &CouplingGeometry, params: &MoleculeParams) -> Result<CouplingFactors> {
    geom.a.validate("A")?;
    geom.b.validate("B")?;
    if !(geom.capacitance_per_length > 0.0) {
        return Err(Error::InvalidParameters("capacitance per length must be > 0".into()));
    }
    let levels = level_structure(params)?;
    let denom = params.c_sigma.powi(2) - params.c_m.powi(2);
    let h_pair = |taps: &ResonatorTaps| {
        let omega = TAU * taps.frequency * 1e9;
        let v_zpf = (HBAR * omega / (taps.length * geom.capacitance_per_length)).sqrt();
        let (cos1, cos2) = taps.mode_profile();
        let to_ghz = ELEMENTARY_CHARGE * v_zpf / denom / PLANCK * 1e-9;
        (
            to_ghz * (taps.c1 * cos1 * params.c_sigma + taps.c2 * cos2 * params.c_m),
            to_ghz * (taps.c2 * cos2 * params.c_sigma + taps.c1 * cos1 * params.c_m),
        )
    };
    let (h_a1, h_a2) = h_pair(&geom.a);
    let (h_b1, h_b2) = h_pair(&geom.b);
    Ok(CouplingFactors::from_h(h_a1, h_a2, h_b1, h_b2, levels.phi()))
}

/// Where the resonator couplings come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSource {
    Geometry(CouplingGeometry),
    Direct(CouplingFactors),
}

/// Largest tolerated ratio of an unwanted coupling to the wanted one.
pub const XPM_PURITY: f64 = 1e-3;

/// Diagnostics attached to a circuit-to-N-scheme mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XpmReport {
    pub couplings: CouplingFactors,
    /// `|g_A2/g_A1|` and `|g_B1/g_B2|`.
    pub residual_a2: f64,
    pub residual_b1: f64,
    /// `E₃₁ − ω_A` equals `E₄₂ − ω_B`.
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NSchemeDerivation {
    pub params: NSchemeParams,
    pub levels: LevelStructure,
    pub report: XpmReport,
}

/// Map circuit parameters onto the abstract N-scheme.
///
/// `resonator_freqs` are the mode frequencies `(ω_A, ω_B)` in GHz.
pub fn derive_nscheme(
    params: &MoleculeParams,
    pump: &PumpParams,
    source: &CouplingSource,
    resonator_freqs: (f64, f64),
    rates: DecayRates,
) -> Result<NSchemeDerivation> {
    let levels = level_structure(params)?;
    let couplings = match source {
        CouplingSource::Geometry(g) => coupling_factors(g, params)?,
        CouplingSource::Direct(c) => *c,
    };
    let ratio = |unwanted: f64, wanted: f64| {
        if wanted == 0.0 {
            if unwanted == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            (unwanted / wanted).abs()
        }
    };
    let residual_a2 = ratio(couplings.g_a2, couplings.g_a1);
    let residual_b1 = ratio(couplings.g_b1, couplings.g_b2);
    if residual_a2 > XPM_PURITY || residual_b1 > XPM_PURITY {
        return Err(Error::XpmImpure {
            g_a2: couplings.g_a2,
            g_b1: couplings.g_b1,
        });
    }
    let (omega_a, omega_b) = resonator_freqs;
    let raman = levels.e31 - omega_a;
    let detuning = levels.e42 - omega_b;
    let degenerate = (raman - detuning).abs() <= 1e-12 * levels.e31.abs().max(1.0);
    let mut warnings = pump_hamiltonian(params, pump, PumpMode::Rwa)?.warnings;
    if degenerate {
        warnings.push("degenerate N: δ equals Δ".into());
    }
    let nscheme = NSchemeParams {
        probe_coupling: couplings.g_a1,
        signal_coupling: couplings.g_b2,
        pump_rabi: pump.amplitude,
        raman_detuning: raman,
        signal_detuning: detuning,
        rates,
    };
    Ok(NSchemeDerivation {
        params: nscheme,
        levels,
        report: XpmReport {
            couplings,
            residual_a2,
            residual_b1,
            degenerate,
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::max_abs;
    use approx::assert_abs_diff_eq;

    fn defaults(b0: f64) -> MoleculeParams {
        MoleculeParams::default().with_b0(b0)
    }

    #[test]
    fn decoupled_boxes() {
        let p = MoleculeParams {
            e_m: 1e-300,
            ..MoleculeParams::default()
        };
        let e = eig_hermitian(&build_h0(&p).unwrap()).unwrap().values;
        let expected = [-20.0, 0.0, 0.0, 20.0];
        for (a, b) in e.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_spectrum_values() {
        let e = eig_hermitian(&build_h0(&defaults(0.0)).unwrap()).unwrap().values;
        let emn = 425.0_f64.sqrt();
        for (a, b) in e.iter().zip([-emn, -5.0, 5.0, emn]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(emn, 20.6155, epsilon = 5e-5);
    }

    #[test]
    fn spectrum_at_b0_04() {
        let e = eig_hermitian(&build_h0(&defaults(0.4)).unwrap()).unwrap().values;
        let emn = 409.0_f64.sqrt();
        for (a, b) in e.iter().zip([-emn - 2.0, -1.0, 5.0, emn - 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(-emn - 2.0, -22.2237, epsilon = 5e-5);
    }

    #[test]
    fn literal_operator_uses_enhanced_coupling() {
        let p = defaults(0.4);
        let e = eig_hermitian(&build_h0_literal(&p).unwrap()).unwrap().values;
        let emn = (400.0 + 25.0 * 1.4 * 1.4_f64).sqrt();
        assert_abs_diff_eq!(e[0], -emn - 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e[3], emn - 2.0, epsilon = 1e-9);
        let same = eig_hermitian(&build_h0_literal(&defaults(0.0)).unwrap()).unwrap().values;
        let ours = eig_hermitian(&build_h0(&defaults(0.0)).unwrap()).unwrap().values;
        for (a, b) in same.iter().zip(&ours) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn charge_basis_reduces_to_literal_two_level_form() {
        for b0 in [0.0, 0.3, 0.7] {
            let p = defaults(b0);
            let charge = eig_hermitian(&build_charge_hamiltonian(&p).unwrap()).unwrap().values;
            let two = eig_hermitian(&build_h0_literal(&p).unwrap()).unwrap().values;
            let mean = charge.iter().sum::<f64>() / 4.0;
            for (a, b) in charge.iter().zip(&two) {
                assert_abs_diff_eq!(a - mean, *b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn asymmetric_off_point_charge_model_matches_two_level_biases() {
        let p = MoleculeParams {
            n_g1: 0.47,
            n_g2: 0.52,
            allow_off_degeneracy: true,
            asymmetry: Some(Asymmetry {
                e_j1: 19.0,
                e_j2: 21.0,
                e_c1: 40.0,
                e_c2: 44.0,
            }),
            ..defaults(0.2)
        };
        let charge = eig_hermitian(&build_charge_hamiltonian(&p).unwrap()).unwrap().values;
        let two = eig_hermitian(&build_h0_literal(&p).unwrap()).unwrap().values;
        let mean = charge.iter().sum::<f64>() / 4.0;
        for (a, b) in charge.iter().zip(&two) {
            assert_abs_diff_eq!(a - mean, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn off_point_rejected_without_override() {
        let p = MoleculeParams {
            n_g1: 0.4,
            ..MoleculeParams::default()
        };
        assert!(matches!(build_h0(&p), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn level_spacings() {
        let l = level_structure(&defaults(0.0)).unwrap();
        assert_abs_diff_eq!(l.e31, 25.6155, epsilon = 5e-5);
        assert_eq!(l.e42, l.e31);
        assert_abs_diff_eq!(l.e32, 10.0, epsilon = 1e-12);
        let l = level_structure(&defaults(0.4)).unwrap();
        assert_abs_diff_eq!(l.e32, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn theta_and_sigma_z_corner() {
        let l = level_structure(&defaults(0.0)).unwrap();
        assert_abs_diff_eq!(l.theta, 0.12249, epsilon = 5e-6);
        assert_abs_diff_eq!(l.theta, 0.5 * (5.0 / l.e_big).asin(), epsilon = 1e-15);
        let z1 = operator_in_eigenbasis(&defaults(0.0), ChargeOperator::SigmaZ1).unwrap();
        assert_abs_diff_eq!(z1.matrix()[(0, 3)].re, -0.24254, epsilon = 5e-6);
    }

    #[test]
    fn printed_matrices_equal_basis_change() {
        for b0 in [0.0, 0.25, 0.6, 0.9] {
            let p = defaults(b0);
            let v = level_structure(&p).unwrap().basis_matrix();
            for which in [
                ChargeOperator::SigmaX1,
                ChargeOperator::SigmaX2,
                ChargeOperator::SigmaZ1,
                ChargeOperator::SigmaZ2,
            ] {
                let rotated = v.adjoint() * which.charge_basis().matrix() * &v;
                let printed = operator_in_eigenbasis(&p, which).unwrap();
                assert!(max_abs(&(rotated - printed.matrix())) < 1e-12, "{which:?} at b0={b0}");
            }
        }
    }

    #[test]
    fn numeric_eigenvectors_match_closed_form_up_to_sign() {
        let p = defaults(0.3);
        let closed = level_structure(&p).unwrap().basis_matrix();
        let numeric = eig_hermitian(&build_h0(&p).unwrap()).unwrap().vectors;
        for k in 0..4 {
            let overlap = closed.column(k).dotc(&numeric.column(k));
            assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pump_difference_lives_in_middle_block() {
        let p = defaults(0.2);
        let d = operator_in_eigenbasis(&p, ChargeOperator::SigmaZ1).unwrap()
            - operator_in_eigenbasis(&p, ChargeOperator::SigmaZ2).unwrap();
        assert_eq!(d.matrix()[(1, 2)].re, -2.0);
        assert_eq!(d.matrix()[(2, 1)].re, -2.0);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_eq!(d.matrix()[(i, j)].norm(), 0.0);
        }
    }

    #[test]
    fn zero_pump_is_zero_operator() {
        let p = defaults(0.0);
        let drive = pump_hamiltonian(&p, &PumpParams { amplitude: 0.0, frequency: 10.0 }, PumpMode::Rwa).unwrap();
        assert_eq!(max_abs(&drive.hamiltonian.at(3.0)), 0.0);
        assert!(drive.warnings.is_empty());
    }

    #[test]
    fn pump_near_e41_warns() {
        let p = defaults(0.0);
        let l = level_structure(&p).unwrap();
        let pump = PumpParams {
            amplitude: 0.1,
            frequency: l.e41 + 0.5,
        };
        let drive = pump_hamiltonian(&p, &pump, PumpMode::Rwa).unwrap();
        assert!(drive.warnings.iter().any(|w| w.contains("|1⟩↔|4⟩")));
    }

    #[test]
    fn xpm_geometry_cancels_unwanted_couplings() {
        let geom = CouplingGeometry::xpm(0.02, 8.0, 9.0, 5e-15, 5e-15, 1.6e-10);
        let f = coupling_factors(&geom, &defaults(0.0)).unwrap();
        assert_eq!(f.h_a1, f.h_a2);
        assert_abs_diff_eq!(f.h_b1, -f.h_b2, epsilon = 1e-15 * f.h_b1.abs());
        assert_eq!(f.g_a2, 0.0);
        assert!(f.g_b1.abs() < 1e-15 * f.g_b2.abs());
        let (c1, c2) = geom.b.mode_profile();
        assert_abs_diff_eq!(c1, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(c2, -FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn no_b_capacitors_means_no_b_coupling() {
        let geom = CouplingGeometry::xpm(0.02, 8.0, 9.0, 5e-15, 0.0, 1.6e-10);
        let f = coupling_factors(&geom, &defaults(0.0)).unwrap();
        assert_eq!((f.g_b1, f.g_b2), (0.0, 0.0));
        assert!(f.g_a1 > 0.0);
    }

    #[test]
    fn tap_outside_resonator_rejected() {
        let mut geom = CouplingGeometry::xpm(0.02, 8.0, 9.0, 5e-15, 5e-15, 1.6e-10);
        geom.b.x2 = 0.011;
        assert!(coupling_factors(&geom, &defaults(0.0)).is_err());
    }
}
