//! The analysis commands. Each writes its CSV files and/or JSON report through a [`Sink`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;

use cqed_xpm::dynamics::{cat_protocol, compare_full_vs_effective, KerrParams};
use cqed_xpm::elimination::{
    chi_closed_forms, conditional_phase_oracle, susceptibilities, susceptibilities_with, sweep, EliminationOptions,
    OracleOptions, Susceptibilities, SweepAxis, SweepCell, SweepParameter,
};
use cqed_xpm::molecule::{
    coupling_factors, derive_nscheme, level_scan, level_structure, CouplingSource, LEVELS_CSV_HEADER,
};
use cqed_xpm::nscheme::{adiabatic_check, NSchemeParams};
use cqed_xpm::quantum::{CVector, QuantumState};

use crate::config::Setup;
use crate::output::{annotation, fmt_f64, fmt_sig6, to_json, Csv, Metadata, Sink};
use crate::{error_kind, CliError};
use crate::units::Ghz;

/// A GHz value in MHz, so `0.0024` reports as `2.4` rather than `2.4000000000000004`.
fn mhz(ghz: f64) -> f64 {
    Ghz::from_base(ghz, "MHz").value() + 0.0
}

/// Everything a command needs.
pub struct Context {
    pub setup: Setup,
    pub sink: Sink,
}

impl Context {
    fn meta(&self) -> &Metadata {
        &self.setup.metadata
    }

    fn nscheme(&self) -> Result<NSchemeParams, CliError> {
        Ok(self.setup.nscheme()?)
    }

    /// Metadata with extra per-file entries.
    fn meta_with(&self, extra: &[(&str, &str)]) -> Metadata {
        let mut m = self.meta().clone();
        for (k, v) in extra {
            m.insert((*k).to_owned(), (*v).to_owned());
        }
        m
    }
}

/// JSON body for a failed command.
#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody,
    metadata: &'a Metadata,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

/// Emit a structured error in place of the command's report.
pub fn report_error(ctx: &Context, name: &str, e: &cqed_xpm::Error) -> Result<Option<PathBuf>, CliError> {
    let body = ErrorReport {
        error: ErrorBody {
            kind: error_kind(e),
            message: e.to_string(),
        },
        metadata: ctx.meta(),
    };
    ctx.sink.report(name, &to_json(&body))
}

// ---------------------------------------------------------------- levels

pub fn levels(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let rows = level_scan(&ctx.setup.molecule, &ctx.setup.b0_grid)?;
    let meta = ctx.meta_with(&[("units", "GHz (E/h), six significant digits")]);
    let mut csv = Csv::new(&meta, LEVELS_CSV_HEADER);
    for r in &rows {
        csv.row([r.b0, r.e31, r.e42, r.e32].map(fmt_sig6));
    }
    Ok(vec![ctx.sink.file("levels.csv", &csv.into_string())?])
}

// ---------------------------------------------------------------- couplings

#[derive(Serialize)]
struct CouplingsReport<'a> {
    e31_ghz: f64,
    e42_ghz: f64,
    e32_ghz: f64,
    phi_rad: f64,
    h_a1_ghz: f64,
    h_a2_ghz: f64,
    h_b1_ghz: f64,
    h_b2_ghz: f64,
    g_a1_ghz: f64,
    g_a2_ghz: f64,
    g_b1_ghz: f64,
    g_b2_ghz: f64,
    residual_a2: f64,
    residual_b1: f64,
    degenerate: bool,
    warnings: Vec<String>,
    nscheme: NSchemeReport,
    metadata: &'a Metadata,
}

#[derive(Serialize)]
struct NSchemeReport {
    probe_coupling_ghz: f64,
    signal_coupling_ghz: f64,
    pump_rabi_ghz: f64,
    raman_detuning_ghz: f64,
    signal_detuning_ghz: f64,
}

impl From<&NSchemeParams> for NSchemeReport {
    fn from(p: &NSchemeParams) -> Self {
        Self {
            probe_coupling_ghz: p.probe_coupling,
            signal_coupling_ghz: p.signal_coupling,
            pump_rabi_ghz: p.pump_rabi,
            raman_detuning_ghz: p.raman_detuning,
            signal_detuning_ghz: p.signal_detuning,
        }
    }
}

pub fn couplings(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let s = &ctx.setup;
    let levels = level_structure(&s.molecule)?;
    if let CouplingSource::Geometry(g) = &s.source {
        coupling_factors(g, &s.molecule)?;
    }
    let d = derive_nscheme(&s.molecule, &s.pump, &s.source, s.resonators, Default::default())?;
    let c = d.report.couplings;
    let report = CouplingsReport {
        e31_ghz: levels.e31,
        e42_ghz: levels.e42,
        e32_ghz: levels.e32,
        phi_rad: levels.phi(),
        h_a1_ghz: c.h_a1,
        h_a2_ghz: c.h_a2,
        h_b1_ghz: c.h_b1,
        h_b2_ghz: c.h_b2,
        g_a1_ghz: c.g_a1,
        g_a2_ghz: c.g_a2,
        g_b1_ghz: c.g_b1,
        g_b2_ghz: c.g_b2,
        residual_a2: d.report.residual_a2,
        residual_b1: d.report.residual_b1,
        degenerate: d.report.degenerate,
        warnings: d.report.warnings,
        nscheme: (&ctx.nscheme()?).into(),
        metadata: ctx.meta(),
    };
    Ok(ctx.sink.report("couplings.json", &to_json(&report))?.into_iter().collect())
}

// ---------------------------------------------------------------- susceptibility

#[derive(Serialize)]
struct SusceptibilityReport<'a> {
    chi1_re_mhz: f64,
    chi1_im_mhz: f64,
    chi3_re_mhz: f64,
    chi3_im_mhz: f64,
    /// `Re χ₁ / Re χ₃`.
    dispersion_factor: Option<f64>,
    /// `Im χ₁ / Re χ₃`.
    linear_absorption_factor: Option<f64>,
    /// `Im χ₃ / Re χ₃`.
    nonlinear_absorption_factor: Option<f64>,
    relative_decay: Option<f64>,
    adiabatic: AdiabaticJson,
    closed_form: ClosedFormJson,
    oracle: Option<OracleJson>,
    metadata: &'a Metadata,
}

#[derive(Serialize)]
struct AdiabaticJson {
    r1: f64,
    r2: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ClosedFormJson {
    chi1_re_mhz: f64,
    chi1_im_mhz: f64,
    chi3_re_mhz: f64,
    chi3_im_mhz: f64,
    chi3_exact: bool,
}

#[derive(Serialize)]
struct OracleJson {
    chi3_re_mhz: f64,
    chi3_im_mhz: f64,
    /// `Re χ₃(oracle) / Re χ₃(elimination) − 1`.
    discrepancy: f64,
    phase_residual_rad: f64,
    horizon_ns: f64,
}

pub fn susceptibility(ctx: &Context, oracle: bool) -> Result<Vec<PathBuf>, CliError> {
    let p = ctx.nscheme()?;
    let chi: Susceptibilities = susceptibilities(&p)?;
    let adiabatic = adiabatic_check(&p)?;
    let forms = chi_closed_forms(&p);
    let oracle = if oracle {
        let horizon = 1.0 / (2.0 * chi.chi3.re);
        let est = conditional_phase_oracle(&p, &ctx.setup.truncation, horizon, &OracleOptions::default())?;
        Some(OracleJson {
            chi3_re_mhz: mhz(est.chi3.re),
            chi3_im_mhz: mhz(est.chi3.im),
            discrepancy: est.chi3.re / chi.chi3.re - 1.0,
            phase_residual_rad: est.phase_residual,
            horizon_ns: horizon,
        })
    } else {
        None
    };
    let report = SusceptibilityReport {
        chi1_re_mhz: mhz(chi.chi1.re),
        chi1_im_mhz: mhz(chi.chi1.im),
        chi3_re_mhz: mhz(chi.chi3.re),
        chi3_im_mhz: mhz(chi.chi3.im),
        dispersion_factor: chi.dispersion_factor.map(|x| x + 0.0),
        linear_absorption_factor: chi.linear_absorption_factor.map(|x| x + 0.0),
        nonlinear_absorption_factor: chi.nonlinear_absorption_factor.map(|x| x + 0.0),
        relative_decay: chi.relative_decay.map(|x| x + 0.0),
        adiabatic: AdiabaticJson {
            r1: adiabatic.r1,
            r2: adiabatic.r2,
            pass: adiabatic.pass,
        },
        closed_form: ClosedFormJson {
            chi1_re_mhz: mhz(forms.chi1.re),
            chi1_im_mhz: mhz(forms.chi1.im),
            chi3_re_mhz: mhz(forms.chi3.re),
            chi3_im_mhz: mhz(forms.chi3.im),
            chi3_exact: forms.chi3_exact,
        },
        oracle,
        metadata: ctx.meta(),
    };
    Ok(ctx.sink.report("susceptibility.json", &to_json(&report))?.into_iter().collect())
}

// ---------------------------------------------------------------- sweep

/// Reads one map value off a cell, or says why it is undefined.
type CellValue = fn(&Susceptibilities) -> Result<f64, &'static str>;

/// The four map files: name, quantity and how to read it off a cell.
pub const MAPS: [(&str, &str, CellValue); 4] = [
    ("fig5.csv", "Re χ₃/2π (GHz)", |s| Ok(s.chi3.re)),
    ("fig6.csv", "Re χ₁/Re χ₃", |s| s.dispersion_factor.ok_or("Re χ₃ = 0")),
    ("fig7.csv", "Im χ₁/Re χ₃", |s| s.linear_absorption_factor.ok_or("Re χ₃ = 0")),
    ("fig8.csv", "Im χ₃/Re χ₃", |s| s.nonlinear_absorption_factor.ok_or("Re χ₃ = 0")),
];

pub const SWEEP_HEADER: &str = "omega_ex,gamma5,value";

pub fn sweep_maps(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let s = &ctx.setup;
    let base = s.sweep_base.ok_or_else(|| s.nscheme().unwrap_err())?;
    let table = sweep(
        &base,
        SweepAxis::new(SweepParameter::PumpRabi, s.omega_grid.clone()),
        SweepAxis::new(SweepParameter::Gamma5, s.gamma5_grid.clone()),
    )?;
    let mut written = Vec::with_capacity(MAPS.len());
    for (name, quantity, read) in MAPS {
        let meta = ctx.meta_with(&[
            ("columns", "omega_ex = Ω_c/2π (GHz), gamma5 = γ₅/2π (GHz), value"),
            ("value", quantity),
            ("order", "omega_ex outer, gamma5 inner"),
        ]);
        let mut csv = Csv::new(&meta, SWEEP_HEADER);
        for (omega, gamma5, cell) in table.iter() {
            let value = match cell {
                SweepCell::Ok(chi) => read(chi).map(fmt_f64).unwrap_or_else(|why| format!("#err {why}")),
                SweepCell::Failed(msg) => format!("#err {}", annotation(msg)),
            };
            csv.row([fmt_f64(omega), fmt_f64(gamma5), value]);
        }
        written.push(ctx.sink.file(name, &csv.into_string())?);
    }
    Ok(written)
}

// ---------------------------------------------------------------- dynamics

#[derive(Serialize)]
struct DynamicsReport<'a> {
    chi3_re_mhz: f64,
    chi3_im_mhz: f64,
    horizon_ns: f64,
    final_infidelity: f64,
    max_infidelity: f64,
    /// Largest |phase error| (rad) per tracked Fock component `nm`.
    max_phase_error: BTreeMap<String, f64>,
    metadata: &'a Metadata,
}

/// `(|0⟩ + |1⟩)(|0⟩ + |1⟩)/2` on the configured cutoffs.
fn qubit_product(ctx: &Context) -> Result<QuantumState, CliError> {
    let t = ctx.setup.truncation;
    if t.n_max1 < 1 || t.n_max2 < 1 {
        return Err(CliError::Usage("dynamics needs n_max ≥ 1 in both modes".into()));
    }
    let d2 = t.n_max2 + 1;
    let mut psi = CVector::zeros((t.n_max1 + 1) * d2);
    for (n, m) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        psi[n * d2 + m] = Complex64::from(0.5);
    }
    Ok(QuantumState::ket(t.mode_space(), psi)?)
}

pub fn dynamics(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let p = ctx.nscheme()?;
    let d = ctx.setup.dynamics;
    let psi0 = qubit_product(ctx)?;
    let horizon = match d.horizon {
        Some(h) => h,
        None => KerrParams::cross(susceptibilities_with(&p, EliminationOptions::unchecked())?.chi3).conditional_pi_time()?,
    };
    let run = compare_full_vs_effective(&p, &ctx.setup.truncation, &psi0, horizon, d.samples, d.tolerance)?;

    let label = |fock: (usize, usize)| format!("{}{}", fock.0, fock.1);
    let header = std::iter::once("time_ns".to_owned())
        .chain(std::iter::once("infidelity".to_owned()))
        .chain(run.phase_error.iter().map(|e| format!("phase_error_{}", label(e.fock))))
        .collect::<Vec<_>>()
        .join(",");
    let meta = ctx.meta_with(&[("columns", "time (ns), 1 − fidelity, phase errors (rad) of ⟨nm|ρ|00⟩")]);
    let mut csv = Csv::new(&meta, &header);
    for (k, t) in run.times.iter().enumerate() {
        let fields = [fmt_f64(*t), fmt_f64(run.infidelity[k])]
            .into_iter()
            .chain(run.phase_error.iter().map(|e| fmt_f64(e.error[k])));
        csv.row(fields);
    }
    let mut written = vec![ctx.sink.file("dynamics.csv", &csv.into_string())?];

    let report = DynamicsReport {
        chi3_re_mhz: mhz(run.chi3.re),
        chi3_im_mhz: mhz(run.chi3.im),
        horizon_ns: horizon,
        final_infidelity: run.final_infidelity(),
        max_infidelity: run.infidelity.iter().copied().fold(0.0, f64::max),
        max_phase_error: run
            .phase_error
            .iter()
            .map(|e| (label(e.fock), e.error.iter().fold(0.0_f64, |m, x| m.max(x.abs()))))
            .collect(),
        metadata: ctx.meta(),
    };
    written.extend(ctx.sink.report("dynamics.json", &to_json(&report))?);
    Ok(written)
}

// ---------------------------------------------------------------- cat

#[derive(Serialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct OverlapJson {
    /// `|⟨−x|x⟩|`.
    amplitude: f64,
    /// `|⟨−x|x⟩|²`.
    probability: f64,
}

#[derive(Serialize)]
struct CatReport<'a> {
    alpha: ComplexJson,
    beta: ComplexJson,
    n_max: usize,
    chi3_re_mhz: f64,
    chi3_im_mhz: f64,
    time_ns: f64,
    fidelity: f64,
    success_probability: f64,
    truncation_tail: f64,
    converged: bool,
    suggested_n_max: Option<usize>,
    overlap_alpha: OverlapJson,
    overlap_beta: OverlapJson,
    degenerate: bool,
    notes: Vec<String>,
    metadata: &'a Metadata,
}

pub fn cat(ctx: &Context, fock_csv: bool) -> Result<Vec<PathBuf>, CliError> {
    let p = ctx.nscheme()?;
    let c = ctx.setup.cat;
    let chi3 = susceptibilities_with(&p, EliminationOptions::unchecked())?.chi3;
    let r = cat_protocol(c.alpha, c.beta, chi3, &c.truncation)?;

    let mut notes = Vec::new();
    if r.degenerate {
        notes.push("degenerate protocol: α or β is zero, so the four branches collapse onto one product state".to_owned());
    }
    if let Some(n) = r.suggested_n_max {
        notes.push(format!(
            "Fock tail {} exceeds {}; use n_max ≥ {n}",
            fmt_f64(r.truncation_tail),
            fmt_f64(cqed_xpm::dynamics::TRUNCATION_CEILING)
        ));
    }
    let overlap = |z: Complex64| OverlapJson {
        amplitude: z.norm(),
        probability: z.norm_sqr(),
    };
    let mut written = Vec::new();
    if fock_csv {
        let d2 = c.truncation.n_max2 + 1;
        let mut csv = Csv::new(&ctx.meta_with(&[("columns", "Fock numbers n, m and the final amplitude")]), "n,m,re,im");
        let ket = r.final_state.as_ket().expect("cat protocol evolves kets");
        for (i, z) in ket.iter().enumerate() {
            csv.row([(i / d2).to_string(), (i % d2).to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
        written.push(ctx.sink.file("cat_fock.csv", &csv.into_string())?);
    }
    let report = CatReport {
        alpha: c.alpha.into(),
        beta: c.beta.into(),
        n_max: c.truncation.n_max1,
        chi3_re_mhz: mhz(chi3.re),
        chi3_im_mhz: mhz(chi3.im),
        time_ns: r.time,
        fidelity: r.fidelity,
        success_probability: r.success_probability,
        truncation_tail: r.truncation_tail,
        converged: r.converged,
        suggested_n_max: r.suggested_n_max,
        overlap_alpha: overlap(r.branch_overlaps.0),
        overlap_beta: overlap(r.branch_overlaps.1),
        degenerate: r.degenerate,
        notes,
        metadata: ctx.meta(),
    };
    written.extend(ctx.sink.report("cat.json", &to_json(&report))?);
    Ok(written)
}
