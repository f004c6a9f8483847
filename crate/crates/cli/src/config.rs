//! Config file ingestion and resolution into simulator inputs.
//!
//! Every physical value carries a unit suffix. Omitted keys take defaults, and
//! each resolved value, defaulted or not, is recorded in [`Setup::metadata`]
//! under its dotted key so outputs can echo the full parameter set.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use cqed_xpm::molecule::{
    derive_nscheme, level_structure, CouplingFactors, CouplingGeometry, CouplingSource, MoleculeParams, PumpParams,
    ResonatorTaps,
};
use cqed_xpm::nscheme::{DecayRates, NSchemeParams, Truncation};

use crate::output::{fmt_f64, Metadata};
use crate::units::{Capacitance, Dimension, Ghz, Length, LineCapacitance, Ns, Quantity};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub molecule: MoleculeSection,
    pub pump: PumpSection,
    pub couplings: CouplingSection,
    pub resonators: ResonatorSection,
    pub nscheme: NSchemeSection,
    pub rates: RatesSection,
    pub truncation: TruncationSection,
    pub levels: LevelsSection,
    pub sweep: SweepSection,
    pub dynamics: DynamicsSection,
    pub cat: CatSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoleculeSection {
    pub e_j: Option<Ghz>,
    pub e_m: Option<Ghz>,
    pub b0: Option<f64>,
    pub n_g1: Option<f64>,
    pub n_g2: Option<f64>,
    pub c_sigma: Option<Quantity<Capacitance>>,
    pub c_m: Option<Quantity<Capacitance>>,
    pub allow_off_degeneracy: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub amplitude: Option<Ghz>,
    /// Defaults to the `|2⟩↔|3⟩` spacing.
    pub frequency: Option<Ghz>,
}

/// At most one of the three coupling inputs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSection {
    pub direct: Option<DirectCouplings>,
    pub h: Option<HFactors>,
    pub geometry: Option<GeometrySection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectCouplings {
    pub g_a1: Option<Ghz>,
    pub g_a2: Option<Ghz>,
    pub g_b1: Option<Ghz>,
    pub g_b2: Option<Ghz>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HFactors {
    pub h_a1: Ghz,
    pub h_a2: Ghz,
    pub h_b1: Ghz,
    pub h_b2: Ghz,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub capacitance_per_length: Quantity<LineCapacitance>,
    pub a: TapsSection,
    pub b: TapsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapsSection {
    pub length: Quantity<Length>,
    pub frequency: Ghz,
    pub c1: Quantity<Capacitance>,
    pub c2: Quantity<Capacitance>,
    pub x1: Quantity<Length>,
    pub x2: Quantity<Length>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonatorSection {
    pub omega_a: Option<Ghz>,
    pub omega_b: Option<Ghz>,
}

/// Overrides applied after the circuit-to-N-scheme mapping.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NSchemeSection {
    pub probe_coupling: Option<Ghz>,
    pub signal_coupling: Option<Ghz>,
    pub pump_rabi: Option<Ghz>,
    pub raman_detuning: Option<Ghz>,
    pub signal_detuning: Option<Ghz>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    pub decay_31: Option<Ghz>,
    pub decay_32: Option<Ghz>,
    pub decay_42: Option<Ghz>,
    pub decay_21: Option<Ghz>,
    pub dephasing_21: Option<Ghz>,
    pub kappa_probe: Option<Ghz>,
    pub kappa_signal: Option<Ghz>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSection {
    pub n_max1: Option<usize>,
    pub n_max2: Option<usize>,
}

/// Explicit points or an inclusive evenly spaced range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid<T> {
    Points(Vec<T>),
    Range { start: T, stop: T, points: usize },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelsSection {
    pub b0: Option<Grid<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub omega_ex: Option<Grid<Ghz>>,
    pub gamma5: Option<Grid<Ghz>>,
    /// Decay rates of the sweep base point; defaults differ from `[rates]`.
    pub rates: RatesSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsSection {
    pub horizon: Option<Ns>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Parts { re: f64, im: f64 },
}

impl ComplexInput {
    fn value(self) -> Complex64 {
        match self {
            Self::Real(re) => Complex64::from(re),
            Self::Parts { re, im } => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatSection {
    pub alpha: Option<ComplexInput>,
    pub beta: Option<ComplexInput>,
    pub n_max: Option<usize>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message().trim())).with_span(text, e.span()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

impl CliError {
    fn with_span(self, text: &str, span: Option<std::ops::Range<usize>>) -> Self {
        match (self, span) {
            (Self::Usage(msg), Some(span)) => {
                let line = text[..span.start].matches('\n').count() + 1;
                Self::Usage(format!("{msg} (line {line})"))
            }
            (other, _) => other,
        }
    }
}

/// Defaults for omitted keys; frequencies in GHz.
pub mod defaults {
    pub const PUMP_AMPLITUDE: f64 = 1.5;
    pub const COUPLING: f64 = 0.3;
    pub const SIGNAL_DETUNING: f64 = 1.5;
    /// γ₁ = γ₂ = γ₃ for the susceptibility maps (MHz).
    pub const SWEEP_DECAY_MHZ: f64 = 0.5;
    pub const N_MAX: usize = 1;
    pub const CAT_N_MAX: usize = 20;
    pub const CAT_AMPLITUDE: f64 = 2.0;
    pub const DYNAMICS_SAMPLES: usize = 9;
    pub const DYNAMICS_TOLERANCE: f64 = 1e-9;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsSetup {
    /// `None` means the conditional π time of the resolved `χ₃`.
    pub horizon: Option<f64>,
    pub samples: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSetup {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub truncation: Truncation,
}

/// Fully resolved inputs for every command.
#[derive(Debug, Clone)]
pub struct Setup {
    pub molecule: MoleculeParams,
    pub pump: PumpParams,
    pub source: CouplingSource,
    pub resonators: (f64, f64),
    /// The mapped and overridden N-scheme, or why the mapping failed.
    pub nscheme: Result<NSchemeParams, cqed_xpm::Error>,
    pub truncation: Truncation,
    pub b0_grid: Vec<f64>,
    pub sweep_base: Option<NSchemeParams>,
    pub omega_grid: Vec<f64>,
    pub gamma5_grid: Vec<f64>,
    pub dynamics: DynamicsSetup,
    pub cat: CatSetup,
    pub metadata: Metadata,
}

/// Records each resolved value under its key.
#[derive(Default)]
struct Recorder {
    meta: Metadata,
}

impl Recorder {
    fn put(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_owned(), value.to_string());
    }

    fn quantity<D: Dimension>(&mut self, key: &str, given: Option<Quantity<D>>, default: Quantity<D>) -> f64 {
        let q = given.unwrap_or(default);
        self.put(key, &q);
        q.base()
    }

    fn ghz(&mut self, key: &str, given: Option<Ghz>, default_ghz: f64) -> f64 {
        self.quantity(key, given, Ghz::ghz(default_ghz))
    }

    fn mhz(&mut self, key: &str, given: Option<Ghz>, default_mhz: f64) -> f64 {
        self.quantity(key, given, Ghz::mhz(default_mhz))
    }

    fn number(&mut self, key: &str, given: Option<f64>, default: f64) -> f64 {
        let v = given.unwrap_or(default);
        self.put(key, fmt_f64(v));
        v
    }

    fn count(&mut self, key: &str, given: Option<usize>, default: usize) -> usize {
        let v = given.unwrap_or(default);
        self.put(key, v);
        v
    }

    fn rates(&mut self, prefix: &str, r: &RatesSection, default_mhz: [f64; 3]) -> DecayRates {
        let [d31, d32, d42] = default_mhz;
        DecayRates {
            decay_31: self.mhz(&format!("{prefix}.decay_31"), r.decay_31, d31),
            decay_32: self.mhz(&format!("{prefix}.decay_32"), r.decay_32, d32),
            decay_42: self.mhz(&format!("{prefix}.decay_42"), r.decay_42, d42),
            decay_21: self.mhz(&format!("{prefix}.decay_21"), r.decay_21, 0.0),
            dephasing_21: self.mhz(&format!("{prefix}.dephasing_21"), r.dephasing_21, 0.0),
            kappa_probe: self.mhz(&format!("{prefix}.kappa_probe"), r.kappa_probe, 0.0),
            kappa_signal: self.mhz(&format!("{prefix}.kappa_signal"), r.kappa_signal, 0.0),
        }
    }

    fn grid<T: Copy>(
        &mut self,
        key: &str,
        given: Option<Grid<T>>,
        default: Grid<T>,
        base: impl Fn(T) -> f64,
        show: impl Fn(T) -> String,
    ) -> Result<Vec<f64>, CliError> {
        let grid = given.unwrap_or(default);
        let (values, shown) = match grid {
            Grid::Points(v) => (
                v.iter().map(|&x| base(x)).collect::<Vec<_>>(),
                format!("[{}]", v.iter().map(|&x| show(x)).collect::<Vec<_>>().join(", ")),
            ),
            Grid::Range { start, stop, points } => {
                let (a, b) = (base(start), base(stop));
                let values = match points {
                    0 => Vec::new(),
                    1 => vec![a],
                    n => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
                };
                (values, format!("{{ start = {}, stop = {}, points = {points} }}", show(start), show(stop)))
            }
        };
        if values.is_empty() {
            return Err(CliError::Usage(format!("{key} grid is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Usage(format!("{key} grid has non-finite points")));
        }
        self.put(key, shown);
        Ok(values)
    }
}

fn quoted<D: Dimension>(q: Quantity<D>) -> String {
    format!("\"{q}\"")
}

impl Setup {
    /// Resolve defaults and the circuit mapping. `n_max_flag` overrides the
    /// mode cutoffs everywhere, the cat cutoff included.
    pub fn resolve(config: Config, n_max_flag: Option<usize>) -> Result<Self, CliError> {
        let mut rec = Recorder::default();
        let m = &config.molecule;
        let base = MoleculeParams::default();
        let molecule = MoleculeParams {
            e_j: rec.ghz("molecule.e_j", m.e_j, base.e_j),
            e_m: rec.ghz("molecule.e_m", m.e_m, base.e_m),
            b0: rec.number("molecule.b0", m.b0, base.b0),
            n_g1: rec.number("molecule.n_g1", m.n_g1, base.n_g1),
            n_g2: rec.number("molecule.n_g2", m.n_g2, base.n_g2),
            c_sigma: rec.quantity("molecule.c_sigma", m.c_sigma, Quantity::from_base(base.c_sigma, "fF")),
            c_m: rec.quantity("molecule.c_m", m.c_m, Quantity::from_base(base.c_m, "fF")),
            asymmetry: None,
            allow_off_degeneracy: {
                let v = m.allow_off_degeneracy.unwrap_or(false);
                rec.put("molecule.allow_off_degeneracy", v);
                v
            },
        };
        molecule.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let levels = level_structure(&molecule).map_err(|e| CliError::Usage(e.to_string()))?;

        let pump = PumpParams {
            amplitude: rec.ghz("pump.amplitude", config.pump.amplitude, defaults::PUMP_AMPLITUDE),
            frequency: rec.ghz("pump.frequency", config.pump.frequency, levels.e32),
        };

        let source = resolve_couplings(&mut rec, config.couplings, levels.phi())?;
        let resonators = (
            rec.ghz("resonators.omega_a", config.resonators.omega_a, levels.e31),
            rec.ghz(
                "resonators.omega_b",
                config.resonators.omega_b,
                levels.e42 - defaults::SIGNAL_DETUNING,
            ),
        );
        let rates = rec.rates("rates", &config.rates, [0.0; 3]);

        let mapped = derive_nscheme(&molecule, &pump, &source, resonators, rates).map(|d| d.params);
        let o = &config.nscheme;
        let nscheme = match mapped {
            Ok(p) => Ok(NSchemeParams {
                probe_coupling: rec.ghz("nscheme.probe_coupling", o.probe_coupling, p.probe_coupling),
                signal_coupling: rec.ghz("nscheme.signal_coupling", o.signal_coupling, p.signal_coupling),
                pump_rabi: rec.ghz("nscheme.pump_rabi", o.pump_rabi, p.pump_rabi),
                raman_detuning: rec.ghz("nscheme.raman_detuning", o.raman_detuning, p.raman_detuning),
                signal_detuning: rec.ghz("nscheme.signal_detuning", o.signal_detuning, p.signal_detuning),
                rates,
            }),
            Err(e) => {
                for key in ["probe_coupling", "signal_coupling", "pump_rabi", "raman_detuning", "signal_detuning"] {
                    rec.put(&format!("nscheme.{key}"), format!("unavailable ({e})"));
                }
                Err(e)
            }
        };

        let t = &config.truncation;
        let truncation = Truncation::new(
            rec.count("truncation.n_max1", n_max_flag.or(t.n_max1), defaults::N_MAX),
            rec.count("truncation.n_max2", n_max_flag.or(t.n_max2), defaults::N_MAX),
        );

        let b0_grid = rec.grid(
            "levels.b0",
            config.levels.b0,
            Grid::Range { start: 0.0, stop: 0.95, points: 20 },
            |x| x,
            fmt_f64,
        )?;

        let sweep_rates = rec.rates("sweep.rates", &config.sweep.rates, [defaults::SWEEP_DECAY_MHZ; 3]);
        let omega_grid = rec.grid(
            "sweep.omega_ex",
            config.sweep.omega_ex,
            Grid::Range { start: Ghz::ghz(0.8), stop: Ghz::ghz(3.0), points: 24 },
            |q| q.base(),
            quoted,
        )?;
        let gamma5_grid = rec.grid(
            "sweep.gamma5",
            config.sweep.gamma5,
            Grid::Range { start: Ghz::mhz(0.0), stop: Ghz::mhz(1.0), points: 21 },
            |q| q.base(),
            quoted,
        )?;
        let sweep_base = nscheme.as_ref().ok().map(|p| p.with_rates(sweep_rates));

        let d = &config.dynamics;
        let horizon = d.horizon.map(|h| h.base());
        match d.horizon {
            Some(h) => rec.put("dynamics.horizon", h),
            None => rec.put("dynamics.horizon", "conditional π time 1/(2 Re χ₃)"),
        }
        let dynamics = DynamicsSetup {
            horizon,
            samples: rec.count("dynamics.samples", d.samples, defaults::DYNAMICS_SAMPLES),
            tolerance: rec.number("dynamics.tolerance", d.tolerance, defaults::DYNAMICS_TOLERANCE),
        };
        if let Some(h) = horizon {
            if !(h > 0.0) {
                return Err(CliError::Usage("dynamics.horizon must be positive".into()));
            }
        }
        if dynamics.samples < 2 {
            return Err(CliError::Usage("dynamics.samples must be at least 2".into()));
        }
        if !(dynamics.tolerance > 0.0) {
            return Err(CliError::Usage("dynamics.tolerance must be positive".into()));
        }

        let c = &config.cat;
        let mut amplitude = |key: &str, given: Option<ComplexInput>| {
            let z = given.map_or(Complex64::from(defaults::CAT_AMPLITUDE), ComplexInput::value);
            rec.put(key, format!("{{ re = {}, im = {} }}", fmt_f64(z.re), fmt_f64(z.im)));
            z
        };
        let (alpha, beta) = (amplitude("cat.alpha", c.alpha), amplitude("cat.beta", c.beta));
        let cat_n = rec.count("cat.n_max", n_max_flag.or(c.n_max), defaults::CAT_N_MAX);
        let cat = CatSetup {
            alpha,
            beta,
            truncation: Truncation::uniform(cat_n),
        };

        Ok(Self {
            molecule,
            pump,
            source,
            resonators,
            nscheme,
            truncation,
            b0_grid,
            sweep_base,
            omega_grid,
            gamma5_grid,
            dynamics,
            cat,
            metadata: rec.meta,
        })
    }

    pub fn nscheme(&self) -> Result<NSchemeParams, cqed_xpm::Error> {
        self.nscheme.clone()
    }
}

fn resolve_couplings(rec: &mut Recorder, c: CouplingSection, phi: f64) -> Result<CouplingSource, CliError> {
    let given = [c.direct.is_some(), c.h.is_some(), c.geometry.is_some()];
    if given.iter().filter(|&&g| g).count() > 1 {
        return Err(CliError::Usage(
            "couplings: give exactly one of [couplings.direct], [couplings.h], [couplings.geometry]".into(),
        ));
    }
    if let Some(h) = c.h {
        rec.put("couplings.source", "h");
        rec.put("couplings.h.h_a1", h.h_a1);
        rec.put("couplings.h.h_a2", h.h_a2);
        rec.put("couplings.h.h_b1", h.h_b1);
        rec.put("couplings.h.h_b2", h.h_b2);
        return Ok(CouplingSource::Direct(CouplingFactors::from_h(
            h.h_a1.base(),
            h.h_a2.base(),
            h.h_b1.base(),
            h.h_b2.base(),
            phi,
        )));
    }
    if let Some(g) = c.geometry {
        rec.put("couplings.source", "geometry");
        rec.put("couplings.geometry.capacitance_per_length", g.capacitance_per_length);
        let mut taps = |name: &str, t: TapsSection| {
            for (key, value) in [
                ("length", t.length.to_string()),
                ("frequency", t.frequency.to_string()),
                ("c1", t.c1.to_string()),
                ("c2", t.c2.to_string()),
                ("x1", t.x1.to_string()),
                ("x2", t.x2.to_string()),
            ] {
                rec.put(&format!("couplings.geometry.{name}.{key}"), value);
            }
            ResonatorTaps {
                length: t.length.base(),
                frequency: t.frequency.base(),
                c1: t.c1.base(),
                c2: t.c2.base(),
                x1: t.x1.base(),
                x2: t.x2.base(),
            }
        };
        let (a, b) = (taps("a", g.a), taps("b", g.b));
        return Ok(CouplingSource::Geometry(CouplingGeometry {
            a,
            b,
            capacitance_per_length: g.capacitance_per_length.base(),
        }));
    }
    let d = c.direct.unwrap_or_default();
    rec.put("couplings.source", "direct");
    Ok(CouplingSource::Direct(CouplingFactors::direct(
        rec.ghz("couplings.direct.g_a1", d.g_a1, defaults::COUPLING),
        rec.ghz("couplings.direct.g_a2", d.g_a2, 0.0),
        rec.ghz("couplings.direct.g_b1", d.g_b1, 0.0),
        rec.ghz("couplings.direct.g_b2", d.g_b2, defaults::COUPLING),
    )))
}
