use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{susceptibilities_with, EliminationOptions, Susceptibilities};
use crate::error::{Error, Result};
use crate::nscheme::{DecayRates, NSchemeParams};

/// A scalar of [`NSchemeParams`] that a sweep axis can drive (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    PumpRabi,
    /// Ground-coherence damping, applied through [`DecayRates::with_gamma5`].
    Gamma5,
    RamanDetuning,
    SignalDetuning,
    SignalDecay,
    ProbeCoupling,
    SignalCoupling,
}

impl SweepParameter {
    pub fn apply(self, p: &NSchemeParams, value: f64) -> NSchemeParams {
        let mut out = *p;
        match self {
            Self::PumpRabi => out.pump_rabi = value,
            Self::Gamma5 => out.rates = p.rates.with_gamma5(value),
            Self::RamanDetuning => out.raman_detuning = value,
            Self::SignalDetuning => out.signal_detuning = value,
            Self::SignalDecay => out.rates.decay_42 = value,
            Self::ProbeCoupling => out.probe_coupling = value,
            Self::SignalCoupling => out.signal_coupling = value,
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
}

impl SweepAxis {
    pub fn new(parameter: SweepParameter, grid: Vec<f64>) -> Self {
        Self { parameter, grid }
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linspace(parameter: SweepParameter, start: f64, stop: f64, n: usize) -> Self {
        let grid = match n {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
        };
        Self { parameter, grid }
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameters(format!("{:?} grid is empty", self.parameter)));
        }
        if let Some(bad) = self.grid.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters(format!("{:?} grid contains {bad}", self.parameter)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCell {
    Ok(Susceptibilities),
    Failed(String),
}

impl SweepCell {
    pub fn ok(&self) -> Option<&Susceptibilities> {
        match self {
            Self::Ok(s) => Some(s),
            Self::Failed(_) => None,
        }
    }
}

/// Row-major table, first axis outer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub base: NSchemeParams,
    pub outer: SweepAxis,
    pub inner: SweepAxis,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.inner.grid.len() + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.outer.grid.len(), self.inner.grid.len())
    }

    /// Iterate `(outer value, inner value, cell)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, &SweepCell)> {
        let n = self.inner.grid.len();
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, c)| (self.outer.grid[k / n], self.inner.grid[k % n], c))
    }

    /// Reference base point for the susceptibility maps: operating point with
    /// γ₁ = γ₂ = γ₃ = 0.5 MHz and δ = 0.
    pub fn map_base() -> NSchemeParams {
        NSchemeParams::operating_point().with_rates(DecayRates {
            decay_31: 0.0005,
            decay_32: 0.0005,
            decay_42: 0.0005,
            ..DecayRates::default()
        })
    }

    /// Pump 0.8–3.0 GHz (24 points) against γ₅ 0–1 MHz (21 points).
    pub fn map_axes() -> (SweepAxis, SweepAxis) {
        (
            SweepAxis::linspace(SweepParameter::PumpRabi, 0.8, 3.0, 24),
            SweepAxis::linspace(SweepParameter::Gamma5, 0.0, 0.001, 21),
        )
    }
}

/// Evaluate [`susceptibilities_with`] over a 2-D grid. Adiabaticity is not
/// enforced, so edge-of-grid points are still reported.
pub fn sweep(base: &NSchemeParams, outer: SweepAxis, inner: SweepAxis) -> Result<SweepTable> {
    outer.validate()?;
    inner.validate()?;
    let n = inner.grid.len();
    let cells = (0..outer.grid.len() * n)
        .into_par_iter()
        .map(|k| {
            let p = inner
                .parameter
                .apply(&outer.parameter.apply(base, outer.grid[k / n]), inner.grid[k % n]);
            match susceptibilities_with(&p, EliminationOptions::unchecked()) {
                Ok(s) => SweepCell::Ok(s),
                Err(e) => SweepCell::Failed(e.to_string()),
            }
        })
        .collect();
    Ok(SweepTable {
        base: *base,
        outer,
        inner,
        cells,
    })
}
