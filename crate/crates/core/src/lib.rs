//! Cross-Kerr photon–photon interaction mediated by a four-level superconducting
//! "molecule" (two coupled charge qubits) in a pair of transmission-line resonators.
//!
//! Layers, bottom up:
//!
//! - [`quantum`]: operators, states, Lindblad evolution and steady states.
//! - [`molecule`]: circuit parameters to level structure, dipole couplings and the pump.
//! - [`nscheme`]: the four-level N-type model coupled to two modes.
//! - [`elimination`]: stationary atomic moments and the Kerr susceptibilities `χ₁`, `χ₃`.
//! - [`dynamics`]: effective Kerr evolution, the entangled-cat protocol and
//!   full-vs-effective comparisons.
//!
//! Frequencies are `ω/2π` in GHz and times are in ns throughout.

pub mod dynamics;
pub mod elimination;
pub mod error;
pub mod molecule;
pub mod nscheme;
pub mod quantum;

pub use error::{Error, Result};
