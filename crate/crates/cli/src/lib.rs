//! Command-line surface of the cross-Kerr simulator: config ingestion,
//! analysis commands and deterministic CSV/JSON emission.

pub mod check;
pub mod commands;
pub mod config;
pub mod output;
pub mod units;

use std::path::PathBuf;

/// Failure classes, mapped to exit codes 2 (usage) and 1 (everything else).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] cqed_xpm::Error),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Short machine-readable name of a simulator error.
pub fn error_kind(e: &cqed_xpm::Error) -> &'static str {
    use cqed_xpm::Error as E;
    match e {
        E::DimensionMismatch { .. } | E::SpaceMismatch { .. } | E::InvalidSpace(_) => "space",
        E::NotHermitian { .. } => "not_hermitian",
        E::InvalidState(_) => "invalid_state",
        E::NegativeRate { .. } | E::InvalidParameters(_) => "invalid_parameters",
        E::UnorderedTimeGrid { .. } => "time_grid",
        E::StepUnderflow { .. } | E::StepLimit { .. } => "integrator",
        E::DegenerateSteadyState { .. } => "degenerate_steady_state",
        E::SingularMatrix(_) => "singular_matrix",
        E::XpmImpure { .. } => "xpm_impure",
        E::EliminationInvalid(_) => "elimination_invalid",
        E::SingularMoments { .. } => "singular_moments",
        E::AdiabaticityViolated { .. } => "adiabaticity_violated",
        E::OracleFit { .. } => "oracle_fit",
    }
}
