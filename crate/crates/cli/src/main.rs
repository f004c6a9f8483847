use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cqed_xpm_cli::commands::{self, Context};
use cqed_xpm_cli::config::{Config, Setup};
use cqed_xpm_cli::output::{to_json, Sink};
use cqed_xpm_cli::{check, CliError};

/// Cross-Kerr photon–photon interaction in a circuit-QED molecule.
#[derive(Debug, Parser)]
#[command(name = "cqed-xpm", version)]
struct Cli {
    /// TOML config with unit-suffixed values; omitted keys take defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON outputs. JSON goes to stdout when absent.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cross-check χ₃ against the full master equation (susceptibility).
    #[arg(long, global = true)]
    oracle: bool,
    /// Fock cutoff for both modes, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    truncation: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Level spacings against b0 → levels.csv.
    Levels,
    /// Circuit couplings and the mapped N-scheme → couplings.json.
    Couplings,
    /// χ₁, χ₃ and their ratios → susceptibility.json.
    Susceptibility,
    /// Susceptibility maps over Ω_c × γ₅ → fig5.csv … fig8.csv.
    Sweep,
    /// Full model against the effective Kerr model → dynamics.csv, dynamics.json.
    Dynamics,
    /// Entangled-cat protocol → cat.json.
    Cat {
        /// Also write the final Fock amplitudes to cat_fock.csv.
        #[arg(long)]
        fock_csv: bool,
    },
    /// Invariant suite → check.json; exits 1 if any check fails.
    Check {
        /// Multiplier on integrator tolerances.
        #[arg(long, default_value_t = 1.0, value_name = "S")]
        tolerance_scale: f64,
    },
}

impl Command {
    fn report_name(&self) -> &'static str {
        match self {
            Self::Levels => "levels.json",
            Self::Couplings => "couplings.json",
            Self::Susceptibility => "susceptibility.json",
            Self::Sweep => "sweep.json",
            Self::Dynamics => "dynamics.json",
            Self::Cat { .. } => "cat.json",
            Self::Check { .. } => "check.json",
        }
    }

    /// Commands whose primary output is a JSON report.
    fn reports_json(&self) -> bool {
        !matches!(self, Self::Levels | Self::Sweep)
    }
}

fn run(cli: &Cli, ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    match &cli.command {
        Command::Levels => commands::levels(ctx),
        Command::Couplings => commands::couplings(ctx),
        Command::Susceptibility => commands::susceptibility(ctx, cli.oracle),
        Command::Sweep => commands::sweep_maps(ctx),
        Command::Dynamics => commands::dynamics(ctx),
        Command::Cat { fock_csv } => commands::cat(ctx, *fock_csv),
        Command::Check { tolerance_scale } => {
            if !(*tolerance_scale > 0.0) {
                return Err(CliError::Usage("--tolerance-scale must be positive".into()));
            }
            let ledger = check::run(&ctx.setup, *tolerance_scale);
            let written = ctx.sink.report("check.json", &to_json(&ledger))?;
            if ledger.failed > 0 {
                for c in ledger.checks.iter().filter(|c| !c.pass) {
                    eprintln!("FAIL {}: {}", c.name, c.detail);
                }
                return Err(CliError::ChecksFailed {
                    failed: ledger.failed,
                    total: ledger.checks.len(),
                });
            }
            Ok(written.into_iter().collect())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    };
    let setup = match config.and_then(|c| Setup::resolve(c, cli.truncation)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let ctx = Context {
        setup,
        sink: Sink::new(cli.out.clone()),
    };
    match run(&cli, &ctx) {
        Ok(written) => {
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let (CliError::Compute(inner), true) = (&e, cli.command.reports_json()) {
                if let Err(io) = commands::report_error(&ctx, cli.command.report_name(), inner) {
                    eprintln!("error: {io}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
