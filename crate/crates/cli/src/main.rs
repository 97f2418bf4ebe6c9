use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use jcq_cli::commands;
use jcq_cli::config::{self, Settings};
use jcq_cli::output::{Format, Provenance, Writer};

/// Driven, damped Jaynes-Cummings oscillator: steady state, correlators,
/// spectra, quantum trajectories, phase-space distributions and validation.
///
/// Exit status: 0 on success, 2 when validation criteria fail, 1 on error.
#[derive(Parser, Debug)]
#[command(name = "jcq", version)]
struct Cli {
    /// Flat key=value configuration file (sections system., unraveling., ensemble., grid., spectra., wigner., validate.).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Operating-point preset: fig2a, fig2b, fig3, fig4, fig5a, fig5b, fig5c, fig5d, fig6.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Photon-number truncation.
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Extra key=value settings, applied after the preset and config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady-state photon number, g2(0) and field amplitude.
    Steady,
    /// Intensity correlation g2(tau).
    G2,
    /// Waiting-time density, numerical and four-state analytic.
    WaitingTime,
    /// Squeezing and transmission spectra, numerical and analytic.
    Spectra,
    /// One conditioned trajectory.
    Trajectory,
    /// Seeded trajectory ensemble, with the triggered photocurrent average when 0 < r < 1.
    Ensemble,
    /// Wigner function of the steady state or of a conditioned state.
    Wigner,
    /// Acceptance criteria; target overrides via validate.<name>=value.
    Validate {
        /// Comma-separated criterion ids, or `all`.
        #[arg(long)]
        criteria: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::G2 => "g2",
            Command::WaitingTime => "waiting-time",
            Command::Spectra => "spectra",
            Command::Trajectory => "trajectory",
            Command::Ensemble => "ensemble",
            Command::Wigner => "wigner",
            Command::Validate { .. } => "validate",
        }
    }
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = match &cli.preset {
        Some(name) => config::preset(name)?,
        None => Settings::default(),
    };
    if let Some(path) = &cli.config {
        s.merge_file(path)?;
    }
    for pair in &cli.set {
        s.merge_pair(pair).with_context(|| format!("--set {pair}"))?;
    }
    if let Some(n) = cli.n_max {
        s.insert("system.n_max", &n.to_string())?;
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<bool> {
    let s = settings(cli)?;
    let seed = cli.seed.unwrap_or(1);
    let name = cli.command.name();
    let params = match cli.command {
        Command::Validate { .. } => None,
        _ => Some(config::system_params(&s)?),
    };
    let provenance = Provenance {
        program: "jcq".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        seed,
        params: serde_json::to_value(params)?,
        settings: s.to_map(),
    };
    let mut out = Writer::new(&cli.out, cli.format, provenance)?;
    let ok = match (&cli.command, params) {
        (Command::Validate { criteria }, _) => commands::validate_cmd(&s, criteria.as_deref(), cli.seed, &mut out)?,
        (Command::Steady, Some(p)) => commands::steady(&p, &mut out)?,
        (Command::G2, Some(p)) => commands::g2(&p, &s, &mut out)?,
        (Command::WaitingTime, Some(p)) => commands::waiting_time(&p, &s, &mut out)?,
        (Command::Spectra, Some(p)) => commands::spectra(&p, &s, &mut out)?,
        (Command::Trajectory, Some(p)) => commands::trajectory(&p, &s, seed, &mut out)?,
        (Command::Ensemble, Some(p)) => commands::ensemble(&p, &s, seed, &mut out)?,
        (Command::Wigner, Some(p)) => commands::wigner(&p, &s, seed, &mut out)?,
        (_, None) => unreachable!("parameters are built for every non-validate command"),
    };
    for path in out.written() {
        eprintln!("wrote {}", path.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
