//! `vacpair`: spectra, densities, and parameter scans of vacuum pair production.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vacpair_core::io::Tier;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "vacpair", version, about = "Quantum Vlasov simulator for vacuum pair production")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Momentum spectrum f(p∥) at the end of the field.
    Spectrum(Common),
    /// Reduced number density.
    Density(Common),
    /// Number density over a parameter sweep (needs a [scan] section).
    Scan(Common),
    /// Compare the ODE solver with direct quadrature of the memory integral.
    OracleCheck(OracleArgs),
    /// Resonance momenta of multiphoton channels.
    Resonances(MassArgs),
    /// Effective mass from the time-averaged vector potential.
    EffectiveMass(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// quick shortens modulated flat tops to a tenth; full runs them at length.
    #[arg(long, value_enum, default_value_t = TierArg::Quick)]
    tier: TierArg,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: VACPAIR_WORKERS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Checkpoint file for resumable scans.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct OracleArgs {
    /// Check this configuration's field instead of the built-in instances.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone)]
struct MassArgs {
    #[command(flatten)]
    common: Common,
    /// Effective mass (units of m) overriding the computed value.
    #[arg(long)]
    m_star: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TierArg {
    Quick,
    Full,
}

impl From<TierArg> for Tier {
    fn from(t: TierArg) -> Tier {
        match t {
            TierArg::Quick => Tier::Quick,
            TierArg::Full => Tier::Full,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Spectrum(c) => commands::spectrum(&c.config, &c.run.into()),
        Command::Density(c) => commands::density(&c.config, &c.run.into()),
        Command::Scan(c) => commands::scan(&c.config, &c.run.into()),
        Command::OracleCheck(o) => commands::oracle_check(o.config.as_deref(), &o.run.into()),
        Command::Resonances(m) => commands::resonances(&m.common.config, m.m_star, &m.common.run.into()),
        Command::EffectiveMass(c) => commands::effective_mass(&c.config, &c.run.into()),
    };
    match outcome {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

impl From<RunArgs> for commands::Run {
    fn from(r: RunArgs) -> Self {
        let (workers, workers_source) = match r.workers {
            Some(n) => (Some(n), "--workers".to_string()),
            None => match std::env::var("VACPAIR_WORKERS") {
                Ok(v) => match v.trim().parse::<usize>() {
                    Ok(n) if n > 0 => (Some(n), format!("VACPAIR_WORKERS={v}")),
                    _ => {
                        log::warn!("ignoring VACPAIR_WORKERS={v}: not a positive integer");
                        (None, format!("VACPAIR_WORKERS={v} ignored"))
                    }
                },
                Err(_) => (None, "default".to_string()),
            },
        };
        commands::Run {
            tier: r.tier.into(),
            out: r.out,
            workers,
            workers_source,
            checkpoint: r.checkpoint,
        }
    }
}
