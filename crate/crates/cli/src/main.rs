//! Command-line front end: model evaluation, consistency audits, limit
//! sweeps, mixing curves, scaling reports and model validation, all with
//! reproducible file output.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{Ctx, Format};
use helmix::Error;

#[derive(Parser)]
#[command(
    name = "helmix",
    version,
    about = "Helmholtz free energies for multicomponent fluids: evaluation, consistency audits and incompressible-limit diagnostics"
)]
struct Cli {
    /// Output directory for artifact files
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Seed for sampling (recorded in every output header)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override a config entry: section.key=value (repeatable)
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    /// Echo the fully resolved config to stdout
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the potential bundle at chart states
    Eval {
        /// Model definition file (defaults to the built-in water model)
        #[arg(long)]
        model: Option<PathBuf>,
        /// CSV of states with columns T,p,x_1..x_N
        #[arg(long)]
        states: Option<PathBuf>,
    },
    /// Audit convexity, concavity and the expansion inequality over a region
    Consistency {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Drive a model family through the incompressible limit
    LimitSweep {
        /// Family definition file (defaults to the built-in drift family)
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Mixing curve of the cluster-reaction model: x, extent, excess volume
    ExcessVolume {
        /// Parameter file with a [mixing] section (flags override it)
        #[arg(long)]
        model: Option<PathBuf>,
        /// Reaction Gibbs energy, J/mol
        #[arg(long)]
        dg: Option<f64>,
        /// Reaction volume change, m³/mol
        #[arg(long)]
        dv: Option<f64>,
        /// Temperature, K
        #[arg(long)]
        t: Option<f64>,
        /// Pressure, Pa
        #[arg(long)]
        p: Option<f64>,
        /// Points across the composition axis
        #[arg(long)]
        points: Option<usize>,
    },
    /// Characteristic numbers, scaling parameters and buoyancy-limit report
    Regime {
        /// Parameter file with a [regime] section (flags override it)
        #[arg(long)]
        model: Option<PathBuf>,
        /// Smallness parameter ε
        #[arg(long)]
        eps: Option<f64>,
        /// Temperature sweep bounds as fractions of the reference temperature
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_count: Option<usize>,
    },
    /// Sample constitutive invariants and report violations
    Validate {
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn push_override(overrides: &mut Vec<String>, key: &str, value: Option<String>) {
    if let Some(v) = value {
        overrides.push(format!("{key}={v}"));
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io(_) | Error::TableFormat(_) | Error::InvalidParameter(_) => 2,
        Error::OutOfDomain { .. }
        | Error::CompositionSum { .. }
        | Error::CompositionNegative { .. }
        | Error::DegenerateState
        | Error::BoundaryComposition(_)
        | Error::UnphysicalComposition(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        out_dir: cli.out.clone(),
        format: match cli.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        seed: cli.seed,
        dump_config: cli.dump_config,
    };
    let result: Result<u8, Error> = (|| {
        match &cli.command {
            Command::Eval { model, states } => {
                let files =
                    commands::run_eval(&ctx, model.as_deref(), states.as_deref(), &cli.overrides)?;
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                Ok(0)
            }
            Command::Consistency { model } => {
                let (files, stable) =
                    commands::run_consistency(&ctx, model.as_deref(), &cli.overrides)?;
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                eprintln!("verdict: {}", if stable { "stable" } else { "unstable" });
                Ok(0)
            }
            Command::LimitSweep { model } => {
                let files = commands::run_limit_sweep(&ctx, model.as_deref(), &cli.overrides)?;
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                Ok(0)
            }
            Command::ExcessVolume {
                model,
                dg,
                dv,
                t,
                p,
                points,
            } => {
                let mut ov = cli.overrides.clone();
                push_override(&mut ov, "mixing.dg", dg.map(|v| v.to_string()));
                push_override(&mut ov, "mixing.dv", dv.map(|v| v.to_string()));
                push_override(&mut ov, "mixing.t", t.map(|v| v.to_string()));
                push_override(&mut ov, "mixing.p", p.map(|v| v.to_string()));
                push_override(&mut ov, "mixing.points", points.map(|v| v.to_string()));
                let files = commands::run_excess_volume(&ctx, model.as_deref(), &ov)?;
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                Ok(0)
            }
            Command::Regime {
                model,
                eps,
                t_min,
                t_max,
                t_count,
            } => {
                let mut ov = cli.overrides.clone();
                push_override(&mut ov, "regime.eps", eps.map(|v| v.to_string()));
                push_override(&mut ov, "regime.t_min_factor", t_min.map(|v| v.to_string()));
                push_override(&mut ov, "regime.t_max_factor", t_max.map(|v| v.to_string()));
                push_override(&mut ov, "regime.t_count", t_count.map(|v| v.to_string()));
                let files = commands::run_regime(&ctx, model.as_deref(), &ov)?;
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                Ok(0)
            }
            Command::Validate { model } => {
                let (files, has_violations) =
                    commands::run_validate(&ctx, model.as_deref(), &cli.overrides)?;
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                // diagnostics are written either way; violations surface in
                // the exit status
                Ok(if has_violations { 4 } else { 0 })
            }
        }
    })();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
