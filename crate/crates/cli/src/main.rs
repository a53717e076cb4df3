use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::json;
use steinlab::montecarlo::resolve_seed;
use steinlab::quadrature::{set_overrides, SchemeOverrides};

mod commands;
mod config;

use commands::Outcome;
use config::*;

/// Stein discrepancies and functional inequalities.
///
/// Exit status: 0 when everything holds, 1 when a divergence flag makes a
/// result indeterminate, 2 on a violation or invalid input.
#[derive(Debug, Parser)]
#[command(name = "steinlab", version)]
struct Cli {
    /// TOML config with one table per command; flags win over the file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (falls back to STEINLAB_SEED)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    /// Gauss–Hermite nodes for the Mehler formula
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Relative tolerance of the adaptive integrals
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cut infinite integration ends at this many scale units
    #[arg(long, global = true)]
    truncation: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// H, I, S_p, W_p and TV of a target
    Compute(ComputeArgs),
    /// Check functional inequalities on a target
    Verify(VerifyArgs),
    /// Functionals along the Ornstein-Uhlenbeck flow, with decay bounds
    Evolve(EvolveArgs),
    /// HWI against HSI on the Gaussian mixture family
    Sweep(SweepArgs),
    /// Iterated gradients and curvature criteria
    GammaCalc(GammaCalcArgs),
    /// Polynomial functionals of a Gaussian vector
    Functional(FunctionalArgs),
    /// Entropic CLT rate for weighted sums
    Clt(CltArgs),
    /// Moment growth and concentration
    Concentration(ConcentrationArgs),
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n");
    eprintln!("{}", Cli::command().render_usage());
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let file = match &cli.config {
        Some(p) => match FileConfig::load(p) {
            Ok(f) => f,
            Err(e) => return usage_error(&e),
        },
        None => FileConfig::default(),
    };
    let seed = resolve_seed(cli.seed.or(file.seed));
    let json_out = cli.json_out.clone().or(file.json_out.clone());
    let q = file.quadrature.unwrap_or_default();
    let quadrature = SchemeOverrides {
        nodes: cli.nodes.or(q.nodes),
        tol: cli.tol.or(q.tol),
        truncation: cli.truncation.or(q.truncation),
    };
    if let Err(e) = set_overrides(quadrature) {
        return usage_error(&e.to_string());
    }

    let (name, echo, run) = match cli.command {
        Command::Compute(a) => {
            let a = a.merged(file.compute);
            ("compute", json!(a), commands::compute(&a))
        }
        Command::Verify(a) => {
            let a = a.merged(file.verify);
            ("verify", json!(a), commands::verify_cmd(&a))
        }
        Command::Evolve(a) => {
            let a = a.merged(file.evolve);
            ("evolve", json!(a), commands::evolve(&a))
        }
        Command::Sweep(a) => {
            let a = a.merged(file.sweep);
            ("sweep", json!(a), commands::sweep(&a))
        }
        Command::GammaCalc(a) => {
            let a = a.merged(file.gamma_calc);
            ("gamma-calc", json!(a), commands::gamma_calc(&a, seed))
        }
        Command::Functional(a) => {
            let a = a.merged(file.functional);
            ("functional", json!(a), commands::functional(&a, seed))
        }
        Command::Clt(a) => {
            let a = a.merged(file.clt);
            ("clt", json!(a), commands::clt(&a, seed))
        }
        Command::Concentration(a) => {
            let a = a.merged(file.concentration);
            ("concentration", json!(a), commands::concentration(&a, seed))
        }
    };
    let run = match run {
        Ok(r) => r,
        Err(e) => return usage_error(&e),
    };
    let doc = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_echo": { "command": name, "seed": seed, "quadrature": quadrature, "args": echo },
        "reports": run.reports,
        "curves_path": run.curves_path,
    });
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
    match json_out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(match run.outcome {
        Outcome::Success => 0,
        Outcome::Indeterminate => 1,
        Outcome::Violated => 2,
    })
}
