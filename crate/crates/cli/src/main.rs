use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use henon_cli::config::{CommonArgs, RunConfig};
use henon_cli::output::{emit, json_doc, write_atomic};
use henon_cli::{commands, verify, CliError};

#[derive(Parser)]
#[command(name = "henon", version, about = "Radial and near-critical solutions of the Henon problem on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radial Dirichlet solution on the unit ball.
    Solve(CommonArgs),
    /// Profile rescaled by the concentration scale.
    Rescale(CommonArgs),
    /// Lowest eigenvalues of the angular-mode operator.
    Spectrum(CommonArgs),
    /// Bifurcation value alpha_k^eps for one or more eps.
    Bifurcate(CommonArgs),
    /// Eigenvalues and Morse indices over an (alpha, eps) grid.
    Sweep(CommonArgs),
    /// Run the acceptance suite.
    Verify(CommonArgs),
}

const DEFAULT_REPORT: &str = "henon-verify.json";

fn setup(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let cfg = RunConfig::resolve(args)?;
    cfg.validate()?;
    if let Some(j) = cfg.jobs {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    Ok(cfg)
}

fn partial(cfg: &RunConfig, (text, any_ok): (String, bool)) -> Result<(), CliError> {
    emit(cfg.out.as_deref(), &text)?;
    if any_ok {
        Ok(())
    } else {
        Err(henon_core::Error::Numeric {
            reason: "every row failed".into(),
            lo: f64::NAN,
            hi: f64::NAN,
        }
        .into())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => {
            let cfg = setup(&a)?;
            emit(cfg.out.as_deref(), &commands::cmd_solve(&cfg)?)
        }
        Command::Rescale(a) => {
            let cfg = setup(&a)?;
            emit(cfg.out.as_deref(), &commands::cmd_rescale(&cfg)?)
        }
        Command::Spectrum(a) => {
            let cfg = setup(&a)?;
            emit(cfg.out.as_deref(), &commands::cmd_spectrum(&cfg)?)
        }
        Command::Bifurcate(a) => {
            let cfg = setup(&a)?;
            let res = commands::cmd_bifurcate(&cfg)?;
            partial(&cfg, res)
        }
        Command::Sweep(a) => {
            let cfg = setup(&a)?;
            let res = commands::cmd_sweep(&cfg)?;
            partial(&cfg, res)
        }
        Command::Verify(a) => {
            let cfg = setup(&a)?;
            let ids = cfg.only.clone().unwrap_or_else(|| verify::ALL.to_vec());
            if let Some(bad) = ids.iter().find(|i| !verify::ALL.contains(i)) {
                return Err(CliError::invalid(format!("--only: no criterion {bad}")));
            }
            let report = verify::run(&commands::engine(&cfg), &ids);
            print!("{}", verify::table(&report));
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT));
            write_atomic(&out, json_doc(&report)?.as_bytes())?;
            let failed = report.criteria.iter().filter(|c| !c.passed).count();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::VerifyFailed(failed))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("henon: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
