//! `solvency` command-line tool: encode, screen, train, eval, predict,
//! synth and pipeline subcommands over the `solvency-core` library.

pub mod cli;
pub mod config;
pub mod error;
pub mod stages;

use std::ffi::OsString;

use clap::Parser;

use cli::{Cli, Command};
use config::{Effective, FileConfig};
use error::{CliError, EXIT_CONFIG, EXIT_OK};

fn resolve(cli: &Cli) -> Result<Effective, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    Effective::resolve(&cli.flags().or(&file))
}

fn dispatch(cli: &Cli, cfg: &Effective) -> Result<(), CliError> {
    let wrote = match cli.command {
        Command::Encode { .. } => stages::encode(cfg)?,
        Command::Screen { .. } => stages::screen(cfg)?,
        Command::Train { .. } => stages::train(cfg)?,
        Command::Eval { .. } => stages::eval(cfg)?,
        Command::Predict { .. } => stages::predict(cfg)?,
        Command::Synth { .. } => stages::synth(cfg)?,
        Command::Pipeline { .. } => {
            let manifest = stages::pipeline(cfg);
            let path = stages::write_manifest(cfg, &manifest)?;
            println!("pipeline: manifest at {}", path.display());
            return match manifest.exit_code {
                EXIT_OK => Ok(()),
                code => Err(CliError {
                    code,
                    message: "pipeline stopped early; see the manifest".into(),
                }),
            };
        }
    };
    for p in wrote {
        println!("  wrote {}", p.display());
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match resolve(&cli).and_then(|cfg| dispatch(&cli, &cfg)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
