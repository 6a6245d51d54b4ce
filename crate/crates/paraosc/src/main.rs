//! Experiment driver for the driven-oscillator simulations.
//!
//! Each experiment reads a flat TOML file, runs once at the configured
//! truncation and once enlarged, and writes CSV tables plus a JSON manifest.

mod config;
mod experiments;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, COMMON_KEYS};

#[derive(Parser)]
#[command(name = "paraosc", version, about = "Quasienergy states of a parametrically driven oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set delta=1.8`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List experiments and their keys.
    List,
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn list() {
    println!("common keys:");
    for k in COMMON_KEYS {
        print_key(k);
    }
    for e in experiments::ALL {
        println!("\n{}: {}", e.name, e.summary);
        for k in e.keys {
            print_key(k);
        }
    }
}

fn print_key(k: &config::Key) {
    let default = match k.default {
        Some(d) => format!("default {d}"),
        None => "required".to_owned(),
    };
    let help = if k.help.is_empty() { String::new() } else { format!(" {}", k.help) };
    println!("  {:<16} {:<10} {:<22}{help}", k.name, k.kind.to_string(), default);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            list();
            Ok(())
        }
        Command::Validate { config, set } => ExperimentConfig::load(&config, &set).and_then(|c| {
            c.experiment.plan(&c)?;
            println!("{}: ok ({})", config.display(), c.experiment.name);
            Ok(())
        }),
        Command::Run { config, set } => ExperimentConfig::load(&config, &set).and_then(|c| {
            let s = run::run_experiment(&c)?;
            for f in &s.files {
                println!("{}", f.display());
            }
            println!("{}", s.manifest.display());
            println!(
                "enlarged run agrees to {:.1e} (relative)",
                s.convergence.relative_diff
            );
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
