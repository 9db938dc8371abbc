use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;
use trained_schemes::evaluator::emit_report;
use trained_schemes::experiments::{default_settings, list_experiments, run_with_settings, RunError};

#[derive(Parser)]
#[command(name = "trained-schemes", version, about = "Train and evaluate parameter-bearing coarse-grid schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the available experiments.
    List,
    /// Run one experiment and write its tables and manifest.
    Run {
        id: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override a setting, e.g. `--set max_iters=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Flat JSON object of settings; `--set` wins over it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILED: u8 = 3;
const EXIT_IO: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in list_experiments() {
                println!("{:<8}{}", e.id, e.reproduces);
            }
            ExitCode::SUCCESS
        }
        Command::Run { id, seed, out, set, config } => match run(&id, seed, &out, &set, config.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err((code, msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(code)
            }
        },
    }
}

fn run(id: &str, seed: u64, out: &std::path::Path, set: &[String], config: Option<&std::path::Path>) -> Result<(), (u8, String)> {
    let config_err = |m: String| (EXIT_CONFIG, m);
    let mut settings = default_settings(id).ok_or_else(|| {
        let ids: Vec<&str> = list_experiments().iter().map(|e| e.id).collect();
        config_err(format!("unknown experiment '{id}'; known: {}", ids.join(", ")))
    })?;
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let Value::Object(map) = value else {
            return Err(config_err(format!("{}: expected a JSON object", path.display())));
        };
        for (k, v) in &map {
            settings.set_value(k, v).map_err(|e| config_err(e.to_string()))?;
        }
    }
    for item in set {
        let (k, v) = item.split_once('=').ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got '{item}'")))?;
        settings.set(k.trim(), v).map_err(|e| config_err(e.to_string()))?;
    }
    let report = run_with_settings(id, seed, &settings).map_err(|e| match e {
        RunError::UnknownExperiment(_) | RunError::Config(_) => config_err(e.to_string()),
        RunError::Failed(_) => (EXIT_FAILED, e.to_string()),
    })?;
    let files = emit_report(&report, out).map_err(|e| (EXIT_IO, e.to_string()))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
