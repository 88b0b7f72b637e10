use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use fluxcr_cli::config::{parse_config, validate_config, SCENARIOS};
use fluxcr_cli::run_scenario;

#[derive(Parser)]
#[command(name = "fluxcr", version, about = "Fluxonium cross-resonance CNOT simulation and calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario config and report every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario and write its outputs plus manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed; overrides seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the available scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for (name, desc) in SCENARIOS {
                println!("{name:<14} {desc}");
            }
            Ok(true)
        }
        Command::Validate { config } => {
            validate_config(&config)?;
            println!("{}: ok", config.display());
            Ok(true)
        }
        Command::Run { config, out, seed, jobs } => {
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
            }
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = parse_config(&text).map_err(anyhow::Error::new)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(&cfg.scenario));
            let pass = run_scenario(&cfg, &dir)?;
            let manifest = std::fs::read_to_string(dir.join("manifest.json"))?;
            let m: serde_json::Value = serde_json::from_str(&manifest)?;
            for c in m["checks"].as_array().into_iter().flatten() {
                println!(
                    "{} {} = {} ({})",
                    if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" },
                    c["name"].as_str().unwrap_or(""),
                    c["value"],
                    c["tolerance"].as_str().unwrap_or("")
                );
            }
            println!("outputs in {}", dir.display());
            Ok(pass)
        }
    }
}
