use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{error, info};
use sqzlaser::error::{Error, Result};
use sqzlaser::scenario::{exit_code, resolve, run, ScenarioKind};

/// Run one of the dressed-laser experiments and write its data products.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Cli {
    /// dress_audit, rwa_validate, single_laser, squeezed_laser,
    /// two_qubit_full, fidelity_sweep, wigner_panels or mf_compare
    scenario: String,
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path override such as `params.c_tilde=4` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; falls back to `output.dir` in the configuration
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep points (defaults to all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Named parameter preset: paper-2013 or desk
    #[arg(long)]
    preset: Option<String>,
}

fn execute(cli: &Cli) -> Result<i32> {
    let scenario: ScenarioKind = cli.scenario.parse()?;
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(
                serde_json::from_str::<serde_json::Value>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let cfg = resolve(Some(scenario), cli.preset.as_deref(), file.as_ref(), &cli.set)?;
    let out = match (&cli.out, &cfg.output.dir) {
        (Some(p), _) => p.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => return Err(Error::Config("no output directory: pass --out".into())),
    };
    if cli.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let outcome = run(&cfg, &out, cli.threads)?;
    info!(
        "wrote {} table(s) to {} (config {})",
        outcome.tables.len(),
        out.display(),
        &outcome.hash[..12]
    );
    if outcome.failed_points > 0 {
        error!("{} sweep point(s) failed; see manifest.json", outcome.failed_points);
        return Ok(3);
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
