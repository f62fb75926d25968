use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lightstore_cli::config::{parse_config, Scenario};
use lightstore_cli::run::{run, RunOptions};
use lightstore_cli::CliError;

#[derive(Parser)]
#[command(name = "lightstore", version, about = "Spectra, pulse scattering, diffuse transport and memory benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Susceptibility spectra and the control-induced feature.
    Spectrum(Common),
    /// Single-scattering pulse response from the cloud centre.
    Scatter(Common),
    /// Monte-Carlo multiple scattering.
    Diffuse {
        #[command(flatten)]
        common: Common,
        /// Number of sampled paths.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Quantum-memory channel benchmarks.
    Memory {
        #[command(flatten)]
        common: Common,
        /// Also write the fidelity sweep over the signal weight.
        #[arg(long)]
        fidelity_sweep: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a configuration key, e.g. `--set cloud.b0=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (scenario, common, mut extra, opts) = match cli.command {
        Command::Spectrum(c) => (Scenario::Spectrum, c, Vec::new(), RunOptions::default()),
        Command::Scatter(c) => (Scenario::Scatter, c, Vec::new(), RunOptions::default()),
        Command::Diffuse { common, paths } => {
            let extra = paths.map(|p| vec![format!("mc.paths={p}")]).unwrap_or_default();
            (Scenario::Diffuse, common, extra, RunOptions::default())
        }
        Command::Memory { common, fidelity_sweep } => {
            (Scenario::Memory, common, Vec::new(), RunOptions { fidelity_sweep })
        }
    };
    let mut overrides = common.overrides;
    if let Some(seed) = common.seed {
        extra.push(format!("seed={seed}"));
    }
    if let Some(out) = common.out {
        extra.push(format!("output={}", toml_string(&out)));
    }
    overrides.append(&mut extra);
    let mut cfg = parse_config(common.config.as_deref(), &overrides)?;
    cfg.scenario = Some(scenario);
    run(&cfg, opts)
}

fn toml_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lightstore: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
