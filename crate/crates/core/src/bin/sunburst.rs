use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sunburst::experiments::{cmd_fig1, cmd_fig2, cmd_fig3, cmd_fig4, cmd_sweep, cmd_validate, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sunburst", version, about = "Sunburst quantum Ising battery: exact dynamics vs closed forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; built-in defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV destination; a `.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace the transverse field `h` of the config.
    #[arg(long, global = true)]
    h_override: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Ergotropy and linear entropy, L + n = 12.
    Fig1,
    /// Stored energy and charging power, L + n = 12.
    Fig2,
    /// Maximum ergotropy and power against the coupling.
    Fig3,
    /// Ergotropy for three random charger states.
    Fig4,
    /// Time series of the configured model, over the config sweep if any.
    Sweep,
    /// Run the self-check suite.
    Validate,
}

fn run(cli: Cli) -> sunburst::Result<bool> {
    faer::set_global_parallelism(faer::Par::Seq);
    if let Command::Validate = cli.command {
        let report = cmd_validate();
        print!("{report}");
        return Ok(report.all_passed());
    }
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(h) = cli.h_override {
        config = config.with_h(h);
    }
    if let Some(out) = cli.out {
        config.output_path = out;
    }
    config.validate()?;
    let output = match cli.command {
        Command::Fig1 => cmd_fig1(&config)?,
        Command::Fig2 => cmd_fig2(&config)?,
        Command::Fig3 => cmd_fig3(&config)?,
        Command::Fig4 => cmd_fig4(&config)?,
        Command::Sweep => cmd_sweep(&config)?,
        Command::Validate => unreachable!(),
    };
    let meta = output.write(&config, &config.output_path)?;
    for m in &output.metrics {
        eprintln!("{} = {:.6e}", m.name, m.value);
    }
    eprintln!("wrote {} rows to {} ({})", output.rows.len(), config.output_path.display(), meta.display());
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
