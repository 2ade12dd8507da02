use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use horoflow_cli::commands::{cmd_assumption, cmd_mourre, cmd_report, cmd_spectrum, cmd_verify};
use horoflow_cli::config::ExperimentConfig;
use horoflow_cli::manifest::RunManifest;
use horoflow_cli::suites::checks_table;

#[derive(Parser)]
#[command(
    name = "horoflow",
    version,
    about = "Time changes of horocycle flows: invariant checks and spectral diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suites of the geometry, flow and calculus layers.
    Verify,
    /// Check positivity of f and g.
    Assumption,
    /// Estimate correlations, atom scan and spectral density.
    Spectrum,
    /// Check the strict Mourre inequality (planar backend).
    Mourre,
    /// Summarize the manifests in the output directory.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("--config is required for this command")?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn summarize(m: &RunManifest) -> bool {
    print!("{}", checks_table(&m.checks));
    let failing = m.failing();
    if failing.is_empty() {
        println!("{}: all {} checks pass", m.command, m.checks.len());
    } else {
        let names: Vec<_> = failing.iter().map(|c| format!("{}/{}", c.suite, c.name)).collect();
        eprintln!("{}: failing: {}", m.command, names.join(", "));
    }
    failing.is_empty()
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    if let Command::Report = cli.command {
        let dir = match (&cli.out, &cli.config) {
            (Some(d), _) => d.clone(),
            (None, Some(_)) => load(cli)?.out_dir(None)?,
            (None, None) => anyhow::bail!("report needs --out or --config"),
        };
        let (text, ok) = cmd_report(&dir)?;
        print!("{text}");
        return Ok(ok);
    }
    let cfg = load(cli)?;
    let out = cfg.out_dir(cli.out.as_deref())?;
    let ok = match cli.command {
        Command::Verify => summarize(&cmd_verify(&cfg, &out)?),
        Command::Assumption => {
            let (m, rep) = cmd_assumption(&cfg, &out)?;
            print!("{}", rep.to_text());
            summarize(&m)
        }
        Command::Spectrum => {
            let run = cmd_spectrum(&cfg, &out)?;
            let s = &run.scan;
            println!(
                "atom scan: {:.4e} {:.4e} {:.4e} (noise floors {:.4e} {:.4e} {:.4e})",
                s.values[0], s.values[1], s.values[2], s.noise_floors[0], s.noise_floors[1], s.noise_floors[2]
            );
            summarize(&run.manifest)
        }
        Command::Mourre => summarize(&cmd_mourre(&cfg, &out)?.0),
        Command::Report => unreachable!(),
    };
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
