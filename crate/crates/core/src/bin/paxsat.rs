//! Command-line front end for the staged pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paxsat::pipeline::{run_pipeline, PipelineConfig, Stage, Variant};
use paxsat::{Error, Result};

#[derive(Parser)]
#[command(name = "paxsat", version, about = "Passenger-satisfaction delay-effect pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file (a run manifest is also accepted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Model variant preset, e.g. col5_full.
    #[arg(long, global = true, value_name = "NAME")]
    variant: Option<String>,
    /// Data-generation seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Synthesize survey, flight, weather and terminal-hour tables.
    Generate,
    /// Load, join and filter the input tables.
    Ingest,
    /// Build features, the design matrix and descriptive tables.
    Features,
    /// Oversample the minority group.
    Smote,
    /// Select controls and fit the ordered probit.
    Fit,
    /// Fit the delay stage and split predicted delay by origin.
    Attribute,
    /// Simulate rating shifts or duration curves from the fit.
    Simulate,
    /// Oversample at several shares and refit repeatedly.
    SmoteStudy,
    /// Run every stage and write the coefficient table.
    Report,
}

impl Command {
    fn stage(self) -> Stage {
        match self {
            Command::Generate => Stage::Generate,
            Command::Ingest => Stage::Ingest,
            Command::Features => Stage::Features,
            Command::Smote => Stage::Smote,
            Command::Fit => Stage::Fit,
            Command::Attribute => Stage::Attribute,
            Command::Simulate => Stage::Simulate,
            Command::SmoteStudy => Stage::SmoteStudy,
            Command::Report => Stage::Report,
        }
    }
}

fn resolve(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &common.variant {
        cfg.variant = v.parse::<Variant>()?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = Some(o.clone());
    }
    if let Some(t) = common.threads {
        cfg.threads = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(&cli.common)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let outcome = run_pipeline(&cfg, cli.command.stage())?;
    for a in &outcome.manifest.artifact {
        println!("{:<12} {}", a.stage, outcome.out_dir.join(&a.path).display());
    }
    println!("manifest     {}", outcome.out_dir.join(paxsat::pipeline::MANIFEST_FILE).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
