//! Command-line driver: `nematic <command> [--config PATH] [--out DIR]
//! [--seed N] [--threads N]`.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for solver or
//! I/O failures. Failures print a TOML error block on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nematic::commands::{self, Command, CommandContext};
use nematic::config::RunConfig;
use nematic::io::ErrorBlock;
use nematic::Error;

#[derive(Parser, Debug)]
#[command(name = "nematic", version, about = "Nematic liquid-crystal flow solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed, overriding `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Advance the configured initial state and record energies.
    Simulate,
    /// Manufactured-solution refinement study.
    Mms,
    /// Coarse-versus-fine relative-energy comparison.
    WeakStrong,
    /// Picard contraction ratios over slab lengths and data amplitudes.
    PicardStudy,
    /// Energy-law and unit-length summary of the configured run.
    EnergyReport,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Mms => Command::Mms,
            Cmd::WeakStrong => Command::WeakStrong,
            Cmd::PicardStudy => Command::PicardStudy,
            Cmd::EnergyReport => Command::EnergyReport,
        }
    }
}

fn fail(e: &Error, code: i32) -> ExitCode {
    let block = ErrorBlock {
        exit_code: code,
        ..ErrorBlock::from_error(e)
    };
    eprint!("{}", block.to_toml());
    ExitCode::from(code as u8)
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => commands::load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => return fail(&e, 2),
    };
    if cli.threads == 0 {
        return fail(&Error::InvalidArgument("--threads must be at least 1".into()), 2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        return fail(&Error::InvalidArgument(e.to_string()), 3);
    }
    let ctx = CommandContext {
        out_dir: cfg.output_dir.clone(),
        threads: cli.threads,
    };
    match commands::run(cli.command.into(), &cfg, &ctx) {
        Ok(artifacts) => {
            for a in artifacts {
                println!("{}", a.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            fail(&e, code)
        }
    }
}
