//! Batch front end: reads one TOML config, runs a pipeline, writes tables.
//!
//! Exit codes: 0 success, 2 config error, 3 compute error. Failures print a
//! machine-readable JSON line on stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use commands::Ctx;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "levelcross", version, about = "Level spectroscopy of the J1-J2 ring")]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "run.toml")]
    config: PathBuf,
    /// Output directory; overrides out_dir from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run seed; overrides the config and feeds every sampler.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the logical core count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Progress logging on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact low-lying spectrum per ratio, labeled by spin and momentum.
    Ed,
    /// Optimize each configured sector once at model.j2.
    Vqe,
    /// Sweep the ratio grid and locate the singlet-triplet crossing.
    Scan,
    /// Noisy optimization plus zero-noise extrapolation per sector.
    Zne,
    /// Monte-Carlo average LCU success probability across system sizes.
    Psbar,
    /// Noiseless energy error versus layer count.
    Layers,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": message, "kind": kind }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail("config", &format!("cannot read {}: {e}", cli.config.display()), EXIT_CONFIG),
    };
    let mut config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail("config", &e.to_string(), EXIT_CONFIG),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            return fail("config", &format!("worker pool: {e}"), EXIT_CONFIG);
        }
    }

    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let config_hash: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

    let ctx = Ctx {
        seed: config.seed,
        out_dir: commands::out_dir(&config, cli.out.as_deref()),
        config,
        config_hash,
        verbose: cli.verbose,
    };

    let run = match cli.command {
        Command::Ed => commands::cmd_ed(&ctx),
        Command::Vqe => commands::cmd_vqe(&ctx),
        Command::Scan => commands::cmd_scan(&ctx),
        Command::Zne => commands::cmd_zne(&ctx),
        Command::Psbar => commands::cmd_psbar(&ctx),
        Command::Layers => commands::cmd_layers(&ctx),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail("compute", &e.to_string(), EXIT_COMPUTE),
    }
}
