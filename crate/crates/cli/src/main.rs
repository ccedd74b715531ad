use std::path::PathBuf;
use std::process::ExitCode;

use afstab_cli::commands::{EXIT_CONFIG, EXIT_OK};
use afstab_cli::{run, Command, ConfigError};
use clap::Parser;

/// Harmonic-coordinate stability experiments on asymptotically flat 3-metrics.
#[derive(Parser, Debug)]
#[command(name = "afstab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `[sampling] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("afstab: cannot size thread pool: {e}");
        }
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(source) => return fail(&ConfigError::Io { path: cli.config.clone(), source }, EXIT_CONFIG),
    };
    let mut cfg = match afstab_cli::config::from_toml_str(&text) {
        Ok(c) => c,
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    if let Some(s) = cli.seed {
        cfg.sampling.seed = Some(s);
    }
    // relative output dirs in the config resolve against the config file
    let out = cli.out.unwrap_or_else(|| {
        let d = &cfg.output.dir;
        if d.is_absolute() {
            d.clone()
        } else {
            cli.config.parent().unwrap_or(std::path::Path::new(".")).join(d)
        }
    });
    match run(cli.command, &cfg, &out) {
        Ok(m) => {
            for s in m.stages.iter().filter(|s| !s.ok) {
                eprintln!("afstab: stage {} failed: {}", s.name, s.message);
            }
            eprintln!("afstab {}: exit {} ({} artifacts in {})", cli.command.name(), m.exit_code, m.artifacts.len(), out.display());
            ExitCode::from(m.exit_code as u8)
        }
        Err(e) => fail(&e, e.exit_code()),
    }
}

fn fail(e: &dyn std::fmt::Display, code: i32) -> ExitCode {
    eprintln!("afstab: {e}");
    debug_assert_ne!(code, EXIT_OK);
    ExitCode::from(code as u8)
}

