//! Experiment runner for the `soupdil` library: configuration handling,
//! data ingestion, the learning and reconstruction protocols, and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod phantom;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "soupdil", version, about = "Sum-of-outer-products dictionary learning and CS-MRI reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a dictionary from image patches.
    Learn(Common),
    /// Reconstruct an image from undersampled k-space.
    Recon(Common),
    /// Undersample an image (or the built-in phantom) in k-space.
    Simulate(Common),
    /// Sparse-code patches with a fixed dictionary.
    Code(Common),
    /// Time learning iterations as N and J double.
    Bench(Common),
    /// PSNR, NSRE and sparsity of existing outputs.
    Metrics(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// key=value file; keys carry a section prefix such as `learn.`
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting; a bare KEY is taken from this command's section.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Learn(c) => ("learn", c),
            Command::Recon(c) => ("recon", c),
            Command::Simulate(c) => ("simulate", c),
            Command::Code(c) => ("code", c),
            Command::Bench(c) => ("bench", c),
            Command::Metrics(c) => ("metrics", c),
        }
    }
}

fn build_config(section: &str, common: &Common) -> CliResult<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::new(),
    };
    for pair in &common.set {
        cfg.set_pair(section, pair)?;
    }
    if let Some(out) = &common.out {
        cfg.set(format!("{section}.out"), out.display().to_string());
    }
    if let Some(seed) = common.seed {
        cfg.set(format!("{section}.seed"), seed.to_string());
    }
    Ok(cfg)
}

/// Caps the rayon pool at `SOUP_THREADS` (default 1).
pub fn init_threads() -> CliResult<()> {
    let threads = match std::env::var("SOUP_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::usage(format!("SOUP_THREADS must be a positive integer, got '{v}'")))?,
        Err(_) => 1,
    };
    // A pool may already exist when called twice in one process; that is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn dispatch(section: &str, cfg: &Config) -> CliResult<()> {
    let summary: Vec<String> = match section {
        "learn" => {
            let o = commands::learn::run(cfg)?;
            o.manifest.notes.clone()
        }
        "recon" => commands::recon::run(cfg)?.1.notes,
        "simulate" => commands::simulate::run(cfg)?.1.notes,
        "code" => commands::code::run(cfg)?.manifest.notes,
        "bench" => commands::bench::run(cfg)?.1.notes,
        "metrics" => commands::metrics::run(cfg)?,
        _ => unreachable!("clap only yields known subcommands"),
    };
    for line in summary {
        println!("{line}");
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code: 0 on success, 1 on usage errors, 2 on runtime errors.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (section, common) = cli.command.parts();
    let result = init_threads()
        .and_then(|_| build_config(section, common))
        .and_then(|cfg| dispatch(section, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("soupdil {section}: {e}");
            e.exit_code()
        }
    }
}
