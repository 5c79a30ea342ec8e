use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use evonf::datasets::{gen_mackey_glass, MackeyGlassParams};
use evonf::experiment::{emit_report, load_report, render_table, run_experiment};
use evonf::{ExperimentConfig, LearningMode};

#[derive(Parser)]
#[command(name = "evonf", version, about = "Evolutionary neuro-fuzzy time-series experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated master seeds, overriding the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// type1, type2 or type3, overriding the config.
        #[arg(long)]
        mode: Option<LearningMode>,
        /// Measure fitness on a validation tail of the training split.
        #[arg(long)]
        holdout: bool,
        /// Override the number of generations.
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a Mackey-Glass series as a one-column CSV (`x`).
    GenMackey {
        #[arg(long, default_value_t = 17.0)]
        tau: f64,
        #[arg(long, default_value_t = 1200)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the table of a finished run directory.
    Report { dir: PathBuf },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seeds,
            mode,
            holdout,
            generations,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(seeds) = seeds {
                cfg.seeds = seeds;
            }
            if let Some(mode) = mode {
                cfg.mode = mode;
            }
            if let Some(g) = generations {
                cfg.ea.generations = g;
            }
            cfg.holdout |= holdout;
            let Some(dir) = out.or_else(|| cfg.output_dir.clone()) else {
                bail!("no output directory: pass --out or set output_dir in the config");
            };
            let report = run_experiment(&cfg)?;
            emit_report(&report, &dir)?;
            print!("{}", render_table(&report));
            eprintln!("results written to {}", dir.display());
        }
        Command::GenMackey { tau, n, out } => {
            let series = gen_mackey_glass(&MackeyGlassParams {
                tau,
                n,
                ..MackeyGlassParams::default()
            })?;
            let mut body = String::from("x\n");
            for v in series {
                body.push_str(&format!("{v}\n"));
            }
            fs::write(&out, body).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Report { dir } => print!("{}", render_table(&load_report(&dir)?)),
    }
    Ok(())
}
