mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddie_core::pipeline::EventSplit;
use ddie_core::synthetic::SyntheticConfig;

use crate::config::{parse_seeds, Algo, RunConfig, Seeds};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "ddie", version, about = "Clustering-guided prompt strategy search for drug interaction events")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw drug, pair and event files into a bundle.
    Ingest {
        #[arg(long)]
        drugs: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Compute features, the embedding and per-seed splits.
    Prepare {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        split: Option<EventSplit>,
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<Seeds>,
    },
    /// Search the strategy space for every seed.
    Search {
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        #[arg(long)]
        split: Option<EventSplit>,
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<Seeds>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue Q-learning runs from their last checkpoint.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        template: Option<String>,
    },
    /// Score a single strategy.
    Evaluate {
        /// JSON or `method/kN/modality/bB/lrX`.
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        split: Option<EventSplit>,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Aggregate a finished run directory.
    Report { dir: PathBuf },
    /// Write a synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        drugs: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { drugs, pairs, events, bundle } => {
            set(&mut cfg.data.drugs, drugs);
            set(&mut cfg.data.pairs, pairs);
            set(&mut cfg.data.events, events);
            set(&mut cfg.data.bundle, bundle);
            let m = commands::ingest(&cfg)?;
            println!(
                "ingested {} drugs ({} without SELFIES), {} pairs, {} events into {}",
                m.drugs,
                m.unsupported_selfies,
                m.pairs,
                m.events,
                cfg.data.bundle.display()
            );
            println!("bundle hash {}", m.bundle_hash);
        }
        Command::Prepare { bundle, split, seeds } => {
            set(&mut cfg.data.bundle, bundle);
            set(&mut cfg.run.split, split);
            set(&mut cfg.run.seeds, seeds.map(|s| s.0));
            cfg.validate()?;
            let s = commands::prepare_bundle(&cfg)?;
            println!(
                "prepared {} drugs from {:?} features; final KL {:.4}",
                s.prepared.embedding.rows(),
                s.prepared.source,
                s.prepared.final_kl
            );
            for p in &s.splits {
                println!("wrote {}", p.display());
            }
        }
        Command::Search { algo, split, seeds, out, resume, bundle, template } => {
            set(&mut cfg.run.algo, algo);
            set(&mut cfg.run.split, split);
            set(&mut cfg.run.seeds, seeds.map(|s| s.0));
            set(&mut cfg.run.out, out);
            set(&mut cfg.data.bundle, bundle);
            set(&mut cfg.run.template, template);
            cfg.validate()?;
            let r = commands::search(&cfg, resume)?;
            println!("{} search on the {} split", cfg.run.algo.name(), cfg.run.split);
            for b in &r.seeds {
                println!(
                    "seed {}: best {} accuracy {:.4} F1 {:.4} ({} evaluations, {} steps)",
                    b.seed, b.strategy, b.metrics.accuracy, b.metrics.f1, b.evaluations, b.steps
                );
            }
            println!(
                "mean accuracy {:.4} ± {:.4}, F1 {:.4} ± {:.4}; results in {}",
                r.mean.accuracy,
                r.std.accuracy,
                r.mean.f1,
                r.std.f1,
                cfg.run.out.display()
            );
        }
        Command::Evaluate { strategy, seed, split, bundle } => {
            if let Some(seed) = seed {
                cfg.run.seeds = vec![seed];
            }
            set(&mut cfg.run.split, split);
            set(&mut cfg.data.bundle, bundle);
            cfg.validate()?;
            let s = commands::parse_strategy(&strategy)?;
            let (seed, m, hash) = commands::evaluate_one(&cfg, &s)?;
            println!("strategy {s} seed {seed} data {hash}");
            println!(
                "accuracy {:.4} precision {:.4} recall {:.4} F1 {:.4} validation loss {:.4}",
                m.accuracy, m.precision, m.recall, m.f1, m.validation_loss
            );
        }
        Command::Report { dir } => {
            let r = report::report(&dir)?;
            println!(
                "{} seeds, {} steps; mean F1 {:.4} ± {:.4}",
                r.seeds.len(),
                r.total_steps,
                r.mean.f1,
                r.std.f1
            );
        }
        Command::Synth { out, drugs, pairs, seed } => {
            let mut sc = SyntheticConfig::default();
            set(&mut sc.drugs, drugs);
            set(&mut sc.pairs, pairs);
            set(&mut sc.seed, seed);
            let (d, p) = commands::synth(&sc, &out)?;
            println!("wrote {d} drugs and {p} pairs to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
