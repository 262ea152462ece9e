//! Aggregates a run directory: per-seed bests, mean and standard deviation,
//! per-step traces and the top three strategies of each seed.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ddie_core::evaluate::Metrics;
use ddie_core::search::{better, read_run_log, RunLogEntry, Strategy};
use serde::{Deserialize, Serialize};

use crate::commands::{BestRecord, BEST, RUN_LOG};
use crate::error::{input, CliError};

pub const TRACE_CSV: &str = "trace.csv";
pub const TOP3_CSV: &str = "top3.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopEntry {
    pub seed: u64,
    pub rank: usize,
    pub strategy: Strategy,
    pub f1: f64,
    pub accuracy: f64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seeds: Vec<BestRecord>,
    pub mean: Summary,
    /// Sample standard deviation (n − 1); zero for a single seed.
    pub std: Summary,
    pub top3: Vec<TopEntry>,
    pub total_steps: usize,
}

fn summary(ms: &[Metrics], f: impl Fn(&[f64]) -> f64) -> Summary {
    let col = |g: fn(&Metrics) -> f64| f(&ms.iter().map(g).collect::<Vec<_>>());
    Summary {
        accuracy: col(|m| m.accuracy),
        precision: col(|m| m.precision),
        recall: col(|m| m.recall),
        f1: col(|m| m.f1),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Best three distinct strategies of one log by F1, then accuracy, then
/// strategy order; each keeps its first step.
pub fn top3(log: &[RunLogEntry]) -> Vec<&RunLogEntry> {
    let mut firsts: Vec<&RunLogEntry> = Vec::new();
    for e in log {
        if !firsts.iter().any(|f| f.strategy == e.strategy) {
            firsts.push(e);
        }
    }
    let m = |e: &RunLogEntry| Metrics {
        accuracy: e.accuracy,
        f1: e.f1,
        ..Metrics::default()
    };
    firsts.sort_by(|a, b| {
        if better((&a.strategy, &m(a)), (&b.strategy, &m(b))) {
            std::cmp::Ordering::Less
        } else if better((&b.strategy, &m(b)), (&a.strategy, &m(a))) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    firsts.truncate(3);
    firsts
}

fn seed_dirs(dir: &Path) -> Result<Vec<(u64, PathBuf)>, CliError> {
    let rd = fs::read_dir(dir).map_err(|e| CliError::Input(format!("cannot read run directory {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(seed) = name.strip_prefix("seed-").and_then(|s| s.parse::<u64>().ok()) {
            if entry.path().is_dir() {
                out.push((seed, entry.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `trace.csv`, `top3.csv` and `report.json` into `dir`.
pub fn report(dir: &Path) -> Result<Report, CliError> {
    let seeds = seed_dirs(dir)?;
    if seeds.is_empty() {
        return Err(CliError::Input(format!("{} contains no seed-* run directories", dir.display())));
    }
    let mut trace = String::from("seed,step,episode,action,strategy,accuracy,f1,reward,best_f1,validation_loss,epsilon,top3\n");
    let mut top = String::from("seed,rank,strategy,f1,accuracy,step\n");
    let mut bests = Vec::new();
    let mut top_entries = Vec::new();
    let mut total_steps = 0;
    for (seed, path) in &seeds {
        let log_path = path.join(RUN_LOG);
        let file = fs::File::open(&log_path).map_err(input(log_path.display()))?;
        let log = read_run_log(BufReader::new(file)).map_err(input(log_path.display()))?;
        if log.is_empty() {
            eprintln!("warning: {} is empty", log_path.display());
        }
        total_steps += log.len();
        let best3 = top3(&log);
        for e in &log {
            let hl = best3.iter().any(|b| b.step == e.step);
            trace.push_str(&format!(
                "{seed},{},{},{},{},{},{},{},{},{},{},{}\n",
                e.step,
                e.episode,
                e.action,
                csv_field(&e.strategy.to_string()),
                e.accuracy,
                e.f1,
                e.reward,
                e.best_f1,
                e.validation_loss,
                e.epsilon,
                hl
            ));
        }
        for (rank, e) in best3.iter().enumerate() {
            top.push_str(&format!("{seed},{},{},{},{},{}\n", rank + 1, e.strategy, e.f1, e.accuracy, e.step));
            top_entries.push(TopEntry {
                seed: *seed,
                rank: rank + 1,
                strategy: e.strategy,
                f1: e.f1,
                accuracy: e.accuracy,
                step: e.step,
            });
        }
        let best_path = path.join(BEST);
        if best_path.exists() {
            let text = fs::read_to_string(&best_path).with_context(|| format!("reading {}", best_path.display()))?;
            bests.push(serde_json::from_str::<BestRecord>(&text).map_err(input(best_path.display()))?);
        }
    }
    let ms: Vec<Metrics> = bests.iter().map(|b| b.metrics).collect();
    let report = Report {
        mean: summary(&ms, mean),
        std: summary(&ms, sample_std),
        seeds: bests,
        top3: top_entries,
        total_steps,
    };
    fs::write(dir.join(TRACE_CSV), trace).context("writing trace.csv")?;
    fs::write(dir.join(TOP3_CSV), top).context("writing top3.csv")?;
    let mut json = serde_json::to_vec_pretty(&report).context("serialising report")?;
    json.push(b'\n');
    fs::write(dir.join(REPORT_JSON), json).context("writing report.json")?;
    Ok(report)
}
