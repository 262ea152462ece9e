use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use ddie_core::clustering::{quality_report, QualityReport, DEFAULT_MIN_CLUSTER_SIZE};
use ddie_core::dataset::{
    ingest_drugs, ingest_pairs, read_catalog, write_catalog, write_drugs, write_pairs, Dataset,
};
use ddie_core::evaluate::{EvalCache, Metrics};
use ddie_core::pipeline::{prepare, select_pairs, EventSplit, Prepared, SearchContext};
use ddie_core::prompt::{builtin_templates, load_templates, PromptTemplate};
use ddie_core::search::{
    grid_search, q_search_resume, random_search, write_run_log, Checkpoint, SearchError, SearchOutcome, Strategy,
};
use ddie_core::synthetic::{generate, SyntheticConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Algo, RunConfig};
use crate::error::{input, runtime, CliError};
use crate::report;

pub const MANIFEST: &str = "manifest.json";
pub const PREPARED: &str = "prepared.json";
pub const RUN_LOG: &str = "run_log.jsonl";
pub const TIMINGS: &str = "timings.jsonl";
pub const BEST: &str = "best.json";
pub const CHECKPOINT: &str = "checkpoint.json";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_vec_pretty(value).map_err(runtime("serialising JSON"))?;
    s.push(b'\n');
    Ok(s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_reader(open(path)?).map_err(input(path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub drugs: usize,
    pub pairs: usize,
    pub events: usize,
    pub unsupported_selfies: usize,
    pub files: BTreeMap<String, String>,
    /// SHA-256 over the per-file hashes.
    pub bundle_hash: String,
}

/// Validates the raw files and writes the canonical bundle.
pub fn ingest(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let d = &cfg.data;
    let drugs = ingest_drugs(open(&d.drugs)?).map_err(input(d.drugs.display()))?;
    let raw_pairs = ingest_pairs(open(&d.pairs)?).map_err(input(d.pairs.display()))?;
    let catalog = read_catalog(open(&d.events)?).map_err(input(d.events.display()))?;
    let ds = Dataset::assemble(drugs, &raw_pairs, catalog).map_err(input("dataset"))?;

    let mut files = BTreeMap::new();
    let mut buf = Vec::new();
    write_drugs(&ds.drugs, &mut buf).map_err(runtime("drugs"))?;
    files.insert("drugs.csv".to_string(), buf);
    let mut buf = Vec::new();
    write_pairs(&ds.drugs, &ds.pairs, &mut buf).map_err(runtime("pairs"))?;
    files.insert("pairs.csv".to_string(), buf);
    let mut buf = Vec::new();
    write_catalog(&ds.catalog, &mut buf).map_err(runtime("events"))?;
    buf.push(b'\n');
    files.insert("events.json".to_string(), buf);

    let mut hashes = BTreeMap::new();
    for (name, bytes) in &files {
        write_file(&d.bundle.join(name), bytes)?;
        hashes.insert(name.clone(), sha256_hex(bytes));
    }
    let joined: String = hashes.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    let manifest = Manifest {
        drugs: ds.drugs.len(),
        pairs: ds.pairs.len(),
        events: ds.catalog.len(),
        unsupported_selfies: ds.drugs.iter().filter(|d| d.selfies.is_none()).count(),
        bundle_hash: sha256_hex(joined.as_bytes()),
        files: hashes,
    };
    write_file(&d.bundle.join(MANIFEST), &to_json(&manifest)?)?;
    Ok(manifest)
}

pub fn load_bundle(bundle: &Path) -> Result<Dataset, CliError> {
    let drugs = ingest_drugs(open(&bundle.join("drugs.csv"))?).map_err(input("bundle drugs.csv"))?;
    let pairs = ingest_pairs(open(&bundle.join("pairs.csv"))?).map_err(input("bundle pairs.csv"))?;
    let catalog = read_catalog(open(&bundle.join("events.json"))?).map_err(input("bundle events.json"))?;
    Dataset::assemble(drugs, &pairs, catalog).map_err(input("bundle"))
}

fn split_path(bundle: &Path, split: EventSplit, seed: u64) -> PathBuf {
    bundle.join("splits").join(format!("{split}-seed{seed}.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepareSummary {
    pub prepared: Prepared,
    pub splits: Vec<PathBuf>,
}

/// Features, embedding and the configured splits, written into the bundle.
pub fn prepare_bundle(cfg: &RunConfig) -> Result<PrepareSummary, CliError> {
    let bundle = &cfg.data.bundle;
    let ds = load_bundle(bundle)?;
    let prepared = prepare(&ds.drugs, &cfg.prepare).map_err(input("prepare"))?;
    write_file(&bundle.join(PREPARED), &to_json(&prepared)?)?;
    let pairs = select_pairs(&ds.pairs, cfg.run.split).map_err(input("split"))?;
    let mut splits = Vec::new();
    for &seed in &cfg.run.seeds {
        let s = ddie_core::dataset::stratified_split(&pairs, ddie_core::dataset::SPLIT_RATIOS, seed)
            .map_err(input("split"))?;
        let mut buf = Vec::new();
        s.to_writer(&mut buf).map_err(runtime("split"))?;
        buf.push(b'\n');
        let path = split_path(bundle, cfg.run.split, seed);
        write_file(&path, &buf)?;
        splits.push(path);
    }
    Ok(PrepareSummary { prepared, splits })
}

fn load_prepared(bundle: &Path) -> Result<Prepared, CliError> {
    let path = bundle.join(PREPARED);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{} is missing; run `ddie prepare` first",
            path.display()
        )));
    }
    read_json(&path)
}

pub fn select_template(cfg: &RunConfig) -> Result<PromptTemplate, CliError> {
    let mut all = builtin_templates();
    if let Some(path) = &cfg.run.templates_file {
        all.extend(load_templates(open(path)?).map_err(input(path.display()))?);
    }
    let ids: Vec<String> = all.iter().map(|t| t.id().to_string()).collect();
    all.into_iter()
        .find(|t| t.id() == cfg.run.template)
        .ok_or_else(|| CliError::Input(format!("unknown template {:?}; known: {}", cfg.run.template, ids.join(", "))))
}

/// Dataset restricted to the configured split, plus the prepared embedding.
fn search_inputs(cfg: &RunConfig) -> Result<(Dataset, Prepared), CliError> {
    let mut ds = load_bundle(&cfg.data.bundle)?;
    let prepared = load_prepared(&cfg.data.bundle)?;
    ds.pairs = select_pairs(&ds.pairs, cfg.run.split).map_err(input("split"))?;
    Ok((ds, prepared))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub seed: u64,
    pub algo: Algo,
    pub split: EventSplit,
    pub strategy: Strategy,
    pub metrics: Metrics,
    pub quality: QualityReport,
    pub evaluations: usize,
    pub steps: usize,
    pub data_hash: String,
}

fn search_error(e: SearchError) -> CliError {
    match e {
        SearchError::InvalidConfig(m) => CliError::Input(m),
        other => CliError::Runtime(anyhow::anyhow!(other)),
    }
}

fn run_seed(
    cfg: &RunConfig,
    ctx: &SearchContext<'_>,
    seed: u64,
    seed_dir: &Path,
    resume: bool,
) -> Result<SearchOutcome, CliError> {
    match cfg.run.algo {
        Algo::Grid => grid_search(&cfg.grid, ctx).map_err(search_error),
        Algo::Random => random_search(cfg.run.random_budget, seed, ctx).map_err(search_error),
        Algo::Q => {
            let search = ddie_core::search::SearchConfig {
                seed,
                ..cfg.search.clone()
            };
            let ck_path = seed_dir.join(CHECKPOINT);
            let start = if resume && ck_path.exists() {
                let text = fs::read_to_string(&ck_path).with_context(|| format!("reading {}", ck_path.display()))?;
                Some(Checkpoint::from_json(&text).map_err(input(ck_path.display()))?)
            } else {
                None
            };
            let mut save = |c: &Checkpoint| -> Result<(), SearchError> {
                let text = c.to_json()?;
                let tmp = ck_path.with_extension("json.tmp");
                fs::write(&tmp, text.as_bytes())
                    .and_then(|_| fs::rename(&tmp, &ck_path))
                    .map_err(|e| SearchError::Checkpoint(e.to_string()))
            };
            q_search_resume(&search, ctx, start, &mut save).map_err(search_error)
        }
    }
}

/// Runs the configured searcher for every seed, then writes the report.
pub fn search(cfg: &RunConfig, resume: bool) -> Result<report::Report, CliError> {
    let (ds, prepared) = search_inputs(cfg)?;
    let template = select_template(cfg)?;
    let evaluator = cfg.evaluator.build().map_err(input("evaluator"))?;
    let out = &cfg.run.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    let cache = EvalCache::persistent(out.join("cache.jsonl")).map_err(runtime("cache"))?;
    let atc = ds.atc_level1();

    let mut hashes = BTreeMap::new();
    if let Ok(m) = read_json::<Manifest>(&cfg.data.bundle.join(MANIFEST)) {
        hashes.insert("bundle".to_string(), m.bundle_hash);
    }
    let prepared_bytes = fs::read(cfg.data.bundle.join(PREPARED)).context("reading prepared.json")?;
    hashes.insert("prepared".to_string(), sha256_hex(&prepared_bytes));

    for &seed in &cfg.run.seeds {
        let ctx = SearchContext::new(
            ds.clone(),
            prepared.embedding.clone(),
            template.clone(),
            evaluator.as_ref(),
            &cache,
            seed,
        )
        .map_err(input("search context"))?;
        hashes.insert(format!("data-seed{seed}"), ctx.data_hash().to_string());
        let seed_dir = out.join(format!("seed-{seed}"));
        fs::create_dir_all(&seed_dir)?;
        let outcome = run_seed(cfg, &ctx, seed, &seed_dir, resume)?;

        let mut log = Vec::new();
        write_run_log(&mut log, &outcome.log).map_err(runtime("run log"))?;
        write_file(&seed_dir.join(RUN_LOG), &log)?;
        let mut timings = Vec::new();
        for (e, t) in outcome.log.iter().zip(&outcome.wall_times) {
            writeln!(timings, "{}", serde_json::json!({ "step": e.step, "seconds": t }))?;
        }
        write_file(&seed_dir.join(TIMINGS), &timings)?;

        let labels = ctx
            .clustering(outcome.best.method, outcome.best.n_clusters)
            .map_err(runtime("clustering"))?;
        let quality = quality_report(
            prepared.embedding.points(),
            labels.labels(),
            Some(&atc),
            DEFAULT_MIN_CLUSTER_SIZE,
        )
        .map_err(runtime("quality"))?;
        let best = BestRecord {
            seed,
            algo: cfg.run.algo,
            split: cfg.run.split,
            strategy: outcome.best,
            metrics: outcome.best_metrics,
            quality,
            evaluations: outcome.evaluations,
            steps: outcome.log.len(),
            data_hash: ctx.data_hash().to_string(),
        };
        write_file(&seed_dir.join(BEST), &to_json(&best)?)?;
    }
    write_file(&out.join("hashes.json"), &to_json(&hashes)?)?;
    report::report(out)
}

/// Scores one strategy for the first configured seed.
pub fn evaluate_one(cfg: &RunConfig, strategy: &Strategy) -> Result<(u64, Metrics, String), CliError> {
    let (ds, prepared) = search_inputs(cfg)?;
    let template = select_template(cfg)?;
    let evaluator = cfg.evaluator.build().map_err(input("evaluator"))?;
    let cache = EvalCache::in_memory();
    let seed = cfg.run.seeds[0];
    let ctx = SearchContext::new(ds, prepared.embedding, template, evaluator.as_ref(), &cache, seed)
        .map_err(input("search context"))?;
    let m = ctx.evaluate_uncached(strategy).map_err(|e| match e {
        ddie_core::pipeline::PipelineError::Eval(e) => CliError::Runtime(anyhow::anyhow!(e)),
        other => CliError::Input(other.to_string()),
    })?;
    Ok((seed, m, ctx.data_hash().to_string()))
}

/// Accepts the JSON form or the compact `method/kN/modality/bB/lrX` form.
pub fn parse_strategy(text: &str) -> Result<Strategy, CliError> {
    let t = text.trim();
    if t.starts_with('{') {
        serde_json::from_str(t).map_err(input("strategy JSON"))
    } else {
        t.parse().map_err(input("strategy"))
    }
}

pub fn synth(config: &SyntheticConfig, out: &Path) -> Result<(usize, usize), CliError> {
    let c = generate(config);
    let mut buf = Vec::new();
    write_drugs(&c.drugs, &mut buf).map_err(runtime("drugs"))?;
    write_file(&out.join("drugs.csv"), &buf)?;
    let mut w = BufWriter::new(Vec::new());
    writeln!(w, "drug_a,drug_b,event")?;
    for (a, b, e) in &c.pairs {
        writeln!(w, "{a},{b},{e}")?;
    }
    write_file(&out.join("pairs.csv"), &w.into_inner().map_err(runtime("pairs"))?)?;
    let mut buf = Vec::new();
    write_catalog(&c.catalog, &mut buf).map_err(runtime("events"))?;
    buf.push(b'\n');
    write_file(&out.join("events.json"), &buf)?;
    Ok((c.drugs.len(), c.pairs.len()))
}
