use std::path::{Path, PathBuf};

use ddie_core::evaluate::EvaluatorConfig;
use ddie_core::pipeline::{EventSplit, PrepareConfig};
use ddie_core::search::{CoarseGrid, SearchConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    #[default]
    Q,
    Grid,
    Random,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Q => "q",
            Algo::Grid => "grid",
            Algo::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub drugs: PathBuf,
    pub pairs: PathBuf,
    pub events: PathBuf,
    /// Directory holding the validated bundle and prepared artifacts.
    pub bundle: PathBuf,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            drugs: "data/synthetic/drugs.csv".into(),
            pairs: "data/synthetic/pairs.csv".into(),
            events: "data/synthetic/events.json".into(),
            bundle: "work/bundle".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub split: EventSplit,
    pub seeds: Vec<u64>,
    pub algo: Algo,
    pub template: String,
    /// Optional JSON file of extra templates.
    pub templates_file: Option<PathBuf>,
    pub random_budget: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            split: EventSplit::All,
            seeds: vec![42, 0, 1],
            algo: Algo::Q,
            template: "imperative-v1".into(),
            templates_file: None,
            random_budget: 100,
            out: "work/run".into(),
        }
    }
}

/// The whole configuration file. Every section and key is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub run: RunSection,
    pub prepare: PrepareConfig,
    pub search: SearchConfig,
    pub grid: CoarseGrid,
    pub evaluator: EvaluatorConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.run.seeds.is_empty() {
            return Err(CliError::Input("at least one seed is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(s) = self.run.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(CliError::Input(format!("seed {s} is listed twice")));
        }
        self.search.validate().map_err(|e| CliError::Input(e.to_string()))?;
        self.evaluator.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::Runtime(anyhow::anyhow!("serialising config: {e}")))
    }
}

/// A comma-separated seed list given as one flag value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

/// Parses `42,0,1`.
pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad seed {t:?}")))
        .collect::<Result<_, _>>()
        .map(Seeds)
}
