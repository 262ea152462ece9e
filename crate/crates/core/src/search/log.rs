use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{SearchError, Strategy};

pub const RUN_LOG_SCHEMA_VERSION: u32 = 1;

/// One search step. Contains no wall-clock data, so a replayed run writes
/// the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub schema_version: u32,
    pub step: u64,
    pub episode: u64,
    /// Action name, or `init`, `grid`, `random` for non-move steps.
    pub action: String,
    pub strategy: Strategy,
    pub accuracy: f64,
    pub f1: f64,
    pub reward: f64,
    /// Trackers after this step.
    pub best_accuracy: f64,
    pub best_f1: f64,
    pub validation_loss: f64,
    pub epsilon: f64,
    /// Metrics came from the in-run memo rather than a fresh evaluation.
    pub cached: bool,
}

pub fn write_run_log<W: Write>(mut w: W, entries: &[RunLogEntry]) -> Result<(), SearchError> {
    for e in entries {
        let line = serde_json::to_string(e).map_err(|e| SearchError::Checkpoint(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| SearchError::Checkpoint(e.to_string()))?;
    }
    Ok(())
}

/// Reads a JSONL run log. Blank lines are skipped; an unknown schema
/// version is an error.
pub fn read_run_log<R: BufRead>(r: R) -> Result<Vec<RunLogEntry>, SearchError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| SearchError::Checkpoint(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: RunLogEntry =
            serde_json::from_str(&line).map_err(|e| SearchError::Checkpoint(format!("line {}: {e}", n + 1)))?;
        if e.schema_version != RUN_LOG_SCHEMA_VERSION {
            return Err(SearchError::Checkpoint(format!(
                "line {}: schema version {} (expected {RUN_LOG_SCHEMA_VERSION})",
                n + 1,
                e.schema_version
            )));
        }
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let e = RunLogEntry {
            schema_version: RUN_LOG_SCHEMA_VERSION,
            step: 3,
            episode: 0,
            action: "next_lr".into(),
            strategy: Strategy::from_index(7).unwrap(),
            accuracy: 0.5,
            f1: 0.25,
            reward: -0.125,
            best_accuracy: 0.5,
            best_f1: 0.375,
            validation_loss: 1.5,
            epsilon: 0.3,
            cached: false,
        };
        let mut buf = Vec::new();
        write_run_log(&mut buf, &[e.clone(), e.clone()]).unwrap();
        let back = read_run_log(&buf[..]).unwrap();
        assert_eq!(back, vec![e.clone(), e]);
        let bad = String::from_utf8(buf).unwrap().replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(read_run_log(bad.as_bytes()).is_err());
    }
}
