//! Client for an external classification service.
//!
//! Protocol: `POST {endpoint}/v1/classify` with
//! `{"prompts": [...], "num_classes": K}`, answered by
//! `{"predictions": [int, ...]}`. Entries that are strings are read leniently
//! (first integer in the text); anything unreadable becomes the invalid
//! sentinel and scores as wrong.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{compute_metrics, EvalError, Evaluator, Hyperparams, Metrics, PromptSets, INVALID_PREDICTION};
use crate::prompt::PromptInstance;

/// Overrides the configured endpoint when set.
pub const EVALUATOR_URL_ENV: &str = "DDIE_EVALUATOR_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout_secs: u64,
    pub retries: u32,
    /// Prompts per request.
    pub chunk_size: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "http://127.0.0.1:8080".into(),
            timeout_secs: 60,
            retries: 3,
            chunk_size: 256,
        }
    }
}

impl RemoteConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(EvalError::InvalidConfig(format!("endpoint {:?} is not an http(s) URL", self.endpoint)));
        }
        if self.timeout_secs == 0 || self.chunk_size == 0 {
            return Err(EvalError::InvalidConfig("timeout and chunk size must be positive".into()));
        }
        Ok(())
    }

    /// Applies [`EVALUATOR_URL_ENV`] if present and non-empty.
    pub fn with_env_override(mut self) -> Self {
        if let Ok(url) = std::env::var(EVALUATOR_URL_ENV) {
            if !url.trim().is_empty() {
                self.endpoint = url.trim().to_string();
            }
        }
        self
    }

    fn classify_url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/v1/classify") {
            base.to_string()
        } else {
            format!("{base}/v1/classify")
        }
    }
}

/// First run of ASCII digits in `text`, if it fits in `usize`.
pub fn extract_first_integer(text: &str) -> Option<usize> {
    let start = text.find(|c: char| c.is_ascii_digit())?;
    let digits: String = text[start..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn read_prediction(v: &Value) -> usize {
    match v {
        Value::Number(n) => n.as_u64().and_then(|u| usize::try_from(u).ok()).unwrap_or(INVALID_PREDICTION),
        Value::String(s) => extract_first_integer(s).unwrap_or(INVALID_PREDICTION),
        _ => INVALID_PREDICTION,
    }
}

/// Parses a response body for `expected` prompts.
fn parse_response(body: &str, expected: usize) -> Result<Vec<usize>, EvalError> {
    match serde_json::from_str::<Value>(body) {
        Ok(Value::Object(obj)) => {
            let preds = obj
                .get("predictions")
                .and_then(Value::as_array)
                .ok_or_else(|| EvalError::MalformedResponse("no \"predictions\" array".into()))?;
            if preds.len() != expected {
                return Err(EvalError::MalformedResponse(format!(
                    "{} predictions for {expected} prompts",
                    preds.len()
                )));
            }
            Ok(preds.iter().map(read_prediction).collect())
        }
        _ if expected == 1 => extract_first_integer(body)
            .map(|p| vec![p])
            .ok_or_else(|| EvalError::MalformedResponse(format!("no integer in {body:?}"))),
        _ => Err(EvalError::MalformedResponse("response is not a JSON object".into())),
    }
}

pub struct RemoteEvaluator {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteEvaluator {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteEvaluator { config, agent }
    }

    fn post_once(&self, url: &str, prompts: &[&str], num_classes: usize) -> Result<Vec<usize>, EvalError> {
        let body = serde_json::json!({ "prompts": prompts, "num_classes": num_classes });
        let mut resp = self
            .agent
            .post(url)
            .send_json(&body)
            .map_err(|e| EvalError::RemoteUnavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| EvalError::RemoteUnavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(EvalError::RemoteUnavailable(format!("HTTP {status}")));
        }
        parse_response(&text, prompts.len())
    }

    /// One prediction per prompt. Transport failures are retried; malformed
    /// bodies are not.
    pub fn classify(&self, prompts: &[&str], num_classes: usize) -> Result<Vec<usize>, EvalError> {
        let url = self.config.classify_url();
        let mut out = Vec::with_capacity(prompts.len());
        for chunk in prompts.chunks(self.config.chunk_size) {
            let mut attempt = 0;
            let preds = loop {
                match self.post_once(&url, chunk, num_classes) {
                    Err(EvalError::RemoteUnavailable(msg)) => {
                        if attempt >= self.config.retries {
                            return Err(EvalError::RemoteUnavailable(format!(
                                "{msg} (after {} attempts)",
                                attempt + 1
                            )));
                        }
                        attempt += 1;
                        std::thread::sleep(Duration::from_millis(50 << attempt.min(6)));
                    }
                    other => break other?,
                }
            };
            out.extend(preds);
        }
        Ok(out)
    }

    fn score(&self, set: &[PromptInstance], k: usize) -> Result<Metrics, EvalError> {
        let texts: Vec<&str> = set.iter().map(|p| p.text.as_str()).collect();
        let golds: Vec<usize> = set.iter().map(|p| p.gold).collect();
        compute_metrics(&self.classify(&texts, k)?, &golds, k)
    }
}

impl Evaluator for RemoteEvaluator {
    /// The service holds the trained model, so only valid and test are sent.
    /// Validation loss is reported as 1 − validation accuracy.
    fn train_eval(&self, sets: &PromptSets, _hyper: &Hyperparams, _seed: u64) -> Result<Metrics, EvalError> {
        sets.validate()?;
        let valid = self.score(&sets.valid, sets.num_classes)?;
        let mut test = self.score(&sets.test, sets.num_classes)?;
        test.validation_loss = 1.0 - valid.accuracy;
        Ok(test)
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}", self.config.classify_url())
    }
}
