//! Prompt synthesis: drug types and one textual modality substituted into a
//! template.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DrugRecord, InteractionPair};

pub const PLACEHOLDERS: [&str; 5] = ["type_a", "type_b", "mol_a", "mol_b", "num_classes"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("drug {drug:?} has no {modality} text")]
    MissingModalityData { drug: String, modality: Modality },
    #[error("drug {0:?} has no type label")]
    MissingType(String),
    #[error("unresolved placeholder {{{0}}}")]
    UnresolvedPlaceholder(String),
    #[error("template {id:?}: placeholder {{{name}}} appears {count} times, expected once")]
    PlaceholderCount { id: String, name: String, count: usize },
    #[error("template {id:?} has an unterminated brace")]
    UnterminatedBrace { id: String },
    #[error("bad template file: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateStyle {
    Imperative,
    Question,
    Roleplay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    /// SELFIES string
    Representation,
    /// free-text description
    Description,
}

impl Modality {
    pub const ALL: [Modality; 2] = [Modality::Representation, Modality::Description];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Representation => "representation",
            Modality::Description => "description",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown modality {s:?}"))
    }
}

/// A template body whose placeholders are exactly [`PLACEHOLDERS`], each once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptTemplate {
    id: String,
    style: TemplateStyle,
    body: String,
}

#[derive(Deserialize)]
struct RawTemplate {
    id: String,
    style: TemplateStyle,
    body: String,
}

impl<'de> Deserialize<'de> for PromptTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawTemplate::deserialize(d)?;
        PromptTemplate::new(raw.id, raw.style, raw.body).map_err(serde::de::Error::custom)
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn pieces<'a>(id: &str, body: &'a str) -> Result<Vec<Piece<'a>>, PromptError> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push(Piece::Text(&rest[..open]));
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| PromptError::UnterminatedBrace { id: id.to_string() })?;
        out.push(Piece::Slot(&rest[open + 1..open + close]));
        rest = &rest[open + close + 1..];
    }
    out.push(Piece::Text(rest));
    Ok(out)
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, style: TemplateStyle, body: impl Into<String>) -> Result<Self, PromptError> {
        let (id, body) = (id.into(), body.into());
        let mut counts = [0usize; PLACEHOLDERS.len()];
        for p in pieces(&id, &body)? {
            if let Piece::Slot(name) = p {
                match PLACEHOLDERS.iter().position(|&q| q == name) {
                    Some(i) => counts[i] += 1,
                    None => return Err(PromptError::UnresolvedPlaceholder(name.to_string())),
                }
            }
        }
        if let Some(i) = counts.iter().position(|&c| c != 1) {
            return Err(PromptError::PlaceholderCount {
                id,
                name: PLACEHOLDERS[i].to_string(),
                count: counts[i],
            });
        }
        Ok(PromptTemplate { id, style, body })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn style(&self) -> TemplateStyle {
        self.style
    }

    pub fn body(&self) -> &str {
        &self.body
    }
}

/// One template per style.
pub fn builtin_templates() -> Vec<PromptTemplate> {
    let specs = [
        (
            "imperative-v1",
            TemplateStyle::Imperative,
            "Predict the interaction event between drug A and drug B.\n\
             Drug A ({type_a}): {mol_a}\n\
             Drug B ({type_b}): {mol_b}\n\
             Respond with a class index in [0, {num_classes}).",
        ),
        (
            "question-v1",
            TemplateStyle::Question,
            "Drug A belongs to {type_a} and is given by {mol_a}. \
             Drug B belongs to {type_b} and is given by {mol_b}. \
             Which interaction event occurs when the two are taken together? \
             Respond with a class index in [0, {num_classes}).",
        ),
        (
            "roleplay-v1",
            TemplateStyle::Roleplay,
            "You are a clinical pharmacologist reviewing a drug combination. \
             The first drug, {type_a}, is {mol_a}. \
             The second drug, {type_b}, is {mol_b}. \
             State the interaction event you expect. \
             Respond with a class index in [0, {num_classes}).",
        ),
    ];
    specs
        .into_iter()
        .map(|(id, style, body)| PromptTemplate::new(id, style, body).expect("built-in templates are well formed"))
        .collect()
}

pub fn builtin_template(style: TemplateStyle) -> PromptTemplate {
    builtin_templates()
        .into_iter()
        .find(|t| t.style == style)
        .expect("one built-in per style")
}

/// Reads `[{"id", "style", "body"}, ...]`.
pub fn load_templates<R: Read>(source: R) -> Result<Vec<PromptTemplate>, PromptError> {
    serde_json::from_reader(source).map_err(|e| PromptError::Json(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub text: String,
    pub pair_index: usize,
    pub gold: usize,
}

/// Type label text, e.g. "category 3 of 8" for label 2 of 8 clusters.
pub fn type_label(label: usize, n_types: usize) -> String {
    format!("category {} of {}", label + 1, n_types)
}

fn modality_text<'a>(drug: &'a DrugRecord, modality: Modality) -> Result<&'a str, PromptError> {
    let text = match modality {
        Modality::Representation => drug.selfies.as_deref().unwrap_or(""),
        Modality::Description => drug.description.as_str(),
    };
    if text.trim().is_empty() {
        return Err(PromptError::MissingModalityData {
            drug: drug.id.clone(),
            modality,
        });
    }
    Ok(text)
}

/// Substitutes in a single left-to-right pass; substituted text is never
/// rescanned.
pub fn render(
    template: &PromptTemplate,
    pair_index: usize,
    pair: &InteractionPair,
    modality: Modality,
    drugs: &[DrugRecord],
    n_types: usize,
    num_classes: usize,
) -> Result<PromptInstance, PromptError> {
    let (a, b) = (&drugs[pair.drug_a], &drugs[pair.drug_b]);
    let ty = |d: &DrugRecord| {
        d.drug_type
            .map(|t| type_label(t, n_types))
            .ok_or_else(|| PromptError::MissingType(d.id.clone()))
    };
    let (type_a, type_b) = (ty(a)?, ty(b)?);
    let (mol_a, mol_b) = (modality_text(a, modality)?, modality_text(b, modality)?);
    let classes = num_classes.to_string();
    let mut text = String::with_capacity(template.body.len() + mol_a.len() + mol_b.len() + 64);
    for p in pieces(&template.id, &template.body)? {
        match p {
            Piece::Text(t) => text.push_str(t),
            Piece::Slot("type_a") => text.push_str(&type_a),
            Piece::Slot("type_b") => text.push_str(&type_b),
            Piece::Slot("mol_a") => text.push_str(mol_a),
            Piece::Slot("mol_b") => text.push_str(mol_b),
            Piece::Slot("num_classes") => text.push_str(&classes),
            Piece::Slot(other) => return Err(PromptError::UnresolvedPlaceholder(other.to_string())),
        }
    }
    Ok(PromptInstance {
        text,
        pair_index,
        gold: pair.event,
    })
}

/// Renders the pairs at `indices`, in that order.
pub fn render_all(
    template: &PromptTemplate,
    indices: &[usize],
    pairs: &[InteractionPair],
    modality: Modality,
    drugs: &[DrugRecord],
    n_types: usize,
    num_classes: usize,
) -> Result<Vec<PromptInstance>, PromptError> {
    indices
        .iter()
        .map(|&i| render(template, i, &pairs[i], modality, drugs, n_types, num_classes))
        .collect()
}
