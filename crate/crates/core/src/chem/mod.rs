//! Molecular structure handling: SMILES parsing, kekulization, the SELFIES
//! codec and circular fingerprints. Everything here is a pure function on
//! immutable values.

mod element;
mod graph;
mod kekule;
mod morgan;
mod selfies;
mod smiles;

pub use element::Element;
pub use graph::{Atom, Bond, BondOrder, MolecularGraph};
pub use kekule::{kekulize, pi_demand, resonant_bonds};
pub use morgan::{environment_identifiers, fnv1a, morgan_fingerprint, Fingerprint};
pub use selfies::{decode_selfies, encode_selfies, SelfiesString};
pub use smiles::parse_smiles;

use thiserror::Error;

pub const DEFAULT_FINGERPRINT_BITS: usize = 2048;
pub const DEFAULT_FINGERPRINT_RADIUS: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChemError {
    #[error("empty input")]
    EmptyInput,
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("ring closure {label} opened at atom {atom} is never closed")]
    UnclosedRing { label: u32, atom: usize },
    #[error("atom {atom} ({element}) exceeds its maximum valence with {valence}")]
    Valence { atom: usize, element: Element, valence: u8 },
    #[error("kekulization failed: {0}")]
    Kekulization(String),
    #[error("unknown SELFIES token {0}")]
    UnknownToken(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// SMILES to kekulized graph to SELFIES, the conversion applied to every drug.
pub fn smiles_to_selfies(smiles: &str) -> Result<SelfiesString, ChemError> {
    let graph = kekulize(&parse_smiles(smiles)?)?;
    encode_selfies(&graph)
}

/// ECFP4-equivalent fingerprint (radius 2, 2048 bits) straight from SMILES.
pub fn ecfp4(smiles: &str) -> Result<Fingerprint, ChemError> {
    let graph = kekulize(&parse_smiles(smiles)?)?;
    morgan_fingerprint(&graph, DEFAULT_FINGERPRINT_RADIUS, DEFAULT_FINGERPRINT_BITS)
}
