//! Morgan / ECFP-style circular fingerprints.
//!
//! Atom identifiers start from the byte tuple
//! `(atomic number, heavy degree, formal charge, hydrogen count, in-ring)`
//! hashed with 64-bit FNV-1a (offset basis `0xcbf29ce484222325`, prime
//! `0x100000001b3`). Each iteration rehashes
//! `(iteration, own id, sorted (bond label, neighbour id) pairs)`. Identifiers
//! from every radius are folded into the bitset by masking with `bits - 1`.

use std::collections::BTreeSet;

use super::graph::{BondOrder, MolecularGraph};
use super::kekule::resonant_bonds;
use super::ChemError;

pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Bond label used in neighbourhood hashing: 1-3 for localized bonds, 4 for
/// bonds that alternate between Kekulé structures.
const RESONANT_LABEL: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    bits: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bits).filter(|&b| self.get(b))
    }

    pub fn as_words(&self) -> &[u64] {
        &self.words
    }

    /// Little-endian word bytes; stable across platforms.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.bits).map(|b| if self.get(b) { 1.0 } else { 0.0 }).collect()
    }

    pub fn tanimoto(&self, other: &Fingerprint) -> f64 {
        let inter: u32 = self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum();
        let union: u32 = self.words.iter().zip(&other.words).map(|(a, b)| (a | b).count_ones()).sum();
        if union == 0 {
            1.0
        } else {
            f64::from(inter) / f64::from(union)
        }
    }
}

fn initial_identifiers(graph: &MolecularGraph) -> Vec<u64> {
    let degrees = graph.heavy_degrees();
    let ring = graph.ring_atoms();
    graph
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            fnv1a(&[
                a.element.atomic_number(),
                degrees[i],
                a.charge as u8,
                a.hydrogens,
                u8::from(ring[i]),
            ])
        })
        .collect()
}

/// Distinct environment identifiers per radius, `result[r]` holding those
/// produced at iteration `r`.
pub fn environment_identifiers(graph: &MolecularGraph, radius: u32) -> Result<Vec<BTreeSet<u64>>, ChemError> {
    if !graph.is_kekulized() {
        return Err(ChemError::InvalidGraph(
            "fingerprints require a kekulized graph".into(),
        ));
    }
    let resonant = resonant_bonds(graph);
    let labels: Vec<u8> = graph
        .bonds()
        .iter()
        .zip(&resonant)
        .map(|(b, &r)| if r { RESONANT_LABEL } else { b.order.valence() })
        .collect();
    debug_assert!(graph.bonds().iter().all(|b| b.order != BondOrder::Aromatic));

    let adj = graph.adjacency();
    let mut ids = initial_identifiers(graph);
    let mut per_radius = vec![ids.iter().copied().collect::<BTreeSet<_>>()];
    let mut buf = Vec::new();
    for iteration in 1..=radius {
        let next: Vec<u64> = (0..ids.len())
            .map(|v| {
                let mut env: Vec<(u8, u64)> = adj[v].iter().map(|&(w, bi)| (labels[bi], ids[w])).collect();
                env.sort_unstable();
                buf.clear();
                buf.extend_from_slice(&iteration.to_le_bytes());
                buf.extend_from_slice(&ids[v].to_le_bytes());
                for (label, id) in env {
                    buf.push(label);
                    buf.extend_from_slice(&id.to_le_bytes());
                }
                fnv1a(&buf)
            })
            .collect();
        ids = next;
        per_radius.push(ids.iter().copied().collect());
    }
    Ok(per_radius)
}

/// Folded circular fingerprint of a kekulized graph.
pub fn morgan_fingerprint(graph: &MolecularGraph, radius: u32, bits: usize) -> Result<Fingerprint, ChemError> {
    if bits == 0 || !bits.is_power_of_two() {
        return Err(ChemError::InvalidParameter(format!(
            "fingerprint length {bits} is not a power of two"
        )));
    }
    let per_radius = environment_identifiers(graph, radius)?;
    let mut words = vec![0u64; bits.div_ceil(64)];
    let mask = (bits - 1) as u64;
    for id in per_radius.iter().flatten() {
        let bit = (id & mask) as usize;
        words[bit / 64] |= 1 << (bit % 64);
    }
    Ok(Fingerprint { words, bits, radius })
}
