//! SELFIES codec for the supported subset (B, C, N, O, S, P, F, Cl, Br, I;
//! charges -1..+1; single/double/triple bonds; rings; branches; no stereo).
//!
//! Decoding follows the SELFIES 2.x derivation rules: every bond order is
//! capped by the remaining bonding capacity of the atoms it joins, so any
//! well-formed token sequence yields a valid graph.

use std::fmt;
use std::str::FromStr;

use super::element::Element;
use super::graph::{Atom, BondOrder, MolecularGraph};
use super::kekule::kekulize;
use super::ChemError;

const SUBSET: [Element; 10] = [
    Element::B,
    Element::C,
    Element::N,
    Element::O,
    Element::S,
    Element::P,
    Element::F,
    Element::Cl,
    Element::Br,
    Element::I,
];

/// Symbols whose position in this table encodes a base-16 digit when they
/// follow a branch or ring token.
const INDEX_ALPHABET: [&str; 16] = [
    "[C]", "[Ring1]", "[Ring2]", "[Branch1]", "[=Branch1]", "[#Branch1]", "[Branch2]",
    "[=Branch2]", "[#Branch2]", "[O]", "[N]", "[=N]", "[=C]", "[#C]", "[S]", "[P]",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Atom {
        bond: u8,
        element: Element,
        hydrogens: Option<u8>,
        charge: i8,
    },
    Branch {
        bond: u8,
        width: u8,
    },
    Ring {
        bond: u8,
        width: u8,
    },
    Dot,
}

fn bond_prefix(order: u8) -> &'static str {
    match order {
        2 => "=",
        3 => "#",
        _ => "",
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Token::Atom {
                bond,
                element,
                hydrogens,
                charge,
            } => {
                write!(f, "[{}{}", bond_prefix(bond), element.symbol())?;
                if let Some(h) = hydrogens {
                    write!(f, "H{h}")?;
                }
                if charge != 0 {
                    write!(f, "{charge:+}")?;
                }
                f.write_str("]")
            }
            Token::Branch { bond, width } => write!(f, "[{}Branch{width}]", bond_prefix(bond)),
            Token::Ring { bond, width } => write!(f, "[{}Ring{width}]", bond_prefix(bond)),
            Token::Dot => f.write_str("."),
        }
    }
}

fn parse_token(body: &str) -> Option<Token> {
    let (bond, rest) = match body.as_bytes().first()? {
        b'=' => (2, &body[1..]),
        b'#' => (3, &body[1..]),
        _ => (1, body),
    };
    for (prefix, is_ring) in [("Branch", false), ("Ring", true)] {
        if let Some(w) = rest.strip_prefix(prefix) {
            let width = match w {
                "1" => 1,
                "2" => 2,
                "3" => 3,
                _ => return None,
            };
            return Some(if is_ring {
                Token::Ring { bond, width }
            } else {
                Token::Branch { bond, width }
            });
        }
    }
    let bytes = rest.as_bytes();
    let sym_len = if bytes.len() >= 2 && bytes[1].is_ascii_lowercase() { 2 } else { 1 };
    let element: Element = rest.get(..sym_len)?.parse().ok()?;
    if !SUBSET.contains(&element) {
        return None;
    }
    let mut tail = &rest[sym_len..];
    let mut hydrogens = None;
    if let Some(t) = tail.strip_prefix('H') {
        let d = *t.as_bytes().first()?;
        if !d.is_ascii_digit() {
            return None;
        }
        hydrogens = Some(d - b'0');
        tail = &t[1..];
    }
    let charge = match tail {
        "" => 0,
        "+1" => 1,
        "-1" => -1,
        _ => return None,
    };
    element.selfies_capacity(charge)?;
    Some(Token::Atom {
        bond,
        element,
        hydrogens,
        charge,
    })
}

fn tokenize(s: &str) -> Result<Vec<Token>, ChemError> {
    let mut out = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('.') {
            out.push(Token::Dot);
            rest = r;
            continue;
        }
        if !rest.starts_with('[') {
            let end = rest.find(['[', '.']).unwrap_or(rest.len()).max(1);
            return Err(ChemError::UnknownToken(rest[..end].to_string()));
        }
        let Some(close) = rest.find(']') else {
            return Err(ChemError::UnknownToken(rest.to_string()));
        };
        let raw = &rest[..=close];
        let tok = parse_token(&raw[1..close]).ok_or_else(|| ChemError::UnknownToken(raw.to_string()))?;
        out.push(tok);
        rest = &rest[close + 1..];
    }
    Ok(out)
}

/// A SELFIES string whose every token belongs to the supported grammar.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelfiesString {
    text: String,
    len: usize,
}

impl SelfiesString {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Number of tokens, counting fragment separators.
    pub fn token_count(&self) -> usize {
        self.len
    }

    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.text)
            .expect("validated at construction")
            .iter()
            .map(Token::to_string)
            .collect()
    }

    fn from_tokens(tokens: &[Token]) -> Self {
        let text = tokens.iter().map(Token::to_string).collect();
        SelfiesString {
            text,
            len: tokens.len(),
        }
    }
}

impl FromStr for SelfiesString {
    type Err = ChemError;

    fn from_str(s: &str) -> Result<Self, ChemError> {
        let tokens = tokenize(s)?;
        Ok(SelfiesString {
            text: s.to_string(),
            len: tokens.len(),
        })
    }
}

impl fmt::Display for SelfiesString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

// ---------------------------------------------------------------------------
// encoding

fn index_tokens(value: usize) -> Result<(u8, Vec<Token>), ChemError> {
    let width = match value {
        0..=15 => 1u8,
        16..=255 => 2,
        256..=4095 => 3,
        _ => {
            return Err(ChemError::UnsupportedFeature(format!(
                "branch or ring span {value} exceeds the three-symbol index range"
            )))
        }
    };
    let mut digits = Vec::with_capacity(width as usize);
    for i in (0..width).rev() {
        let d = (value >> (4 * i as usize)) & 0xf;
        digits.push(parse_token(&INDEX_ALPHABET[d][1..INDEX_ALPHABET[d].len() - 1]).expect("index alphabet"));
    }
    Ok((width, digits))
}

struct Encoder<'g> {
    graph: &'g MolecularGraph,
    adj: Vec<Vec<(usize, usize)>>,
    pos: Vec<usize>,
    children: Vec<Vec<(usize, usize)>>,
    closures: Vec<Vec<(usize, usize)>>,
    atom_symbols: Vec<(Option<u8>, Element, i8)>,
}

impl Encoder<'_> {
    /// Depth-first traversal fixing preorder positions, tree children and
    /// ring-closure edges (recorded at their later endpoint).
    fn plan(&mut self, root: usize, counter: &mut usize) {
        let mut tree_bond = vec![usize::MAX; self.adj.len()];
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        self.pos[root] = *counter;
        *counter += 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next >= self.adj[v].len() {
                stack.pop();
                continue;
            }
            let (w, bi) = self.adj[v][*next];
            *next += 1;
            if bi == tree_bond[v] {
                continue;
            }
            if self.pos[w] == usize::MAX {
                self.pos[w] = *counter;
                *counter += 1;
                tree_bond[w] = bi;
                self.children[v].push((w, bi));
                stack.push((w, 0));
            } else if self.pos[w] < self.pos[v] && !self.closures[v].iter().any(|&(_, b)| b == bi) {
                self.closures[v].push((w, bi));
            }
        }
    }

    fn emit(&self, v: usize, in_order: u8, out: &mut Vec<Token>) -> Result<(), ChemError> {
        let (hydrogens, element, charge) = self.atom_symbols[v];
        out.push(Token::Atom {
            bond: in_order,
            element,
            hydrogens,
            charge,
        });
        for &(u, bi) in &self.closures[v] {
            let order = self.graph.bonds()[bi].order.valence();
            let (width, idx) = index_tokens(self.pos[v] - self.pos[u] - 1)?;
            out.push(Token::Ring { bond: order, width });
            out.extend(idx);
        }
        let kids = &self.children[v];
        for (i, &(w, bi)) in kids.iter().enumerate() {
            let order = self.graph.bonds()[bi].order.valence();
            if i + 1 == kids.len() {
                self.emit(w, order, out)?;
            } else {
                let mut sub = Vec::new();
                self.emit(w, order, &mut sub)?;
                let (width, idx) = index_tokens(sub.len() - 1)?;
                out.push(Token::Branch { bond: order, width });
                out.extend(idx);
                out.extend(sub);
            }
        }
        Ok(())
    }
}

/// Encodes a molecular graph as SELFIES. Aromatic input is kekulized first.
pub fn encode_selfies(graph: &MolecularGraph) -> Result<SelfiesString, ChemError> {
    if graph.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    let graph = kekulize(graph)?;
    let sums = graph.bond_sums();
    let mut atom_symbols = Vec::with_capacity(graph.atom_count());
    for (i, atom) in graph.atoms().iter().enumerate() {
        if !SUBSET.contains(&atom.element) {
            return Err(ChemError::UnsupportedFeature(format!(
                "element {} (atom {i}) is outside the SELFIES subset",
                atom.element
            )));
        }
        let Some(cap) = atom.element.selfies_capacity(atom.charge) else {
            return Err(ChemError::UnsupportedFeature(format!(
                "charge {:+} on {} (atom {i})",
                atom.charge, atom.element
            )));
        };
        let implicit = atom.charge == 0 && atom.element.implicit_hydrogens(sums[i]) == atom.hydrogens;
        let explicit_h = if implicit { None } else { Some(atom.hydrogens) };
        let h_written = explicit_h.unwrap_or(0);
        if h_written > 9 || sums[i] > cap.saturating_sub(h_written) || h_written > cap {
            return Err(ChemError::UnsupportedFeature(format!(
                "atom {i} ({}) exceeds its SELFIES bonding capacity",
                atom.element
            )));
        }
        atom_symbols.push((explicit_h, atom.element, atom.charge));
    }

    let n = graph.atom_count();
    let mut enc = Encoder {
        graph: &graph,
        adj: graph.adjacency(),
        pos: vec![usize::MAX; n],
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
        atom_symbols,
    };
    let mut tokens = Vec::new();
    let mut counter = 0;
    for (ci, comp) in graph.components().iter().enumerate() {
        if ci > 0 {
            tokens.push(Token::Dot);
        }
        enc.plan(comp[0], &mut counter);
        enc.emit(comp[0], 0, &mut tokens)?;
    }
    Ok(SelfiesString::from_tokens(&tokens))
}

// ---------------------------------------------------------------------------
// decoding

struct Derivation<'t> {
    tokens: &'t [Token],
    pos: usize,
    graph: MolecularGraph,
    capacity: Vec<u8>,
    explicit_h: Vec<Option<u8>>,
    rings: Vec<(usize, usize, u8)>,
    fragment_start: usize,
}

impl Derivation<'_> {
    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).copied();
        if matches!(t, Some(Token::Dot)) || t.is_none() {
            return None;
        }
        self.pos += 1;
        t
    }

    fn read_index(&mut self, width: u8) -> usize {
        let mut value = 0usize;
        for _ in 0..width {
            let digit = self
                .next()
                .map(|t| t.to_string())
                .and_then(|s| INDEX_ALPHABET.iter().position(|&a| a == s))
                .unwrap_or(0);
            value = value * 16 + digit;
        }
        value
    }

    /// Derives up to `budget` symbols starting from `root` with `state`
    /// remaining valence (`None` at the start of a fragment). Returns the
    /// number of symbols consumed.
    fn derive(&mut self, budget: usize, mut state: Option<u8>, root: Option<usize>) -> usize {
        let mut derived = 0;
        let mut prev = root;
        while state.is_none_or(|s| s > 0) && derived < budget {
            let Some(tok) = self.next() else { break };
            derived += 1;
            match tok {
                Token::Branch { bond, width } => {
                    let Some(s) = state.filter(|&s| s > 1) else { continue };
                    let init = (s - 1).min(bond);
                    let q = self.read_index(width);
                    derived += width as usize;
                    derived += self.derive(q + 1, Some(init), prev);
                    state = Some(s - init);
                }
                Token::Ring { bond, width } => {
                    let (Some(s), Some(p)) = (state, prev) else { continue };
                    let order = s.min(bond);
                    let q = self.read_index(width);
                    derived += width as usize;
                    let target = p.saturating_sub(q + 1).max(self.fragment_start);
                    self.rings.push((target, p, order));
                    state = Some(s - order);
                }
                Token::Atom {
                    bond,
                    element,
                    hydrogens,
                    charge,
                } => {
                    let cap = element
                        .selfies_capacity(charge)
                        .unwrap_or(0)
                        .saturating_sub(hydrogens.unwrap_or(0));
                    let order = match (state, prev) {
                        (Some(s), Some(_)) => bond.min(s).min(cap),
                        _ => 0,
                    };
                    if prev.is_some() && order == 0 {
                        continue;
                    }
                    let mut atom = Atom::new(element);
                    atom.charge = charge;
                    let idx = self.graph.push_atom(atom);
                    self.capacity.push(cap);
                    self.explicit_h
                        .push(if hydrogens.is_some() || charge != 0 { Some(hydrogens.unwrap_or(0)) } else { None });
                    if let Some(p) = prev {
                        let bo = BondOrder::from_valence(order).expect("order in 1..=3");
                        self.graph.push_bond(p, idx, bo).expect("fresh atom");
                    }
                    prev = Some(idx);
                    state = Some(cap - order);
                }
                Token::Dot => unreachable!("next() stops at fragment separators"),
            }
        }
        derived
    }

    fn close_rings(&mut self) {
        for (l, r, order) in std::mem::take(&mut self.rings) {
            if l == r {
                continue;
            }
            let sums = self.graph.bond_sums();
            let lfree = self.capacity[l].saturating_sub(sums[l]);
            let rfree = self.capacity[r].saturating_sub(sums[r]);
            let order = order.min(lfree).min(rfree);
            if order == 0 {
                continue;
            }
            match self.graph.bond_between(l, r) {
                Some(bi) => {
                    let bond = &mut self.graph.bonds_mut()[bi];
                    let merged = (bond.order.valence() + order).min(3);
                    bond.order = BondOrder::from_valence(merged).expect("order in 1..=3");
                }
                None => {
                    let bo = BondOrder::from_valence(order).expect("order in 1..=3");
                    self.graph.push_bond(l, r, bo).expect("distinct atoms");
                }
            }
        }
    }
}

/// Decodes a SELFIES string into a kekulized molecular graph.
pub fn decode_selfies(sf: &str) -> Result<MolecularGraph, ChemError> {
    let tokens = tokenize(sf)?;
    if tokens.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    let mut d = Derivation {
        tokens: &tokens,
        pos: 0,
        graph: MolecularGraph::new(),
        capacity: Vec::new(),
        explicit_h: Vec::new(),
        rings: Vec::new(),
        fragment_start: 0,
    };
    loop {
        d.fragment_start = d.graph.atom_count();
        d.derive(usize::MAX, None, None);
        d.close_rings();
        // symbols left in a fragment after its valence is exhausted are dropped
        while d.pos < tokens.len() && tokens[d.pos] != Token::Dot {
            d.pos += 1;
        }
        if d.pos >= tokens.len() {
            break;
        }
        d.pos += 1;
    }
    if d.graph.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    let sums = d.graph.bond_sums();
    let explicit = d.explicit_h;
    for (i, atom) in d.graph.atoms_mut().iter_mut().enumerate() {
        atom.hydrogens = match explicit[i] {
            Some(h) => h,
            None => atom.element.implicit_hydrogens(sums[i]),
        };
    }
    d.graph.validate()?;
    Ok(d.graph)
}

impl SelfiesString {
    pub fn decode(&self) -> Result<MolecularGraph, ChemError> {
        decode_selfies(&self.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn enc(smi: &str) -> String {
        encode_selfies(&parse_smiles(smi).unwrap()).unwrap().to_string()
    }

    #[test]
    fn methane_and_ethanol() {
        assert_eq!(enc("C"), "[C]");
        assert_eq!(enc("CCO"), "[C][C][O]");
        let g = decode_selfies("[C][C][O]").unwrap();
        assert!(g.is_isomorphic(&parse_smiles("CCO").unwrap()));
    }

    #[test]
    fn single_carbon_decodes() {
        let g = decode_selfies("[C]").unwrap();
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.atoms()[0].hydrogens, 4);
    }

    #[test]
    fn known_encodings() {
        // values cross-checked by hand against the SELFIES 2.x grammar
        assert_eq!(enc("C1CC1"), "[C][C][C][Ring1][Ring1]");
        assert_eq!(enc("CC(=O)O"), "[C][C][=Branch1][C][=O][O]");
        assert_eq!(enc("C#N"), "[C][#N]");
        assert_eq!(enc("[NH4+]"), "[NH4+1]");
        assert_eq!(enc("CC.O"), "[C][C].[O]");
    }

    #[test]
    fn benzene_ring_index() {
        let s = enc("c1ccccc1");
        assert!(s.ends_with("[Ring1][=Branch1]"), "{s}");
        let g = decode_selfies(&s).unwrap();
        assert_eq!(g.bonds().len(), 6);
        assert_eq!(g.bonds().iter().filter(|b| b.order == BondOrder::Double).count(), 3);
    }

    #[test]
    fn errors() {
        assert!(matches!(decode_selfies("[Zz]"), Err(ChemError::UnknownToken(t)) if t == "[Zz]"));
        assert!(matches!(decode_selfies("C"), Err(ChemError::UnknownToken(_))));
        assert!(matches!(decode_selfies("[C"), Err(ChemError::UnknownToken(_))));
        assert!(matches!(decode_selfies(""), Err(ChemError::EmptyInput)));
        assert!(matches!(encode_selfies(&MolecularGraph::new()), Err(ChemError::EmptyInput)));
        assert!(matches!(
            encode_selfies(&parse_smiles("[Na+].[Cl-]").unwrap()),
            Err(ChemError::UnsupportedFeature(_))
        ));
        assert!(matches!(
            encode_selfies(&parse_smiles("CN(=O)=O").unwrap()),
            Err(ChemError::UnsupportedFeature(_))
        ));
    }

    #[test]
    fn capacity_caps_bond_orders() {
        // fluorine cannot take a double bond; derivation stops after it
        let g = decode_selfies("[C][=F][C]").unwrap();
        assert_eq!(g.atom_count(), 2);
        assert_eq!(g.bonds()[0].order, BondOrder::Single);
        // a ring back onto the same atom is ignored
        let g = decode_selfies("[C][Ring1][C]").unwrap();
        assert_eq!(g.atom_count(), 1);
        // branch at the start of a fragment is skipped
        let g = decode_selfies("[Branch1][C][O]").unwrap();
        assert_eq!(g.atom_count(), 2);
    }

    #[test]
    fn ring_onto_existing_bond_raises_order() {
        let g = decode_selfies("[C][C][Ring1][C]").unwrap();
        assert_eq!(g.bonds().len(), 1);
        assert_eq!(g.bonds()[0].order, BondOrder::Double);
    }

    #[test]
    fn index_encoding_widths() {
        assert_eq!(index_tokens(0).unwrap().0, 1);
        assert_eq!(index_tokens(15).unwrap().0, 1);
        let (w, t) = index_tokens(16).unwrap();
        assert_eq!(w, 2);
        assert_eq!(t.iter().map(Token::to_string).collect::<String>(), "[Ring1][C]");
        assert_eq!(index_tokens(4095).unwrap().0, 3);
        assert!(index_tokens(4096).is_err());
    }
}
