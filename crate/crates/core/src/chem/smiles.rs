//! SMILES reader for the subset used by the drug corpora: organic-subset and
//! bracket atoms, branches, ring closures (digits and `%nn`), explicit bond
//! symbols and dot-disconnected fragments. Stereo marks, isotopes, atom
//! classes and wildcards are rejected.

use std::collections::BTreeMap;

use super::element::Element;
use super::graph::{Atom, BondOrder, MolecularGraph};
use super::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondSym {
    fn order(self) -> BondOrder {
        match self {
            BondSym::Single => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct RingOpen {
    atom: usize,
    bond: Option<BondSym>,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    graph: MolecularGraph,
    bracketed: Vec<bool>,
    prev: Option<usize>,
    pending: Option<(BondSym, usize)>,
    branches: Vec<Option<usize>>,
    rings: BTreeMap<u32, RingOpen>,
}

/// Parses a SMILES string into a molecular graph. Lowercase atoms stay
/// aromatic; call [`super::kekulize`] before fingerprinting or encoding.
pub fn parse_smiles(s: &str) -> Result<MolecularGraph, ChemError> {
    if s.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    if let Some(pos) = s.bytes().position(|b| !b.is_ascii() || b.is_ascii_control() || b == b' ') {
        return Err(syntax(pos, "non-printable or non-ASCII character"));
    }
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
        graph: MolecularGraph::new(),
        bracketed: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
    };
    p.run()?;
    p.finish()
}

fn syntax(pos: usize, msg: impl Into<String>) -> ChemError {
    ChemError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn unsupported(pos: usize, what: &str) -> ChemError {
    ChemError::UnsupportedFeature(format!("{what} at position {pos}"))
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ChemError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if self.prev.is_none() {
                        return Err(syntax(start, "branch without a preceding atom"));
                    }
                    if self.pending.is_some() {
                        return Err(syntax(start, "bond symbol before '('"));
                    }
                    self.branches.push(self.prev);
                    self.pos += 1;
                }
                b')' => {
                    let Some(top) = self.branches.pop() else {
                        return Err(syntax(start, "unbalanced ')'"));
                    };
                    if self.pending.is_some() {
                        return Err(syntax(start, "dangling bond before ')'"));
                    }
                    self.prev = top;
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return Err(syntax(start, "bond symbol before '.'"));
                    }
                    if !self.branches.is_empty() {
                        return Err(syntax(start, "'.' inside a branch"));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if self.pending.is_some() {
                        return Err(syntax(start, "consecutive bond symbols"));
                    }
                    if self.prev.is_none() {
                        return Err(syntax(start, "bond without a preceding atom"));
                    }
                    let sym = match c {
                        b'-' => BondSym::Single,
                        b'=' => BondSym::Double,
                        b'#' => BondSym::Triple,
                        _ => BondSym::Aromatic,
                    };
                    self.pending = Some((sym, start));
                    self.pos += 1;
                }
                b'$' => return Err(unsupported(start, "quadruple bond")),
                b'/' | b'\\' => return Err(unsupported(start, "directional (stereo) bond")),
                b'*' => return Err(unsupported(start, "wildcard atom")),
                b'0'..=b'9' => {
                    self.pos += 1;
                    self.ring_bond(u32::from(c - b'0'), start)?;
                }
                b'%' => {
                    let digits = self.src.get(self.pos + 1..self.pos + 3);
                    match digits {
                        Some(&[a, b]) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            self.pos += 3;
                            self.ring_bond(u32::from(a - b'0') * 10 + u32::from(b - b'0'), start)?;
                        }
                        _ => return Err(syntax(start, "'%' must be followed by two digits")),
                    }
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, true, start)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, false, start)?;
                }
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ChemError> {
        let start = self.pos;
        let c = self.src[self.pos];
        let next = self.src.get(self.pos + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => return Err(syntax(start, format!("unknown token '{}'", c as char))),
        };
        self.pos += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, ChemError> {
        let open = self.pos;
        self.pos += 1;
        if matches!(self.peek(), Some(b'0'..=b'9')) {
            return Err(unsupported(self.pos, "isotope label"));
        }
        let (element, aromatic) = self.bracket_symbol(open)?;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        if self.peek() == Some(b'@') {
            return Err(unsupported(self.pos, "chirality mark"));
        }
        if self.peek() == Some(b'H') {
            self.pos += 1;
            atom.hydrogens = self.read_number().unwrap_or(1).min(u32::from(u8::MAX)) as u8;
        }
        match self.peek() {
            Some(sign @ (b'+' | b'-')) => {
                self.pos += 1;
                let mut magnitude = 1u32;
                if let Some(n) = self.read_number() {
                    magnitude = n;
                } else {
                    while self.peek() == Some(sign) {
                        magnitude += 1;
                        self.pos += 1;
                    }
                }
                if magnitude > 8 {
                    return Err(syntax(self.pos, "formal charge out of range"));
                }
                let m = magnitude as i8;
                atom.charge = if sign == b'+' { m } else { -m };
            }
            _ => {}
        }
        match self.peek() {
            Some(b']') => {
                self.pos += 1;
                Ok(atom)
            }
            Some(b':') => Err(unsupported(self.pos, "atom class")),
            Some(b'@') => Err(unsupported(self.pos, "chirality mark")),
            Some(_) => Err(syntax(self.pos, "unexpected character in bracket atom")),
            None => Err(syntax(open, "unterminated bracket atom")),
        }
    }

    fn bracket_symbol(&mut self, open: usize) -> Result<(Element, bool), ChemError> {
        let rest = &self.src[self.pos..];
        let Some(&first) = rest.first() else {
            return Err(syntax(open, "unterminated bracket atom"));
        };
        if first == b'*' {
            return Err(unsupported(self.pos, "wildcard atom"));
        }
        if first.is_ascii_lowercase() {
            let aromatic = match first {
                b'b' => Some(Element::B),
                b'c' => Some(Element::C),
                b'n' => Some(Element::N),
                b'o' => Some(Element::O),
                b'p' => Some(Element::P),
                b's' if rest.get(1) == Some(&b'e') => {
                    return Err(unsupported(self.pos, "aromatic selenium"));
                }
                b's' => Some(Element::S),
                _ => None,
            };
            return match aromatic {
                Some(el) => {
                    self.pos += 1;
                    Ok((el, true))
                }
                None => Err(syntax(self.pos, "unknown aromatic symbol")),
            };
        }
        if !first.is_ascii_uppercase() {
            return Err(syntax(self.pos, "expected element symbol"));
        }
        if let Some(&second) = rest.get(1) {
            if second.is_ascii_lowercase() {
                let two = std::str::from_utf8(&rest[..2]).unwrap_or("");
                if let Ok(el) = two.parse::<Element>() {
                    self.pos += 2;
                    return Ok((el, false));
                }
            }
        }
        let one = std::str::from_utf8(&rest[..1]).unwrap_or("");
        match one.parse::<Element>() {
            Ok(el) => {
                self.pos += 1;
                Ok((el, false))
            }
            Err(()) => Err(syntax(self.pos, "unknown element symbol")),
        }
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(c @ b'0'..=b'9') = self.peek() {
            value = value.saturating_mul(10).saturating_add(u32::from(c - b'0'));
            self.pos += 1;
        }
        (self.pos > start).then_some(value)
    }

    fn add_atom(&mut self, atom: Atom, bracketed: bool, pos: usize) -> Result<(), ChemError> {
        let idx = self.graph.push_atom(atom);
        self.bracketed.push(bracketed);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((sym, _)) => sym.order(),
                None => self.default_order(prev, idx),
            };
            self.graph
                .push_bond(prev, idx, order)
                .map_err(|_| syntax(pos, "invalid bond"))?;
        } else if let Some((_, bpos)) = self.pending {
            return Err(syntax(bpos, "bond without a preceding atom"));
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        let atoms = self.graph.atoms();
        if atoms[a].aromatic && atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_bond(&mut self, label: u32, pos: usize) -> Result<(), ChemError> {
        let Some(current) = self.prev else {
            return Err(syntax(pos, "ring closure without a preceding atom"));
        };
        let bond = self.pending.take().map(|(s, _)| s);
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(label, RingOpen { atom: current, bond });
            }
            Some(open) => {
                let sym = match (open.bond, bond) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(syntax(pos, "conflicting ring-closure bond symbols"));
                    }
                    (Some(x), _) | (None, Some(x)) => Some(x),
                    (None, None) => None,
                };
                let order = match sym {
                    Some(s) => s.order(),
                    None => self.default_order(open.atom, current),
                };
                self.graph
                    .push_bond(open.atom, current, order)
                    .map_err(|e| match e {
                        ChemError::Syntax { msg, .. } => syntax(pos, msg),
                        other => other,
                    })?;
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<MolecularGraph, ChemError> {
        if let Some((label, open)) = self.rings.iter().next() {
            return Err(ChemError::UnclosedRing {
                label: *label,
                atom: open.atom,
            });
        }
        if !self.branches.is_empty() {
            return Err(syntax(self.src.len(), "unbalanced '('"));
        }
        if let Some((_, bpos)) = self.pending {
            return Err(syntax(bpos, "dangling bond at end of input"));
        }
        if self.graph.is_empty() {
            return Err(ChemError::EmptyInput);
        }
        assign_implicit_hydrogens(&mut self.graph, &self.bracketed);
        self.graph.validate()?;
        Ok(self.graph)
    }
}

fn assign_implicit_hydrogens(graph: &mut MolecularGraph, bracketed: &[bool]) {
    let sums = graph.bond_sums();
    let multiple = graph.has_multiple_bond();
    for (i, atom) in graph.atoms_mut().iter_mut().enumerate() {
        if bracketed[i] {
            continue;
        }
        atom.hydrogens = if atom.aromatic {
            let target = atom.element.aromatic_valence(0).unwrap_or(0);
            // one unit of the target goes to the ring pi system unless an
            // exocyclic multiple bond already supplies it
            target.saturating_sub(sums[i]).saturating_sub(u8::from(!multiple[i]))
        } else {
            atom.element.implicit_hydrogens(sums[i])
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        let els: Vec<_> = g.atoms().iter().map(|a| a.element).collect();
        assert_eq!(els, vec![Element::C, Element::C, Element::O]);
        assert_eq!(g.bonds().len(), 2);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        let h: Vec<_> = g.atoms().iter().map(|a| a.hydrogens).collect();
        assert_eq!(h, vec![3, 2, 1]);
    }

    #[test]
    fn cyclopropane_ring_closure() {
        let g = parse_smiles("C1CC1").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bonds().len(), 3);
        assert!(g.atoms().iter().all(|a| a.hydrogens == 2));
    }

    #[test]
    fn benzene_is_aromatic() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.hydrogens == 1));
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("C[N+](C)(C)C.[Cl-]").unwrap();
        assert_eq!(g.atoms()[1].charge, 1);
        assert_eq!(g.atoms()[1].hydrogens, 0);
        assert_eq!(g.atoms()[5].element, Element::Cl);
        assert_eq!(g.atoms()[5].charge, -1);
        assert_eq!(g.components().len(), 2);
        let g = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(g.atoms()[3].hydrogens, 1);
        let g = parse_smiles("[O--]").unwrap();
        assert_eq!(g.atoms()[0].charge, -2);
    }

    #[test]
    fn two_digit_ring_labels_and_bond_symbols() {
        let g = parse_smiles("C%12CC%12").unwrap();
        assert_eq!(g.bonds().len(), 3);
        let g = parse_smiles("C=1CC1").unwrap();
        assert_eq!(g.bonds()[2].order, BondOrder::Double);
        let g = parse_smiles("C#N").unwrap();
        assert_eq!(g.bonds()[0].order, BondOrder::Triple);
        assert_eq!(g.atoms()[0].hydrogens, 1);
    }

    #[test]
    fn biphenyl_single_link() {
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        let link = g.bond_between(5, 6).unwrap();
        assert_eq!(g.bonds()[link].order, BondOrder::Single);
        assert_eq!(g.atoms()[5].hydrogens, 0);
    }

    #[test]
    fn error_cases() {
        assert!(matches!(parse_smiles(""), Err(ChemError::EmptyInput)));
        assert!(matches!(parse_smiles("C(C"), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("CC)"), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("C1CC"), Err(ChemError::UnclosedRing { label: 1, .. })));
        assert!(matches!(parse_smiles("CXC"), Err(ChemError::Syntax { pos: 1, .. })));
        assert!(matches!(parse_smiles("C[C@H](O)N"), Err(ChemError::UnsupportedFeature(_))));
        assert!(matches!(parse_smiles("F/C=C/F"), Err(ChemError::UnsupportedFeature(_))));
        assert!(matches!(parse_smiles("[13CH4]"), Err(ChemError::UnsupportedFeature(_))));
        assert!(matches!(parse_smiles("C*"), Err(ChemError::UnsupportedFeature(_))));
        assert!(matches!(parse_smiles("C11"), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("C1C1"), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("C="), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("O(C)(C)(C)(C)"), Err(ChemError::Valence { .. })));
        assert!(matches!(parse_smiles("[C"), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("C=1CC-1"), Err(ChemError::Syntax { .. })));
    }
}
