//! Molecular graph: heavy atoms with attached hydrogen counts, and bonds.

use petgraph::algo::is_isomorphic_matching;
use petgraph::graph::UnGraph;

use super::element::Element;
use super::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer order; aromatic bonds count as one sigma bond here, the pi
    /// contribution is accounted per atom.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn from_valence(v: u8) -> Option<BondOrder> {
        match v {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    /// Attached hydrogens (explicit or inferred at parse time).
    pub hydrogens: u8,
    pub aromatic: bool,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            charge: 0,
            hydrogens: 0,
            aromatic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl MolecularGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph and checks every structural invariant.
    pub fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        let g = MolecularGraph { atoms, bonds };
        g.validate()?;
        Ok(g)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }

    pub(crate) fn bonds_mut(&mut self) -> &mut [Bond] {
        &mut self.bonds
    }

    pub(crate) fn push_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.atoms.len() - 1
    }

    /// Adds a bond, rejecting self loops and duplicates.
    pub(crate) fn push_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<usize, ChemError> {
        if a == b {
            return Err(ChemError::Syntax {
                pos: 0,
                msg: format!("atom {a} bonded to itself"),
            });
        }
        if self.bond_between(a, b).is_some() {
            return Err(ChemError::Syntax {
                pos: 0,
                msg: format!("duplicate bond between atoms {a} and {b}"),
            });
        }
        self.bonds.push(Bond { a, b, order });
        Ok(self.bonds.len() - 1)
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.bonds
            .iter()
            .position(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
    }

    pub fn is_kekulized(&self) -> bool {
        self.bonds.iter().all(|b| b.order != BondOrder::Aromatic)
            && self.atoms.iter().all(|a| !a.aromatic)
    }

    /// Adjacency as (neighbour, bond index) pairs, in bond insertion order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            adj[b.a].push((b.b, i));
            adj[b.b].push((b.a, i));
        }
        adj
    }

    /// Sum of bond orders per atom (aromatic bonds count 1).
    pub fn bond_sums(&self) -> Vec<u8> {
        let mut sums = vec![0u8; self.atoms.len()];
        for b in &self.bonds {
            let v = b.order.valence();
            sums[b.a] = sums[b.a].saturating_add(v);
            sums[b.b] = sums[b.b].saturating_add(v);
        }
        sums
    }

    pub fn heavy_degrees(&self) -> Vec<u8> {
        let mut deg = vec![0u8; self.atoms.len()];
        for b in &self.bonds {
            deg[b.a] = deg[b.a].saturating_add(1);
            deg[b.b] = deg[b.b].saturating_add(1);
        }
        deg
    }

    /// Atoms carrying an explicit double or triple bond.
    pub fn has_multiple_bond(&self) -> Vec<bool> {
        let mut out = vec![false; self.atoms.len()];
        for b in &self.bonds {
            if matches!(b.order, BondOrder::Double | BondOrder::Triple) {
                out[b.a] = true;
                out[b.b] = true;
            }
        }
        out
    }

    /// Total valence in use: bond orders, hydrogens, plus one for the pi
    /// contribution of an aromatic atom without an explicit multiple bond.
    pub fn valence_used(&self) -> Vec<u8> {
        let sums = self.bond_sums();
        let multiple = self.has_multiple_bond();
        self.atoms
            .iter()
            .zip(sums)
            .zip(multiple)
            .map(|((a, s), m)| s.saturating_add(a.hydrogens).saturating_add(u8::from(a.aromatic && !m)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ChemError> {
        let n = self.atoms.len();
        let mut seen = std::collections::HashSet::new();
        for b in &self.bonds {
            if b.a >= n || b.b >= n || b.a == b.b {
                return Err(ChemError::InvalidGraph(format!(
                    "bond {}-{} has invalid endpoints",
                    b.a, b.b
                )));
            }
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(ChemError::InvalidGraph(format!(
                    "duplicate bond {}-{}",
                    b.a, b.b
                )));
            }
        }
        for (i, (atom, used)) in self.atoms.iter().zip(self.valence_used()).enumerate() {
            if used > atom.element.max_valence(atom.charge) {
                return Err(ChemError::Valence {
                    atom: i,
                    element: atom.element,
                    valence: used,
                });
            }
        }
        Ok(())
    }

    /// Atoms lying on at least one cycle.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let adj = self.adjacency();
        let mut in_ring = vec![false; self.atoms.len()];
        for (idx, bond) in self.bonds.iter().enumerate() {
            if in_ring[bond.a] && in_ring[bond.b] {
                continue;
            }
            if connected_without(&adj, bond.a, bond.b, idx) {
                in_ring[bond.a] = true;
                in_ring[bond.b] = true;
            }
        }
        in_ring
    }

    /// Connected components as lists of atom indices, each sorted ascending,
    /// ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(w, _) in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Relabels atoms so that old atom `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolecularGraph {
        assert_eq!(perm.len(), self.atoms.len());
        let mut atoms = vec![Atom::new(Element::C); self.atoms.len()];
        for (old, &new) in perm.iter().enumerate() {
            atoms[new] = self.atoms[old];
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: perm[b.a],
                b: perm[b.b],
                order: b.order,
            })
            .collect();
        MolecularGraph { atoms, bonds }
    }

    /// Graph isomorphism respecting element, charge, hydrogen count,
    /// aromatic flag and bond order.
    pub fn is_isomorphic(&self, other: &MolecularGraph) -> bool {
        if self.atoms.len() != other.atoms.len() || self.bonds.len() != other.bonds.len() {
            return false;
        }
        let mut lhs = self.atoms.clone();
        let mut rhs = other.atoms.clone();
        let key = |a: &Atom| (a.element, a.charge, a.hydrogens, a.aromatic);
        lhs.sort_by_key(key);
        rhs.sort_by_key(key);
        if lhs != rhs {
            return false;
        }
        is_isomorphic_matching(&self.to_petgraph(), &other.to_petgraph(), |a, b| a == b, |a, b| a == b)
    }

    fn to_petgraph(&self) -> UnGraph<Atom, BondOrder> {
        let mut g = UnGraph::with_capacity(self.atoms.len(), self.bonds.len());
        let nodes: Vec<_> = self.atoms.iter().map(|&a| g.add_node(a)).collect();
        for b in &self.bonds {
            g.add_edge(nodes[b.a], nodes[b.b], b.order);
        }
        g
    }
}

fn connected_without(adj: &[Vec<(usize, usize)>], from: usize, to: usize, skip_bond: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for &(w, bi) in &adj[v] {
            if bi == skip_bond || seen[w] {
                continue;
            }
            if w == to {
                return true;
            }
            seen[w] = true;
            stack.push(w);
        }
    }
    false
}
