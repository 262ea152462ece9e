//! Kekulization: assigns alternating single/double bonds to aromatic systems
//! by finding a perfect matching over the atoms that must carry a double bond.

use super::graph::{BondOrder, MolecularGraph};
use super::ChemError;

/// Aromatic atoms that need exactly one double bond in a Kekulé structure.
/// Atoms donating a lone pair (pyrrole-type N, furan O, thiophene S) or with
/// an exocyclic double bond do not.
pub fn pi_demand(graph: &MolecularGraph) -> Result<Vec<bool>, ChemError> {
    let sums = graph.bond_sums();
    graph
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, atom)| {
            if !atom.aromatic {
                return Ok(false);
            }
            let target = atom.element.aromatic_valence(atom.charge).ok_or_else(|| {
                ChemError::Kekulization(format!(
                    "no aromatic valence model for {}{:+} at atom {i}",
                    atom.element, atom.charge
                ))
            })?;
            Ok(target > sums[i].saturating_add(atom.hydrogens))
        })
        .collect()
}

/// Returns a copy of `graph` with every aromatic bond replaced by a single or
/// double bond and all aromatic flags cleared. Graphs without aromatic atoms
/// or bonds are returned unchanged.
pub fn kekulize(graph: &MolecularGraph) -> Result<MolecularGraph, ChemError> {
    if graph.is_kekulized() {
        return Ok(graph.clone());
    }
    for b in graph.bonds() {
        if b.order == BondOrder::Aromatic
            && !(graph.atoms()[b.a].aromatic && graph.atoms()[b.b].aromatic)
        {
            return Err(ChemError::Kekulization(format!(
                "aromatic bond {}-{} touches a non-aromatic atom",
                b.a, b.b
            )));
        }
    }
    let demand = pi_demand(graph)?;
    let n = graph.atom_count();

    // candidate edges: aromatic bonds joining two atoms that both need a pi bond
    let mut cand: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bi, b) in graph.bonds().iter().enumerate() {
        if b.order == BondOrder::Aromatic && demand[b.a] && demand[b.b] {
            cand[b.a].push((b.b, bi));
            cand[b.b].push((b.a, bi));
        }
    }
    for list in &mut cand {
        list.sort_unstable();
    }

    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut chosen: Vec<bool> = vec![false; graph.bonds().len()];
    if !match_all(&cand, &demand, &mut mate, &mut chosen) {
        return Err(ChemError::Kekulization(
            "no alternating single/double bond assignment exists".into(),
        ));
    }

    let mut out = graph.clone();
    for (bi, bond) in out.bonds_mut().iter_mut().enumerate() {
        if bond.order == BondOrder::Aromatic {
            bond.order = if chosen[bi] {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
        }
    }
    for atom in out.atoms_mut() {
        atom.aromatic = false;
    }
    out.validate()?;
    Ok(out)
}

/// Backtracking perfect matching over the demanding atoms, always branching
/// on the unmatched atom with the fewest free partners.
fn match_all(
    cand: &[Vec<(usize, usize)>],
    demand: &[bool],
    mate: &mut [Option<usize>],
    chosen: &mut [bool],
) -> bool {
    let mut best: Option<(usize, usize)> = None;
    for v in 0..cand.len() {
        if !demand[v] || mate[v].is_some() {
            continue;
        }
        let free = cand[v].iter().filter(|(w, _)| mate[*w].is_none()).count();
        if free == 0 {
            return false;
        }
        if best.is_none_or(|(_, f)| free < f) {
            best = Some((v, free));
            if free == 1 {
                break;
            }
        }
    }
    let Some((v, _)) = best else {
        return true;
    };
    for &(w, bi) in &cand[v] {
        if mate[w].is_some() {
            continue;
        }
        mate[v] = Some(w);
        mate[w] = Some(v);
        chosen[bi] = true;
        if match_all(cand, demand, mate, chosen) {
            return true;
        }
        mate[v] = None;
        mate[w] = None;
        chosen[bi] = false;
    }
    false
}

/// Bonds whose order differs between Kekulé structures of the same molecule
/// (the alternating bonds of conjugated rings). Fingerprints label these
/// uniformly so they do not depend on which structure kekulization picked.
pub fn resonant_bonds(graph: &MolecularGraph) -> Vec<bool> {
    let n = graph.atom_count();
    let ring = graph.ring_atoms();
    let bonds = graph.bonds();
    let in_ring_bond = |bi: usize| ring[bonds[bi].a] && ring[bonds[bi].b];

    let mut doubles = vec![0u8; n];
    let mut double_in_ring = vec![false; n];
    for (bi, b) in bonds.iter().enumerate() {
        if b.order == BondOrder::Double {
            doubles[b.a] += 1;
            doubles[b.b] += 1;
            if in_ring_bond(bi) {
                double_in_ring[b.a] = true;
                double_in_ring[b.b] = true;
            }
        }
    }
    let pi: Vec<bool> = (0..n).map(|v| doubles[v] == 1 && double_in_ring[v]).collect();

    let mut cand: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for (bi, b) in bonds.iter().enumerate() {
        let eligible = matches!(b.order, BondOrder::Single | BondOrder::Double);
        if eligible && pi[b.a] && pi[b.b] && in_ring_bond(bi) {
            cand[b.a].push((b.b, bi));
            cand[b.b].push((b.a, bi));
            edges.push(bi);
        }
    }

    let mut resonant = vec![false; bonds.len()];
    for &bi in &edges {
        let b = bonds[bi];
        let mut mate = vec![None; n];
        let mut chosen = vec![false; bonds.len()];
        let feasible = if b.order == BondOrder::Double {
            // can the pi atoms be matched without this bond?
            let pruned: Vec<Vec<(usize, usize)>> = cand
                .iter()
                .map(|l| l.iter().copied().filter(|&(_, e)| e != bi).collect())
                .collect();
            match_all(&pruned, &pi, &mut mate, &mut chosen)
        } else {
            // can the pi atoms be matched with this bond forced in?
            mate[b.a] = Some(b.b);
            mate[b.b] = Some(b.a);
            match_all(&cand, &pi, &mut mate, &mut chosen)
        };
        resonant[bi] = feasible;
    }
    resonant
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn double_count(g: &MolecularGraph) -> usize {
        g.bonds().iter().filter(|b| b.order == BondOrder::Double).count()
    }

    #[test]
    fn benzene_alternates() {
        let g = kekulize(&parse_smiles("c1ccccc1").unwrap()).unwrap();
        assert!(g.is_kekulized());
        assert_eq!(double_count(&g), 3);
        assert_eq!(g.bonds().len() - double_count(&g), 3);
        // each carbon has exactly one double bond
        let mut per_atom = [0; 6];
        for b in g.bonds().iter().filter(|b| b.order == BondOrder::Double) {
            per_atom[b.a] += 1;
            per_atom[b.b] += 1;
        }
        assert_eq!(per_atom, [1; 6]);
        assert!(g.atoms().iter().all(|a| a.hydrogens == 1));
    }

    #[test]
    fn non_aromatic_is_identity() {
        let g = parse_smiles("CC(=O)O").unwrap();
        assert_eq!(kekulize(&g).unwrap(), g);
    }

    #[test]
    fn odd_carbon_ring_fails() {
        let g = parse_smiles("c1cccc1").unwrap();
        assert!(matches!(kekulize(&g), Err(ChemError::Kekulization(_))));
    }

    #[test]
    fn resonance_is_independent_of_kekule_choice() {
        let benz = kekulize(&parse_smiles("c1ccccc1").unwrap()).unwrap();
        assert!(resonant_bonds(&benz).iter().all(|&r| r));
        let naph = kekulize(&parse_smiles("c1ccc2ccccc2c1").unwrap()).unwrap();
        assert!(resonant_bonds(&naph).iter().all(|&r| r));
        let hexene = parse_smiles("C1=CCCCC1").unwrap();
        assert!(resonant_bonds(&hexene).iter().all(|&r| !r));
        let ketone = parse_smiles("CC(=O)C").unwrap();
        assert!(resonant_bonds(&ketone).iter().all(|&r| !r));
        // two Kekule forms written explicitly
        let a = parse_smiles("C1=CC=CC=C1Cl").unwrap();
        let b = parse_smiles("C1C=CC=CC=1Cl").unwrap();
        assert_eq!(resonant_bonds(&a).iter().filter(|&&r| r).count(), 6);
        assert_eq!(resonant_bonds(&b).iter().filter(|&&r| r).count(), 6);
    }

    #[test]
    fn heteroaromatics() {
        for (smi, doubles) in [
            ("c1ccncc1", 3),
            ("c1cc[nH]c1", 2),
            ("c1ccoc1", 2),
            ("c1ccsc1", 2),
            ("Cn1ccnc1", 2),
            ("O=c1cccc[nH]1", 3),
            ("c1ccc2ccccc2c1", 5),
            ("c1ccc2[nH]ccc2c1", 4),
            ("c1ccc[n+](C)c1", 3),
        ] {
            let g = kekulize(&parse_smiles(smi).unwrap()).unwrap_or_else(|e| panic!("{smi}: {e}"));
            assert_eq!(double_count(&g), doubles, "{smi}");
        }
    }
}
