use ddie_core::chem::{
    decode_selfies, ecfp4, encode_selfies, environment_identifiers, kekulize, morgan_fingerprint, parse_smiles,
    smiles_to_selfies, BondOrder, MolecularGraph,
};
use proptest::prelude::*;

const AROMATIC: &[&str] = &[
    "c1ccccc1",
    "c1ccncc1",
    "c1cc[nH]c1",
    "c1ccoc1",
    "c1ccsc1",
    "c1ccc2ccccc2c1",
    "c1ccc2[nH]ccc2c1",
    "Cc1ccc(O)cc1",
    "O=c1cc[nH]cc1",
    "c1ncncn1",
    "n1ccccc1-c1ccccc1",
    "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
];

fn corpus_smiles() -> Vec<String> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/selfies_corpus.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["molecules"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["smiles"].as_str().unwrap().to_string())
        .collect()
}

fn selfies_token() -> impl Strategy<Value = String> {
    let atoms = ["C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B", "NH1", "N+1", "O-1"];
    let prefixes = ["", "=", "#"];
    prop_oneof![
        4 => (0..prefixes.len(), 0..atoms.len()).prop_map(move |(p, a)| format!("[{}{}]", prefixes[p], atoms[a])),
        1 => (0..prefixes.len(), 1..=3usize).prop_map(move |(p, w)| format!("[{}Branch{w}]", prefixes[p])),
        1 => (0..prefixes.len(), 1..=2usize).prop_map(move |(p, w)| format!("[{}Ring{w}]", prefixes[p])),
    ]
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut state = seed | 1;
    for i in (1..n).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        perm.swap(i, (state % (i as u64 + 1)) as usize);
    }
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn smiles_parser_never_panics(s in "[CNOScnos0-9()=#\\[\\]+\\-@H.%BrClFIPb]{0,40}") {
        let _ = parse_smiles(&s);
    }

    #[test]
    fn any_token_sequence_decodes_to_a_valid_graph(
        first in 0usize..4,
        tokens in prop::collection::vec(selfies_token(), 0..30),
    ) {
        let sf = format!("{}{}", ["[C]", "[N]", "[O]", "[S]"][first], tokens.concat());
        let g = decode_selfies(&sf).expect("well-formed token sequences always decode");
        prop_assert!(g.validate().is_ok());
        prop_assert!(g.is_kekulized());
        let again = encode_selfies(&g).expect("decoded graphs stay in the subset");
        let back = decode_selfies(again.as_str()).unwrap();
        prop_assert!(back.is_isomorphic(&g), "{} -> {} changed the graph", sf, again.as_str());
    }

    #[test]
    fn fingerprints_ignore_atom_order(idx in 0usize..100, seed in any::<u64>()) {
        let smiles = &corpus_smiles()[idx];
        let g = kekulize(&parse_smiles(smiles).unwrap()).unwrap();
        let p = g.permuted(&shuffled(g.atom_count(), seed));
        prop_assert_eq!(
            morgan_fingerprint(&g, 2, 2048).unwrap().to_bytes(),
            morgan_fingerprint(&p, 2, 2048).unwrap().to_bytes()
        );
    }

    #[test]
    fn selfies_round_trip_survives_atom_order(idx in 0usize..100, seed in any::<u64>()) {
        let smiles = &corpus_smiles()[idx];
        let g = kekulize(&parse_smiles(smiles).unwrap()).unwrap();
        let p = g.permuted(&shuffled(g.atom_count(), seed));
        let back = decode_selfies(encode_selfies(&p).unwrap().as_str()).unwrap();
        prop_assert!(back.is_isomorphic(&g));
    }
}

#[test]
fn kekulized_aromatics_are_valid() {
    for s in AROMATIC {
        let g = parse_smiles(s).unwrap();
        let k = kekulize(&g).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert!(k.is_kekulized(), "{s}");
        k.validate().unwrap_or_else(|e| panic!("{s}: {e}"));
        assert_eq!(k.atom_count(), g.atom_count());
        let doubles = k.bonds().iter().filter(|b| b.order == BondOrder::Double).count();
        assert!(doubles > 0, "{s}");
    }
}

#[test]
fn aromatic_and_kekule_inputs_agree() {
    for (arom, kek) in [
        ("c1ccccc1", "C1=CC=CC=C1"),
        ("c1ccncc1", "C1=CC=NC=C1"),
        ("c1ccc2ccccc2c1", "C1=CC=C2C=CC=CC2=C1"),
        ("Cc1ccc(O)cc1", "CC1=CC=C(O)C=C1"),
    ] {
        assert_eq!(ecfp4(arom).unwrap(), ecfp4(kek).unwrap(), "{arom}");
        assert_eq!(smiles_to_selfies(arom).unwrap(), smiles_to_selfies(kek).unwrap(), "{arom}");
    }
}

#[test]
fn oxygen_environment_separates_ethanol_from_propane() {
    let ids = |s: &str| -> Vec<u64> {
        let g: MolecularGraph = kekulize(&parse_smiles(s).unwrap()).unwrap();
        environment_identifiers(&g, 2).unwrap().into_iter().flatten().collect()
    };
    let (cco, ccc) = (ids("CCO"), ids("CCC"));
    assert!(cco.iter().any(|i| !ccc.contains(i)));
    assert_ne!(ecfp4("CCO").unwrap(), ecfp4("CCC").unwrap());
}

#[test]
fn leading_branch_without_atom_is_empty() {
    assert!(decode_selfies("[Branch1]").is_err());
}

#[test]
fn whole_corpus_round_trips() {
    for s in corpus_smiles() {
        let g = kekulize(&parse_smiles(&s).unwrap()).unwrap();
        let sf = encode_selfies(&g).unwrap();
        assert!(decode_selfies(sf.as_str()).unwrap().is_isomorphic(&g), "{s}");
    }
}
