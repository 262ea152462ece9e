//! Seeded toy corpus with the same shape as the real drug and interaction
//! tables. Drugs belong to structural families; a pair's event mostly
//! follows its family combination, so drug types carry real signal.

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::smiles_to_selfies;
use crate::dataset::{DrugRecord, EventCatalog};

struct Family {
    scaffold: &'static str,
    atc: char,
    class: &'static str,
    action: &'static str,
    use_for: &'static [&'static str],
}

const FAMILIES: [Family; 8] = [
    Family {
        scaffold: "c1ccc({0})cc1{1}",
        atc: 'N',
        class: "phenyl analgesic",
        action: "inhibits cyclooxygenase",
        use_for: &["mild pain", "fever", "headache"],
    },
    Family {
        scaffold: "c1cc({0})ncc1{1}",
        atc: 'J',
        class: "pyridine antibacterial",
        action: "blocks bacterial enzyme synthesis",
        use_for: &["urinary infections", "tuberculosis"],
    },
    Family {
        scaffold: "C1CC(C{1})N(CC1){0}",
        atc: 'R',
        class: "piperidine antihistamine",
        action: "antagonises histamine receptors",
        use_for: &["allergic rhinitis", "urticaria"],
    },
    Family {
        scaffold: "OC(=O)C({0})C{1}",
        atc: 'B',
        class: "carboxylic acid anticoagulant",
        action: "interferes with clotting factors",
        use_for: &["thrombosis", "embolism prevention"],
    },
    Family {
        scaffold: "C1CCC({0})CC1{1}",
        atc: 'C',
        class: "cyclohexyl antihypertensive",
        action: "relaxes vascular smooth muscle",
        use_for: &["hypertension", "angina"],
    },
    Family {
        scaffold: "c1ccc2cc({0})ccc2c1{1}",
        atc: 'L',
        class: "naphthalene antineoplastic",
        action: "intercalates into DNA",
        use_for: &["leukaemia", "solid tumours"],
    },
    Family {
        scaffold: "NC(=O)c1ccc({0})cc1{1}",
        atc: 'A',
        class: "benzamide antiemetic",
        action: "antagonises dopamine receptors in the gut",
        use_for: &["nausea", "gastroparesis"],
    },
    Family {
        scaffold: "CN(C)CC({0})O{1}",
        atc: 'N',
        class: "amino alcohol antidepressant",
        action: "inhibits monoamine reuptake",
        use_for: &["depression", "anxiety disorders"],
    },
];

const SUBSTITUENTS: [&str; 12] = ["C", "CC", "O", "N", "Cl", "F", "C(=O)O", "OC", "C(F)(F)F", "CCN", "C#N", "CCO"];

const EFFECTS: [&str; 12] = [
    "bleeding",
    "hypotension",
    "QTc prolongation",
    "serotonin syndrome",
    "hepatotoxicity",
    "nephrotoxicity",
    "sedation",
    "hyperkalaemia",
    "hypoglycaemia",
    "myopathy",
    "seizures",
    "bradycardia",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub drugs: usize,
    pub pairs: usize,
    pub events: usize,
    /// Probability that a pair's event follows its family combination.
    pub signal: f64,
    /// Fraction of drugs without an ATC code.
    pub missing_atc: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            drugs: 200,
            pairs: 2000,
            events: 30,
            signal: 0.85,
            missing_atc: 0.1,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub drugs: Vec<DrugRecord>,
    pub pairs: Vec<(String, String, usize)>,
    pub catalog: EventCatalog,
}

fn drug(i: usize, family: usize, rng: &mut ChaCha8Rng, missing_atc: f64) -> DrugRecord {
    let f = &FAMILIES[family];
    let r1 = *SUBSTITUENTS.choose(rng).expect("non-empty");
    let r2 = if rng.random_bool(0.5) {
        *SUBSTITUENTS.choose(rng).expect("non-empty")
    } else {
        ""
    };
    let smiles = f.scaffold.replace("{0}", r1).replace("{1}", r2);
    let id = format!("SD{i:04}");
    let use_for = f.use_for.choose(rng).expect("non-empty");
    let description = format!(
        "{id} is a {} that {}. It is indicated for {use_for} and is given {}.",
        f.class,
        f.action,
        ["orally", "intravenously", "once daily", "twice daily"][rng.random_range(0..4)]
    );
    let atc_code = (!rng.random_bool(missing_atc)).then(|| {
        format!(
            "{}{:02}{}{}{:02}",
            f.atc,
            rng.random_range(1..20),
            (b'A' + rng.random_range(0..8u8)) as char,
            (b'A' + rng.random_range(0..8u8)) as char,
            rng.random_range(1..30)
        )
    });
    DrugRecord {
        selfies: smiles_to_selfies(&smiles).ok().map(|s| s.to_string()),
        id,
        smiles,
        description,
        features: None,
        atc_code,
        drug_type: None,
    }
}

pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nf = FAMILIES.len();
    let families: Vec<usize> = (0..config.drugs).map(|i| i % nf).collect();
    let drugs: Vec<DrugRecord> = (0..config.drugs)
        .map(|i| drug(i, families[i], &mut rng, config.missing_atc))
        .collect();

    // Family combinations share the first two thirds of the events; the rest
    // only appear as noise and so end up rare.
    let structured = (config.events * 2 / 3).max(1);
    let mut combo_event = vec![vec![0; nf]; nf];
    for a in 0..nf {
        for b in a..nf {
            let e = rng.random_range(0..structured);
            combo_event[a][b] = e;
            combo_event[b][a] = e;
        }
    }
    let zipf: Vec<f64> = (0..config.events).map(|e| 1.0 / (e as f64 + 1.0)).collect();
    let total: f64 = zipf.iter().sum();
    let max_pairs = config.drugs * config.drugs.saturating_sub(1) / 2;
    let target = config.pairs.min(max_pairs);
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(target);
    while pairs.len() < target {
        let a = rng.random_range(0..config.drugs);
        let b = rng.random_range(0..config.drugs);
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        let event = if rng.random_bool(config.signal) {
            combo_event[families[a]][families[b]]
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut e = 0;
            while e + 1 < config.events && u >= zipf[e] {
                u -= zipf[e];
                e += 1;
            }
            (e + structured / 2) % config.events
        };
        pairs.push((drugs[a].id.clone(), drugs[b].id.clone(), event));
    }
    let labels: BTreeMap<usize, String> = (0..config.events)
        .map(|e| {
            let effect = EFFECTS[e % EFFECTS.len()];
            let verb = ["increased", "decreased"][(e / EFFECTS.len()) % 2];
            (
                e,
                format!("The risk or severity of {effect} can be {verb} when Drug a is combined with Drug b."),
            )
        })
        .collect();
    SyntheticCorpus {
        drugs,
        pairs,
        catalog: EventCatalog::new(labels),
    }
}
