use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, InteractionPair};

/// train : valid : test
pub const SPLIT_RATIOS: [u32; 3] = [2, 2, 6];

/// Disjoint, sorted pair-index lists covering every pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_writer<W: Write>(&self, sink: W) -> Result<(), DatasetError> {
        serde_json::to_writer(sink, self).map_err(|e| DatasetError::Json(e.to_string()))
    }

    pub fn from_reader<R: Read>(source: R) -> Result<Self, DatasetError> {
        serde_json::from_reader(source).map_err(|e| DatasetError::Json(e.to_string()))
    }
}

const TRAIN: usize = 0;
const VALID: usize = 1;
const TEST: usize = 2;
/// Order in which leftover units and forced minimums are served.
const PRIORITY: [usize; 3] = [TRAIN, TEST, VALID];

/// Largest-remainder allocation of `n` items to (train, valid, test) under
/// `ratios`, then moved so train ≥ 1 and test ≥ 1.
pub fn allocate_class(n: usize, ratios: [u32; 3]) -> Result<[usize; 3], DatasetError> {
    let total: u64 = ratios.iter().map(|&r| u64::from(r)).sum();
    if total == 0 || ratios[TRAIN] == 0 || ratios[TEST] == 0 {
        return Err(DatasetError::InvalidParameter(format!("unusable split ratios {ratios:?}")));
    }
    // exact integer arithmetic: quota_s = n * r_s / total
    let mut alloc = [0usize; 3];
    let mut rem = [0u64; 3];
    for s in 0..3 {
        let num = n as u64 * u64::from(ratios[s]);
        alloc[s] = (num / total) as usize;
        rem[s] = num % total;
    }
    let mut left = n - alloc.iter().sum::<usize>();
    let mut order = PRIORITY;
    // stable sort keeps the priority order among equal remainders
    order.sort_by(|a, b| rem[*b].cmp(&rem[*a]));
    for &s in order.iter() {
        if left == 0 {
            break;
        }
        alloc[s] += 1;
        left -= 1;
    }
    for forced in [TRAIN, TEST] {
        if alloc[forced] > 0 {
            continue;
        }
        let donor = [VALID, TEST, TRAIN]
            .into_iter()
            .filter(|&d| d != forced)
            .find(|&d| alloc[d] > usize::from(d != VALID));
        match donor {
            Some(d) => {
                alloc[d] -= 1;
                alloc[forced] += 1;
            }
            None => return Err(DatasetError::InvalidParameter(format!("cannot split a class of {n}"))),
        }
    }
    Ok(alloc)
}

/// Per-event seeded shuffle followed by the largest-remainder allocation.
/// Events are visited in ascending order from one RNG stream.
pub fn stratified_split(
    pairs: &[InteractionPair],
    ratios: [u32; 3],
    seed: u64,
) -> Result<SplitAssignment, DatasetError> {
    let mut by_event: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_event.entry(p.event).or_default().push(i);
    }
    if let Some((&event, idx)) = by_event.iter().find(|(_, v)| v.len() < 2) {
        return Err(DatasetError::ClassTooSmall {
            event,
            count: idx.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitAssignment {
        seed,
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
    };
    for (_, mut idx) in by_event {
        let [tr, va, _] = allocate_class(idx.len(), ratios)?;
        idx.shuffle(&mut rng);
        out.train.extend_from_slice(&idx[..tr]);
        out.valid.extend_from_slice(&idx[tr..tr + va]);
        out.test.extend_from_slice(&idx[tr + va..]);
    }
    out.train.sort_unstable();
    out.valid.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}
