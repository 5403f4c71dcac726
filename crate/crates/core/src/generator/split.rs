use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{sub_seed, Example, GenConfig, SplitMode};

/// Stream index reserved for the split shuffle, away from example ids.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
}

impl Splits {
    pub fn parts(&self) -> [&[Example]; 3] {
        [&self.train, &self.val, &self.test]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("cannot split an empty dataset")]
    Empty,
    #[error("{groups} distinct keys cannot fill {splits} non-empty splits")]
    TooFewGroups { groups: usize, splits: usize },
}

pub fn split_key(example: &Example, mode: SplitMode) -> String {
    match mode {
        SplitMode::TypeDisjoint => example.target_type.to_string(),
        SplitMode::TermDisjoint => example.term.to_string(),
    }
}

/// Assigns whole key groups (target types or terms, per `cfg.split_mode`)
/// to train/validation/test so that no key crosses splits.
///
/// Every split with a positive ratio first receives one of the smallest
/// groups; the remaining groups go, largest first, to the split furthest
/// below its target size. Group order among equal sizes is a shuffle seeded
/// by `cfg.seed`. Examples keep their id order inside each split.
pub fn split_dataset(examples: &[Example], cfg: &GenConfig) -> Result<Splits, SplitError> {
    if examples.is_empty() {
        return Err(SplitError::Empty);
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        groups.entry(split_key(ex, cfg.split_mode)).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();

    let mut active: Vec<usize> = (0..3).filter(|&j| cfg.split_ratios[j] > 0.0).collect();
    if groups.len() < active.len() {
        return Err(SplitError::TooFewGroups {
            groups: groups.len(),
            splits: active.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, SPLIT_STREAM));
    groups.shuffle(&mut rng);
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

    let n = examples.len() as f64;
    let target: Vec<f64> = cfg.split_ratios.iter().map(|r| r * n).collect();
    let mut assigned: [Vec<usize>; 3] = Default::default();

    active.sort_by(|&a, &b| target[a].total_cmp(&target[b]).then(a.cmp(&b)));
    for &j in &active {
        let smallest = groups.pop().expect("checked group count");
        assigned[j].extend(smallest);
    }
    for group in groups {
        let j = *active
            .iter()
            .max_by(|&&a, &&b| {
                let da = target[a] - assigned[a].len() as f64;
                let db = target[b] - assigned[b].len() as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("at least one split has a positive ratio");
        assigned[j].extend(group);
    }

    let [train, val, test] = assigned.map(|mut idx| {
        idx.sort_unstable();
        idx.into_iter().map(|i| examples[i].clone()).collect::<Vec<_>>()
    });
    Ok(Splits { train, val, test })
}
