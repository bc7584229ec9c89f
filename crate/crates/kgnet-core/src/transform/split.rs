//! Train/valid/test split strategies.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rdf::{Term, Triple};

use super::TransformError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitStrategy {
    Random,
    /// Targets grouped by the object reached via this edge type; whole
    /// groups are assigned to one split.
    Community { edge_type: String },
}

impl SplitStrategy {
    pub fn name(&self) -> String {
        match self {
            SplitStrategy::Random => "random".to_string(),
            SplitStrategy::Community { edge_type } => format!("community:{edge_type}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Splits {
    pub train: BTreeSet<u32>,
    pub valid: BTreeSet<u32>,
    pub test: BTreeSet<u32>,
}

impl Splits {
    pub fn contains(&self, id: u32) -> bool {
        self.train.contains(&id) || self.valid.contains(&id) || self.test.contains(&id)
    }

    pub fn total(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }
}

/// Floor allocation with remainders assigned to train. Fewer than 3 ids
/// puts everything in train with a warning.
pub fn split_random(
    target_ids: &[u32],
    ratios: (f64, f64, f64),
    seed: u64,
    warnings: &mut Vec<String>,
) -> Splits {
    let n = target_ids.len();
    if n < 3 {
        warnings.push(format!("only {n} labeled targets; all assigned to train"));
        return Splits {
            train: target_ids.iter().copied().collect(),
            ..Splits::default()
        };
    }
    let mut shuffled: Vec<u32> = target_ids.to_vec();
    shuffled.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let n_valid = (n as f64 * ratios.1).floor() as usize;
    let n_test = (n as f64 * ratios.2).floor() as usize;
    let n_train = n - n_valid - n_test;
    if n_valid == 0 || n_test == 0 {
        warnings.push(format!(
            "degenerate split sizes (train={n_train}, valid={n_valid}, test={n_test})"
        ));
    }
    Splits {
        train: shuffled[..n_train].iter().copied().collect(),
        valid: shuffled[n_train..n_train + n_valid].iter().copied().collect(),
        test: shuffled[n_train + n_valid..].iter().copied().collect(),
    }
}

/// Groups targets by the object they reach via `edge_type`, then assigns
/// whole groups (largest first) to the split furthest below its ratio.
pub fn split_community(
    target_ids: &[u32],
    edge_type: &str,
    kg_prime: &BTreeSet<Triple>,
    ratios: (f64, f64, f64),
    key_of: impl Fn(u32) -> Term,
    warnings: &mut Vec<String>,
) -> Result<Splits, TransformError> {
    if !kg_prime
        .iter()
        .any(|t| t.predicate.as_iri() == Some(edge_type))
    {
        return Err(TransformError::CommunityEdgeAbsent(edge_type.to_string()));
    }

    // group key: smallest object reached via edge_type; isolated targets
    // form singleton groups keyed by themselves
    let mut groups: BTreeMap<Term, Vec<u32>> = BTreeMap::new();
    for &id in target_ids {
        let node = key_of(id);
        let community = kg_prime
            .iter()
            .filter(|t| t.subject == node && t.predicate.as_iri() == Some(edge_type))
            .map(|t| t.object.clone())
            .min()
            .unwrap_or_else(|| node.clone());
        groups.entry(community).or_default().push(id);
    }
    if groups.len() == 1 {
        warnings.push("single community group; all targets assigned to train".to_string());
        return Ok(Splits {
            train: target_ids.iter().copied().collect(),
            ..Splits::default()
        });
    }

    let mut ordered: Vec<(Term, Vec<u32>)> = groups.into_iter().collect();
    ordered.sort_by(|(ka, va), (kb, vb)| vb.len().cmp(&va.len()).then_with(|| ka.cmp(kb)));

    let total = target_ids.len() as f64;
    let mut splits = Splits::default();
    for (_, members) in ordered {
        let deficits = [
            ratios.0 - splits.train.len() as f64 / total,
            ratios.1 - splits.valid.len() as f64 / total,
            ratios.2 - splits.test.len() as f64 / total,
        ];
        let best = deficits
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.partial_cmp(b)
                    .unwrap()
                    // tie goes to the earlier split (train, valid, test)
                    .then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .unwrap();
        let bucket = match best {
            0 => &mut splits.train,
            1 => &mut splits.valid,
            _ => &mut splits.test,
        };
        bucket.extend(members);
    }
    Ok(splits)
}
