//! Deterministic synthetic connectome, used as a stand-in for a real
//! lateral-horn edge-list export in tests and the bundled fixture file.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::{EdgeList, EdgeRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticParams {
    pub seed: u64,
    pub n_neurons: usize,
    pub n_edges: usize,
    pub n_self_edges: usize,
}

/// The bundled `fixtures/synthetic_lh.csv`.
pub const BUNDLED: SyntheticParams = SyntheticParams {
    seed: 20230512,
    n_neurons: 50,
    n_edges: 400,
    n_self_edges: 5,
};

pub const BUNDLED_ROI: &str = "synthetic right lateral horn";

/// Known counts of a generated fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCounts {
    pub n_neurons: usize,
    pub n_records: usize,
    pub n_self_edges: usize,
    /// Distinct `(pre, post)` pairs with `pre != post`.
    pub n_off_diagonal: usize,
    pub max_off_diagonal_weight: u64,
}

/// Generates `n_edges` distinct pairs over `n_neurons` hemibrain-like body IDs.
///
/// A ring through all neurons guarantees every ID appears; `n_self_edges`
/// autapses and random pairs fill the rest. Weights are geometric-like
/// synapse counts starting at 1.
pub fn synthetic_edge_list(params: &SyntheticParams) -> (EdgeList, SyntheticCounts) {
    let n = params.n_neurons;
    assert!(n >= 2, "need at least two neurons");
    assert!(params.n_self_edges <= n);
    assert!(params.n_edges >= n + params.n_self_edges);
    assert!(params.n_edges <= n * (n - 1) + params.n_self_edges);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut ids = BTreeSet::new();
    while ids.len() < n {
        ids.insert(rng.random_range(1_000_000_000u64..6_000_000_000));
    }
    // Shuffle so the ring does not simply follow ID order.
    let mut ids: Vec<u64> = ids.into_iter().collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }

    let mut pairs: BTreeSet<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let mut selfs = BTreeSet::new();
    while selfs.len() < params.n_self_edges {
        selfs.insert(rng.random_range(0..n));
    }
    pairs.extend(selfs.iter().map(|&i| (i, i)));
    while pairs.len() < params.n_edges {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            pairs.insert((a, b));
        }
    }

    let records: Vec<EdgeRecord> = pairs
        .iter()
        .map(|&(a, b)| {
            let u: f64 = rng.random();
            let weight = 1 + (-(1.0 - u).ln() * 6.0).floor() as u64;
            EdgeRecord {
                pre_id: ids[a],
                post_id: ids[b],
                weight,
            }
        })
        .collect();
    let list = EdgeList::from_records(records, Some(BUNDLED_ROI.to_string()))
        .expect("generated weights are positive");
    let counts = SyntheticCounts {
        n_neurons: n,
        n_records: list.records.len(),
        n_self_edges: params.n_self_edges,
        n_off_diagonal: params.n_edges - params.n_self_edges,
        max_off_diagonal_weight: list
            .records
            .iter()
            .filter(|r| r.pre_id != r.post_id)
            .map(|r| r.weight)
            .max()
            .unwrap_or(0),
    };
    (list, counts)
}

pub fn synthetic_csv(params: &SyntheticParams) -> String {
    let (list, _) = synthetic_edge_list(params);
    let mut buf = Vec::new();
    list.write_csv(&mut buf)
        .expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv is ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_hold() {
        let (list, counts) = synthetic_edge_list(&BUNDLED);
        assert_eq!(counts.n_records, 400);
        assert_eq!(list.body_ids().len(), 50);
        assert_eq!(list.self_edge_count(), 5);
        assert_eq!(counts.n_off_diagonal, 395);
    }

    #[test]
    fn deterministic() {
        assert_eq!(synthetic_csv(&BUNDLED), synthetic_csv(&BUNDLED));
    }
}
