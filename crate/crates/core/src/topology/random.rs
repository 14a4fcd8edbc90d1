use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{ReservoirKind, ReservoirMatrix};
use super::TopologyError;

/// Random control reservoir: uniform `[0, 1)` values under a density mask.
///
/// Both arrays come from one ChaCha8 stream seeded with `seed`: the `n x n`
/// mask draws first (row-major), then the `n x n` values. Entry `(i, j)` is
/// kept when its mask draw is below `density`.
pub fn random_reservoir(
    n: usize,
    density: f64,
    seed: u64,
) -> Result<ReservoirMatrix, TopologyError> {
    if n == 0 {
        return Err(TopologyError::InvalidParameter(
            "n must be at least 1".into(),
        ));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(TopologyError::InvalidParameter(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let values: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let data: Vec<f64> = mask
        .iter()
        .zip(&values)
        .map(|(&m, &v)| if m < density { v } else { 0.0 })
        .collect();

    let mut params = BTreeMap::new();
    params.insert("n".into(), serde_json::json!(n));
    params.insert("density".into(), serde_json::json!(density));
    params.insert("seed".into(), serde_json::json!(seed));
    Ok(ReservoirMatrix::from_parts(
        DMatrix::from_row_slice(n, n, &data),
        Vec::new(),
        ReservoirKind::Random,
        None,
        params,
    ))
}
