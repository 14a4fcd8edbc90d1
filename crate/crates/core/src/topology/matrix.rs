use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::edge_list::EdgeList;
use super::TopologyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReservoirKind {
    Connectome,
    Random,
}

/// Dense square reservoir. Entry `(i, j)` is the weight from node `i` to node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirMatrix {
    data: DMatrix<f64>,
    id_map: Vec<u64>,
    kind: ReservoirKind,
    roi_label: Option<String>,
    params: BTreeMap<String, serde_json::Value>,
    content_hash: u64,
}

/// 64-bit digest of a square matrix: SHA-256 over the side length and the
/// row-major IEEE-754 bit patterns, truncated to the first eight bytes.
pub fn content_hash(data: &DMatrix<f64>) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update((data.nrows() as u64).to_le_bytes());
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            hasher.update(data[(i, j)].to_bits().to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(head)
}

pub fn format_hash(hash: u64) -> String {
    format!("{hash:016x}")
}

pub fn parse_hash(text: &str) -> Option<u64> {
    u64::from_str_radix(text.trim_start_matches("0x"), 16).ok()
}

impl ReservoirMatrix {
    /// Wraps an explicit square matrix with no ID map or metadata.
    pub fn from_dense(data: DMatrix<f64>, kind: ReservoirKind) -> Result<Self, TopologyError> {
        if !data.is_square() || data.nrows() == 0 {
            return Err(TopologyError::InvalidParameter(format!(
                "reservoir must be square and non-empty, got {:?}",
                data.shape()
            )));
        }
        Ok(Self::from_parts(
            data,
            Vec::new(),
            kind,
            None,
            BTreeMap::new(),
        ))
    }

    pub(crate) fn from_parts(
        data: DMatrix<f64>,
        id_map: Vec<u64>,
        kind: ReservoirKind,
        roi_label: Option<String>,
        params: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        assert!(data.is_square(), "reservoir must be square");
        let content_hash = content_hash(&data);
        Self {
            data,
            id_map,
            kind,
            roi_label,
            params,
            content_hash,
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn id_map(&self) -> &[u64] {
        &self.id_map
    }

    pub fn kind(&self) -> ReservoirKind {
        self.kind
    }

    pub fn roi_label(&self) -> Option<&str> {
        self.roi_label.as_deref()
    }

    /// Parameters the matrix was created from (seed, density, source file, ...).
    pub fn params(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.params
    }

    pub fn content_hash(&self) -> u64 {
        self.content_hash
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Pads with isolated self-connected nodes, or keeps the first `n` nodes.
    ///
    /// Only meaningful for connectome matrices; padded nodes get body ID 0
    /// and a unit diagonal.
    pub fn resized(&self, n: usize) -> Result<ReservoirMatrix, TopologyError> {
        if n == 0 {
            return Err(TopologyError::InvalidParameter(
                "resize target must be positive".into(),
            ));
        }
        if n == self.n() {
            return Ok(self.clone());
        }
        let old = self.n();
        let mut data = DMatrix::zeros(n, n);
        let keep = old.min(n);
        data.view_mut((0, 0), (keep, keep))
            .copy_from(&self.data.view((0, 0), (keep, keep)));
        for i in keep..n {
            data[(i, i)] = 1.0;
        }
        let mut id_map: Vec<u64> = self.id_map.iter().copied().take(keep).collect();
        if !self.id_map.is_empty() {
            id_map.resize(n, 0);
        }
        let mut params = self.params.clone();
        params.insert("resized_from".into(), serde_json::json!(old));
        Ok(ReservoirMatrix::from_parts(
            data,
            id_map,
            self.kind,
            self.roi_label.clone(),
            params,
        ))
    }
}

/// Connectivity matrix from an edge list.
///
/// Nodes are ordered by ascending body ID. Off-diagonal summed weights are
/// divided by the largest off-diagonal weight, then every diagonal entry is
/// set to one (recorded self-edges are overwritten).
pub fn build_connectivity_matrix(edges: &EdgeList) -> Result<ReservoirMatrix, TopologyError> {
    if edges.records.is_empty() {
        return Err(TopologyError::EmptyInput);
    }
    let ids = edges.body_ids();
    let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let n = ids.len();
    let mut data = DMatrix::<f64>::zeros(n, n);
    for r in &edges.records {
        let (i, j) = (index[&r.pre_id], index[&r.post_id]);
        data[(i, j)] += r.weight as f64;
    }
    let max_off = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| data[(i, j)])
        .fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                data[(i, j)] = 1.0;
            } else if max_off > 0.0 {
                data[(i, j)] /= max_off;
            }
        }
    }
    let mut params = BTreeMap::new();
    params.insert("n_records".into(), serde_json::json!(edges.records.len()));
    params.insert("max_off_diagonal_weight".into(), serde_json::json!(max_off));
    Ok(ReservoirMatrix::from_parts(
        data,
        ids,
        ReservoirKind::Connectome,
        edges.roi_label.clone(),
        params,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub n: usize,
    pub density: f64,
    pub min: f64,
    pub max: f64,
    pub spectral_radius: f64,
}

const POWER_ITERATIONS: usize = 200;

/// Density, value range and a power-iteration estimate of the spectral radius
/// of `|W|`. Informational only; nothing rescales by it.
pub fn matrix_stats(m: &ReservoirMatrix) -> MatrixStats {
    let data = m.data();
    let n = m.n();
    let nonzero = data.iter().filter(|v| **v != 0.0).count();
    let min = data.iter().copied().fold(f64::INFINITY, f64::min);
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let abs = data.abs();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut radius = 0.0;
    let mut next = DVector::zeros(n);
    for _ in 0..POWER_ITERATIONS {
        next.gemv(1.0, &abs, &v, 0.0);
        let norm = next.norm();
        if norm == 0.0 {
            radius = 0.0;
            break;
        }
        radius = norm;
        v.copy_from(&next);
        v /= norm;
    }

    MatrixStats {
        n,
        density: nonzero as f64 / (n * n) as f64,
        min,
        max,
        spectral_radius: radius,
    }
}
