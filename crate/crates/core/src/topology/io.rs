//! Sidecar file pair for reservoirs: `<name>.matrix.csv` holds the dense
//! row-major values, `<name>.meta.json` the metadata and content hash.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::matrix::{format_hash, parse_hash, ReservoirKind, ReservoirMatrix};
use super::TopologyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub n: usize,
    pub kind: ReservoirKind,
    pub roi_label: Option<String>,
    pub id_map: Vec<u64>,
    pub content_hash: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl MatrixMeta {
    pub fn of(m: &ReservoirMatrix) -> Self {
        MatrixMeta {
            n: m.n(),
            kind: m.kind(),
            roi_label: m.roi_label().map(str::to_owned),
            id_map: m.id_map().to_vec(),
            content_hash: format_hash(m.content_hash()),
            params: m.params().clone(),
        }
    }
}

/// Splits a user-supplied path into the `<prefix>` shared by both files.
pub fn matrix_prefix(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for suffix in [".matrix.csv", ".meta.json"] {
        if let Some(stripped) = s.strip_suffix(suffix) {
            return PathBuf::from(stripped);
        }
    }
    path.to_path_buf()
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn matrix_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    (
        with_suffix(prefix, ".matrix.csv"),
        with_suffix(prefix, ".meta.json"),
    )
}

pub fn write_matrix_csv<W: Write>(m: &ReservoirMatrix, mut out: W) -> std::io::Result<()> {
    let data = m.data();
    let mut line = String::new();
    for i in 0..m.n() {
        line.clear();
        for j in 0..m.n() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&data[(i, j)].to_string());
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

/// Writes both sidecar files and returns their paths.
pub fn write_matrix_files(
    m: &ReservoirMatrix,
    prefix: &Path,
) -> Result<(PathBuf, PathBuf), TopologyError> {
    let (csv_path, meta_path) = matrix_paths(prefix);
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e| TopologyError::File { path: p, source: e }
    };
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_matrix_csv(m, BufWriter::new(file)).map_err(io_err(&csv_path))?;
    let meta = serde_json::to_string_pretty(&MatrixMeta::of(m)).expect("meta serializes");
    fs::write(&meta_path, meta + "\n").map_err(io_err(&meta_path))?;
    Ok((csv_path, meta_path))
}

pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<DMatrix<f64>, TopologyError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| TopologyError::Parse {
                line: n + 1,
                message: format!("bad matrix entry: {e}"),
            })?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(TopologyError::EmptyInput);
    }
    if let Some(pos) = rows.iter().position(|r| r.len() != n) {
        return Err(TopologyError::Parse {
            line: pos + 1,
            message: format!("expected {n} columns, found {}", rows[pos].len()),
        });
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
}

/// Loads a matrix pair and checks the stored hash against the values.
pub fn read_matrix_files(path: &Path) -> Result<ReservoirMatrix, TopologyError> {
    let prefix = matrix_prefix(path);
    let (csv_path, meta_path) = matrix_paths(&prefix);
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e| TopologyError::File { path: p, source: e }
    };
    let meta_text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: MatrixMeta = serde_json::from_str(&meta_text).map_err(|e| TopologyError::Parse {
        line: e.line(),
        message: format!("{}: {e}", meta_path.display()),
    })?;
    let file = fs::File::open(&csv_path).map_err(io_err(&csv_path))?;
    let data = read_matrix_csv(BufReader::new(file))?;
    if data.nrows() != meta.n {
        return Err(TopologyError::Parse {
            line: 1,
            message: format!(
                "meta declares n = {} but matrix has {} rows",
                meta.n,
                data.nrows()
            ),
        });
    }
    let expected = parse_hash(&meta.content_hash).ok_or_else(|| TopologyError::Parse {
        line: 1,
        message: format!("bad content_hash `{}`", meta.content_hash),
    })?;
    let m = ReservoirMatrix::from_parts(data, meta.id_map, meta.kind, meta.roi_label, meta.params);
    if m.content_hash() != expected {
        return Err(TopologyError::HashMismatch {
            expected: meta.content_hash,
            actual: format_hash(m.content_hash()),
        });
    }
    Ok(m)
}
