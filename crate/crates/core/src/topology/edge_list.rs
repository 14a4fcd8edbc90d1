use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use super::TopologyError;

pub const EDGE_LIST_HEADER: &str = "pre_body_id,post_body_id,weight";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRecord {
    pub pre_id: u64,
    pub post_id: u64,
    /// Synapse count, at least one.
    pub weight: u64,
}

/// Validated connectome edges, one record per distinct `(pre, post)` pair,
/// sorted by `(pre_id, post_id)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub records: Vec<EdgeRecord>,
    pub roi_label: Option<String>,
}

impl EdgeList {
    /// Sums duplicate pairs. Fails on an empty list or a zero weight.
    pub fn from_records(
        records: Vec<EdgeRecord>,
        roi_label: Option<String>,
    ) -> Result<EdgeList, TopologyError> {
        if records.is_empty() {
            return Err(TopologyError::EmptyInput);
        }
        let mut merged: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.weight == 0 {
                return Err(TopologyError::Validation {
                    line: i + 1,
                    message: "weight must be at least 1".into(),
                });
            }
            *merged.entry((r.pre_id, r.post_id)).or_default() += r.weight;
        }
        Ok(EdgeList {
            records: merged
                .into_iter()
                .map(|((pre_id, post_id), weight)| EdgeRecord {
                    pre_id,
                    post_id,
                    weight,
                })
                .collect(),
            roi_label,
        })
    }

    /// Union of pre and post IDs, ascending.
    pub fn body_ids(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self
            .records
            .iter()
            .flat_map(|r| [r.pre_id, r.post_id])
            .collect();
        set.into_iter().collect()
    }

    pub fn self_edge_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.pre_id == r.post_id)
            .count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{EDGE_LIST_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{},{},{}", r.pre_id, r.post_id, r.weight)?;
        }
        out.flush()
    }
}

/// Parses the `pre_body_id,post_body_id,weight` CSV format (LF or CRLF).
pub fn parse_edge_list<R: BufRead>(
    source: R,
    roi_label: Option<String>,
) -> Result<EdgeList, TopologyError> {
    let mut lines = source.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(TopologyError::EmptyInput),
    };
    let header = header.trim_start_matches('\u{feff}').trim();
    if header != EDGE_LIST_HEADER {
        return Err(TopologyError::Parse {
            line: 1,
            message: format!("expected header `{EDGE_LIST_HEADER}`, found `{header}`"),
        });
    }

    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(TopologyError::Parse {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let id = |s: &str, name: &str| {
            s.parse::<u64>().map_err(|e| TopologyError::Parse {
                line: line_no,
                message: format!("bad {name} `{s}`: {e}"),
            })
        };
        let pre_id = id(fields[0], "pre_body_id")?;
        let post_id = id(fields[1], "post_body_id")?;
        let weight: i64 = fields[2].parse().map_err(|e| TopologyError::Parse {
            line: line_no,
            message: format!("bad weight `{}`: {e}", fields[2]),
        })?;
        if weight < 1 {
            return Err(TopologyError::Validation {
                line: line_no,
                message: format!("weight must be positive, found {weight}"),
            });
        }
        records.push(EdgeRecord {
            pre_id,
            post_id,
            weight: weight as u64,
        });
    }
    EdgeList::from_records(records, roi_label)
}
