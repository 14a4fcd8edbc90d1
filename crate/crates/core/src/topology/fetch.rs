//! Optional retrieval of an edge list from a neuPrint-compatible HTTP endpoint.
//!
//! Issues one Cypher query through `POST <endpoint>/api/custom/custom` with a
//! bearer token. The response is either the JSON table neuPrint returns
//! (`{"columns": [...], "data": [[pre, post, weight], ...]}`) or, when the
//! server answers `text/csv`, the edge-list CSV format directly.

use std::time::Duration;

use serde::Deserialize;

use super::edge_list::{parse_edge_list, EdgeList, EdgeRecord};
use super::TopologyError;

#[derive(Debug, Clone)]
pub struct FetchRequest {
    /// Base URL, e.g. `https://neuprint.janelia.org`.
    pub endpoint: String,
    pub token: String,
    /// ROI property name, e.g. `LH(R)`.
    pub roi: String,
    pub dataset: String,
    pub timeout: Duration,
}

impl FetchRequest {
    pub fn new(
        endpoint: impl Into<String>,
        token: impl Into<String>,
        roi: impl Into<String>,
    ) -> Self {
        Self {
            endpoint: endpoint.into(),
            token: token.into(),
            roi: roi.into(),
            dataset: "hemibrain:v1.2.1".into(),
            timeout: Duration::from_secs(60),
        }
    }

    pub fn cypher(&self) -> Result<String, TopologyError> {
        if self.roi.is_empty() || self.roi.contains('`') {
            return Err(TopologyError::InvalidParameter(format!(
                "unusable ROI name `{}`",
                self.roi
            )));
        }
        Ok(format!(
            "MATCH (a:Neuron)-[c:ConnectsTo]->(b:Neuron) \
             WHERE a.`{roi}` AND b.`{roi}` \
             RETURN a.bodyId AS pre_body_id, b.bodyId AS post_body_id, c.weight AS weight \
             ORDER BY pre_body_id, post_body_id",
            roi = self.roi
        ))
    }
}

#[derive(Deserialize)]
struct CypherTable {
    columns: Vec<String>,
    data: Vec<Vec<serde_json::Value>>,
}

fn malformed(msg: impl Into<String>) -> TopologyError {
    TopologyError::MalformedResponse(msg.into())
}

/// Parses a neuPrint Cypher result table into an edge list.
pub fn parse_cypher_table(
    body: &str,
    roi_label: Option<String>,
) -> Result<EdgeList, TopologyError> {
    let table: CypherTable =
        serde_json::from_str(body).map_err(|e| malformed(format!("not a result table: {e}")))?;
    let col = |name: &str| {
        table
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| malformed(format!("missing column `{name}`")))
    };
    let (pre, post, weight) = (col("pre_body_id")?, col("post_body_id")?, col("weight")?);
    if table.data.is_empty() {
        return Err(TopologyError::EmptyInput);
    }
    let mut records = Vec::with_capacity(table.data.len());
    for (i, row) in table.data.iter().enumerate() {
        let field = |k: usize| {
            row.get(k)
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| malformed(format!("row {i}: column {k} is not an unsigned integer")))
        };
        let w = field(weight)?;
        if w == 0 {
            return Err(TopologyError::Validation {
                line: i + 1,
                message: "weight must be at least 1".into(),
            });
        }
        records.push(EdgeRecord {
            pre_id: field(pre)?,
            post_id: field(post)?,
            weight: w,
        });
    }
    EdgeList::from_records(records, roi_label)
}

/// Runs the query and returns the complete edge list, or an error; never a partial list.
pub fn fetch_edge_list(req: &FetchRequest) -> Result<EdgeList, TopologyError> {
    let cypher = req.cypher()?;
    let url = format!("{}/api/custom/custom", req.endpoint.trim_end_matches('/'));
    let body = serde_json::json!({ "cypher": cypher, "dataset": req.dataset }).to_string();

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(req.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut resp = agent
        .post(&url)
        .header("Authorization", &format!("Bearer {}", req.token))
        .header("Content-Type", "application/json")
        .send(body.as_str())
        .map_err(|e| TopologyError::Transport(e.to_string()))?;

    let status = resp.status().as_u16();
    if status == 401 || status == 403 {
        return Err(TopologyError::Auth(format!("server answered {status}")));
    }
    if !(200..300).contains(&status) {
        return Err(TopologyError::Transport(format!(
            "server answered {status}"
        )));
    }
    let is_csv = resp
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/csv"));
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| TopologyError::Transport(e.to_string()))?;

    let label = Some(req.roi.clone());
    if is_csv {
        parse_edge_list(text.as_bytes(), label).map_err(|e| match e {
            TopologyError::EmptyInput => TopologyError::EmptyInput,
            other => malformed(other.to_string()),
        })
    } else {
        parse_cypher_table(&text, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cypher_table_parsing() {
        let body = r#"{"columns":["pre_body_id","post_body_id","weight"],"data":[[1,2,3],[1,2,4],[2,1,1]]}"#;
        let e = parse_cypher_table(body, None).unwrap();
        assert_eq!(e.records.len(), 2);
        assert_eq!(e.records[0].weight, 7);
    }

    #[test]
    fn empty_table_is_empty_input() {
        let body = r#"{"columns":["pre_body_id","post_body_id","weight"],"data":[]}"#;
        assert!(matches!(
            parse_cypher_table(body, None),
            Err(TopologyError::EmptyInput)
        ));
    }

    #[test]
    fn malformed_tables() {
        for body in [
            "not json",
            r#"{"columns":["a","b","c"],"data":[[1,2,3]]}"#,
            r#"{"columns":["pre_body_id","post_body_id","weight"],"data":[[1,"x",3]]}"#,
        ] {
            assert!(matches!(
                parse_cypher_table(body, None),
                Err(TopologyError::MalformedResponse(_))
            ));
        }
    }

    #[test]
    fn roi_injection_rejected() {
        let req = FetchRequest::new("http://x", "t", "LH(R)` OR true //");
        assert!(req.cypher().is_err());
        assert!(FetchRequest::new("http://x", "t", "LH(R)")
            .cypher()
            .unwrap()
            .contains("a.`LH(R)`"));
    }
}
