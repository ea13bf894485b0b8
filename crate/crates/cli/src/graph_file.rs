//! Causal graph JSON files.
//!
//! ```json
//! {
//!   "nodes": [{"name": "Z"}, {"name": "X"}, {"name": "T"}, {"name": "U", "observed": false}],
//!   "edges": [["Z", "X"], ["Z", "T"], ["X", "T"]]
//! }
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use hazcause_core::{CausalDag, GraphError};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum GraphFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{position}: {message}")]
    Invalid { position: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn invalid(position: impl Into<String>, message: impl Into<String>) -> GraphFileError {
    GraphFileError::Invalid { position: position.into(), message: message.into() }
}

pub fn parse_graph(text: &str) -> Result<CausalDag, GraphFileError> {
    let root: Value = serde_json::from_str(text).map_err(|e| GraphFileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = root.as_object().ok_or_else(|| invalid("$", "expected an object with `nodes` and `edges`"))?;
    if let Some(key) = obj.keys().find(|k| *k != "nodes" && *k != "edges") {
        return Err(invalid(key.as_str(), "unknown key"));
    }

    let raw_nodes = obj
        .get("nodes")
        .ok_or_else(|| invalid("nodes", "missing"))?
        .as_array()
        .ok_or_else(|| invalid("nodes", "expected an array"))?;
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    let mut seen = BTreeSet::new();
    for (k, node) in raw_nodes.iter().enumerate() {
        let at = format!("nodes[{k}]");
        let (name, observed) = match node {
            Value::String(s) => (s.clone(), true),
            Value::Object(o) => {
                if let Some(key) = o.keys().find(|k| *k != "name" && *k != "observed") {
                    return Err(invalid(format!("{at}.{key}"), "unknown key"));
                }
                let name = o
                    .get("name")
                    .ok_or_else(|| invalid(&at, "missing `name`"))?
                    .as_str()
                    .ok_or_else(|| invalid(format!("{at}.name"), "expected a string"))?;
                let observed = match o.get("observed") {
                    None => true,
                    Some(v) => v.as_bool().ok_or_else(|| invalid(format!("{at}.observed"), "expected true or false"))?,
                };
                (name.to_string(), observed)
            }
            _ => return Err(invalid(at, "expected an object or a string")),
        };
        if name.is_empty() {
            return Err(invalid(format!("{at}.name"), "empty node name"));
        }
        if !seen.insert(name.clone()) {
            return Err(invalid(format!("{at}.name"), format!("duplicate node `{name}`")));
        }
        nodes.push((name, observed));
    }

    let raw_edges = match obj.get("edges") {
        None => &[][..],
        Some(v) => v.as_array().ok_or_else(|| invalid("edges", "expected an array"))?.as_slice(),
    };
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (k, edge) in raw_edges.iter().enumerate() {
        let at = format!("edges[{k}]");
        let pair = edge
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| invalid(&at, "expected a [parent, child] pair"))?;
        let mut ends = [String::new(), String::new()];
        for (j, end) in pair.iter().enumerate() {
            let name = end.as_str().ok_or_else(|| invalid(format!("{at}[{j}]"), "expected a node name"))?;
            if !seen.contains(name) {
                return Err(invalid(format!("{at}[{j}]"), format!("unknown node `{name}`")));
            }
            ends[j] = name.to_string();
        }
        let [parent, child] = ends;
        if parent == child {
            return Err(invalid(at, format!("self-loop on `{parent}`")));
        }
        edges.push((parent, child));
    }
    Ok(CausalDag::new(nodes, edges)?)
}

pub fn load_graph(path: &Path) -> Result<CausalDag, GraphFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| GraphFileError::Io { path: path.display().to_string(), source })?;
    parse_graph(&text)
}
