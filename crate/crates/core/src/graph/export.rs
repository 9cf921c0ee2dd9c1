use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ThresholdGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJsonNode {
    pub id: String,
    pub component: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coords: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJsonEdge {
    pub a: String,
    pub b: String,
    pub d: f64,
}

/// Serializable view of a [`ThresholdGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub threshold: f64,
    pub nodes: Vec<GraphJsonNode>,
    pub edges: Vec<GraphJsonEdge>,
}

impl GraphJson {
    /// `coords`, when given, is indexed by symbol position in the source
    /// distance matrix.
    pub fn new(graph: &ThresholdGraph, coords: Option<&[[f64; 3]]>) -> Self {
        let syms = graph.symbols();
        Self {
            threshold: graph.threshold(),
            nodes: graph
                .nodes()
                .iter()
                .zip(graph.labels())
                .map(|(&i, &label)| GraphJsonNode {
                    id: syms[i].clone(),
                    component: label,
                    coords: coords.map(|c| c[i]),
                })
                .collect(),
            edges: graph
                .edges()
                .iter()
                .map(|e| GraphJsonEdge {
                    a: syms[e.a].clone(),
                    b: syms[e.b].clone(),
                    d: e.d,
                })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

impl ThresholdGraph {
    /// Graphviz rendering; edge `len` is the distance.
    pub fn to_dot(&self) -> String {
        let syms = self.symbols();
        let mut s = String::from("graph asset_graph {\n");
        let _ = writeln!(s, "  label=\"T = {}\";", self.threshold());
        for (&i, &label) in self.nodes().iter().zip(self.labels()) {
            let _ = writeln!(s, "  \"{}\" [component={}];", escape(&syms[i]), label);
        }
        for e in self.edges() {
            let _ = writeln!(
                s,
                "  \"{}\" -- \"{}\" [len={}];",
                escape(&syms[e.a]),
                escape(&syms[e.b]),
                e.d
            );
        }
        s.push_str("}\n");
        s
    }

    pub fn write_dot(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_dot()).map_err(|e| Error::io(path, e))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
