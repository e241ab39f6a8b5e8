//! Undirected weighted graphs and their ingestion.
//!
//! A [`Graph`] stores every unordered node pair at most once. Parallel edges
//! are merged into one weighted edge when the graph is built, and a self-loop
//! contributes twice its weight to the degree of its node, so the degrees
//! always sum to twice the total edge weight.

mod edge_list;
mod gml;

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use edge_list::parse_edge_list;
pub use gml::parse_gml;

/// One stored undirected edge, `source <= target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }

    /// The endpoint opposite to `node`.
    pub fn other(&self, node: usize) -> usize {
        if self.source == node {
            self.target
        } else {
            self.source
        }
    }
}

/// What happened while turning input text into a [`Graph`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub nodes: usize,
    pub edges: usize,
    pub duplicates_merged: usize,
    pub self_loops: usize,
    pub isolated_dropped: Vec<String>,
    pub warnings: Vec<String>,
}

/// Immutable undirected weighted graph with dense `0..n` node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    labels: Vec<String>,
    edges: Vec<Edge>,
    degrees: Vec<f64>,
    // (neighbor, edge index) per node; a self-loop is listed once.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Builds a graph on nodes `0..n` labelled by their index. Duplicate
    /// pairs are merged; nodes without edges are kept.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
        let mut builder = GraphBuilder::new();
        for i in 0..n {
            builder.add_node(&i.to_string());
        }
        for &(u, v, w) in edges {
            if u >= n {
                return Err(Error::NodeOutOfRange { id: u, n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { id: v, n });
            }
            builder.add_edge(u, v, w)?;
        }
        Ok(builder.build_keep_isolated())
    }

    /// Unit-weight convenience wrapper around [`Graph::from_weighted_edges`].
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Graph::from_weighted_edges(n, &weighted)
    }

    fn assemble(labels: Vec<String>, edges: Vec<Edge>) -> Graph {
        let n = labels.len();
        let mut degrees = vec![0.0; n];
        let mut adjacency = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            if e.is_self_loop() {
                degrees[e.source] += 2.0 * e.weight;
                adjacency[e.source].push((e.source, idx));
            } else {
                degrees[e.source] += e.weight;
                degrees[e.target] += e.weight;
                adjacency[e.source].push((e.target, idx));
                adjacency[e.target].push((e.source, idx));
            }
        }
        Graph {
            labels,
            edges,
            degrees,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Map from label to node id.
    pub fn label_index(&self) -> HashMap<&str, usize> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect()
    }

    /// Weighted degree of `i`; self-loops count twice.
    pub fn weighted_degree(&self, i: usize) -> Result<f64> {
        self.degrees.get(i).copied().ok_or(Error::NodeOutOfRange {
            id: i,
            n: self.node_count(),
        })
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `(neighbor, edge index)` pairs incident to `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Sum of all weighted degrees (twice the total edge weight).
    pub fn volume(&self) -> f64 {
        self.degrees.iter().sum()
    }

    /// Weight between `i` and `j`, or 0 when they are not adjacent.
    pub fn weight_between(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .iter()
            .find(|&&(nb, _)| nb == j)
            .map_or(0.0, |&(_, e)| self.edges[e].weight)
    }

    /// Same topology with every weight set to 1.
    pub fn binarized(&self) -> Graph {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { weight: 1.0, ..*e })
            .collect();
        Graph::assemble(self.labels.clone(), edges)
    }

    /// Subgraph induced by `nodes`; node `k` of the result is `nodes[k]` of
    /// `self`. Nodes left without edges are kept.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.node_count()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let labels = nodes.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| local[e.source] != usize::MAX && local[e.target] != usize::MAX)
            .map(|e| {
                let (a, b) = (local[e.source], local[e.target]);
                Edge {
                    source: a.min(b),
                    target: a.max(b),
                    weight: e.weight,
                }
            })
            .collect();
        Graph::assemble(labels, edges)
    }

    /// Connected-component id per node, numbered in order of first node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(nb, _) in &self.adjacency[v] {
                    if comp[nb] == usize::MAX {
                        comp[nb] = next;
                        stack.push(nb);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Serializes as `label label weight` lines, readable by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{} {} {}",
                self.labels[e.source], self.labels[e.target], e.weight
            );
        }
        out
    }
}

/// Incremental construction with duplicate merging.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    pairs: HashMap<(usize, usize), usize>,
    duplicates: usize,
    warnings: Vec<String>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `label`, creating the node on first sight.
    pub fn add_node(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<()> {
        let n = self.labels.len();
        for id in [u, v] {
            if id >= n {
                return Err(Error::NodeOutOfRange { id, n });
            }
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "edge weight must be positive and finite, got {weight}"
            )));
        }
        let key = (u.min(v), u.max(v));
        match self.pairs.get(&key) {
            Some(&idx) => {
                self.edges[idx].weight += weight;
                self.duplicates += 1;
            }
            None => {
                self.pairs.insert(key, self.edges.len());
                self.edges.push(Edge {
                    source: key.0,
                    target: key.1,
                    weight,
                });
            }
        }
        Ok(())
    }

    fn build_keep_isolated(self) -> Graph {
        Graph::assemble(self.labels, self.edges)
    }

    /// Finishes the graph, dropping nodes that have no incident edge.
    pub fn build(mut self) -> (Graph, IngestReport) {
        let n = self.labels.len();
        let mut touched = vec![false; n];
        for e in &self.edges {
            touched[e.source] = true;
            touched[e.target] = true;
        }
        let mut remap = vec![usize::MAX; n];
        let mut labels = Vec::with_capacity(n);
        let mut dropped = Vec::new();
        for (i, label) in self.labels.into_iter().enumerate() {
            if touched[i] {
                remap[i] = labels.len();
                labels.push(label);
            } else {
                self.warnings
                    .push(format!("isolated node {label:?} dropped"));
                dropped.push(label);
            }
        }
        let edges: Vec<Edge> = self
            .edges
            .into_iter()
            .map(|e| Edge {
                source: remap[e.source],
                target: remap[e.target],
                weight: e.weight,
            })
            .collect();
        let self_loops = edges.iter().filter(|e| e.is_self_loop()).count();
        let graph = Graph::assemble(labels, edges);
        let report = IngestReport {
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            duplicates_merged: self.duplicates,
            self_loops,
            isolated_dropped: dropped,
            warnings: self.warnings,
        };
        (graph, report)
    }
}
