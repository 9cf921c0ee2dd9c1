//! Threshold asset graphs.
//!
//! An edge joins two symbols whenever their distance is at or below the
//! threshold `T`; symbols without any edge are left out of the graph. The
//! connected components play the role of clusters, and sweeping `T` upward
//! shows how clusters form and merge.

mod dendrogram;
mod export;
mod union_find;

use rayon::prelude::*;
use serde::Serialize;

pub use dendrogram::{dendrogram_equivalence, Dendrogram, MergeStep};
pub use export::{GraphJson, GraphJsonEdge, GraphJsonNode};

use crate::error::{Error, Result};
use crate::returns::{MatrixKind, PairMatrix};
use union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub d: f64,
}

/// Graph at a single threshold. Node and edge indices refer to the symbol
/// order of the distance matrix it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGraph {
    threshold: f64,
    symbols: Vec<String>,
    nodes: Vec<usize>,
    edges: Vec<Edge>,
    labels: Vec<usize>,
}

impl ThresholdGraph {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Symbol indices with at least one incident edge, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Component label of each entry of [`nodes`](Self::nodes): the lowest
    /// symbol index in that component.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_components(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }

    /// Label of symbol `i`, or `None` when it has no edge.
    pub fn label_of(&self, i: usize) -> Option<usize> {
        self.nodes
            .binary_search(&i)
            .ok()
            .map(|k| self.labels[k])
    }
}

/// All pairs with `d <= threshold` become edges.
pub fn build_graph(dist: &PairMatrix, threshold: f64) -> Result<ThresholdGraph> {
    dist.expect_kind(MatrixKind::Distance)?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::invalid(format!("threshold must be >= 0, got {threshold}")));
    }
    let n = dist.len();
    let mut edges = Vec::new();
    let mut uf = UnionFind::new(n);
    let mut touched = vec![false; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist.get(i, j);
            if d <= threshold {
                edges.push(Edge { a: i, b: j, d });
                uf.union(i, j);
                touched[i] = true;
                touched[j] = true;
            }
        }
    }
    let all = uf.canonical_labels();
    let nodes: Vec<usize> = (0..n).filter(|&i| touched[i]).collect();
    let labels = nodes.iter().map(|&i| all[i]).collect();
    Ok(ThresholdGraph {
        threshold,
        symbols: dist.symbols().to_vec(),
        nodes,
        edges,
        labels,
    })
}

/// Connected components as sorted member lists, ordered by label.
pub fn components(graph: &ThresholdGraph) -> Vec<Vec<usize>> {
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    for (&node, &label) in graph.nodes.iter().zip(&graph.labels) {
        match out.iter_mut().find(|(l, _)| *l == label) {
            Some((_, members)) => members.push(node),
            None => out.push((label, vec![node])),
        }
    }
    out.sort_by_key(|(l, _)| *l);
    out.into_iter().map(|(_, m)| m).collect()
}

/// Previously distinct components that became one at `threshold`. Each group
/// lists the labels (lowest member index) of the components that merged;
/// isolated symbols count as singleton components labelled by themselves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeEvent {
    pub threshold: f64,
    pub groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub symbols: Vec<String>,
    pub thresholds: Vec<f64>,
    /// Per threshold, per symbol: component label or `None` when isolated.
    pub memberships: Vec<Vec<Option<usize>>>,
    pub component_counts: Vec<usize>,
    pub node_counts: Vec<usize>,
    pub merge_events: Vec<MergeEvent>,
    /// Smallest grid threshold at which each symbol gains an edge.
    pub first_connection: Vec<Option<f64>>,
    /// Smallest grid threshold at which every symbol sits in one component.
    pub full_connection: Option<f64>,
}

impl SweepResult {
    /// Components at grid position `k`.
    pub fn components_at(&self, k: usize) -> Vec<Vec<usize>> {
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (i, l) in self.memberships[k].iter().enumerate() {
            if let Some(l) = *l {
                match groups.iter_mut().find(|(g, _)| *g == l) {
                    Some((_, m)) => m.push(i),
                    None => groups.push((l, vec![i])),
                }
            }
        }
        groups.sort_by_key(|(l, _)| *l);
        groups.into_iter().map(|(_, m)| m).collect()
    }
}

/// Default grid: 0.1, 0.2, ..., 2.0.
pub fn default_grid() -> Vec<f64> {
    grid(0.1, 2.0, 0.1).expect("valid default grid")
}

/// Evenly spaced grid from `start` to `stop` inclusive. Values are computed
/// as `start + k * step` and rounded to 12 decimals to avoid drift.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || stop.is_nan() || start.is_nan() || stop < start {
        return Err(Error::invalid(format!("bad grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub fn sweep(dist: &PairMatrix, thresholds: &[f64]) -> Result<SweepResult> {
    dist.expect_kind(MatrixKind::Distance)?;
    if thresholds.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sweep grid must be strictly increasing"));
    }
    if thresholds.iter().any(|t| !(0.0..=2.0).contains(t)) {
        return Err(Error::invalid("sweep grid must lie within [0, 2]"));
    }
    let n = dist.len();
    let graphs: Vec<ThresholdGraph> = thresholds
        .par_iter()
        .map(|&t| build_graph(dist, t))
        .collect::<Result<_>>()?;

    let mut memberships = Vec::with_capacity(graphs.len());
    let mut merge_events = Vec::new();
    let mut first_connection: Vec<Option<f64>> = vec![None; n];
    let mut full_connection = None;
    let mut previous: Vec<usize> = (0..n).collect();
    for g in &graphs {
        let member: Vec<Option<usize>> = (0..n).map(|i| g.label_of(i)).collect();
        let full: Vec<usize> = member
            .iter()
            .enumerate()
            .map(|(i, l)| l.unwrap_or(i))
            .collect();

        let mut merged: Vec<(usize, Vec<usize>)> = Vec::new();
        for i in 0..n {
            match merged.iter_mut().find(|(l, _)| *l == full[i]) {
                Some((_, prev)) => {
                    if !prev.contains(&previous[i]) {
                        prev.push(previous[i]);
                    }
                }
                None => merged.push((full[i], vec![previous[i]])),
            }
        }
        let mut groups: Vec<Vec<usize>> = merged
            .into_iter()
            .filter(|(_, prev)| prev.len() > 1)
            .map(|(_, mut prev)| {
                prev.sort_unstable();
                prev
            })
            .collect();
        groups.sort();
        if !groups.is_empty() {
            merge_events.push(MergeEvent {
                threshold: g.threshold,
                groups,
            });
        }

        for &i in &g.nodes {
            first_connection[i].get_or_insert(g.threshold);
        }
        if full_connection.is_none() && n > 0 && g.nodes.len() == n && g.n_components() == 1 {
            full_connection = Some(g.threshold);
        }
        memberships.push(member);
        previous = full;
    }

    Ok(SweepResult {
        symbols: dist.symbols().to_vec(),
        thresholds: thresholds.to_vec(),
        component_counts: graphs.iter().map(ThresholdGraph::n_components).collect(),
        node_counts: graphs.iter().map(|g| g.nodes.len()).collect(),
        memberships,
        merge_events,
        first_connection,
        full_connection,
    })
}
