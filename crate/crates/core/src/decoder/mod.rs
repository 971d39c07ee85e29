//! Exact subgraph selection.
//!
//! A feasible selection is a set of instance edges forming a tree (or
//! forest) hanging from node 0: every selected edge's endpoints are
//! selected, every selected node other than 0 has exactly one selected
//! incoming edge, and every selected node is reachable from 0. With a
//! size limit `L` exactly `L` edges are selected, which is the same as
//! selecting `L` content nodes. The objective is the sum of selected node
//! and edge scores; node 0 never contributes.
//!
//! Among optimal selections the one returned is the lexicographically
//! smallest edge set: scanning edges in `(source, target)` order, the
//! first edge where two optima disagree belongs to the winner.

mod search;
mod text;

pub use text::{dump_instance, load_instance};

use crate::amr::AmrGraph;
use crate::source_graph::{collapse_fragments, SourceGraph, ROOT_LABEL};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, VecDeque};

/// Tolerance for comparing objective values.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("no feasible subgraph with {size} edges")]
    Infeasible { size: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("{0} is not part of the instance")]
    UnknownElement(String),
    #[error("invalid subgraph: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpInstance {
    node_scores: Vec<f64>,
    /// Sorted by `(source, target)`.
    edges: Vec<(usize, usize)>,
    edge_scores: Vec<f64>,
    edge_lookup: HashMap<(usize, usize), usize>,
    size_limit: Option<usize>,
    root_out_cap: Option<usize>,
    labels: Vec<String>,
}

impl IlpInstance {
    /// Node 0 is ROOT; its score is ignored. Edges into ROOT, self loops,
    /// duplicate pairs and non-finite scores are rejected.
    pub fn new(node_scores: Vec<f64>, edges: impl IntoIterator<Item = ((usize, usize), f64)>) -> Result<Self, DecodeError> {
        let n = node_scores.len();
        if n == 0 {
            return Err(DecodeError::InvalidInstance("an instance needs a ROOT node".into()));
        }
        if let Some(i) = node_scores.iter().position(|s| !s.is_finite()) {
            return Err(DecodeError::InvalidInstance(format!("node {i} has a non-finite score")));
        }
        let mut scored: Vec<((usize, usize), f64)> = edges.into_iter().collect();
        scored.sort_by_key(|&(p, _)| p);
        for w in scored.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DecodeError::InvalidInstance(format!("duplicate edge {:?}", w[0].0)));
            }
        }
        for &((i, j), s) in &scored {
            if i >= n || j >= n {
                return Err(DecodeError::InvalidInstance(format!("edge {i}->{j} outside {n} nodes")));
            }
            if i == j {
                return Err(DecodeError::InvalidInstance(format!("self loop on {i}")));
            }
            if j == 0 {
                return Err(DecodeError::InvalidInstance(format!("edge {i}->0 enters ROOT")));
            }
            if !s.is_finite() {
                return Err(DecodeError::InvalidInstance(format!("edge {i}->{j} has a non-finite score")));
            }
        }
        let edges: Vec<(usize, usize)> = scored.iter().map(|&(p, _)| p).collect();
        let edge_lookup = edges.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        labels[0] = ROOT_LABEL.to_string();
        Ok(IlpInstance {
            node_scores,
            edges,
            edge_scores: scored.iter().map(|&(_, s)| s).collect(),
            edge_lookup,
            size_limit: None,
            root_out_cap: None,
            labels,
        })
    }

    pub fn with_size_limit(mut self, size: Option<usize>) -> Self {
        self.size_limit = size;
        self
    }

    /// Caps how many edges leaving ROOT may be selected.
    pub fn with_root_out_cap(mut self, cap: Option<usize>) -> Self {
        self.root_out_cap = cap;
        self
    }

    /// Node labels for cost computations; must be one per node.
    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.node_scores.len(), "one label per node");
        self.labels = labels;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.node_scores.len()
    }

    pub fn node_scores(&self) -> &[f64] {
        &self.node_scores
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_scores(&self) -> &[f64] {
        &self.edge_scores
    }

    pub fn edge_score(&self, i: usize, j: usize) -> Option<f64> {
        self.edge_lookup.get(&(i, j)).map(|&k| self.edge_scores[k])
    }

    pub fn size_limit(&self) -> Option<usize> {
        self.size_limit
    }

    pub fn root_out_cap(&self) -> Option<usize> {
        self.root_out_cap
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_lookup.get(&(i, j)).copied()
    }

    /// A copy whose node and edge scores are replaced.
    pub fn with_scores(&self, node_scores: Vec<f64>, edge_scores: Vec<f64>) -> Result<Self, DecodeError> {
        if node_scores.len() != self.num_nodes() || edge_scores.len() != self.edges.len() {
            return Err(DecodeError::InvalidInstance("score vector lengths differ".into()));
        }
        let inst = IlpInstance::new(node_scores, self.edges.iter().copied().zip(edge_scores))?;
        Ok(inst
            .with_size_limit(self.size_limit)
            .with_root_out_cap(self.root_out_cap)
            .with_labels(self.labels.clone()))
    }
}

/// Selected content nodes (never 0) and edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subgraph {
    pub nodes: BTreeSet<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl Subgraph {
    pub fn from_edges(edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        Subgraph {
            nodes: edges.iter().map(|&(_, j)| j).collect(),
            edges,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    pub fn root_out_degree(&self) -> usize {
        self.edges.iter().filter(|e| e.0 == 0).count()
    }
}

/// Sum of selected node and edge scores.
pub fn score(sub: &Subgraph, inst: &IlpInstance) -> Result<f64, DecodeError> {
    let mut total = 0.0;
    for &v in &sub.nodes {
        if v == 0 || v >= inst.num_nodes() {
            return Err(DecodeError::UnknownElement(format!("node {v}")));
        }
        total += inst.node_scores[v];
    }
    for &(i, j) in &sub.edges {
        total += inst
            .edge_score(i, j)
            .ok_or_else(|| DecodeError::UnknownElement(format!("edge {i}->{j}")))?;
    }
    Ok(total)
}

/// Checks every selection constraint: selected edges have selected
/// endpoints, in-degree is one for every selected node, the size limit and
/// ROOT cap hold, and everything is reachable from ROOT.
pub fn check_structure(sub: &Subgraph, inst: &IlpInstance) -> Result<(), DecodeError> {
    let bad = |m: String| Err(DecodeError::Structure(m));
    if sub.nodes.contains(&0) {
        return bad("ROOT listed as a content node".into());
    }
    let mut indegree: HashMap<usize, usize> = HashMap::new();
    for &(i, j) in &sub.edges {
        if inst.edge_index(i, j).is_none() {
            return bad(format!("edge {i}->{j} not in instance"));
        }
        if (i != 0 && !sub.nodes.contains(&i)) || !sub.nodes.contains(&j) {
            return bad(format!("edge {i}->{j} has an unselected endpoint"));
        }
        *indegree.entry(j).or_default() += 1;
    }
    for &v in &sub.nodes {
        match indegree.get(&v).copied().unwrap_or(0) {
            1 => {}
            d => return bad(format!("node {v} has {d} incoming edges")),
        }
    }
    if let Some(l) = inst.size_limit {
        if sub.edges.len() != l {
            return bad(format!("{} edges selected, size limit {l}", sub.edges.len()));
        }
    }
    if let Some(cap) = inst.root_out_cap {
        if sub.root_out_degree() > cap {
            return bad(format!("ROOT has {} selected children, cap {cap}", sub.root_out_degree()));
        }
    }
    let mut seen: BTreeSet<usize> = BTreeSet::from([0]);
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &(i, j) in sub.edges.range((u, 0)..(u + 1, 0)) {
            debug_assert_eq!(i, u);
            if seen.insert(j) {
                queue.push_back(j);
            }
        }
    }
    if let Some(v) = sub.nodes.iter().find(|v| !seen.contains(v)) {
        return bad(format!("node {v} unreachable from ROOT"));
    }
    Ok(())
}

/// Highest-scoring feasible subgraph, ties broken toward the
/// lexicographically smallest edge set.
pub fn decode(inst: &IlpInstance) -> Result<Subgraph, DecodeError> {
    search::solve(inst)
}

/// Gold elements for cost-augmented decoding, keyed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub gold_nodes: BTreeSet<String>,
    /// Unlabeled `(source label, target label)` pairs, including ROOT
    /// edges to the root of every gold sentence.
    pub gold_edges: BTreeSet<(String, String)>,
    pub unit_cost: f64,
}

impl CostSpec {
    /// Collapses and merges gold summary graphs by label, attaching ROOT
    /// to each graph's root. Self loops created by merging are dropped.
    pub fn from_gold(gold: &[AmrGraph], unit_cost: f64) -> Self {
        let mut gold_nodes = BTreeSet::new();
        let mut gold_edges = BTreeSet::new();
        for g in gold {
            let g = collapse_fragments(g);
            let concept: HashMap<&str, &str> = g.nodes.iter().map(|n| (n.var.as_str(), n.concept.as_str())).collect();
            for n in &g.nodes {
                gold_nodes.insert(n.concept.clone());
            }
            for e in &g.edges {
                let (s, t) = (concept[e.source.as_str()], concept[e.target.as_str()]);
                if s != t {
                    gold_edges.insert((s.to_string(), t.to_string()));
                }
            }
            gold_edges.insert((ROOT_LABEL.to_string(), concept[g.root.as_str()].to_string()));
        }
        CostSpec {
            gold_nodes,
            gold_edges,
            unit_cost,
        }
    }

    /// The gold size: number of distinct unlabeled gold edges.
    pub fn edge_count(&self) -> usize {
        self.gold_edges.len()
    }

    pub fn node_in_gold(&self, label: &str) -> bool {
        self.gold_nodes.contains(label)
    }

    pub fn edge_in_gold(&self, source: &str, target: &str) -> bool {
        self.gold_edges.contains(&(source.to_string(), target.to_string()))
    }

    /// Hamming cost of a selection against the gold elements.
    pub fn cost(&self, sub: &Subgraph, labels: &[String]) -> f64 {
        let nodes: BTreeSet<&str> = sub.nodes.iter().map(|&v| labels[v].as_str()).collect();
        let edges: BTreeSet<(&str, &str)> = sub
            .edges
            .iter()
            .map(|&(i, j)| (labels[i].as_str(), labels[j].as_str()))
            .collect();
        let wrong_nodes = nodes.iter().filter(|l| !self.gold_nodes.contains(**l)).count();
        let missing_nodes = self.gold_nodes.iter().filter(|l| !nodes.contains(l.as_str())).count();
        let wrong_edges = edges.iter().filter(|(s, t)| !self.edge_in_gold(s, t)).count();
        let missing_edges = self
            .gold_edges
            .iter()
            .filter(|(s, t)| !edges.contains(&(s.as_str(), t.as_str())))
            .count();
        self.unit_cost * (wrong_nodes + missing_nodes + wrong_edges + missing_edges) as f64
    }

    /// Scores shifted so that decoding maximizes `score + sign * cost`,
    /// up to the constant `sign * unit_cost * |gold|`.
    pub fn shifted(&self, inst: &IlpInstance, sign: f64) -> Result<IlpInstance, DecodeError> {
        let labels = inst.labels();
        let d = sign * self.unit_cost;
        let mut node_scores = inst.node_scores().to_vec();
        for (v, s) in node_scores.iter_mut().enumerate().skip(1) {
            *s += if self.node_in_gold(&labels[v]) { -d } else { d };
        }
        let edge_scores = inst
            .edges()
            .iter()
            .zip(inst.edge_scores())
            .map(|(&(i, j), &s)| s + if self.edge_in_gold(&labels[i], &labels[j]) { -d } else { d })
            .collect();
        inst.with_scores(node_scores, edge_scores)
    }
}

/// Decodes with `score + sign * cost`.
pub fn cost_augmented_decode(inst: &IlpInstance, cost: &CostSpec, sign: f64) -> Result<Subgraph, DecodeError> {
    if !(cost.unit_cost >= 0.0 && cost.unit_cost.is_finite()) {
        return Err(DecodeError::InvalidInstance(format!(
            "unit cost {} must be finite and non-negative",
            cost.unit_cost
        )));
    }
    decode(&cost.shifted(inst, sign)?)
}

/// Scores 0 for gold-labelled nodes and edges and -1 otherwise, then
/// decodes with `size` edges: the closest reachable subgraph to the gold.
pub fn oracle_instance(sg: &SourceGraph, gold: &CostSpec, size: Option<usize>, root_out_cap: Option<usize>) -> IlpInstance {
    let node_scores = sg
        .nodes
        .iter()
        .map(|n| {
            if n.index == 0 || gold.node_in_gold(&n.label) {
                0.0
            } else {
                -1.0
            }
        })
        .collect();
    let edges = sg.edges.iter().map(|e| {
        let s = if gold.edge_in_gold(sg.label(e.source), sg.label(e.target)) {
            0.0
        } else {
            -1.0
        };
        (e.pair(), s)
    });
    IlpInstance::new(node_scores, edges)
        .expect("source graphs yield valid instances")
        .with_labels(sg.labels())
        .with_size_limit(size)
        .with_root_out_cap(root_out_cap)
}

pub fn oracle_decode(sg: &SourceGraph, gold: &[AmrGraph], size: usize) -> Result<Subgraph, DecodeError> {
    let spec = CostSpec::from_gold(gold, 1.0);
    decode(&oracle_instance(sg, &spec, Some(size), None))
}
