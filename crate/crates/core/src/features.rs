//! Sparse binary node and edge features.
//!
//! Node feature names are unprefixed (`concept=dog`, `freq>2`). Edge
//! features of the edge itself start with `edge_`; features copied from
//! the endpoints start with `src_` and `tgt_`.
//!
//! Count features (`freq`, `edge_freq`, `edge_allfreq`) fire when the
//! count is strictly greater than the threshold. Real-valued statistics
//! (depth, position, span, label share) fire when the value is at least
//! the threshold.

use crate::decoder::{IlpInstance, Subgraph};
use crate::source_graph::{SourceGraph, NULL_LABEL};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub freq: Vec<f64>,
    pub depth: Vec<f64>,
    /// Relative sentence position, `index / num_sentences`.
    pub position: Vec<f64>,
    pub span: Vec<f64>,
    pub label_share: Vec<f64>,
    pub edge_freq: Vec<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            freq: vec![0.0, 1.0, 2.0, 5.0, 10.0],
            depth: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            position: vec![0.1, 0.2, 0.3, 0.5, 0.8],
            span: vec![1.0, 2.0, 3.0, 5.0, 8.0],
            label_share: vec![0.33, 0.66, 1.0],
            edge_freq: vec![0.0, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, list) in [
            ("freq", &self.freq),
            ("depth", &self.depth),
            ("position", &self.position),
            ("span", &self.span),
            ("label_share", &self.label_share),
            ("edge_freq", &self.edge_freq),
        ] {
            if list.iter().any(|t| !t.is_finite()) {
                return Err(format!("feature thresholds `{name}` must be finite"));
            }
        }
        Ok(())
    }

    /// Every name this configuration can emit for some node, except the
    /// open-ended `concept=` family.
    fn node_names(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        for &t in &self.freq {
            names.insert(format!("freq>{t}"));
        }
        for (list, stems) in [
            (&self.depth, ["depth_avg", "depth_min"]),
            (&self.position, ["pos_avg", "pos_first"]),
            (&self.span, ["span_avg", "span_max"]),
        ] {
            for &t in list {
                for stem in stems {
                    names.insert(format!("{stem}>={t}"));
                }
            }
        }
        names.insert("named_entity".into());
        names.insert("date_entity".into());
        names.insert("bias".into());
        names
    }

    fn is_node_name(&self, known: &BTreeSet<String>, name: &str) -> bool {
        known.contains(name) || name.strip_prefix("concept=").is_some_and(|l| !l.is_empty())
    }

    fn is_edge_name(&self, node_known: &BTreeSet<String>, name: &str) -> bool {
        if let Some(rest) = name.strip_prefix("src_").or_else(|| name.strip_prefix("tgt_")) {
            return rest != "bias" && self.is_node_name(node_known, rest) || name == "src_root";
        }
        let Some(rest) = name.strip_prefix("edge_") else {
            return false;
        };
        if let Some(l) = rest.strip_prefix("label1=").or_else(|| rest.strip_prefix("label2=")) {
            return !l.is_empty();
        }
        let matches = |stem: &str, op: &str, list: &[f64]| list.iter().any(|t| rest == format!("{stem}{op}{t}"));
        matches("label1_share", ">=", &self.label_share)
            || matches("label2_share", ">=", &self.label_share)
            || matches("freq", ">", &self.edge_freq)
            || matches("allfreq", ">", &self.edge_freq)
            || matches("pos_avg", ">=", &self.position)
            || matches("pos_first", ">=", &self.position)
            || rest == "expanded"
            || rest == "bias"
    }

    /// Weight names that no node or edge could produce under this
    /// configuration, for detecting a model trained with other settings.
    pub fn unknown_features(&self, w: &Weights) -> Vec<String> {
        let known = self.node_names();
        let mut out: Vec<String> = w
            .theta
            .keys()
            .filter(|n| !self.is_node_name(&known, n))
            .map(|n| format!("node:{n}"))
            .collect();
        out.extend(
            w.psi
                .keys()
                .filter(|n| !self.is_edge_name(&known, n))
                .map(|n| format!("edge:{n}")),
        );
        out
    }
}

/// Binary feature vector; a name present means value 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    names: BTreeSet<String>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.names.insert(name.into());
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn dot(&self, weights: &BTreeMap<String, f64>) -> f64 {
        self.names.iter().filter_map(|n| weights.get(n)).sum()
    }

    /// `name\tvalue` lines, sorted by name.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for n in &self.names {
            let _ = writeln!(s, "{n}\t1");
        }
        s
    }
}

impl<S: Into<String>> FromIterator<S> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        FeatureVector {
            names: iter.into_iter().map(Into::into).collect(),
        }
    }
}

/// θ for nodes, ψ for edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Weights {
    pub theta: BTreeMap<String, f64>,
    pub psi: BTreeMap<String, f64>,
}

impl Weights {
    pub fn is_zero(&self) -> bool {
        self.theta.values().chain(self.psi.values()).all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("ROOT carries no node features")]
    RootNode,
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("edge {0}->{1} not in graph")]
    UnknownEdge(usize, usize),
}

fn binarize(out: &mut FeatureVector, stem: &str, value: f64, thresholds: &[f64], strict: bool) {
    for &t in thresholds {
        if (strict && value > t) || (!strict && value >= t) {
            out.insert(format!("{stem}{}{t}", if strict { ">" } else { ">=" }));
        }
    }
}

fn relative(sentence: usize, num_sentences: usize) -> f64 {
    sentence as f64 / num_sentences.max(1) as f64
}

pub fn node_features(sg: &SourceGraph, v: usize, cfg: &FeatureConfig) -> Result<FeatureVector, FeatureError> {
    if v == 0 {
        return Err(FeatureError::RootNode);
    }
    let node = sg.nodes.get(v).ok_or(FeatureError::NodeOutOfRange(v))?;
    let mut f = FeatureVector::new();
    f.insert(format!("concept={}", node.label));
    let count = node.mentions.len();
    binarize(&mut f, "freq", count as f64, &cfg.freq, true);
    if count > 0 {
        let n = count as f64;
        let depths = node.mentions.iter().map(|m| m.depth as f64);
        binarize(&mut f, "depth_avg", depths.clone().sum::<f64>() / n, &cfg.depth, false);
        binarize(&mut f, "depth_min", depths.fold(f64::INFINITY, f64::min), &cfg.depth, false);
        let pos = node.mentions.iter().map(|m| relative(m.sentence, sg.num_sentences));
        binarize(&mut f, "pos_avg", pos.clone().sum::<f64>() / n, &cfg.position, false);
        binarize(&mut f, "pos_first", pos.fold(f64::INFINITY, f64::min), &cfg.position, false);
        let spans = node.mentions.iter().map(|m| m.span_len() as f64);
        binarize(&mut f, "span_avg", spans.clone().sum::<f64>() / n, &cfg.span, false);
        binarize(&mut f, "span_max", spans.fold(0.0, f64::max), &cfg.span, false);
    }
    if node.is_named_entity {
        f.insert("named_entity");
    }
    if node.is_date_entity {
        f.insert("date_entity");
    }
    f.insert("bias");
    Ok(f)
}

pub fn edge_features(sg: &SourceGraph, source: usize, target: usize, cfg: &FeatureConfig) -> Result<FeatureVector, FeatureError> {
    let edge = sg.edge(source, target).ok_or(FeatureError::UnknownEdge(source, target))?;
    let mut f = FeatureVector::new();
    if edge.expanded {
        f.insert(format!("edge_label1={NULL_LABEL}"));
        f.insert("edge_expanded");
    } else {
        for (rank, label) in edge.top_labels.iter().enumerate() {
            let k = rank + 1;
            f.insert(format!("edge_label{k}={label}"));
            binarize(
                &mut f,
                &format!("edge_label{k}_share"),
                edge.relative_frequency(label),
                &cfg.label_share,
                false,
            );
        }
    }
    let occurrences = edge.mention_sentences.len();
    binarize(&mut f, "edge_freq", occurrences as f64, &cfg.edge_freq, true);
    if occurrences > 0 {
        let pos = edge.mention_sentences.iter().map(|&s| relative(s, sg.num_sentences));
        binarize(
            &mut f,
            "edge_pos_avg",
            pos.clone().sum::<f64>() / occurrences as f64,
            &cfg.position,
            false,
        );
        binarize(
            &mut f,
            "edge_pos_first",
            pos.fold(f64::INFINITY, f64::min),
            &cfg.position,
            false,
        );
    }
    binarize(
        &mut f,
        "edge_allfreq",
        all_occurrences(sg, source, target) as f64,
        &cfg.edge_freq,
        true,
    );
    if source == 0 {
        f.insert("src_root");
    } else {
        for name in node_features(sg, source, cfg)?.iter().filter(|&n| n != "bias") {
            f.insert(format!("src_{name}"));
        }
    }
    for name in node_features(sg, target, cfg)?.iter().filter(|&n| n != "bias") {
        f.insert(format!("tgt_{name}"));
    }
    f.insert("edge_bias");
    Ok(f)
}

/// Unexpanded occurrences plus sentences that mention both endpoints
/// without connecting them.
fn all_occurrences(sg: &SourceGraph, source: usize, target: usize) -> usize {
    let edge = sg.edge(source, target).expect("checked by caller");
    if source == 0 {
        return edge.mention_sentences.len();
    }
    let with_edge: BTreeSet<usize> = edge.mention_sentences.iter().copied().collect();
    let shared = sg.nodes[source]
        .sentences()
        .intersection(&sg.nodes[target].sentences())
        .filter(|s| !with_edge.contains(s))
        .count();
    edge.mention_sentences.len() + shared
}

/// A source graph with every node and edge feature vector precomputed.
#[derive(Debug, Clone)]
pub struct FeaturizedGraph {
    pub graph: SourceGraph,
    /// Indexed by node; entry 0 (ROOT) is empty.
    pub node_features: Vec<FeatureVector>,
    /// Parallel to `graph.edges`.
    pub edge_features: Vec<FeatureVector>,
}

impl FeaturizedGraph {
    pub fn new(graph: SourceGraph, cfg: &FeatureConfig) -> Self {
        let mut node_feats = vec![FeatureVector::new()];
        for v in 1..graph.nodes.len() {
            node_feats.push(node_features(&graph, v, cfg).expect("index in range"));
        }
        let edge_feats = graph
            .edges
            .iter()
            .map(|e| edge_features(&graph, e.source, e.target, cfg).expect("edge from graph"))
            .collect();
        FeaturizedGraph {
            graph,
            node_features: node_feats,
            edge_features: edge_feats,
        }
    }

    /// Node scores θᵀf(v) and edge scores ψᵀg(e), with labels attached.
    pub fn instance(&self, w: &Weights) -> IlpInstance {
        let node_scores = self.node_features.iter().map(|f| f.dot(&w.theta)).collect();
        let edges = self
            .graph
            .edges
            .iter()
            .zip(&self.edge_features)
            .map(|(e, f)| (e.pair(), f.dot(&w.psi)));
        IlpInstance::new(node_scores, edges)
            .expect("source graphs yield valid instances")
            .with_labels(self.graph.labels())
    }

    /// Summed feature counts Φ of a subgraph, split into node and edge parts.
    pub fn phi(&self, sub: &Subgraph) -> Weights {
        let mut out = Weights::default();
        for &v in &sub.nodes {
            for n in self.node_features[v].iter() {
                *out.theta.entry(n.to_string()).or_default() += 1.0;
            }
        }
        for &(i, j) in &sub.edges {
            let id = self.graph.edge_id(i, j).expect("subgraph edge in graph");
            for n in self.edge_features[id].iter() {
                *out.psi.entry(n.to_string()).or_default() += 1.0;
            }
        }
        out
    }
}
