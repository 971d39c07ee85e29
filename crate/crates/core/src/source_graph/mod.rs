//! The merged multi-sentence source graph.
//!
//! Nodes are unique concept labels accumulated over every sentence; all
//! labeled edges between a pair of concepts fold into one unlabeled edge
//! carrying a histogram of the original relations. Node 0 is `ROOT`, with
//! an edge to the concept at the root of each sentence graph.

mod collapse;
mod jsonl;

pub use collapse::{collapse_fragments, collapse_sentence, collapse_with_map};
pub use jsonl::{GraphRecord, JSONL_SCHEMA};

use crate::amr::{AmrGraph, Document, EntityKind, Sentence};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

pub const ROOT_LABEL: &str = "ROOT";
/// Relation recorded on ROOT edges.
pub const ROOT_RELATION: &str = "ROOT";
/// Label reported for edges introduced by expansion.
pub const NULL_LABEL: &str = "null";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SourceGraphError {
    #[error("cannot build a source graph from zero sentences")]
    NoSentences,
    #[error("concept label `{0}` is reserved")]
    ReservedLabel(String),
    #[error("gold summary has no edges")]
    EmptyGold,
}

/// One occurrence of a concept in a sentence graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub sentence: usize,
    /// Shortest distance from the sentence graph's root.
    pub depth: usize,
    /// Aligned token span `[start, end)`, if the aligner covered this node.
    pub span: Option<(usize, usize)>,
}

impl Mention {
    pub fn span_len(&self) -> usize {
        self.span.map(|(s, e)| e - s).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceNode {
    pub index: usize,
    pub label: String,
    pub mentions: Vec<Mention>,
    pub is_named_entity: bool,
    pub is_date_entity: bool,
}

impl SourceNode {
    pub fn is_root(&self) -> bool {
        self.index == 0
    }

    pub fn sentences(&self) -> BTreeSet<usize> {
        self.mentions.iter().map(|m| m.sentence).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEdge {
    pub source: usize,
    pub target: usize,
    pub label_histogram: BTreeMap<String, usize>,
    /// Up to two most frequent relations, ties broken lexicographically;
    /// `["null"]` for expanded edges.
    pub top_labels: Vec<String>,
    pub expanded: bool,
    /// Sentence index of every unexpanded occurrence (with repetition).
    pub mention_sentences: Vec<usize>,
}

impl SourceEdge {
    fn new(source: usize, target: usize) -> Self {
        SourceEdge {
            source,
            target,
            label_histogram: BTreeMap::new(),
            top_labels: Vec::new(),
            expanded: false,
            mention_sentences: Vec::new(),
        }
    }

    fn expanded(source: usize, target: usize) -> Self {
        SourceEdge {
            top_labels: vec![NULL_LABEL.to_string()],
            expanded: true,
            ..SourceEdge::new(source, target)
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.source, self.target)
    }

    pub fn is_root_edge(&self) -> bool {
        self.source == 0
    }

    /// Relative frequency of a relation within this edge's histogram.
    pub fn relative_frequency(&self, label: &str) -> f64 {
        let total: usize = self.label_histogram.values().sum();
        if total == 0 {
            return 0.0;
        }
        self.label_histogram.get(label).copied().unwrap_or(0) as f64 / total as f64
    }

    fn refresh_top_labels(&mut self) {
        let mut ranked: Vec<(&String, &usize)> = self.label_histogram.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        self.top_labels = ranked.into_iter().take(2).map(|(l, _)| l.clone()).collect();
    }
}

/// Graph expansion scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Expansion {
    #[default]
    None,
    Sentence,
    Document,
}

impl std::str::FromStr for Expansion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Expansion::None),
            "sentence" => Ok(Expansion::Sentence),
            "document" => Ok(Expansion::Document),
            other => Err(format!("unknown expansion `{other}` (none|sentence|document)")),
        }
    }
}

impl std::fmt::Display for Expansion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Expansion::None => "none",
            Expansion::Sentence => "sentence",
            Expansion::Document => "document",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceGraph {
    pub nodes: Vec<SourceNode>,
    pub edges: Vec<SourceEdge>,
    /// Node indices connected from ROOT, in first-seen order.
    pub sentence_roots: Vec<usize>,
    pub num_sentences: usize,
    label_index: HashMap<String, usize>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl SourceGraph {
    fn empty(num_sentences: usize) -> Self {
        let root = SourceNode {
            index: 0,
            label: ROOT_LABEL.to_string(),
            mentions: Vec::new(),
            is_named_entity: false,
            is_date_entity: false,
        };
        SourceGraph {
            nodes: vec![root],
            edges: Vec::new(),
            sentence_roots: Vec::new(),
            num_sentences,
            label_index: HashMap::from([(ROOT_LABEL.to_string(), 0)]),
            edge_index: HashMap::new(),
        }
    }

    /// Collapses every sentence of `doc` and merges them.
    pub fn from_document(doc: &Document) -> Result<SourceGraph, SourceGraphError> {
        let collapsed: Vec<Sentence> = doc.sentences.iter().map(collapse_sentence).collect();
        merge_graphs(&collapsed)
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.nodes[index].label
    }

    pub fn labels(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.label.clone()).collect()
    }

    pub fn edge_id(&self, source: usize, target: usize) -> Option<usize> {
        self.edge_index.get(&(source, target)).copied()
    }

    pub fn edge(&self, source: usize, target: usize) -> Option<&SourceEdge> {
        self.edge_id(source, target).map(|i| &self.edges[i])
    }

    pub fn num_expanded(&self) -> usize {
        self.edges.iter().filter(|e| e.expanded).count()
    }

    pub fn root_out_degree(&self) -> usize {
        self.edges.iter().filter(|e| e.source == 0).count()
    }

    fn intern(&mut self, label: &str, entity: Option<EntityKind>) -> usize {
        let idx = match self.label_index.get(label) {
            Some(&i) => i,
            None => {
                let i = self.nodes.len();
                self.nodes.push(SourceNode {
                    index: i,
                    label: label.to_string(),
                    mentions: Vec::new(),
                    is_named_entity: false,
                    is_date_entity: false,
                });
                self.label_index.insert(label.to_string(), i);
                i
            }
        };
        match entity {
            Some(EntityKind::Named) => self.nodes[idx].is_named_entity = true,
            Some(EntityKind::Date) => self.nodes[idx].is_date_entity = true,
            None => {}
        }
        idx
    }

    fn edge_mut(&mut self, source: usize, target: usize) -> &mut SourceEdge {
        let next = self.edges.len();
        let id = *self.edge_index.entry((source, target)).or_insert(next);
        if id == next {
            self.edges.push(SourceEdge::new(source, target));
        }
        &mut self.edges[id]
    }

    fn push_expanded(&mut self, source: usize, target: usize) {
        self.edge_index.insert((source, target), self.edges.len());
        self.edges.push(SourceEdge::expanded(source, target));
    }

    /// Adds `null` edges between concept pairs: every ordered pair
    /// co-mentioned in some sentence (`Sentence`) or every ordered pair of
    /// non-ROOT nodes (`Document`). Existing edges are kept as they are;
    /// new edges are appended in (source, target) order.
    ///
    /// Document-level expansion is quadratic in the number of concepts.
    pub fn expand(&self, level: Expansion) -> SourceGraph {
        let mut out = self.clone();
        let n = self.nodes.len();
        match level {
            Expansion::None => {}
            Expansion::Sentence => {
                let mut per_sentence: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.num_sentences];
                for node in &self.nodes[1..] {
                    for m in &node.mentions {
                        per_sentence[m.sentence].insert(node.index);
                    }
                }
                let mut pairs = BTreeSet::new();
                for members in &per_sentence {
                    for &i in members {
                        for &j in members {
                            if i != j && self.edge_id(i, j).is_none() {
                                pairs.insert((i, j));
                            }
                        }
                    }
                }
                for (i, j) in pairs {
                    out.push_expanded(i, j);
                }
            }
            Expansion::Document => {
                for i in 1..n {
                    for j in 1..n {
                        if i != j && self.edge_id(i, j).is_none() {
                            out.push_expanded(i, j);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Merges collapsed sentence graphs into one source graph.
///
/// Concepts with identical labels become one node (one mention per
/// occurrence). Edges whose endpoints merge into the same concept are
/// dropped, since the result must stay loop-free.
pub fn merge_graphs(sentences: &[Sentence]) -> Result<SourceGraph, SourceGraphError> {
    if sentences.is_empty() {
        return Err(SourceGraphError::NoSentences);
    }
    let mut sg = SourceGraph::empty(sentences.len());
    for (si, sentence) in sentences.iter().enumerate() {
        let g = &sentence.graph;
        let depths = g.depths();
        let mut local: HashMap<&str, usize> = HashMap::new();
        for node in &g.nodes {
            if node.concept == ROOT_LABEL {
                return Err(SourceGraphError::ReservedLabel(node.concept.clone()));
            }
            let idx = sg.intern(&node.concept, node.entity);
            sg.nodes[idx].mentions.push(Mention {
                sentence: si,
                depth: depths.get(&node.var).copied().unwrap_or(0),
                span: sentence.span_for(&node.var),
            });
            local.insert(node.var.as_str(), idx);
        }
        for e in &g.edges {
            let (s, t) = (local[e.source.as_str()], local[e.target.as_str()]);
            if s == t {
                continue;
            }
            let edge = sg.edge_mut(s, t);
            *edge.label_histogram.entry(e.relation.clone()).or_default() += 1;
            edge.mention_sentences.push(si);
        }
        let root = local[g.root.as_str()];
        let edge = sg.edge_mut(0, root);
        *edge.label_histogram.entry(ROOT_RELATION.to_string()).or_default() += 1;
        edge.mention_sentences.push(si);
        if !sg.sentence_roots.contains(&root) {
            sg.sentence_roots.push(root);
        }
    }
    for e in &mut sg.edges {
        e.refresh_top_labels();
    }
    Ok(sg)
}

/// Fractions of gold summary edges present in a source graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coverage {
    pub labeled: f64,
    pub unlabeled: f64,
    pub covered_labeled: usize,
    pub covered_unlabeled: usize,
    pub total: usize,
}

/// Edge coverage of gold graphs, collapsed first. Labeled coverage needs an
/// unexpanded edge whose histogram holds the gold relation; unlabeled
/// coverage accepts any edge between the two concept labels.
pub fn coverage(sg: &SourceGraph, gold: &[AmrGraph]) -> Result<Coverage, SourceGraphError> {
    let mut total = 0;
    let mut labeled = 0;
    let mut unlabeled = 0;
    for g in gold.iter().map(collapse_fragments) {
        let concept: HashMap<&str, &str> = g.nodes.iter().map(|n| (n.var.as_str(), n.concept.as_str())).collect();
        for e in &g.edges {
            total += 1;
            let (Some(s), Some(t)) = (
                sg.node_index(concept[e.source.as_str()]),
                sg.node_index(concept[e.target.as_str()]),
            ) else {
                continue;
            };
            if let Some(edge) = sg.edge(s, t) {
                unlabeled += 1;
                if !edge.expanded && edge.label_histogram.contains_key(&e.relation) {
                    labeled += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(SourceGraphError::EmptyGold);
    }
    Ok(Coverage {
        labeled: labeled as f64 / total as f64,
        unlabeled: unlabeled as f64 / total as f64,
        covered_labeled: labeled,
        covered_unlabeled: unlabeled,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    fn sentence(text: &str) -> Sentence {
        Sentence {
            tokens: Vec::new(),
            graph: collapse_fragments(&parse_penman(text).unwrap()),
            alignments: Vec::new(),
        }
    }

    #[test]
    fn identical_concepts_merge() {
        let sg = merge_graphs(&[
            sentence("(r / run-02 :ARG0 (d / dog))"),
            sentence("(c / chase-01 :ARG0 (d / dog))"),
        ])
        .unwrap();
        let dog = sg.node_index("dog").unwrap();
        assert_eq!(sg.nodes[dog].mentions.len(), 2);
        assert_eq!(sg.nodes.len(), 4);
        assert_eq!(sg.nodes[0].label, ROOT_LABEL);
        assert_eq!(sg.sentence_roots.len(), 2);
    }

    #[test]
    fn parallel_edges_fold_with_histogram() {
        // a→b labeled ARG0 twice and ARG1 once.
        let sg = merge_graphs(&[
            sentence("(a / x :ARG0 (b / y))"),
            sentence("(a / x :ARG1 (b / y))"),
            sentence("(a / x :ARG0 (b / y))"),
        ])
        .unwrap();
        let (a, b) = (sg.node_index("x").unwrap(), sg.node_index("y").unwrap());
        let e = sg.edge(a, b).unwrap();
        assert_eq!(e.label_histogram, BTreeMap::from([("ARG0".into(), 2), ("ARG1".into(), 1)]));
        assert_eq!(e.top_labels, vec!["ARG0", "ARG1"]);
        assert_eq!(e.mention_sentences, vec![0, 1, 2]);
        assert_eq!(sg.edges.len(), 2);
        let root = sg.edge(0, a).unwrap();
        assert_eq!(root.mention_sentences, vec![0, 1, 2]);
    }

    #[test]
    fn top_label_ties_are_lexicographic() {
        let sg = merge_graphs(&[
            sentence("(a / x :mod (b / y))"),
            sentence("(a / x :ARG1 (b / y))"),
            sentence("(a / x :domain (b / y))"),
        ])
        .unwrap();
        assert_eq!(sg.edge(1, 2).unwrap().top_labels, vec!["ARG1", "domain"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(merge_graphs(&[]), Err(SourceGraphError::NoSentences));
    }

    #[test]
    fn merged_concepts_drop_self_loops() {
        let sg = merge_graphs(&[sentence("(p / person :ARG0-of (h / have-rel-role-91 :ARG1 (p2 / person)))")]).unwrap();
        assert!(sg.edges.iter().all(|e| e.source != e.target));
        assert_eq!(sg.nodes.len(), 3);
    }

    #[test]
    fn sentence_expansion_adds_missing_ordered_pairs() {
        let sg = merge_graphs(&[sentence("(a / a1 :R (b / b1) :S (x / c1))")]).unwrap();
        let base = sg.edges.len();
        let ex = sg.expand(Expansion::Sentence);
        assert_eq!(ex.num_expanded(), 4);
        assert_eq!(ex.edges.len(), base + 4);
        assert_eq!(&ex.edges[..base], &sg.edges[..]);
    }

    #[test]
    fn document_expansion_spans_sentences() {
        // {a, b, c} with only a→b: five ordered pairs are missing.
        let sg = merge_graphs(&[sentence("(a / a1 :R (b / b1))"), sentence("(c / c1)")]).unwrap();
        assert_eq!(sg.expand(Expansion::Sentence).num_expanded(), 1);
        let doc = sg.expand(Expansion::Document);
        assert_eq!(doc.num_expanded(), 5);
        assert!(doc
            .edges
            .iter()
            .filter(|e| e.expanded)
            .all(|e| e.top_labels == vec![NULL_LABEL] && e.label_histogram.is_empty() && e.source != 0));
    }

    #[test]
    fn expansion_of_complete_graph_is_fixpoint() {
        let sg = merge_graphs(&[sentence("(a / x :R (b / y))"), sentence("(b / y :R (a / x))")]).unwrap();
        let ex = sg.expand(Expansion::Sentence);
        assert_eq!(ex.num_expanded(), 0);
        assert_eq!(ex.expand(Expansion::Document).edges, ex.edges);
    }

    #[test]
    fn empty_gold_coverage_is_an_error() {
        let sg = merge_graphs(&[sentence("(a / x)")]).unwrap();
        let gold = vec![parse_penman("(a / x)").unwrap()];
        assert_eq!(coverage(&sg, &gold), Err(SourceGraphError::EmptyGold));
    }
}
