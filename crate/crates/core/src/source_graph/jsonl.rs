//! JSON-lines dump of source graphs for inspection.

use super::SourceGraph;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Line schema of `graphs.jsonl`, reproduced in the README.
pub const JSONL_SCHEMA: &str = r#"{"kind":"graph","doc":ID,"num_sentences":N,"num_nodes":N,"num_edges":N,"num_expanded":N,"sentence_roots":[IDX..]}
{"kind":"node","doc":ID,"index":IDX,"label":STR,"mentions":[{"sentence":N,"depth":N,"span":[START,END]|null}..],"named_entity":BOOL,"date_entity":BOOL}
{"kind":"edge","doc":ID,"source":IDX,"target":IDX,"labels":{REL:COUNT..},"top_labels":[STR..],"expanded":BOOL,"sentences":[N..]}"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphRecord {
    Graph {
        doc: String,
        num_sentences: usize,
        num_nodes: usize,
        num_edges: usize,
        num_expanded: usize,
        sentence_roots: Vec<usize>,
    },
    Node {
        doc: String,
        index: usize,
        label: String,
        mentions: Vec<super::Mention>,
        named_entity: bool,
        date_entity: bool,
    },
    Edge {
        doc: String,
        source: usize,
        target: usize,
        labels: BTreeMap<String, usize>,
        top_labels: Vec<String>,
        expanded: bool,
        sentences: Vec<usize>,
    },
}

impl SourceGraph {
    /// One header record, then every node, then every edge.
    pub fn records(&self, doc: &str) -> Vec<GraphRecord> {
        let mut out = Vec::with_capacity(1 + self.nodes.len() + self.edges.len());
        out.push(GraphRecord::Graph {
            doc: doc.to_string(),
            num_sentences: self.num_sentences,
            num_nodes: self.nodes.len(),
            num_edges: self.edges.len(),
            num_expanded: self.num_expanded(),
            sentence_roots: self.sentence_roots.clone(),
        });
        out.extend(self.nodes.iter().map(|n| GraphRecord::Node {
            doc: doc.to_string(),
            index: n.index,
            label: n.label.clone(),
            mentions: n.mentions.clone(),
            named_entity: n.is_named_entity,
            date_entity: n.is_date_entity,
        }));
        out.extend(self.edges.iter().map(|e| GraphRecord::Edge {
            doc: doc.to_string(),
            source: e.source,
            target: e.target,
            labels: e.label_histogram.clone(),
            top_labels: e.top_labels.clone(),
            expanded: e.expanded,
            sentences: e.mention_sentences.clone(),
        }));
        out
    }

    pub fn to_jsonl(&self, doc: &str) -> String {
        let mut buf = String::new();
        for r in self.records(doc) {
            buf.push_str(&serde_json::to_string(&r).expect("records serialize"));
            buf.push('\n');
        }
        buf
    }
}
