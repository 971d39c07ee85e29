//! Bag-of-words generation and evaluation.
//!
//! ROUGE-1 here is lowercase exact-unigram overlap with clipped counts; it
//! does no stemming and removes stopwords only when asked to. With several
//! references each word's reference count is its maximum over them.

use crate::amr::{AmrGraph, Sentence};
use crate::decoder::{CostSpec, Subgraph};
use crate::source_graph::SourceGraph;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no non-empty reference")]
    NoReference,
    #[error("gold summary is empty")]
    EmptyGold,
}

/// Lowercased word multiset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagOfWords {
    pub counts: BTreeMap<String, usize>,
}

impl BagOfWords {
    pub fn from_tokens<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut counts = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.as_ref().to_lowercase()).or_default() += 1;
        }
        BagOfWords { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Tokens in sorted order, repeated by count.
    pub fn tokens(&self) -> Vec<String> {
        self.counts
            .iter()
            .flat_map(|(t, &c)| std::iter::repeat_n(t.clone(), c))
            .collect()
    }
}

/// The span text most often aligned to a node's mentions; ties go to the
/// shorter span, then the earlier occurrence.
pub fn node_span(sg: &SourceGraph, v: usize, sentences: &[Sentence]) -> Option<Vec<String>> {
    let mut tally: HashMap<Vec<String>, (usize, (usize, usize))> = HashMap::new();
    for m in &sg.nodes[v].mentions {
        let Some((s, e)) = m.span else { continue };
        let Some(tokens) = sentences.get(m.sentence).and_then(|snt| snt.tokens.get(s..e)) else {
            continue;
        };
        let text: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let entry = tally.entry(text).or_insert((0, (m.sentence, s)));
        entry.0 += 1;
        entry.1 = entry.1.min((m.sentence, s));
    }
    tally
        .into_iter()
        .min_by(|(ta, (ca, fa)), (tb, (cb, fb))| cb.cmp(ca).then(ta.len().cmp(&tb.len())).then(fa.cmp(fb)))
        .map(|(t, _)| t)
}

/// Words of every selected node's majority span. Edges play no part.
pub fn generate_bow(sub: &Subgraph, sg: &SourceGraph, sentences: &[Sentence]) -> BagOfWords {
    BagOfWords::from_tokens(
        sub.nodes
            .iter()
            .filter(|&&v| v != 0)
            .filter_map(|&v| node_span(sg, v, sentences))
            .flatten(),
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub p: f64,
    pub r: f64,
    pub f: f64,
}

impl Prf {
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> Prf {
        let p = if predicted == 0 {
            0.0
        } else {
            matched as f64 / predicted as f64
        };
        let r = if gold == 0 { 0.0 } else { matched as f64 / gold as f64 };
        Prf { p, r, f: f1(p, r) }
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// A small English function-word list for the optional stopword filter.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "has", "have", "in", "is", "it", "its", "of", "on", "or",
    "that", "the", "to", "was", "were", "will", "with",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RougeOptions {
    pub stopwords: BTreeSet<String>,
}

impl RougeOptions {
    pub fn with_default_stopwords() -> Self {
        RougeOptions {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Clipped unigram overlap counts: (overlap, candidate size, reference size).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RougeCounts {
    pub overlap: usize,
    pub candidate: usize,
    pub reference: usize,
}

impl RougeCounts {
    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.overlap, self.candidate, self.reference)
    }
}

pub fn rouge1_counts(candidate: &BagOfWords, references: &[Vec<String>], opts: &RougeOptions) -> Result<RougeCounts, EvalError> {
    let keep = |t: &String| !opts.stopwords.contains(t);
    let mut reference: BTreeMap<String, usize> = BTreeMap::new();
    for r in references {
        for (t, c) in BagOfWords::from_tokens(r).counts.into_iter().filter(|(t, _)| keep(t)) {
            let slot = reference.entry(t).or_default();
            *slot = (*slot).max(c);
        }
    }
    if reference.is_empty() {
        return Err(EvalError::NoReference);
    }
    let cand: BTreeMap<&String, usize> = candidate
        .counts
        .iter()
        .filter(|(t, _)| keep(t))
        .map(|(t, &c)| (t, c))
        .collect();
    let overlap = cand
        .iter()
        .map(|(t, &c)| c.min(reference.get(*t).copied().unwrap_or(0)))
        .sum();
    Ok(RougeCounts {
        overlap,
        candidate: cand.values().sum(),
        reference: reference.values().sum(),
    })
}

pub fn rouge1(candidate: &BagOfWords, references: &[Vec<String>]) -> Result<Prf, EvalError> {
    Ok(rouge1_counts(candidate, references, &RougeOptions::default())?.prf())
}

/// Matched, predicted and gold element counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl MatchCounts {
    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.matched, self.predicted, self.gold)
    }

    fn add(&mut self, o: &MatchCounts) {
        self.matched += o.matched;
        self.predicted += o.predicted;
        self.gold += o.gold;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgraphMatch {
    pub nodes: MatchCounts,
    pub edges: MatchCounts,
}

/// Node matching by label set; edge matching by unlabeled
/// `(source label, target label)` pairs, ROOT edges included.
pub fn node_edge_prf(sub: &Subgraph, sg: &SourceGraph, gold: &[AmrGraph]) -> Result<SubgraphMatch, EvalError> {
    let nodes: BTreeSet<&str> = sub.nodes.iter().map(|&v| sg.label(v)).collect();
    let edges: BTreeSet<(&str, &str)> = sub.edges.iter().map(|&(i, j)| (sg.label(i), sg.label(j))).collect();
    match_labels(&nodes, &edges, gold)
}

/// As [`node_edge_prf`], for a selection already given by labels.
pub fn match_labels(
    nodes: &BTreeSet<&str>,
    edges: &BTreeSet<(&str, &str)>,
    gold: &[AmrGraph],
) -> Result<SubgraphMatch, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let spec = CostSpec::from_gold(gold, 1.0);
    let m = SubgraphMatch {
        nodes: MatchCounts {
            matched: nodes.iter().filter(|l| spec.node_in_gold(l)).count(),
            predicted: nodes.len(),
            gold: spec.gold_nodes.len(),
        },
        edges: MatchCounts {
            matched: edges.iter().filter(|(s, t)| spec.edge_in_gold(s, t)).count(),
            predicted: edges.len(),
            gold: spec.gold_edges.len(),
        },
    };
    if m.edges.predicted == m.edges.gold {
        let e = m.edges.prf();
        debug_assert!(e.p == e.r && (e.f - e.p).abs() < 1e-12);
    }
    Ok(m)
}

/// Per-document evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocEval {
    pub doc: String,
    pub subgraph: SubgraphMatch,
    pub rouge: RougeCounts,
}

/// Corpus-level scores: node and edge figures pool counts over documents;
/// ROUGE-1 averages per-document scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub documents: usize,
    pub node_p: f64,
    pub node_r: f64,
    pub node_f: f64,
    pub edge_p: f64,
    pub edge_r: f64,
    pub edge_f: f64,
    pub rouge1_p: f64,
    pub rouge1_r: f64,
    pub rouge1_f: f64,
}

impl EvalReport {
    pub fn aggregate(docs: &[DocEval]) -> EvalReport {
        let mut nodes = MatchCounts::default();
        let mut edges = MatchCounts::default();
        let mut rouge = Prf::default();
        for d in docs {
            nodes.add(&d.subgraph.nodes);
            edges.add(&d.subgraph.edges);
            let r = d.rouge.prf();
            rouge.p += r.p;
            rouge.r += r.r;
            rouge.f += r.f;
        }
        let n = docs.len().max(1) as f64;
        let (np, ep) = (nodes.prf(), edges.prf());
        EvalReport {
            documents: docs.len(),
            node_p: np.p,
            node_r: np.r,
            node_f: np.f,
            edge_p: ep.p,
            edge_r: ep.r,
            edge_f: ep.f,
            rouge1_p: rouge.p / n,
            rouge1_r: rouge.r / n,
            rouge1_f: rouge.f / n,
        }
    }
}

/// Aligned table with columns Nodes P/R/F, Edges F, ROUGE-1 P/R/F, in
/// percent.
pub fn render_table(rows: &[(&str, &EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let mut s = String::new();
    let _ = writeln!(s, "{:width$}  {:^20}  {:^5}  {:^20}", "", "Nodes", "Edges", "ROUGE-1");
    let _ = writeln!(
        s,
        "{:width$}  {:>6} {:>6} {:>6}  {:>5}  {:>6} {:>6} {:>6}",
        "System", "P", "R", "F", "F", "P", "R", "F"
    );
    for (name, r) in rows {
        let pct = |x: f64| format!("{:.1}", 100.0 * x);
        let _ = writeln!(
            s,
            "{name:width$}  {:>6} {:>6} {:>6}  {:>5}  {:>6} {:>6} {:>6}",
            pct(r.node_p),
            pct(r.node_r),
            pct(r.node_f),
            pct(r.edge_f),
            pct(r.rouge1_p),
            pct(r.rouge1_r),
            pct(r.rouge1_f)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::{parse_penman, Alignment};
    use crate::source_graph::{merge_graphs, Mention, SourceNode};

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn rouge_identity_disjoint_and_clipping() {
        let r = rouge1(&BagOfWords::from_tokens(words("a b c")), &[words("a b c")]).unwrap();
        assert_eq!((r.p, r.r, r.f), (1.0, 1.0, 1.0));
        let r = rouge1(&BagOfWords::from_tokens(words("x y")), &[words("a b c")]).unwrap();
        assert_eq!((r.p, r.r, r.f), (0.0, 0.0, 0.0));
        let r = rouge1(&BagOfWords::from_tokens(words("a a b")), &[words("a b c")]).unwrap();
        assert_eq!((r.p, r.r, r.f), (2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0));
    }

    #[test]
    fn rouge_errors_and_case() {
        let c = BagOfWords::from_tokens(words("Dog"));
        assert_eq!(rouge1(&c, &[]), Err(EvalError::NoReference));
        assert_eq!(rouge1(&c, &[vec![]]), Err(EvalError::NoReference));
        assert_eq!(rouge1(&c, &[words("dog")]).unwrap().f, 1.0);
    }

    #[test]
    fn multiple_references_use_max_counts() {
        let c = BagOfWords::from_tokens(words("a a b"));
        let n = rouge1_counts(&c, &[words("a b"), words("a a")], &RougeOptions::default()).unwrap();
        assert_eq!(
            n,
            RougeCounts {
                overlap: 3,
                candidate: 3,
                reference: 3
            }
        );
    }

    #[test]
    fn stopwords_are_optional() {
        let c = BagOfWords::from_tokens(words("the dog"));
        let refs = [words("a dog")];
        assert_eq!(rouge1(&c, &refs).unwrap().p, 0.5);
        let n = rouge1_counts(&c, &refs, &RougeOptions::with_default_stopwords()).unwrap();
        assert_eq!(n.prf().f, 1.0);
    }

    #[test]
    fn majority_span_wins() {
        let mk = |s: usize, a: usize, b: usize| Mention {
            sentence: s,
            depth: 0,
            span: Some((a, b)),
        };
        let mut sg = merge_graphs(&[Sentence {
            tokens: words("dog"),
            graph: parse_penman("(d / dog)").unwrap(),
            alignments: vec![],
        }])
        .unwrap();
        sg.nodes[1] = SourceNode {
            index: 1,
            label: "dog".into(),
            mentions: vec![mk(0, 0, 2), mk(1, 1, 2), mk(2, 0, 1)],
            is_named_entity: false,
            is_date_entity: false,
        };
        let sentences: Vec<Sentence> = ["The dog", "the dog", "dog"]
            .iter()
            .map(|t| Sentence {
                tokens: words(t),
                graph: parse_penman("(d / dog)").unwrap(),
                alignments: vec![],
            })
            .collect();
        assert_eq!(node_span(&sg, 1, &sentences), Some(words("dog")));
        let bag = generate_bow(&Subgraph::from_edges([(0, 1)]), &sg, &sentences);
        assert_eq!(bag.tokens(), words("dog"));
        assert!(generate_bow(&Subgraph::default(), &sg, &sentences).is_empty());
    }

    #[test]
    fn span_ties_prefer_shorter_then_earlier() {
        let s = Sentence {
            tokens: words("big cat sat cat big"),
            graph: parse_penman("(c / cat :mod (b / big))").unwrap(),
            alignments: vec![
                Alignment {
                    var: "c".into(),
                    start: 0,
                    end: 2,
                },
                Alignment {
                    var: "b".into(),
                    start: 4,
                    end: 5,
                },
            ],
        };
        let t = Sentence {
            alignments: vec![
                Alignment {
                    var: "c".into(),
                    start: 3,
                    end: 4,
                },
                Alignment {
                    var: "b".into(),
                    start: 0,
                    end: 1,
                },
            ],
            ..s.clone()
        };
        let sg = merge_graphs(&[s.clone(), t.clone()]).unwrap();
        let both = [s, t];
        assert_eq!(node_span(&sg, sg.node_index("cat").unwrap(), &both), Some(words("cat")));
        assert_eq!(node_span(&sg, sg.node_index("big").unwrap(), &both), Some(words("big")));
    }

    #[test]
    fn node_set_arithmetic() {
        let s = |t: &str| Sentence {
            tokens: vec![],
            graph: parse_penman(t).unwrap(),
            alignments: vec![],
        };
        let sg = merge_graphs(&[s("(a / a :R (b / b) :S (c / c))")]).unwrap();
        let sub = Subgraph::from_edges([(0, 1), (1, 2), (1, 3)]);
        let gold = vec![parse_penman("(a / a :R (b / b) :S (d / d))").unwrap()];
        let m = node_edge_prf(&sub, &sg, &gold).unwrap();
        let p = m.nodes.prf();
        assert_eq!((p.p, p.r, p.f), (2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0));
        let e = m.edges.prf();
        assert_eq!((e.p, e.r), (2.0 / 3.0, 2.0 / 3.0));
        assert_eq!(node_edge_prf(&sub, &sg, &[]), Err(EvalError::EmptyGold));
    }

    #[test]
    fn report_and_table() {
        let d = DocEval {
            doc: "d".into(),
            subgraph: SubgraphMatch {
                nodes: MatchCounts {
                    matched: 1,
                    predicted: 2,
                    gold: 4,
                },
                edges: MatchCounts {
                    matched: 0,
                    predicted: 1,
                    gold: 1,
                },
            },
            rouge: RougeCounts {
                overlap: 1,
                candidate: 1,
                reference: 2,
            },
        };
        let r = EvalReport::aggregate(&[d.clone(), d]);
        assert_eq!((r.node_p, r.node_r), (0.5, 0.25));
        assert_eq!(r.rouge1_r, 0.5);
        let t = render_table(&[("ramp", &r)]);
        assert!(t.lines().nth(2).unwrap().starts_with("ramp"));
        assert!(t.contains("50.0"));
    }
}
