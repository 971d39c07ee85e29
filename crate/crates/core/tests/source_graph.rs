mod common;

use amrsum::amr::{load_corpus, parse_penman, AmrGraph, Sentence};
use amrsum::source_graph::{collapse_fragments, collapse_sentence, coverage, merge_graphs, Expansion, SourceGraph, ROOT_LABEL};
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

type LabelEdges = BTreeSet<(String, String)>;

/// Merging done by hand: concept labels of collapsed graphs, and the
/// distinct label pairs joined by a relation, plus ROOT to each root.
fn naive_merge(graphs: &[AmrGraph]) -> (BTreeSet<String>, LabelEdges) {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for g in graphs.iter().map(collapse_fragments) {
        let concept: BTreeMap<&str, &str> = g.nodes.iter().map(|n| (n.var.as_str(), n.concept.as_str())).collect();
        nodes.extend(concept.values().map(|c| c.to_string()));
        edges.insert((ROOT_LABEL.to_string(), concept[g.root.as_str()].to_string()));
        for e in &g.edges {
            let (s, t) = (concept[e.source.as_str()], concept[e.target.as_str()]);
            if s != t {
                edges.insert((s.to_string(), t.to_string()));
            }
        }
    }
    (nodes, edges)
}

fn label_edges(sg: &SourceGraph) -> LabelEdges {
    sg.edges
        .iter()
        .map(|e| (sg.label(e.source).to_string(), sg.label(e.target).to_string()))
        .collect()
}

fn content_labels(sg: &SourceGraph) -> BTreeSet<String> {
    sg.nodes.iter().skip(1).map(|n| n.label.clone()).collect()
}

/// Missing ordered pairs among concepts that share a sentence (or the
/// document), counted directly.
fn naive_expansion_count(sg: &SourceGraph, level: Expansion) -> usize {
    let present = label_edges(sg);
    let groups: Vec<BTreeSet<usize>> = match level {
        Expansion::None => return 0,
        Expansion::Sentence => (0..sg.num_sentences)
            .map(|s| {
                (1..sg.nodes.len())
                    .filter(|&v| sg.nodes[v].sentences().contains(&s))
                    .collect()
            })
            .collect(),
        Expansion::Document => vec![(1..sg.nodes.len()).collect()],
    };
    let mut added = BTreeSet::new();
    for g in &groups {
        for &a in g {
            for &b in g {
                if a != b && !present.contains(&(sg.label(a).to_string(), sg.label(b).to_string())) {
                    added.insert((a, b));
                }
            }
        }
    }
    added.len()
}

#[test]
fn toy_document_counts() {
    let docs = load_corpus(toy_path()).unwrap();
    let doc = &docs[0];
    let sg = SourceGraph::from_document(doc).unwrap();
    let graphs: Vec<AmrGraph> = doc.sentences.iter().map(|s| s.graph.clone()).collect();
    let (nodes, edges) = naive_merge(&graphs);
    assert_eq!(content_labels(&sg), nodes);
    assert_eq!(label_edges(&sg), edges);

    assert_eq!(collapse_fragments(&graphs[0]).nodes.len(), 6);
    assert_eq!(sg.nodes.len(), 9);
    assert_eq!(sg.edges.len(), 9);
    assert_eq!(sg.root_out_degree(), 2);
    assert!(sg.node_index("person_name_op1_Joe").is_some());
    let dog = sg.node_index("dog").unwrap();
    assert_eq!(sg.nodes[dog].sentences(), BTreeSet::from([0, 1]));

    for (level, added) in [(Expansion::Sentence, 29), (Expansion::Document, 49)] {
        assert_eq!(naive_expansion_count(&sg, level), added);
        let x = sg.expand(level);
        assert_eq!(x.edges.len(), 9 + added);
        assert_eq!(x.num_expanded(), added);
    }

    let gold = doc.summary_graphs();
    let plain = coverage(&sg, &gold).unwrap();
    assert_eq!((plain.covered_labeled, plain.covered_unlabeled, plain.total), (3, 3, 4));
    assert_eq!(plain.labeled, 0.75);
    let sent = coverage(&sg.expand(Expansion::Sentence), &gold).unwrap();
    let full = coverage(&sg.expand(Expansion::Document), &gold).unwrap();
    assert_eq!(sent.unlabeled, 0.75);
    assert_eq!(full.unlabeled, 1.0);
    assert_eq!(full.labeled, 0.75);
}

const POOL: [&str; 7] = ["chase-01", "dog", "cat", "garden", "run-02", "see-01", "big"];
const ROLES: [&str; 4] = [":ARG0", ":ARG1", ":location", ":mod"];

fn random_tree(r: &mut ChaCha8Rng, vars: &mut usize, concepts: &mut Vec<&'static str>, depth: usize) -> String {
    let c = concepts.pop().unwrap();
    let v = format!("v{vars}");
    *vars += 1;
    let mut s = format!("({v} / {c}");
    if r.gen_bool(0.2) {
        s.push_str(&format!(" :name (n{vars} / name :op1 \"N{}\")", r.gen_range(0..3)));
        *vars += 1;
    }
    if depth < 3 {
        for _ in 0..r.gen_range(0..=2) {
            if concepts.is_empty() {
                break;
            }
            let role = ROLES[r.gen_range(0..ROLES.len())];
            s.push_str(&format!(" {role} {}", random_tree(r, vars, concepts, depth + 1)));
        }
    }
    s.push(')');
    s
}

fn random_sentences(seed: u64) -> Vec<Sentence> {
    raw_sentences(seed).iter().map(collapse_sentence).collect()
}

fn raw_sentences(seed: u64) -> Vec<Sentence> {
    let mut r = rng(seed);
    (0..r.gen_range(1..=4))
        .map(|_| {
            let mut concepts = POOL.to_vec();
            concepts.shuffle(&mut r);
            let mut vars = 0;
            Sentence {
                tokens: Vec::new(),
                graph: parse_penman(&random_tree(&mut r, &mut vars, &mut concepts, 0)).unwrap(),
                alignments: Vec::new(),
            }
        })
        .collect()
}

fn histograms(sg: &SourceGraph) -> BTreeMap<(String, String), BTreeMap<String, usize>> {
    sg.edges
        .iter()
        .map(|e| {
            (
                (sg.label(e.source).to_string(), sg.label(e.target).to_string()),
                e.label_histogram.clone(),
            )
        })
        .collect()
}

#[test]
fn merging_matches_hand_merge() {
    for seed in 0..200 {
        let sentences = random_sentences(seed);
        let graphs: Vec<AmrGraph> = sentences.iter().map(|s| s.graph.clone()).collect();
        let (nodes, edges) = naive_merge(&graphs);
        let sg = merge_graphs(&sentences).unwrap();
        assert_eq!(content_labels(&sg), nodes, "seed {seed}");
        assert_eq!(label_edges(&sg), edges, "seed {seed}");
        let roots: BTreeSet<&str> = graphs.iter().map(|g| g.node(&g.root).unwrap().concept.as_str()).collect();
        assert!(sg.root_out_degree() <= roots.len());
        assert!(sg.root_out_degree() >= 1);
    }
}

#[test]
fn merging_ignores_sentence_order() {
    for seed in 0..200 {
        let sentences = random_sentences(seed);
        let base = merge_graphs(&sentences).unwrap();
        let mut r = rng(seed + 1000);
        for _ in 0..3 {
            let mut shuffled = sentences.clone();
            shuffled.shuffle(&mut r);
            let other = merge_graphs(&shuffled).unwrap();
            assert_eq!(content_labels(&other), content_labels(&base));
            assert_eq!(histograms(&other), histograms(&base), "seed {seed}");
            for level in [Expansion::Sentence, Expansion::Document] {
                assert_eq!(label_edges(&other.expand(level)), label_edges(&base.expand(level)));
            }
        }
    }
}

#[test]
fn repeated_sentences_add_no_structure() {
    for seed in 0..100 {
        let sentences = random_sentences(seed);
        let base = merge_graphs(&sentences).unwrap();
        let doubled: Vec<Sentence> = sentences.iter().chain(&sentences).cloned().collect();
        let twice = merge_graphs(&doubled).unwrap();
        assert_eq!(content_labels(&twice), content_labels(&base));
        assert_eq!(label_edges(&twice), label_edges(&base));
        for (pair, h) in histograms(&twice) {
            let once = &histograms(&base)[&pair];
            assert_eq!(h.keys().collect::<Vec<_>>(), once.keys().collect::<Vec<_>>());
            assert!(h.iter().all(|(k, n)| *n == 2 * once[k]));
        }
    }
}

#[test]
fn expansion_only_adds_edges_and_coverage() {
    for seed in 0..100 {
        let sentences = random_sentences(seed);
        let sg = merge_graphs(&sentences).unwrap();
        let none = label_edges(&sg);
        let sent = sg.expand(Expansion::Sentence);
        let doc = sg.expand(Expansion::Document);
        assert!(none.is_subset(&label_edges(&sent)));
        assert!(label_edges(&sent).is_subset(&label_edges(&doc)));
        assert_eq!(sent.num_expanded(), naive_expansion_count(&sg, Expansion::Sentence));
        assert_eq!(doc.num_expanded(), naive_expansion_count(&sg, Expansion::Document));
        assert_eq!(sent.expand(Expansion::Sentence).edges.len(), sent.edges.len());

        let gold = random_sentences(seed + 5000);
        let gold: Vec<AmrGraph> = gold
            .iter()
            .map(|s| collapse_fragments(&s.graph))
            .filter(|g| !g.edges.is_empty())
            .collect();
        if gold.is_empty() {
            continue;
        }
        let a = coverage(&sg, &gold).unwrap();
        let b = coverage(&sent, &gold).unwrap();
        let c = coverage(&doc, &gold).unwrap();
        assert!(a.labeled <= a.unlabeled);
        assert!(a.unlabeled <= b.unlabeled && b.unlabeled <= c.unlabeled, "seed {seed}");
        assert_eq!(a.covered_labeled, c.covered_labeled);
    }
}

#[test]
fn collapsing_keeps_graphs_valid() {
    for seed in 0..200 {
        for s in raw_sentences(seed) {
            let collapsed = collapse_fragments(&s.graph);
            collapsed.validate().unwrap();
            assert!(collapsed.nodes.len() <= s.graph.nodes.len());
            assert!(collapsed.nodes.iter().all(|n| n.concept != "name"));
            assert_eq!(collapse_fragments(&collapsed), collapsed);
        }
    }
}
