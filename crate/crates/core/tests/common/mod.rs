#![allow(dead_code)]

use amrsum::decoder::{IlpInstance, Subgraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

/// Every arborescence hanging from node 0, found by giving each content
/// node either no parent or one of its incoming edges and keeping the
/// assignments whose parent chains all end at 0. Size limit and ROOT cap
/// are ignored here.
pub fn all_trees(inst: &IlpInstance) -> Vec<Vec<(usize, usize)>> {
    let n = inst.num_nodes();
    let mut choices: Vec<Vec<Option<usize>>> = vec![vec![None]; n];
    for (&(i, j), _) in inst.edges().iter().zip(inst.edge_scores()) {
        choices[j].push(Some(i));
    }
    let mut out = Vec::new();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    fn rec(
        v: usize,
        n: usize,
        choices: &[Vec<Option<usize>>],
        parent: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if v == n {
            for start in 1..n {
                if parent[start].is_none() {
                    continue;
                }
                let mut u = start;
                let mut steps = 0;
                while u != 0 {
                    match parent[u] {
                        Some(p) => u = p,
                        None => return,
                    }
                    steps += 1;
                    if steps > n {
                        return;
                    }
                }
            }
            let mut edges: Vec<(usize, usize)> = (1..n).filter_map(|v| parent[v].map(|p| (p, v))).collect();
            edges.sort_unstable();
            out.push(edges);
            return;
        }
        for &c in &choices[v] {
            parent[v] = c;
            rec(v + 1, n, choices, parent, out);
        }
        parent[v] = None;
    }
    rec(1, n, &choices, &mut parent, &mut out);
    out
}

pub fn plain_score(inst: &IlpInstance, edges: &[(usize, usize)]) -> f64 {
    edges
        .iter()
        .map(|&(i, j)| inst.node_scores()[j] + inst.edge_score(i, j).unwrap())
        .sum()
}

/// The tie-break order: at the first edge (in instance order) where two
/// sets differ, the set containing it comes first.
pub fn tie_order(inst: &IlpInstance, a: &[(usize, usize)], b: &[(usize, usize)]) -> Ordering {
    for e in inst.edges() {
        match (a.contains(e), b.contains(e)) {
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
    }
    Ordering::Equal
}

/// Best tree under `objective` among those with `size` edges (any size if
/// `None`) and at most `cap` ROOT children.
pub fn brute_best(
    inst: &IlpInstance,
    trees: &[Vec<(usize, usize)>],
    size: Option<usize>,
    cap: Option<usize>,
    objective: impl Fn(&[(usize, usize)]) -> f64,
) -> Option<(f64, Vec<(usize, usize)>)> {
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    for t in trees {
        if size.is_some_and(|l| t.len() != l) {
            continue;
        }
        if cap.is_some_and(|c| t.iter().filter(|e| e.0 == 0).count() > c) {
            continue;
        }
        let v = objective(t);
        best = match best {
            None => Some((v, t.clone())),
            Some((bv, bt)) => {
                if v > bv + 1e-9 || ((v - bv).abs() <= 1e-9 && tie_order(inst, t, &bt) == Ordering::Less) {
                    Some((v, t.clone()))
                } else {
                    Some((bv, bt))
                }
            }
        };
    }
    best
}

pub fn edges_of(sub: &Subgraph) -> Vec<(usize, usize)> {
    sub.edges.iter().copied().collect()
}

/// Random instance: 2 to 8 nodes, up to 20 edges, scores in [-1, 1].
pub fn random_instance(rng: &mut ChaCha8Rng) -> IlpInstance {
    let n = rng.gen_range(2..=8);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (1..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    pairs.shuffle(rng);
    let m = rng.gen_range(1..=pairs.len().min(20));
    let mut chosen: Vec<(usize, usize)> = pairs[..m].to_vec();
    if !chosen.iter().any(|e| e.0 == 0) {
        chosen[0] = (0, rng.gen_range(1..n));
        chosen.sort_unstable();
        chosen.dedup();
    }
    let mut node_scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    node_scores[0] = 0.0;
    let edges: Vec<_> = chosen.into_iter().map(|p| (p, rng.gen_range(-1.0..=1.0))).collect();
    let labels = (0..n)
        .map(|v| if v == 0 { "ROOT".to_string() } else { format!("c{v}") })
        .collect();
    IlpInstance::new(node_scores, edges).unwrap().with_labels(labels)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent structure check: ROOT never listed, every selected node has
/// exactly one selected parent, every edge joins selected nodes (or ROOT),
/// the size limit and ROOT cap hold, and every node is reached from ROOT
/// by breadth-first search.
pub fn structure_violation(sub: &Subgraph, inst: &IlpInstance) -> Option<String> {
    if sub.nodes.contains(&0) {
        return Some("ROOT selected as a content node".into());
    }
    for &(i, j) in &sub.edges {
        if !inst.edges().contains(&(i, j)) {
            return Some(format!("edge {i}->{j} not offered"));
        }
        if !(i == 0 || sub.nodes.contains(&i)) || !sub.nodes.contains(&j) {
            return Some(format!("edge {i}->{j} touches an unselected node"));
        }
    }
    for &v in &sub.nodes {
        let parents = sub.edges.iter().filter(|e| e.1 == v).count();
        if parents != 1 {
            return Some(format!("node {v} has {parents} parents"));
        }
    }
    if let Some(l) = inst.size_limit() {
        if sub.edges.len() != l {
            return Some(format!("{} edges, size limit {l}", sub.edges.len()));
        }
    }
    if let Some(c) = inst.root_out_cap() {
        if sub.edges.iter().filter(|e| e.0 == 0).count() > c {
            return Some(format!("ROOT cap {c} exceeded"));
        }
    }
    let mut seen = vec![false; inst.num_nodes()];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(i, j) in &sub.edges {
            if i == u && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    sub.nodes
        .iter()
        .find(|&&v| !seen[v])
        .map(|v| format!("node {v} unreachable from ROOT"))
}

pub fn assert_valid(sub: &Subgraph, inst: &IlpInstance) {
    if let Some(v) = structure_violation(sub, inst) {
        panic!("{v}");
    }
}

/// Corpus where each document's summary is a three-concept sentence
/// stated twice, hidden among one to three distractor sentences stated
/// once. Concepts come from a shared pool, so only frequency tells them
/// apart.
pub fn separable_corpus(seed: u64, docs: usize) -> String {
    let mut r = rng(seed);
    let pool: Vec<String> = (0..12).map(|k| format!("w{k}")).collect();
    let mut out = String::new();
    for d in 0..docs {
        let mut concepts = pool.clone();
        concepts.shuffle(&mut r);
        let distractors = r.gen_range(1..=3);
        let triples: Vec<&[String]> = concepts.chunks(3).take(1 + distractors).collect();
        let mut order: Vec<usize> = std::iter::repeat_n(0, 2).chain(1..=distractors).collect();
        order.shuffle(&mut r);
        out.push_str(&format!("# ::doc d{d}\n"));
        for &t in &order {
            out.push_str(&triple_block(triples[t]));
        }
        out.push_str("# ::summary\n");
        out.push_str(&triple_block(triples[0]));
    }
    out
}

fn triple_block(t: &[String]) -> String {
    format!(
        "# ::snt {} {} {} .\n# ::align a 0-1\n# ::align b 1-2\n# ::align c 2-3\n(a / {} :ARG0 (b / {}) :ARG1 (c / {}))\n\n",
        t[0], t[1], t[2], t[0], t[1], t[2]
    )
}

pub fn toy_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy.amr")
}

/// Hand-written graphs covering reentrancy, inverse roles, constants and
/// collapsible entities.
pub const EXTRA: &[&str] = &[
    "(c / chase-01 :ARG0 (d / dog) :ARG1 (c2 / cat))",
    "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
    "(d / dog :ARG0-of (r / run-02 :location (g / garden)))",
    "(s / say-01 :ARG0 (p / person :name (n / name :op1 \"Joe\" :op2 \"Smith\")) :polarity -)",
    "(d / date-entity :year 2014 :month 6 :day 23)",
    "(p / percentage-entity :value 12.5)",
    "(a / and :op1 (x / x) :op2 (y / y) :op3 (z / z :mod-of x))",
    "(t / thing :quant 3 :mod (e / expressive :polarity - :degree (m / more)))",
];

pub fn fixture_graphs() -> Vec<amrsum::amr::AmrGraph> {
    let mut graphs: Vec<amrsum::amr::AmrGraph> = EXTRA.iter().map(|t| amrsum::amr::parse_penman(t).unwrap()).collect();
    let mut docs = amrsum::amr::load_corpus(toy_path()).unwrap();
    docs.extend(amrsum::amr::parse_corpus(&separable_corpus(1, 4)).unwrap());
    for d in &docs {
        graphs.extend(d.sentences.iter().chain(&d.summary_sentences).map(|s| s.graph.clone()));
    }
    graphs
}
