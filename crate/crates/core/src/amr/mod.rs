//! Sentence-level AMR graphs, PENMAN notation and corpus files.
//!
//! Constants (quoted strings, numbers, polarity `-`) are stored as leaf
//! nodes with synthetic variables beginning with `_`, so downstream code
//! sees a uniform node/edge structure. Inverse roles (`:ARG0-of`) are
//! normalized when parsing: the stored edge always points in the canonical
//! direction.

mod corpus;
mod penman;

pub use corpus::{load_corpus, parse_corpus, Alignment, CorpusError, Document, Sentence};
pub use penman::{parse_penman, serialize_penman, PenmanError};

use std::collections::{HashMap, HashSet, VecDeque};

/// How a constant leaf was written in PENMAN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstantKind {
    /// `"Joe"`
    Quoted,
    /// `2002`, `-`, `imperative`
    Symbol,
}

/// Entity flag set on nodes produced by fragment collapsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityKind {
    Named,
    Date,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrNode {
    pub var: String,
    pub concept: String,
    /// `Some` for constant leaves; `concept` then holds the unquoted value.
    pub constant: Option<ConstantKind>,
    pub entity: Option<EntityKind>,
}

impl AmrNode {
    pub fn concept(var: impl Into<String>, concept: impl Into<String>) -> Self {
        AmrNode {
            var: var.into(),
            concept: concept.into(),
            constant: None,
            entity: None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmrEdge {
    pub source: String,
    pub target: String,
    pub relation: String,
}

impl AmrEdge {
    pub fn new(source: impl Into<String>, relation: impl Into<String>, target: impl Into<String>) -> Self {
        AmrEdge {
            source: source.into(),
            target: target.into(),
            relation: relation.into(),
        }
    }
}

/// Structural problems found by [`AmrGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("empty concept on variable `{0}`")]
    EmptyConcept(String),
    #[error("edge refers to unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("edge from `{0}` has an empty relation")]
    EmptyRelation(String),
    #[error("root `{0}` is not a node")]
    MissingRoot(String),
    #[error("node `{0}` is not connected to the root")]
    Disconnected(String),
    #[error("graph contains a directed cycle through `{0}`")]
    Cyclic(String),
}

/// One sentence's rooted, directed, acyclic, labeled graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    pub nodes: Vec<AmrNode>,
    pub edges: Vec<AmrEdge>,
    pub root: String,
}

impl AmrGraph {
    pub fn var_index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.var.as_str(), i)).collect()
    }

    pub fn node(&self, var: &str) -> Option<&AmrNode> {
        self.nodes.iter().find(|n| n.var == var)
    }

    pub fn out_edges<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a AmrEdge> + 'a {
        self.edges.iter().filter(move |e| e.source == var)
    }

    pub fn in_edges<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a AmrEdge> + 'a {
        self.edges.iter().filter(move |e| e.target == var)
    }

    pub fn concepts(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.concept.as_str()).collect()
    }

    /// Shortest distance from the root for every node, ignoring edge
    /// direction (inverse roles keep their node under the PENMAN parent).
    pub fn depths(&self) -> HashMap<String, usize> {
        let index = self.var_index();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            if let (Some(&s), Some(&t)) = (index.get(e.source.as_str()), index.get(e.target.as_str())) {
                adj[s].push(t);
                adj[t].push(s);
            }
        }
        let mut depth = HashMap::new();
        let Some(&root) = index.get(self.root.as_str()) else {
            return depth;
        };
        let mut dist = vec![usize::MAX; self.nodes.len()];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if dist[i] != usize::MAX {
                depth.insert(n.var.clone(), dist[i]);
            }
        }
        depth
    }

    /// Checks the graph invariants: unique variables, non-empty labels,
    /// edges between existing nodes, every node connected to the root and
    /// no directed cycle.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.var.as_str()) {
                return Err(GraphError::DuplicateVariable(n.var.clone()));
            }
            if n.concept.is_empty() {
                return Err(GraphError::EmptyConcept(n.var.clone()));
            }
        }
        for e in &self.edges {
            for v in [&e.source, &e.target] {
                if !seen.contains(v.as_str()) {
                    return Err(GraphError::UnknownVariable(v.clone()));
                }
            }
            if e.relation.is_empty() {
                return Err(GraphError::EmptyRelation(e.source.clone()));
            }
        }
        if !seen.contains(self.root.as_str()) {
            return Err(GraphError::MissingRoot(self.root.clone()));
        }
        let depths = self.depths();
        if let Some(n) = self.nodes.iter().find(|n| !depths.contains_key(&n.var)) {
            return Err(GraphError::Disconnected(n.var.clone()));
        }
        if let Some(v) = self.find_cycle() {
            return Err(GraphError::Cyclic(v));
        }
        Ok(())
    }

    /// Returns a variable on a directed cycle, if any (Kahn's algorithm).
    pub(crate) fn find_cycle(&self) -> Option<String> {
        let index = self.var_index();
        let mut indeg = vec![0usize; self.nodes.len()];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let s = index[e.source.as_str()];
            let t = index[e.target.as_str()];
            out[s].push(t);
            indeg[t] += 1;
        }
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut removed = 0;
        while let Some(u) = queue.pop_front() {
            removed += 1;
            for &v in &out[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        if removed == self.nodes.len() {
            None
        } else {
            (0..self.nodes.len())
                .find(|&i| indeg[i] > 0)
                .map(|i| self.nodes[i].var.clone())
        }
    }

    /// Graph isomorphism under variable renaming: a bijection between
    /// nodes preserving the root, concepts, constant kinds and the
    /// labeled edge multiset.
    pub fn is_isomorphic(&self, other: &AmrGraph) -> bool {
        iso::isomorphic(self, other)
    }
}

mod iso {
    use super::AmrGraph;
    use std::collections::{HashMap, VecDeque};

    type Signature = (String, bool, Vec<(String, String)>, Vec<(String, String)>);

    struct Indexed<'a> {
        sig: Vec<Signature>,
        edges: HashMap<(usize, usize), Vec<&'a str>>,
        neighbors: Vec<Vec<usize>>,
        root: usize,
    }

    fn index(g: &AmrGraph) -> Option<Indexed<'_>> {
        let vi = g.var_index();
        let n = g.nodes.len();
        let mut outs: Vec<Vec<(String, String)>> = vec![Vec::new(); n];
        let mut ins: Vec<Vec<(String, String)>> = vec![Vec::new(); n];
        let mut edges: HashMap<(usize, usize), Vec<&str>> = HashMap::new();
        let mut neighbors = vec![Vec::new(); n];
        for e in &g.edges {
            let s = *vi.get(e.source.as_str())?;
            let t = *vi.get(e.target.as_str())?;
            outs[s].push((e.relation.clone(), g.nodes[t].concept.clone()));
            ins[t].push((e.relation.clone(), g.nodes[s].concept.clone()));
            edges.entry((s, t)).or_default().push(e.relation.as_str());
            neighbors[s].push(t);
            neighbors[t].push(s);
        }
        for rels in edges.values_mut() {
            rels.sort_unstable();
        }
        let sig = (0..n)
            .map(|i| {
                let mut o = std::mem::take(&mut outs[i]);
                let mut inc = std::mem::take(&mut ins[i]);
                o.sort();
                inc.sort();
                (g.nodes[i].concept.clone(), g.nodes[i].is_constant(), o, inc)
            })
            .collect();
        Some(Indexed {
            sig,
            edges,
            neighbors,
            root: *vi.get(g.root.as_str())?,
        })
    }

    pub(super) fn isomorphic(a: &AmrGraph, b: &AmrGraph) -> bool {
        if a.nodes.len() != b.nodes.len() || a.edges.len() != b.edges.len() {
            return false;
        }
        let (Some(ia), Some(ib)) = (index(a), index(b)) else {
            return false;
        };
        if ia.sig[ia.root] != ib.sig[ib.root] {
            return false;
        }
        let mut sa = ia.sig.clone();
        let mut sb = ib.sig.clone();
        sa.sort();
        sb.sort();
        if sa != sb {
            return false;
        }

        // Visit A's nodes in BFS order from the root so every node after the
        // first has an already-mapped neighbor to constrain the search.
        let n = a.nodes.len();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([ia.root]);
        seen[ia.root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &ia.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        order.extend((0..n).filter(|&i| !seen[i]));

        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        map[ia.root] = ib.root;
        used[ib.root] = true;
        if !consistent(&ia, &ib, &map, ia.root) {
            return false;
        }
        backtrack(&ia, &ib, &order, 1, &mut map, &mut used)
    }

    fn consistent(ia: &Indexed<'_>, ib: &Indexed<'_>, map: &[usize], a: usize) -> bool {
        fn rels<'x>(idx: &'x Indexed<'_>, s: usize, t: usize) -> &'x [&'x str] {
            idx.edges.get(&(s, t)).map(Vec::as_slice).unwrap_or(&[])
        }
        for (other, &mapped) in map.iter().enumerate() {
            if mapped == usize::MAX {
                continue;
            }
            if rels(ia, a, other) != rels(ib, map[a], mapped) {
                return false;
            }
            if other != a && rels(ia, other, a) != rels(ib, mapped, map[a]) {
                return false;
            }
        }
        true
    }

    fn backtrack(
        ia: &Indexed<'_>,
        ib: &Indexed<'_>,
        order: &[usize],
        pos: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if pos == order.len() {
            return true;
        }
        let a = order[pos];
        for b in 0..used.len() {
            if used[b] || ia.sig[a] != ib.sig[b] {
                continue;
            }
            map[a] = b;
            used[b] = true;
            if consistent(ia, ib, map, a) && backtrack(ia, ib, order, pos + 1, map, used) {
                return true;
            }
            map[a] = usize::MAX;
            used[b] = false;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_ignores_edge_direction() {
        let g = parse_penman("(d / dog :ARG0-of (r / run-02 :location (g / garden)))").unwrap();
        let depths = g.depths();
        assert_eq!(depths["d"], 0);
        assert_eq!(depths["r"], 1);
        assert_eq!(depths["g"], 2);
    }

    #[test]
    fn validate_rejects_cycle() {
        let g = AmrGraph {
            nodes: vec![AmrNode::concept("a", "x"), AmrNode::concept("b", "y")],
            edges: vec![AmrEdge::new("a", "R", "b"), AmrEdge::new("b", "R", "a")],
            root: "a".into(),
        };
        assert_eq!(g.validate(), Err(GraphError::Cyclic("a".into())));
    }

    #[test]
    fn isomorphism_respects_relations() {
        let a = parse_penman("(c / chase-01 :ARG0 (d / dog) :ARG1 (c2 / cat))").unwrap();
        let b = parse_penman("(x / chase-01 :ARG1 (y / cat) :ARG0 (z / dog))").unwrap();
        let c = parse_penman("(x / chase-01 :ARG0 (y / cat) :ARG1 (z / dog))").unwrap();
        assert!(a.is_isomorphic(&b));
        assert!(!a.is_isomorphic(&c));
    }
}
