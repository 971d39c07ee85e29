//! Branch and bound over rooted arborescences.
//!
//! The tree grows from ROOT. At each search node the smallest edge that
//! could extend the tree is either taken or excluded for the rest of that
//! subtree, so every arborescence is visited at most once. The bound adds,
//! for each node still reachable, its score plus the best score of an
//! incoming edge that is still usable; with a size limit only the best
//! `L - |tree|` of those are counted.
//!
//! The optimum is found first. The lexicographically smallest optimal
//! edge set is then fixed edge by edge, asking for each edge whether some
//! optimal tree contains it together with the edges fixed so far.

use super::{DecodeError, IlpInstance, Subgraph, EPS};

enum Goal {
    Best { value: f64, edges: Option<Vec<usize>> },
    Reach { threshold: f64, found: Option<Vec<usize>> },
}

struct Search<'a> {
    inst: &'a IlpInstance,
    limit: Option<usize>,
    in_tree: Vec<bool>,
    size: usize,
    root_children: usize,
    score: f64,
    chosen: Vec<usize>,
    excluded: Vec<bool>,
    required: Vec<bool>,
    goal: Goal,
    done: bool,
    // scratch
    reachable: Vec<bool>,
    best_in: Vec<f64>,
    queue: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a IlpInstance, excluded: Vec<bool>, required: Vec<bool>, goal: Goal) -> Self {
        let n = inst.num_nodes();
        let mut in_tree = vec![false; n];
        in_tree[0] = true;
        Search {
            inst,
            limit: inst.size_limit(),
            in_tree,
            size: 0,
            root_children: 0,
            score: 0.0,
            chosen: Vec::new(),
            excluded,
            required,
            goal,
            done: false,
            reachable: vec![false; n],
            best_in: vec![f64::NEG_INFINITY; n],
            queue: Vec::with_capacity(n),
        }
    }

    fn root_open(&self) -> bool {
        self.inst.root_out_cap().is_none_or(|cap| self.root_children < cap)
    }

    fn usable(&self, e: usize) -> bool {
        let (i, j) = self.inst.edges()[e];
        !self.excluded[e] && !self.in_tree[j] && (i != 0 || self.root_open())
    }

    fn candidate(&self) -> Option<usize> {
        (0..self.inst.edges().len()).find(|&e| self.usable(e) && self.in_tree[self.inst.edges()[e].0])
    }

    /// Upper bound on any completion, or `None` when no completion is
    /// feasible.
    fn bound(&mut self) -> Option<f64> {
        let n = self.inst.num_nodes();
        let edges = self.inst.edges();
        self.reachable.fill(false);
        self.best_in.fill(f64::NEG_INFINITY);
        self.queue.clear();
        self.queue.extend((0..n).filter(|&v| self.in_tree[v]));
        // edges are sorted by source, so out-edges of u form a range
        while let Some(u) = self.queue.pop() {
            let start = edges.partition_point(|&(i, _)| i < u);
            for (e, &(i, j)) in edges.iter().enumerate().skip(start) {
                if i != u {
                    break;
                }
                if !self.usable(e) {
                    continue;
                }
                let s = self.inst.edge_scores()[e];
                if s > self.best_in[j] {
                    self.best_in[j] = s;
                }
                if !self.reachable[j] {
                    self.reachable[j] = true;
                    self.queue.push(j);
                }
            }
        }
        let mut required_gain = 0.0;
        let mut required_left = 0;
        let mut optional: Vec<f64> = Vec::new();
        for v in 1..n {
            if self.in_tree[v] {
                continue;
            }
            if !self.reachable[v] {
                if self.required[v] {
                    return None;
                }
                continue;
            }
            let gain = self.inst.node_scores()[v] + self.best_in[v];
            if self.required[v] {
                required_gain += gain;
                required_left += 1;
            } else {
                optional.push(gain);
            }
        }
        match self.limit {
            Some(l) => {
                let k = l - self.size;
                if required_left > k || required_left + optional.len() < k {
                    return None;
                }
                let take = k - required_left;
                optional.sort_by(|a, b| b.total_cmp(a));
                Some(self.score + required_gain + optional[..take].iter().sum::<f64>())
            }
            None => Some(self.score + required_gain + optional.iter().filter(|&&g| g > 0.0).sum::<f64>()),
        }
    }

    fn complete(&self) -> bool {
        self.limit.is_none_or(|l| self.size == l) && (1..self.in_tree.len()).all(|v| !self.required[v] || self.in_tree[v])
    }

    fn record(&mut self) {
        match &mut self.goal {
            Goal::Best { value, edges } => {
                if edges.is_none() || self.score > *value + EPS {
                    *value = self.score;
                    *edges = Some(self.chosen.clone());
                }
            }
            Goal::Reach { threshold, found } => {
                if self.score >= *threshold {
                    *found = Some(self.chosen.clone());
                    self.done = true;
                }
            }
        }
    }

    fn pruned(&self, bound: f64) -> bool {
        match &self.goal {
            Goal::Best { value, edges } => edges.is_some() && bound <= *value + EPS,
            Goal::Reach { threshold, .. } => bound < *threshold,
        }
    }

    fn add(&mut self, e: usize) {
        let (i, j) = self.inst.edges()[e];
        self.in_tree[j] = true;
        self.size += 1;
        if i == 0 {
            self.root_children += 1;
        }
        self.score += self.inst.node_scores()[j] + self.inst.edge_scores()[e];
        self.chosen.push(e);
    }

    fn remove(&mut self, e: usize) {
        let (i, j) = self.inst.edges()[e];
        self.in_tree[j] = false;
        self.size -= 1;
        if i == 0 {
            self.root_children -= 1;
        }
        self.score -= self.inst.node_scores()[j] + self.inst.edge_scores()[e];
        self.chosen.pop();
    }

    fn run(&mut self) {
        if self.complete() {
            self.record();
            if self.done {
                return;
            }
        }
        if self.limit == Some(self.size) {
            return;
        }
        let mut excluded_here = Vec::new();
        loop {
            match self.bound() {
                Some(b) if !self.pruned(b) => {}
                _ => break,
            }
            let Some(e) = self.candidate() else { break };
            self.add(e);
            self.run();
            self.remove(e);
            if self.done {
                break;
            }
            self.excluded[e] = true;
            excluded_here.push(e);
        }
        for e in excluded_here {
            self.excluded[e] = false;
        }
    }
}

pub(super) fn solve(inst: &IlpInstance) -> Result<Subgraph, DecodeError> {
    let n = inst.num_nodes();
    let m = inst.edges().len();
    let mut in_edges = vec![Vec::new(); n];
    for (e, &(_, j)) in inst.edges().iter().enumerate() {
        in_edges[j].push(e);
    }
    let infeasible = || DecodeError::Infeasible {
        size: inst.size_limit().unwrap_or(0),
    };

    let mut first = Search::new(
        inst,
        vec![false; m],
        vec![false; n],
        Goal::Best {
            value: f64::NEG_INFINITY,
            edges: None,
        },
    );
    first.run();
    let Goal::Best { value, edges } = first.goal else {
        unreachable!()
    };
    let mut witness = edges.ok_or_else(infeasible)?;
    witness.sort_unstable();

    let mut fixed: Vec<usize> = Vec::new();
    let mut required = vec![false; n];
    let mut excluded = vec![false; m];
    for e in 0..m {
        if inst.size_limit() == Some(fixed.len()) {
            break;
        }
        if excluded[e] {
            continue;
        }
        let j = inst.edges()[e].1;
        let include = if witness.binary_search(&e).is_ok() {
            true
        } else {
            let mut req = required.clone();
            req[j] = true;
            let mut exc = excluded.clone();
            for &other in &in_edges[j] {
                if other != e {
                    exc[other] = true;
                }
            }
            let mut query = Search::new(
                inst,
                exc,
                req,
                Goal::Reach {
                    threshold: value - EPS,
                    found: None,
                },
            );
            query.run();
            match query.goal {
                Goal::Reach {
                    found: Some(mut sol), ..
                } => {
                    sol.sort_unstable();
                    witness = sol;
                    true
                }
                _ => false,
            }
        };
        if include {
            fixed.push(e);
            required[j] = true;
            for &other in &in_edges[j] {
                if other != e {
                    excluded[other] = true;
                }
            }
        } else {
            excluded[e] = true;
        }
    }
    debug_assert!(fixed.iter().eq(witness.iter()));
    Ok(Subgraph::from_edges(witness.into_iter().map(|e| inst.edges()[e])))
}
