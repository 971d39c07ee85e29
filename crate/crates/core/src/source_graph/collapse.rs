//! Collapsing of flat `name` and `date-entity` fragments.

use crate::amr::{Alignment, AmrGraph, EntityKind, Sentence};
use std::collections::{BTreeMap, HashMap, HashSet};

const NAME: &str = "name";
const DATE: &str = "date-entity";

/// Replaces every flat `name`/`date-entity` fragment with one node whose
/// label joins the head concept with `_relation_value` pairs sorted by
/// relation. A collapsed name that is its parent's only child is folded
/// into the parent (`person_name_op1_Joe`).
pub fn collapse_fragments(g: &AmrGraph) -> AmrGraph {
    collapse_with_map(g).0
}

/// As [`collapse_fragments`], also returning where each removed variable
/// went.
pub fn collapse_with_map(g: &AmrGraph) -> (AmrGraph, HashMap<String, String>) {
    let mut out = g.clone();
    let mut moved: HashMap<String, String> = HashMap::new();

    let mut out_degree: HashMap<&str, usize> = HashMap::new();
    let mut in_degree: HashMap<&str, usize> = HashMap::new();
    for e in &g.edges {
        *out_degree.entry(e.source.as_str()).or_default() += 1;
        *in_degree.entry(e.target.as_str()).or_default() += 1;
    }
    let is_leaf = |v: &str| out_degree.get(v).copied().unwrap_or(0) == 0;

    let mut removed: HashSet<String> = HashSet::new();
    let mut removed_edges = vec![false; g.edges.len()];
    let mut collapsed_names: Vec<String> = Vec::new();

    for head in &g.nodes {
        let kind = match head.concept.as_str() {
            NAME if !head.is_constant() => EntityKind::Named,
            DATE if !head.is_constant() => EntityKind::Date,
            _ => continue,
        };
        let children: Vec<usize> = g
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.source == head.var)
            .map(|(i, _)| i)
            .collect();
        // Flat: at least one child, every child a leaf owned by this head.
        let flat = !children.is_empty()
            && children.iter().all(|&i| {
                let t = g.edges[i].target.as_str();
                is_leaf(t) && in_degree.get(t).copied().unwrap_or(0) == 1
            });
        if !flat {
            continue;
        }
        let concept_of: HashMap<&str, &str> = g.nodes.iter().map(|n| (n.var.as_str(), n.concept.as_str())).collect();
        let mut parts: Vec<(&str, &str)> = children
            .iter()
            .map(|&i| (g.edges[i].relation.as_str(), concept_of[g.edges[i].target.as_str()]))
            .collect();
        parts.sort_by(|a, b| a.0.cmp(b.0));
        let mut label = head.concept.clone();
        for (rel, value) in parts {
            label.push('_');
            label.push_str(rel);
            label.push('_');
            label.push_str(value);
        }
        let node = out.nodes.iter_mut().find(|n| n.var == head.var).unwrap();
        node.concept = label;
        node.entity = Some(kind);
        for &i in &children {
            removed_edges[i] = true;
            let t = g.edges[i].target.clone();
            moved.insert(t.clone(), head.var.clone());
            removed.insert(t);
        }
        if kind == EntityKind::Named {
            collapsed_names.push(head.var.clone());
        }
    }

    let mut edges: Vec<_> = g
        .edges
        .iter()
        .zip(&removed_edges)
        .filter(|(_, &r)| !r)
        .map(|(e, _)| e.clone())
        .collect();

    for name_var in collapsed_names {
        let parents: Vec<usize> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.target == name_var)
            .map(|(i, _)| i)
            .collect();
        let [edge_idx] = parents[..] else { continue };
        let parent = edges[edge_idx].source.clone();
        if edges.iter().filter(|e| e.source == parent).count() != 1 {
            continue;
        }
        let Some(parent_pos) = out.nodes.iter().position(|n| n.var == parent) else {
            continue;
        };
        if out.nodes[parent_pos].is_constant() {
            continue;
        }
        let name_label = out.nodes.iter().find(|n| n.var == name_var).unwrap().concept.clone();
        let p = &mut out.nodes[parent_pos];
        p.concept = format!("{}_{}", p.concept, name_label);
        p.entity = Some(EntityKind::Named);
        edges.remove(edge_idx);
        for target in moved.values_mut() {
            if *target == name_var {
                *target = parent.clone();
            }
        }
        moved.insert(name_var.clone(), parent.clone());
        removed.insert(name_var);
    }

    out.nodes.retain(|n| !removed.contains(&n.var));
    out.edges = edges;
    (out, moved)
}

/// Collapses a sentence graph and carries its alignments over to the
/// surviving nodes. A node that absorbed several aligned variables gets
/// the covering span of their alignments.
pub fn collapse_sentence(s: &Sentence) -> Sentence {
    let (graph, moved) = collapse_with_map(&s.graph);
    let mut spans: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (order, a) in s.alignments.iter().enumerate() {
        let var = moved.get(&a.var).cloned().unwrap_or_else(|| a.var.clone());
        spans
            .entry(var)
            .and_modify(|(_, start, end)| {
                *start = (*start).min(a.start);
                *end = (*end).max(a.end);
            })
            .or_insert((order, a.start, a.end));
    }
    let mut alignments: Vec<(usize, Alignment)> = spans
        .into_iter()
        .map(|(var, (order, start, end))| (order, Alignment { var, start, end }))
        .collect();
    alignments.sort_by_key(|(order, _)| *order);
    Sentence {
        tokens: s.tokens.clone(),
        graph,
        alignments: alignments.into_iter().map(|(_, a)| a).collect(),
    }
}
