//! PENMAN reader and writer.

use super::{AmrEdge, AmrGraph, AmrNode, ConstantKind};
use std::collections::{BTreeMap, HashSet};

/// Relations whose `-of` suffix is part of the role name, not an inversion.
const NON_INVERTED: &[&str] = &["consist-of", "prep-out-of", "prep-on-behalf-of"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PenmanError {
    #[error("unexpected end of input at byte {offset}: {expected}")]
    UnexpectedEof { offset: usize, expected: &'static str },
    #[error("unexpected `{found}` at byte {offset}: {expected}")]
    Unexpected {
        offset: usize,
        found: String,
        expected: &'static str,
    },
    #[error("unbalanced `)` at byte {offset}")]
    Unbalanced { offset: usize },
    #[error("unterminated string starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("variable `{var}` introduced twice (second at byte {offset})")]
    DuplicateVariable { var: String, offset: usize },
    #[error("reference to undefined variable `{var}` at byte {offset}")]
    UndefinedVariable { var: String, offset: usize },
    #[error("trailing input at byte {offset}")]
    Trailing { offset: usize },
    #[error("cannot serialize: {0}")]
    Unserializable(String),
}

impl PenmanError {
    /// Byte offset of the error in the parsed text, when it has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            PenmanError::UnexpectedEof { offset, .. }
            | PenmanError::Unexpected { offset, .. }
            | PenmanError::Unbalanced { offset }
            | PenmanError::UnterminatedString { offset }
            | PenmanError::DuplicateVariable { offset, .. }
            | PenmanError::UndefinedVariable { offset, .. }
            | PenmanError::Trailing { offset } => Some(*offset),
            PenmanError::Unserializable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, PenmanError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                toks.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                toks.push((i, Tok::Close));
                i += 1;
            }
            b'/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            b'"' => {
                let start = i;
                let mut value = String::new();
                i += 1;
                let mut closed = false;
                while i < bytes.len() {
                    match bytes[i] {
                        b'\\' if i + 1 < bytes.len() => {
                            let ch = text[i + 1..].chars().next().unwrap();
                            value.push(ch);
                            i += 1 + ch.len_utf8();
                        }
                        b'"' => {
                            closed = true;
                            i += 1;
                            break;
                        }
                        _ => {
                            let ch = text[i..].chars().next().unwrap();
                            value.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                if !closed {
                    return Err(PenmanError::UnterminatedString { offset: start });
                }
                toks.push((start, Tok::Str(value)));
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')' | b'"' | b'/') {
                    i += 1;
                }
                let word = &text[start..i];
                if let Some(role) = word.strip_prefix(':') {
                    toks.push((start, Tok::Role(role.to_string())));
                } else {
                    toks.push((start, Tok::Sym(word.to_string())));
                }
            }
        }
    }
    Ok(toks)
}

enum Target {
    Var(String),
    Sym(String, usize),
    Quoted(String),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    nodes: Vec<AmrNode>,
    introduced: HashSet<String>,
    /// (parent var, relation, target)
    relations: Vec<(String, String, Target)>,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self, expected: &'static str) -> Result<(usize, Tok), PenmanError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(PenmanError::UnexpectedEof {
                offset: self.end,
                expected,
            }),
        }
    }

    fn unexpected(offset: usize, tok: &Tok, expected: &'static str) -> PenmanError {
        let found = match tok {
            Tok::Open => "(".to_string(),
            Tok::Close => ")".to_string(),
            Tok::Slash => "/".to_string(),
            Tok::Role(r) => format!(":{r}"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Sym(s) => s.clone(),
        };
        PenmanError::Unexpected { offset, found, expected }
    }

    fn node(&mut self) -> Result<String, PenmanError> {
        match self.next("`(`")? {
            (_, Tok::Open) => {}
            (off, Tok::Close) => return Err(PenmanError::Unbalanced { offset: off }),
            (off, t) => return Err(Self::unexpected(off, &t, "`(`")),
        }
        let var = match self.next("variable")? {
            (off, Tok::Sym(v)) => {
                if !self.introduced.insert(v.clone()) {
                    return Err(PenmanError::DuplicateVariable { var: v, offset: off });
                }
                v
            }
            (off, t) => return Err(Self::unexpected(off, &t, "variable")),
        };
        match self.next("`/`")? {
            (_, Tok::Slash) => {}
            (off, t) => return Err(Self::unexpected(off, &t, "`/`")),
        }
        let concept = match self.next("concept")? {
            (_, Tok::Sym(c)) | (_, Tok::Str(c)) => c,
            (off, t) => return Err(Self::unexpected(off, &t, "concept")),
        };
        self.nodes.push(AmrNode::concept(var.clone(), concept));
        loop {
            match self.next("role or `)`")? {
                (_, Tok::Close) => return Ok(var),
                (_, Tok::Role(role)) => {
                    let target = match self.peek() {
                        Some((_, Tok::Open)) => Target::Var(self.node()?),
                        _ => match self.next("role value")? {
                            (off, Tok::Sym(s)) => Target::Sym(s, off),
                            (_, Tok::Str(s)) => Target::Quoted(s),
                            (off, t) => return Err(Self::unexpected(off, &t, "role value")),
                        },
                    };
                    self.relations.push((var.clone(), role, target));
                }
                (off, t) => return Err(Self::unexpected(off, &t, "role or `)`")),
            }
        }
    }
}

/// Bare symbols shaped like AMR variables (`d`, `c2`) must refer to an
/// introduced variable; anything else is a constant.
fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

fn split_inverse(role: &str) -> (&str, bool) {
    if NON_INVERTED.contains(&role) {
        return (role, false);
    }
    match role.strip_suffix("-of") {
        Some(base) if !base.is_empty() => (base, true),
        _ => (role, false),
    }
}

/// Parses one PENMAN expression.
pub fn parse_penman(text: &str) -> Result<AmrGraph, PenmanError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        nodes: Vec::new(),
        introduced: HashSet::new(),
        relations: Vec::new(),
    };
    let root = p.node()?;
    if let Some((off, tok)) = p.peek().cloned() {
        return Err(match tok {
            Tok::Close => PenmanError::Unbalanced { offset: off },
            _ => PenmanError::Trailing { offset: off },
        });
    }

    let Parser {
        mut nodes,
        introduced,
        relations,
        ..
    } = p;
    let mut next_synthetic = 0usize;
    let mut fresh_var = |introduced: &HashSet<String>| loop {
        next_synthetic += 1;
        let v = format!("_{next_synthetic}");
        if !introduced.contains(&v) {
            return v;
        }
    };
    let mut edges = Vec::with_capacity(relations.len());
    for (parent, role, target) in relations {
        let child = match target {
            Target::Var(v) => v,
            Target::Sym(s, off) => {
                if introduced.contains(&s) {
                    s
                } else if looks_like_variable(&s) {
                    return Err(PenmanError::UndefinedVariable { var: s, offset: off });
                } else {
                    let v = fresh_var(&introduced);
                    nodes.push(AmrNode {
                        var: v.clone(),
                        concept: s,
                        constant: Some(ConstantKind::Symbol),
                        entity: None,
                    });
                    v
                }
            }
            Target::Quoted(s) => {
                let v = fresh_var(&introduced);
                nodes.push(AmrNode {
                    var: v.clone(),
                    concept: s,
                    constant: Some(ConstantKind::Quoted),
                    entity: None,
                });
                v
            }
        };
        let (relation, inverse) = split_inverse(&role);
        let edge = if inverse {
            AmrEdge::new(child, relation, parent)
        } else {
            AmrEdge::new(parent, relation, child)
        };
        edges.push(edge);
    }
    Ok(AmrGraph { nodes, edges, root })
}

fn format_constant(node: &AmrNode) -> String {
    match node.constant {
        Some(ConstantKind::Quoted) => {
            let escaped = node.concept.replace('\\', "\\\\").replace('"', "\\\"");
            format!("\"{escaped}\"")
        }
        _ => node.concept.clone(),
    }
}

/// Writes a graph as a single-line PENMAN expression.
///
/// Children are ordered by relation label, then target concept. Edges are
/// written forward wherever the target is reachable from the root along
/// forward edges; an inverse `-of` role is emitted only for nodes that
/// would otherwise be unreachable.
pub fn serialize_penman(g: &AmrGraph) -> Result<String, PenmanError> {
    g.validate().map_err(|e| PenmanError::Unserializable(e.to_string()))?;
    let index = g.var_index();
    let n = g.nodes.len();
    let root = index[g.root.as_str()];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ei, e) in g.edges.iter().enumerate() {
        out[index[e.source.as_str()]].push(ei);
    }

    let forward_closure = |start: usize, reached: &mut Vec<bool>| {
        let mut stack = vec![start];
        reached[start] = true;
        while let Some(u) = stack.pop() {
            for &ei in &out[u] {
                let t = index[g.edges[ei].target.as_str()];
                if !reached[t] {
                    reached[t] = true;
                    stack.push(t);
                }
            }
        }
    };

    // Pick inverse edges until every node is forward-reachable from the root
    // or from a node hanging off an inverse edge.
    let mut reached = vec![false; n];
    forward_closure(root, &mut reached);
    let mut inverse = vec![false; g.edges.len()];
    while reached.iter().any(|r| !r) {
        let pick = g
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| !reached[index[e.source.as_str()]] && reached[index[e.target.as_str()]])
            .min_by(|(_, a), (_, b)| (&a.target, &a.relation, &a.source).cmp(&(&b.target, &b.relation, &b.source)))
            .map(|(ei, _)| ei);
        let Some(ei) = pick else {
            return Err(PenmanError::Unserializable("graph is not connected".into()));
        };
        inverse[ei] = true;
        forward_closure(index[g.edges[ei].source.as_str()], &mut reached);
    }

    struct Child {
        role: String,
        target: usize,
    }
    let mut children: Vec<Vec<Child>> = (0..n).map(|_| Vec::new()).collect();
    for (ei, e) in g.edges.iter().enumerate() {
        let s = index[e.source.as_str()];
        let t = index[e.target.as_str()];
        if inverse[ei] {
            children[t].push(Child {
                role: format!("{}-of", e.relation),
                target: s,
            });
        } else {
            children[s].push(Child {
                role: e.relation.clone(),
                target: t,
            });
        }
    }
    for list in &mut children {
        list.sort_by(|a, b| {
            let ka = (&a.role, &g.nodes[a.target].concept, &g.nodes[a.target].var);
            let kb = (&b.role, &g.nodes[b.target].concept, &g.nodes[b.target].var);
            ka.cmp(&kb)
        });
    }

    fn emit(g: &AmrGraph, u: usize, children: &[Vec<Child>], visited: &mut [bool], buf: &mut String) {
        visited[u] = true;
        let node = &g.nodes[u];
        buf.push('(');
        buf.push_str(&node.var);
        buf.push_str(" / ");
        buf.push_str(&node.concept);
        for child in &children[u] {
            buf.push_str(" :");
            buf.push_str(&child.role);
            buf.push(' ');
            let t = &g.nodes[child.target];
            if t.is_constant() {
                visited[child.target] = true;
                buf.push_str(&format_constant(t));
            } else if visited[child.target] {
                buf.push_str(&t.var);
            } else {
                emit(g, child.target, children, visited, buf);
            }
        }
        buf.push(')');
    }

    if g.nodes[root].is_constant() {
        return Err(PenmanError::Unserializable("root is a constant".into()));
    }
    // A constant with more than one incident edge cannot be written inline.
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &g.edges {
        for v in [&e.source, &e.target] {
            let i = index[v.as_str()];
            if g.nodes[i].is_constant() {
                *degree.entry(i).or_default() += 1;
            }
        }
    }
    if let Some((&i, _)) = degree.iter().find(|(_, &d)| d > 1) {
        return Err(PenmanError::Unserializable(format!(
            "constant `{}` has several incident edges",
            g.nodes[i].concept
        )));
    }

    let mut visited = vec![false; n];
    let mut buf = String::new();
    emit(g, root, &children, &mut visited, &mut buf);
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(g: &AmrGraph) -> Vec<(String, String, String)> {
        let mut v: Vec<_> = g
            .edges
            .iter()
            .map(|e| (e.source.clone(), e.relation.clone(), e.target.clone()))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn single_concept() {
        let g = parse_penman("(d / dog)").unwrap();
        assert_eq!(g.nodes, vec![AmrNode::concept("d", "dog")]);
        assert!(g.edges.is_empty());
        assert_eq!(g.root, "d");
        assert_eq!(serialize_penman(&g).unwrap(), "(d / dog)");
    }

    #[test]
    fn chase_fragment() {
        let g = parse_penman("(c / chase-01 :ARG0 (d / dog) :ARG1 (c2 / cat))").unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.root, "c");
        assert_eq!(
            edge_set(&g),
            vec![
                ("c".into(), "ARG0".into(), "d".into()),
                ("c".into(), "ARG1".into(), "c2".into()),
            ]
        );
    }

    #[test]
    fn reentrancy_adds_second_incoming_edge() {
        // Hand expansion: r introduces d under ARG0 and g under location;
        // the bare `d` under g's :poss refers back to the same node.
        let g = parse_penman("(r / run-02 :ARG0 (d / dog) :location (g / garden :poss d))").unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(
            edge_set(&g),
            vec![
                ("g".into(), "poss".into(), "d".into()),
                ("r".into(), "ARG0".into(), "d".into()),
                ("r".into(), "location".into(), "g".into()),
            ]
        );
        assert_eq!(g.in_edges("d").count(), 2);
        let text = serialize_penman(&g).unwrap();
        assert_eq!(text.matches("d / dog").count(), 1);
        assert!(parse_penman(&text).unwrap().is_isomorphic(&g));
    }

    #[test]
    fn inverse_roles_are_normalized() {
        let g = parse_penman("(a / x :R-of (b / y))").unwrap();
        assert_eq!(edge_set(&g), vec![("b".into(), "R".into(), "a".into())]);
        let text = serialize_penman(&g).unwrap();
        assert_eq!(text, "(a / x :R-of (b / y))");
    }

    #[test]
    fn consist_of_is_not_inverted() {
        let g = parse_penman("(a / team :consist-of (p / person))").unwrap();
        assert_eq!(edge_set(&g), vec![("a".into(), "consist-of".into(), "p".into())]);
    }

    #[test]
    fn constants_become_synthetic_leaves() {
        let g = parse_penman(r#"(d / date-entity :month 4 :day 8 :year 2002 :polarity - :name "New \"York\"")"#).unwrap();
        assert_eq!(g.nodes.len(), 6);
        let constants: Vec<_> = g.nodes.iter().filter(|n| n.is_constant()).collect();
        assert_eq!(constants.len(), 5);
        assert!(constants.iter().all(|n| n.var.starts_with('_')));
        assert!(g
            .nodes
            .iter()
            .any(|n| n.concept == "New \"York\"" && n.constant == Some(ConstantKind::Quoted)));
        let text = serialize_penman(&g).unwrap();
        assert_eq!(
            text,
            r#"(d / date-entity :day 8 :month 4 :name "New \"York\"" :polarity - :year 2002)"#
        );
        assert!(parse_penman(&text).unwrap().is_isomorphic(&g));
    }

    #[test]
    fn reference_before_introduction() {
        let g = parse_penman("(a / and :op1 d :op2 (d / dog))").unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_penman("(c / chase-01 :ARG0 (d / dog)").unwrap_err();
        assert!(matches!(e, PenmanError::UnexpectedEof { offset: 29, .. }), "{e:?}");
        let e = parse_penman("(d / dog))").unwrap_err();
        assert_eq!(e, PenmanError::Unbalanced { offset: 9 });
        let e = parse_penman("(d / dog :ARG0 (d / cat))").unwrap_err();
        assert_eq!(
            e,
            PenmanError::DuplicateVariable {
                var: "d".into(),
                offset: 16
            }
        );
        let e = parse_penman("(d / dog :poss x2)").unwrap_err();
        assert_eq!(
            e,
            PenmanError::UndefinedVariable {
                var: "x2".into(),
                offset: 15
            }
        );
        let e = parse_penman("(d / dog :name \"Joe)").unwrap_err();
        assert_eq!(e, PenmanError::UnterminatedString { offset: 15 });
        let e = parse_penman("(d dog)").unwrap_err();
        assert_eq!(e.offset(), Some(3));
    }

    #[test]
    fn cyclic_graph_is_not_serializable() {
        let g = AmrGraph {
            nodes: vec![AmrNode::concept("a", "x"), AmrNode::concept("b", "y")],
            edges: vec![AmrEdge::new("a", "R", "b"), AmrEdge::new("b", "S", "a")],
            root: "a".into(),
        };
        assert!(matches!(serialize_penman(&g), Err(PenmanError::Unserializable(_))));
    }
}
