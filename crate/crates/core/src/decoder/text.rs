//! Plain-text instance files.
//!
//! ```text
//! nodes 3
//! size 2
//! root_cap none
//! node 1 0.5 dog
//! node 2 -0.25 cat
//! edge 0 1 0
//! edge 1 2 0.125
//! ```
//!
//! `size` and `root_cap` take an integer or `none`. Node lines carry an
//! optional label (rest of the line); unlisted nodes score 0. Lines
//! starting with `#` are ignored.

use super::{DecodeError, IlpInstance};
use std::fmt::Write as _;

pub fn dump_instance(inst: &IlpInstance) -> String {
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", inst.num_nodes());
    let _ = writeln!(s, "size {}", opt(inst.size_limit()));
    let _ = writeln!(s, "root_cap {}", opt(inst.root_out_cap()));
    for v in 1..inst.num_nodes() {
        let _ = writeln!(s, "node {v} {} {}", inst.node_scores()[v], inst.labels()[v]);
    }
    for (&(i, j), sc) in inst.edges().iter().zip(inst.edge_scores()) {
        let _ = writeln!(s, "edge {i} {j} {sc}");
    }
    s
}

pub fn load_instance(text: &str) -> Result<IlpInstance, DecodeError> {
    let err = |line: usize, m: &str| DecodeError::InvalidInstance(format!("line {line}: {m}"));
    let mut n: Option<usize> = None;
    let mut size = None;
    let mut cap = None;
    let mut nodes: Vec<(usize, f64, Option<String>)> = Vec::new();
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.splitn(4, ' ');
        let key = parts.next().unwrap_or_default();
        let mut num = |what: &str| -> Result<&str, DecodeError> { parts.next().ok_or_else(|| err(line, what)) };
        let opt = |s: &str| -> Result<Option<usize>, DecodeError> {
            if s == "none" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err(line, "expected an integer or `none`"))
            }
        };
        match key {
            "nodes" => n = Some(num("missing node count")?.parse().map_err(|_| err(line, "bad node count"))?),
            "size" => size = opt(num("missing size")?)?,
            "root_cap" => cap = opt(num("missing cap")?)?,
            "node" => {
                let v = num("missing node index")?.parse().map_err(|_| err(line, "bad node index"))?;
                let s = num("missing node score")?.parse().map_err(|_| err(line, "bad node score"))?;
                let label = parts
                    .next()
                    .map(|rest| rest.trim_start().to_string())
                    .filter(|l| !l.is_empty());
                nodes.push((v, s, label));
            }
            "edge" => {
                let i = num("missing edge source")?
                    .parse()
                    .map_err(|_| err(line, "bad edge source"))?;
                let j = num("missing edge target")?
                    .parse()
                    .map_err(|_| err(line, "bad edge target"))?;
                let s = num("missing edge score")?.parse().map_err(|_| err(line, "bad edge score"))?;
                edges.push(((i, j), s));
            }
            other => return Err(err(line, &format!("unknown key `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| DecodeError::InvalidInstance("missing `nodes` line".into()))?;
    let mut scores = vec![0.0; n];
    let mut labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    if n > 0 {
        labels[0] = crate::source_graph::ROOT_LABEL.to_string();
    }
    for (v, s, label) in nodes {
        if v == 0 || v >= n {
            return Err(DecodeError::InvalidInstance(format!("node {v} outside 1..{n}")));
        }
        scores[v] = s;
        if let Some(l) = label {
            labels[v] = l;
        }
    }
    Ok(IlpInstance::new(scores, edges)?
        .with_size_limit(size)
        .with_root_out_cap(cap)
        .with_labels(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let inst = IlpInstance::new(vec![0.0, 0.5, -0.25], [((0, 1), 0.0), ((1, 2), 0.125), ((0, 2), -1e-17)])
            .unwrap()
            .with_size_limit(Some(2))
            .with_labels(vec!["ROOT".into(), "dog".into(), "New York".into()]);
        let text = dump_instance(&inst);
        assert!(text.contains("node 2 -0.25 New York\n"));
        assert_eq!(load_instance(&text).unwrap(), inst);
    }

    #[test]
    fn errors_name_the_line() {
        let e = load_instance("nodes 2\nsize x\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(load_instance("size 1\n").is_err());
        assert!(load_instance("nodes 2\nedge 0 5 1\n").is_err());
        assert!(load_instance("nodes 2\nbogus 1\n").is_err());
    }
}
