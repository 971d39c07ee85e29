//! Corpus files: documents of aligned sentence graphs plus gold summaries.
//!
//! ```text
//! # ::doc d1
//! # ::snt The dog was chasing a cat .
//! # ::align d 1-2
//! (c / chase-01 :ARG0 (d / dog) :ARG1 (c2 / cat))
//!
//! # ::summary
//! # ::snt ...
//! (...)
//! ```
//!
//! Other `#` lines are treated as comments.

use super::{parse_penman, AmrGraph, PenmanError};
use std::fs;
use std::path::Path;

/// A token span `[start, end)` aligned to one graph variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alignment {
    pub var: String,
    pub start: usize,
    pub end: usize,
}

impl Alignment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub graph: AmrGraph,
    /// Spans satisfy `start < end <= tokens.len()`.
    pub alignments: Vec<Alignment>,
}

impl Sentence {
    pub fn span_for(&self, var: &str) -> Option<(usize, usize)> {
        self.alignments.iter().find(|a| a.var == var).map(|a| (a.start, a.end))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub summary_sentences: Vec<Sentence>,
}

impl Document {
    pub fn summary_graphs(&self) -> Vec<AmrGraph> {
        self.summary_sentences.iter().map(|s| s.graph.clone()).collect()
    }

    /// Reference summary tokens: all summary sentences concatenated.
    pub fn reference_tokens(&self) -> Vec<String> {
        self.summary_sentences.iter().flat_map(|s| s.tokens.iter().cloned()).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("document `{doc}`, line {line}: {message}")]
    Malformed { doc: String, line: usize, message: String },
    #[error("document `{doc}`, line {line}: {source}")]
    Penman { doc: String, line: usize, source: PenmanError },
}

struct Block {
    line: usize,
    tokens: Vec<String>,
    aligns: Vec<(usize, String, usize, usize)>,
    text: String,
    text_line: usize,
}

struct Reader {
    docs: Vec<Document>,
    doc: Option<Document>,
    in_summary: bool,
    block: Option<Block>,
}

impl Reader {
    fn doc_id(&self) -> String {
        self.doc.as_ref().map(|d| d.id.clone()).unwrap_or_else(|| "<none>".into())
    }

    fn malformed(&self, line: usize, message: impl Into<String>) -> CorpusError {
        CorpusError::Malformed {
            doc: self.doc_id(),
            line,
            message: message.into(),
        }
    }

    fn finish_block(&mut self) -> Result<(), CorpusError> {
        let Some(block) = self.block.take() else {
            return Ok(());
        };
        if block.text.trim().is_empty() {
            return Err(self.malformed(block.line, "sentence block has no graph"));
        }
        let graph = parse_penman(&block.text).map_err(|source| {
            let line = block.text_line
                + source
                    .offset()
                    .map(|off| block.text[..off.min(block.text.len())].matches('\n').count())
                    .unwrap_or(0);
            CorpusError::Penman {
                doc: self.doc_id(),
                line,
                source,
            }
        })?;
        let mut alignments = Vec::with_capacity(block.aligns.len());
        for (line, var, start, end) in block.aligns {
            if graph.node(&var).is_none() {
                return Err(self.malformed(line, format!("alignment for unknown variable `{var}`")));
            }
            if start >= end || end > block.tokens.len() {
                return Err(self.malformed(
                    line,
                    format!("alignment span {start}-{end} outside {} tokens", block.tokens.len()),
                ));
            }
            alignments.push(Alignment { var, start, end });
        }
        let sentence = Sentence {
            tokens: block.tokens,
            graph,
            alignments,
        };
        let doc = self.doc.as_mut().expect("block implies document");
        if self.in_summary {
            doc.summary_sentences.push(sentence);
        } else {
            doc.sentences.push(sentence);
        }
        Ok(())
    }

    fn finish_doc(&mut self) -> Result<(), CorpusError> {
        self.finish_block()?;
        if let Some(doc) = self.doc.take() {
            self.docs.push(doc);
        }
        self.in_summary = false;
        Ok(())
    }
}

/// Parses corpus text; documents keep file order.
pub fn parse_corpus(text: &str) -> Result<Vec<Document>, CorpusError> {
    let mut r = Reader {
        docs: Vec::new(),
        doc: None,
        in_summary: false,
        block: None,
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end();
        if let Some(id) = line.strip_prefix("# ::doc") {
            r.finish_doc()?;
            let id = id.trim();
            if id.is_empty() {
                return Err(r.malformed(lineno, "missing document id"));
            }
            r.doc = Some(Document {
                id: id.to_string(),
                sentences: Vec::new(),
                summary_sentences: Vec::new(),
            });
        } else if line.trim() == "# ::summary" {
            r.finish_block()?;
            if r.doc.is_none() {
                return Err(r.malformed(lineno, "`# ::summary` before any `# ::doc`"));
            }
            r.in_summary = true;
        } else if let Some(rest) = line.strip_prefix("# ::snt") {
            r.finish_block()?;
            if r.doc.is_none() {
                return Err(r.malformed(lineno, "sentence before any `# ::doc`"));
            }
            r.block = Some(Block {
                line: lineno,
                tokens: rest.split_whitespace().map(str::to_string).collect(),
                aligns: Vec::new(),
                text: String::new(),
                text_line: lineno + 1,
            });
        } else if let Some(rest) = line.strip_prefix("# ::align") {
            let parsed = parse_align(rest);
            let block = match r.block.as_mut() {
                Some(b) if b.text.is_empty() => b,
                _ => return Err(r.malformed(lineno, "alignment outside a sentence header")),
            };
            match parsed {
                Some((var, start, end)) => block.aligns.push((lineno, var, start, end)),
                None => return Err(r.malformed(lineno, "expected `# ::align <var> <start>-<end>`")),
            }
        } else if line.starts_with('#') {
            // other metadata
        } else if line.trim().is_empty() {
            if r.block.as_ref().is_some_and(|b| !b.text.is_empty()) {
                r.finish_block()?;
            }
        } else {
            match r.block.as_mut() {
                Some(b) => {
                    if b.text.is_empty() {
                        b.text_line = lineno;
                    }
                    b.text.push_str(line);
                    b.text.push('\n');
                }
                None => return Err(r.malformed(lineno, "graph text outside a sentence block")),
            }
        }
    }
    r.finish_doc()?;
    Ok(r.docs)
}

fn parse_align(rest: &str) -> Option<(String, usize, usize)> {
    let mut parts = rest.split_whitespace();
    let var = parts.next()?;
    let span = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    let (s, e) = span.split_once('-')?;
    Some((var.to_string(), s.parse().ok()?, e.parse().ok()?))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}
