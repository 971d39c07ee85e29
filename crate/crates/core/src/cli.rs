//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input/output problem, 3 infeasible decode,
//! 4 configuration error.

use crate::amr::{load_corpus, CorpusError, Document};
use crate::config::RunConfig;
use crate::decoder::{decode, oracle_instance, score, CostSpec, DecodeError, Subgraph};
use crate::eval::{generate_bow, match_labels, render_table, rouge1_counts, BagOfWords, DocEval, EvalReport};
use crate::features::FeaturizedGraph;
use crate::learning::{read_model, train, write_model, LearnError, LossKind, SizePolicy, TrainingInstance};
use crate::source_graph::{coverage, Expansion, SourceGraph};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "amrsum", version, about = "Graph-based abstractive summarization over AMR corpora")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Corpus to read instead of the split named in the config.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// none, sentence or document.
    #[arg(long, global = true)]
    pub expansion: Option<Expansion>,
    /// perceptron, hinge or ramp.
    #[arg(long, global = true)]
    pub loss: Option<LossKind>,
    /// AdaGrad step size.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Seed for the training shuffle.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cost of each wrong node or edge.
    #[arg(long, global = true)]
    pub unit_cost: Option<f64>,
    /// gold, fixed:<k> or free.
    #[arg(long, global = true)]
    pub size_policy: Option<SizePolicy>,
    /// Maximum number of selected ROOT edges.
    #[arg(long, global = true)]
    pub root_cap: Option<usize>,
    /// Worker threads for per-document work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build source graphs: graphs.jsonl and a size table.
    Build,
    /// Gold-edge coverage with and without expansion.
    Coverage,
    /// Train weights: model.tsv.
    Train,
    /// Decode summaries with a trained model: predictions.jsonl.
    Decode {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Best reachable gold approximations: predictions.jsonl.
    Oracle,
    /// Score predictions against gold: report.json and report.txt.
    Evaluate {
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn decode_error(doc: &str, e: DecodeError) -> CliError {
    match e {
        DecodeError::Infeasible { .. } => CliError::Infeasible(format!("document `{doc}`: {e}")),
        other => CliError::Input(format!("document `{doc}`: {other}")),
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Decode(DecodeError::Infeasible { .. }) => CliError::Infeasible(e.to_string()),
            LearnError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.expansion {
        cfg.expansion = v;
    }
    if let Some(v) = o.loss {
        cfg.loss = v;
    }
    if let Some(v) = o.eta {
        cfg.eta = v;
    }
    if let Some(v) = o.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.unit_cost {
        cfg.unit_cost = v;
    }
    if let Some(v) = o.size_policy {
        cfg.size_policy = v;
    }
    if let Some(v) = o.root_cap {
        cfg.root_out_cap = Some(v);
    }
    if let Some(v) = o.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

struct Context {
    cfg: RunConfig,
    pool: rayon::ThreadPool,
    inputs: BTreeMap<String, String>,
}

impl Context {
    fn corpus(
        &mut self,
        explicit: &Option<PathBuf>,
        fallback: &[&Option<PathBuf>],
        what: &str,
    ) -> Result<Vec<Document>, CliError> {
        let path = explicit
            .clone()
            .or_else(|| fallback.iter().find_map(|p| (*p).clone()))
            .ok_or_else(|| CliError::Config(format!("no {what} corpus: pass --corpus or set it in the config")))?;
        self.load(&path)
    }

    fn load(&mut self, path: &Path) -> Result<Vec<Document>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        self.inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        let docs = load_corpus(path)?;
        if docs.is_empty() {
            return Err(CliError::Input(format!("{} contains no documents", path.display())));
        }
        Ok(docs)
    }

    fn graphs(&self, docs: &[Document], expansion: Expansion) -> Result<Vec<SourceGraph>, CliError> {
        self.pool.install(|| {
            docs.par_iter()
                .map(|d| {
                    SourceGraph::from_document(d)
                        .map(|g| g.expand(expansion))
                        .map_err(|e| CliError::Input(format!("document `{}`: {e}", d.id)))
                })
                .collect()
        })
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.cfg.out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.cfg.out.display())))?;
        let p = self.out_path(name);
        fs::write(&p, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
    }

    /// Records this command in `manifest.json`, keeping other commands'
    /// entries.
    fn manifest(&self, command: &str, extra: serde_json::Value) -> Result<(), CliError> {
        let path = self.out_path("manifest.json");
        let mut all: BTreeMap<String, serde_json::Value> = fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default();
        let entry = serde_json::json!({
            "config_digest": self.cfg.digest(),
            "seed": self.cfg.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.cfg,
            "inputs": self.inputs,
            "details": extra,
        });
        all.insert(command.to_string(), entry);
        self.write(
            "manifest.json",
            &(serde_json::to_string_pretty(&all).expect("manifest serializes") + "\n"),
        )
    }
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let mut ctx = Context {
        cfg,
        pool,
        inputs: BTreeMap::new(),
    };
    let corpus = &cli.overrides.corpus;
    match &cli.command {
        Command::Build => cmd_build(&mut ctx, corpus),
        Command::Coverage => cmd_coverage(&mut ctx, corpus),
        Command::Train => cmd_train(&mut ctx, corpus),
        Command::Decode { model } => cmd_decode(&mut ctx, corpus, model),
        Command::Oracle => cmd_oracle(&mut ctx, corpus),
        Command::Evaluate { predictions } => cmd_evaluate(&mut ctx, corpus, predictions),
    }
}

/// One row of the graph size table. ROOT and its edges are not counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub doc: String,
    pub sentences: usize,
    pub summary_sentences: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Edges after expansion.
    pub expanded: usize,
}

pub fn graph_stats(doc: &Document, plain: &SourceGraph, expanded: &SourceGraph) -> GraphStats {
    let content = |g: &SourceGraph| g.edges.iter().filter(|e| !e.is_root_edge()).count();
    GraphStats {
        doc: doc.id.clone(),
        sentences: doc.sentences.len(),
        summary_sentences: doc.summary_sentences.len(),
        nodes: plain.nodes.len() - 1,
        edges: content(plain),
        expanded: content(expanded),
    }
}

fn stats_table(rows: &[GraphStats], expansion: Expansion) -> String {
    let width = rows.iter().map(|r| r.doc.len()).max().unwrap_or(0).max(8);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:width$}  {:>5}  {:>5}  {:>6}  {:>6}  {:>7}",
        "Document", "Sent.", "Summ.", "Nodes", "Edges", "Expand"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:width$}  {:>5}  {:>5}  {:>6}  {:>6}  {:>7}",
            r.doc, r.sentences, r.summary_sentences, r.nodes, r.edges, r.expanded
        );
    }
    let n = rows.len().max(1) as f64;
    let avg = |f: fn(&GraphStats) -> usize| rows.iter().map(f).sum::<usize>() as f64 / n;
    let _ = writeln!(
        s,
        "{:width$}  {:>5.1}  {:>5.1}  {:>6.1}  {:>6.1}  {:>7.1}",
        "average",
        avg(|r| r.sentences),
        avg(|r| r.summary_sentences),
        avg(|r| r.nodes),
        avg(|r| r.edges),
        avg(|r| r.expanded)
    );
    let _ = writeln!(s, "expansion: {expansion}");
    s
}

fn cmd_build(ctx: &mut Context, corpus: &Option<PathBuf>) -> Result<String, CliError> {
    let docs = ctx.corpus(
        corpus,
        &[&ctx.cfg.train.clone(), &ctx.cfg.dev.clone(), &ctx.cfg.test.clone()],
        "input",
    )?;
    let plain = ctx.graphs(&docs, Expansion::None)?;
    let expansion = ctx.cfg.expansion;
    let expanded: Vec<SourceGraph> = plain.iter().map(|g| g.expand(expansion)).collect();
    let mut jsonl = String::new();
    let mut rows = Vec::new();
    for ((doc, p), x) in docs.iter().zip(&plain).zip(&expanded) {
        jsonl.push_str(&x.to_jsonl(&doc.id));
        rows.push(graph_stats(doc, p, x));
    }
    let table = stats_table(&rows, expansion);
    ctx.write("graphs.jsonl", &jsonl)?;
    ctx.write("report.txt", &table)?;
    ctx.manifest("build", serde_json::json!({ "documents": rows }))?;
    Ok(table)
}

/// Pooled coverage of one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    pub gold_edges: usize,
    pub labeled: f64,
    pub unlabeled: f64,
    pub sentence_expanded: f64,
    pub document_expanded: f64,
}

pub fn coverage_row(docs: &[Document], graphs: &[SourceGraph]) -> Result<CoverageRow, CliError> {
    let mut totals = [0usize; 4];
    let mut gold_edges = 0;
    for (doc, sg) in docs.iter().zip(graphs) {
        if doc.summary_sentences.is_empty() {
            continue;
        }
        let gold = doc.summary_graphs();
        let Ok(plain) = coverage(sg, &gold) else { continue };
        let sent = coverage(&sg.expand(Expansion::Sentence), &gold).expect("same gold");
        let full = coverage(&sg.expand(Expansion::Document), &gold).expect("same gold");
        gold_edges += plain.total;
        totals[0] += plain.covered_labeled;
        totals[1] += plain.covered_unlabeled;
        totals[2] += sent.covered_unlabeled;
        totals[3] += full.covered_unlabeled;
    }
    if gold_edges == 0 {
        return Err(CliError::Input("no gold summary edges to cover".into()));
    }
    let frac = |k: usize| totals[k] as f64 / gold_edges as f64;
    Ok(CoverageRow {
        gold_edges,
        labeled: frac(0),
        unlabeled: frac(1),
        sentence_expanded: frac(2),
        document_expanded: frac(3),
    })
}

fn cmd_coverage(ctx: &mut Context, corpus: &Option<PathBuf>) -> Result<String, CliError> {
    let mut splits: Vec<(String, PathBuf)> = Vec::new();
    match corpus {
        Some(p) => splits.push(("corpus".into(), p.clone())),
        None => {
            for (name, p) in [("train", &ctx.cfg.train), ("dev", &ctx.cfg.dev), ("test", &ctx.cfg.test)] {
                if let Some(p) = p {
                    splits.push((name.into(), p.clone()));
                }
            }
        }
    }
    if splits.is_empty() {
        return Err(CliError::Config(
            "no corpus: pass --corpus or set train/dev/test in the config".into(),
        ));
    }
    let mut rows = BTreeMap::new();
    let mut ordered = Vec::new();
    for (name, path) in splits {
        let docs = ctx.load(&path)?;
        let graphs = ctx.graphs(&docs, Expansion::None)?;
        let row = coverage_row(&docs, &graphs)?;
        ordered.push((name.clone(), row));
        rows.insert(name, row);
    }
    let pct = |x: f64| format!("{:.1}", 100.0 * x);
    let mut table = String::new();
    let _ = writeln!(table, "{:8}  {:>8}  {:>9}  {:^19}", "", "", "", "Expand");
    let _ = writeln!(
        table,
        "{:8}  {:>8}  {:>9}  {:>8}  {:>8}",
        "Split", "Labeled", "Unlabeled", "Sentence", "Document"
    );
    for (name, r) in &ordered {
        let _ = writeln!(
            table,
            "{:8}  {:>8}  {:>9}  {:>8}  {:>8}",
            name,
            pct(r.labeled),
            pct(r.unlabeled),
            pct(r.sentence_expanded),
            pct(r.document_expanded)
        );
    }
    ctx.write("report.txt", &table)?;
    ctx.write(
        "report.json",
        &(serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"),
    )?;
    ctx.manifest("coverage", serde_json::Value::Null)?;
    Ok(table)
}

fn require_gold(doc: &Document) -> Result<CostSpec, CliError> {
    if doc.summary_sentences.is_empty() {
        return Err(CliError::Config(format!("document `{}` has no gold summary", doc.id)));
    }
    Ok(CostSpec::from_gold(&doc.summary_graphs(), 1.0))
}

fn system_name(base: &str, expansion: Expansion) -> String {
    match expansion {
        Expansion::None => base.to_string(),
        other => format!("{base}+{other}"),
    }
}

fn cmd_train(ctx: &mut Context, corpus: &Option<PathBuf>) -> Result<String, CliError> {
    let docs = ctx.corpus(corpus, &[&ctx.cfg.train.clone()], "training")?;
    let graphs = ctx.graphs(&docs, ctx.cfg.expansion)?;
    let mut data = Vec::with_capacity(docs.len());
    for (doc, g) in docs.iter().zip(graphs) {
        let gold = CostSpec {
            unit_cost: ctx.cfg.unit_cost,
            ..require_gold(doc)?
        };
        data.push(TrainingInstance {
            graph: FeaturizedGraph::new(g, &ctx.cfg.features),
            gold,
        });
    }
    let outcome = train(&data, &ctx.cfg.train_config())?;
    let model = write_model(&outcome.weights, &ctx.cfg.digest());
    ctx.write("model.tsv", &model)?;
    ctx.manifest(
        "train",
        serde_json::json!({ "loss_trace": outcome.loss_trace, "features": outcome.weights.theta.len() + outcome.weights.psi.len() }),
    )?;
    let mut s = String::new();
    for (i, l) in outcome.loss_trace.iter().enumerate() {
        let _ = writeln!(s, "epoch {:>3}  loss {l:.6}", i + 1);
    }
    let _ = writeln!(s, "wrote {}", ctx.out_path("model.tsv").display());
    Ok(s)
}

/// One decoded summary, stored by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc: String,
    pub system: String,
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub score: f64,
    pub bag: Vec<String>,
}

fn prediction(doc: &Document, sg: &SourceGraph, sub: &Subgraph, score: f64, system: &str) -> Prediction {
    Prediction {
        doc: doc.id.clone(),
        system: system.to_string(),
        nodes: sub.nodes.iter().map(|&v| sg.label(v).to_string()).collect(),
        edges: sub
            .edges
            .iter()
            .map(|&(i, j)| (sg.label(i).to_string(), sg.label(j).to_string()))
            .collect(),
        score,
        bag: generate_bow(sub, sg, &doc.sentences).tokens(),
    }
}

fn predictions_jsonl(preds: &[Prediction]) -> String {
    preds
        .iter()
        .map(|p| serde_json::to_string(p).expect("prediction serializes") + "\n")
        .collect()
}

fn size_for(policy: SizePolicy, doc: &Document) -> Result<Option<usize>, CliError> {
    match policy {
        SizePolicy::Gold => Ok(Some(require_gold(doc)?.edge_count())),
        other => Ok(other.size(None)),
    }
}

fn cmd_decode(ctx: &mut Context, corpus: &Option<PathBuf>, model: &Option<PathBuf>) -> Result<String, CliError> {
    let model_path = model.clone().unwrap_or_else(|| ctx.out_path("model.tsv"));
    let text = fs::read_to_string(&model_path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", model_path.display())))?;
    ctx.inputs
        .insert(model_path.display().to_string(), hex::encode(Sha256::digest(text.as_bytes())));
    let (weights, _) = read_model(&text).map_err(|e| CliError::Input(format!("{}: {e}", model_path.display())))?;
    let unknown = ctx.cfg.features.unknown_features(&weights);
    if !unknown.is_empty() {
        return Err(CliError::Config(format!(
            "model {} has features this configuration never produces: {}",
            model_path.display(),
            unknown.join(", ")
        )));
    }
    let docs = ctx.corpus(corpus, &[&ctx.cfg.test.clone(), &ctx.cfg.dev.clone()], "decoding")?;
    let graphs = ctx.graphs(&docs, ctx.cfg.expansion)?;
    let system = system_name(&ctx.cfg.loss.to_string(), ctx.cfg.expansion);
    let cfg = &ctx.cfg;
    let preds: Vec<Prediction> = ctx.pool.install(|| {
        docs.par_iter()
            .zip(graphs.into_par_iter())
            .map(|(doc, sg)| {
                let size = size_for(cfg.size_policy, doc)?;
                let fg = FeaturizedGraph::new(sg, &cfg.features);
                let inst = fg
                    .instance(&weights)
                    .with_size_limit(size)
                    .with_root_out_cap(cfg.root_out_cap);
                let sub = decode(&inst).map_err(|e| decode_error(&doc.id, e))?;
                let value = score(&sub, &inst).expect("decoded subgraph scores");
                Ok(prediction(doc, &fg.graph, &sub, value, &system))
            })
            .collect::<Result<_, CliError>>()
    })?;
    ctx.write("predictions.jsonl", &predictions_jsonl(&preds))?;
    ctx.manifest("decode", serde_json::json!({ "system": system }))?;
    Ok(format!(
        "decoded {} documents into {}\n",
        preds.len(),
        ctx.out_path("predictions.jsonl").display()
    ))
}

fn cmd_oracle(ctx: &mut Context, corpus: &Option<PathBuf>) -> Result<String, CliError> {
    let docs = ctx.corpus(
        corpus,
        &[&ctx.cfg.test.clone(), &ctx.cfg.dev.clone(), &ctx.cfg.train.clone()],
        "oracle",
    )?;
    let graphs = ctx.graphs(&docs, ctx.cfg.expansion)?;
    let system = system_name("oracle", ctx.cfg.expansion);
    let cfg = &ctx.cfg;
    let preds: Vec<Prediction> = ctx.pool.install(|| {
        docs.par_iter()
            .zip(graphs.par_iter())
            .map(|(doc, sg)| {
                let gold = require_gold(doc)?;
                let size = size_for(cfg.size_policy, doc)?;
                let inst = oracle_instance(sg, &gold, size, cfg.root_out_cap);
                let sub = decode(&inst).map_err(|e| decode_error(&doc.id, e))?;
                let value = score(&sub, &inst).expect("decoded subgraph scores");
                Ok(prediction(doc, sg, &sub, value, &system))
            })
            .collect::<Result<_, CliError>>()
    })?;
    ctx.write("predictions.jsonl", &predictions_jsonl(&preds))?;
    ctx.manifest("oracle", serde_json::json!({ "system": system }))?;
    Ok(format!(
        "decoded {} oracle summaries into {}\n",
        preds.len(),
        ctx.out_path("predictions.jsonl").display()
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub system: String,
    pub report: EvalReport,
    pub documents: Vec<DocEval>,
}

fn cmd_evaluate(ctx: &mut Context, corpus: &Option<PathBuf>, predictions: &Option<PathBuf>) -> Result<String, CliError> {
    let pred_path = predictions.clone().unwrap_or_else(|| ctx.out_path("predictions.jsonl"));
    let text = fs::read_to_string(&pred_path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", pred_path.display())))?;
    ctx.inputs
        .insert(pred_path.display().to_string(), hex::encode(Sha256::digest(text.as_bytes())));
    let mut preds = Vec::new();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let p: Prediction =
            serde_json::from_str(line).map_err(|e| CliError::Input(format!("{} line {}: {e}", pred_path.display(), k + 1)))?;
        preds.push(p);
    }
    if preds.is_empty() {
        return Err(CliError::Input(format!("{} holds no predictions", pred_path.display())));
    }
    let docs = ctx.corpus(corpus, &[&ctx.cfg.test.clone(), &ctx.cfg.dev.clone()], "evaluation")?;
    let by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let opts = ctx.cfg.rouge.options();
    let evals: Vec<DocEval> = ctx.pool.install(|| {
        preds
            .par_iter()
            .map(|p| {
                let doc = by_id
                    .get(p.doc.as_str())
                    .ok_or_else(|| CliError::Input(format!("prediction for unknown document `{}`", p.doc)))?;
                let gold = doc.summary_graphs();
                let nodes: BTreeSet<&str> = p.nodes.iter().map(String::as_str).collect();
                let edges: BTreeSet<(&str, &str)> = p.edges.iter().map(|(s, t)| (s.as_str(), t.as_str())).collect();
                let subgraph =
                    match_labels(&nodes, &edges, &gold).map_err(|e| CliError::Input(format!("document `{}`: {e}", p.doc)))?;
                let rouge = rouge1_counts(&BagOfWords::from_tokens(&p.bag), &[doc.reference_tokens()], &opts)
                    .map_err(|e| CliError::Input(format!("document `{}`: {e}", p.doc)))?;
                Ok(DocEval {
                    doc: p.doc.clone(),
                    subgraph,
                    rouge,
                })
            })
            .collect::<Result<_, CliError>>()
    })?;
    let report = EvalReport::aggregate(&evals);
    let system = preds[0].system.clone();
    let table = render_table(&[(&system, &report)]);
    let file = ReportFile {
        system: system.clone(),
        report,
        documents: evals,
    };
    ctx.write(
        "report.json",
        &(serde_json::to_string_pretty(&file).expect("report serializes") + "\n"),
    )?;
    ctx.write("report.txt", &table)?;
    ctx.manifest("evaluate", serde_json::json!({ "system": system }))?;
    Ok(table)
}
