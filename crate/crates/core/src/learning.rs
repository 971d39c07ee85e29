//! Structured losses and AdaGrad training.

use crate::decoder::{cost_augmented_decode, decode, oracle_instance, score, CostSpec, DecodeError, IlpInstance, Subgraph};
use crate::features::{FeaturizedGraph, Weights};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Perceptron,
    Hinge,
    #[default]
    Ramp,
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perceptron" => Ok(LossKind::Perceptron),
            "hinge" => Ok(LossKind::Hinge),
            "ramp" => Ok(LossKind::Ramp),
            other => Err(format!("unknown loss `{other}` (perceptron|hinge|ramp)")),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Perceptron => "perceptron",
            LossKind::Hinge => "hinge",
            LossKind::Ramp => "ramp",
        })
    }
}

/// How many edges a decoded summary has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SizePolicy {
    /// The number of distinct gold edges, ROOT edges included.
    #[default]
    Gold,
    Fixed(usize),
    /// No size constraint.
    Free,
}

impl SizePolicy {
    pub fn size(&self, gold: Option<&CostSpec>) -> Option<usize> {
        match self {
            SizePolicy::Gold => gold.map(CostSpec::edge_count),
            SizePolicy::Fixed(k) => Some(*k),
            SizePolicy::Free => None,
        }
    }
}

impl std::str::FromStr for SizePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gold" => Ok(SizePolicy::Gold),
            "free" => Ok(SizePolicy::Free),
            _ => s
                .strip_prefix("fixed:")
                .and_then(|k| k.parse().ok())
                .map(SizePolicy::Fixed)
                .ok_or_else(|| format!("unknown size policy `{s}` (gold|fixed:<k>|free)")),
        }
    }
}

impl std::fmt::Display for SizePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SizePolicy::Gold => f.write_str("gold"),
            SizePolicy::Fixed(k) => write!(f, "fixed:{k}"),
            SizePolicy::Free => f.write_str("free"),
        }
    }
}

impl Serialize for SizePolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SizePolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub eta: f64,
    pub epochs: usize,
    pub seed: u64,
    pub unit_cost: f64,
    pub size: SizePolicy,
    pub root_out_cap: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::Ramp,
            eta: 1.0,
            epochs: 10,
            seed: 7,
            unit_cost: 1.0,
            size: SizePolicy::Gold,
            root_out_cap: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("decoding failed: {0}")]
    Decode(#[from] DecodeError),
    #[error("model file line {line}: {message}")]
    Model { line: usize, message: String },
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(LearnError::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if self.epochs == 0 {
            return Err(LearnError::Config("epochs must be at least 1".into()));
        }
        if !(self.unit_cost >= 0.0 && self.unit_cost.is_finite()) {
            return Err(LearnError::Config(format!(
                "unit cost must be non-negative, got {}",
                self.unit_cost
            )));
        }
        Ok(())
    }
}

/// One training document: its featurized source graph and gold elements.
#[derive(Debug, Clone)]
pub struct TrainingInstance {
    pub graph: FeaturizedGraph,
    pub gold: CostSpec,
}

impl TrainingInstance {
    pub fn instance(&self, w: &Weights, size: Option<usize>, root_out_cap: Option<usize>) -> IlpInstance {
        self.graph.instance(w).with_size_limit(size).with_root_out_cap(root_out_cap)
    }

    /// The closest reachable subgraph to the gold summary.
    pub fn projection(&self, size: Option<usize>, root_out_cap: Option<usize>) -> Result<Subgraph, DecodeError> {
        decode(&oracle_instance(&self.graph.graph, &self.gold, size, root_out_cap))
    }
}

/// Sparse gradient over node and edge feature names.
pub type Gradient = Weights;

fn difference(a: &Weights, b: &Weights) -> Gradient {
    let sub = |x: &BTreeMap<String, f64>, y: &BTreeMap<String, f64>| {
        let mut out = x.clone();
        for (k, v) in y {
            *out.entry(k.clone()).or_default() -= v;
        }
        out.retain(|_, v| *v != 0.0);
        out
    };
    Weights {
        theta: sub(&a.theta, &b.theta),
        psi: sub(&a.psi, &b.psi),
    }
}

/// Loss value and subgradient at `w`.
///
/// Perceptron and hinge compare against the gold projection; ramp
/// compares the cost-augmented and cost-diminished decodes.
pub fn loss_subgradient(
    kind: LossKind,
    ex: &TrainingInstance,
    w: &Weights,
    size: Option<usize>,
    root_out_cap: Option<usize>,
    unit_cost: f64,
) -> Result<(f64, Gradient), DecodeError> {
    let inst = ex.instance(w, size, root_out_cap);
    let cost = CostSpec {
        unit_cost,
        ..ex.gold.clone()
    };
    let labels = inst.labels();
    let objective =
        |sub: &Subgraph, sign: f64| -> Result<f64, DecodeError> { Ok(score(sub, &inst)? + sign * cost.cost(sub, labels)) };
    let (hi, lo, loss) = match kind {
        LossKind::Perceptron => {
            let pred = decode(&inst)?;
            let target = ex.projection(size, root_out_cap)?;
            let loss = objective(&pred, 0.0)? - objective(&target, 0.0)?;
            (pred, target, loss)
        }
        LossKind::Hinge => {
            let pred = cost_augmented_decode(&inst, &cost, 1.0)?;
            let target = ex.projection(size, root_out_cap)?;
            let loss = objective(&pred, 1.0)? - objective(&target, 0.0)?;
            (pred, target, loss)
        }
        LossKind::Ramp => {
            let pred = cost_augmented_decode(&inst, &cost, 1.0)?;
            let target = cost_augmented_decode(&inst, &cost, -1.0)?;
            let loss = objective(&pred, 1.0)? - objective(&target, -1.0)?;
            (pred, target, loss)
        }
    };
    if hi == lo {
        return Ok((loss, Gradient::default()));
    }
    Ok((loss, difference(&ex.graph.phi(&hi), &ex.graph.phi(&lo))))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdagradState {
    pub sum_sq: Weights,
    pub weights: Weights,
}

/// `sum_sq += g²`, then `w -= eta / sqrt(sum_sq) * g`, for every nonzero
/// coordinate of `grad`.
pub fn adagrad_step(state: &mut AdagradState, grad: &Gradient, eta: f64) {
    fn apply(sum_sq: &mut BTreeMap<String, f64>, w: &mut BTreeMap<String, f64>, g: &BTreeMap<String, f64>, eta: f64) {
        for (k, &gk) in g {
            if gk == 0.0 {
                continue;
            }
            let acc = sum_sq.entry(k.clone()).or_default();
            *acc += gk * gk;
            *w.entry(k.clone()).or_default() -= eta / acc.sqrt() * gk;
        }
    }
    apply(&mut state.sum_sq.theta, &mut state.weights.theta, &grad.theta, eta);
    apply(&mut state.sum_sq.psi, &mut state.weights.psi, &grad.psi, eta);
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: Weights,
    /// Mean training loss of each epoch, measured before each update.
    pub loss_trace: Vec<f64>,
}

pub fn train(corpus: &[TrainingInstance], cfg: &TrainConfig) -> Result<TrainOutcome, LearnError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(LearnError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdagradState::default();
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let ex = &corpus[i];
            let size = cfg.size.size(Some(&ex.gold));
            let (loss, grad) = loss_subgradient(cfg.loss, ex, &state.weights, size, cfg.root_out_cap, cfg.unit_cost)?;
            total += loss;
            adagrad_step(&mut state, &grad, cfg.eta);
        }
        trace.push(total / corpus.len() as f64);
    }
    Ok(TrainOutcome {
        weights: state.weights,
        loss_trace: trace,
    })
}

const MODEL_HEADER: &str = "# amrsum model";

/// Edge-feature names are exactly those with these prefixes.
fn is_edge_feature(name: &str) -> bool {
    ["edge_", "src_", "tgt_"].iter().any(|p| name.starts_with(p))
}

/// Sorted `name<TAB>weight` lines under a header holding the config digest.
pub fn write_model(w: &Weights, config_digest: &str) -> String {
    let mut all: Vec<(&String, &f64)> = w.theta.iter().chain(w.psi.iter()).collect();
    all.sort_by(|a, b| a.0.cmp(b.0));
    let mut s = format!("{MODEL_HEADER} config-sha256={config_digest}\n");
    for (name, v) in all {
        let _ = writeln!(s, "{name}\t{v:?}");
    }
    s
}

/// Parses a model file, returning the weights and the recorded digest.
pub fn read_model(text: &str) -> Result<(Weights, Option<String>), LearnError> {
    let mut w = Weights::default();
    let mut digest = None;
    for (k, line) in text.lines().enumerate() {
        let bad = |message: String| LearnError::Model { line: k + 1, message };
        if let Some(rest) = line.strip_prefix(MODEL_HEADER) {
            digest = rest.trim().strip_prefix("config-sha256=").map(str::to_string);
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, value) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected `name<TAB>weight`".into()))?;
        let value: f64 = value.trim().parse().map_err(|_| bad(format!("bad weight `{value}`")))?;
        if !value.is_finite() {
            return Err(bad("weight is not finite".into()));
        }
        let map = if is_edge_feature(name) { &mut w.psi } else { &mut w.theta };
        if map.insert(name.to_string(), value).is_some() {
            return Err(bad(format!("duplicate feature `{name}`")));
        }
    }
    Ok((w, digest))
}
