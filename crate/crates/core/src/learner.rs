//! Gradient-boosted decision trees over sparse feature vectors.
//!
//! Binary logistic objective with second-order gradient statistics and exact
//! greedy split search over the features present in the data. Training is
//! deterministic given a seed; the model serializes to a human-diffable text
//! format.

use std::collections::BTreeMap;
use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{FeatureConfig, SparseVector};

/// L2 regularization on leaf weights in the gain and leaf-value formulas.
const REG_LAMBDA: f64 = 1.0;

/// Splits must improve the objective by at least this much.
const MIN_GAIN: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TrainError {
    #[error("no training examples")]
    Empty,
    #[error("training data contains only {0} examples")]
    SingleClass(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainParams {
    pub max_depth: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            max_depth: 9,
            rounds: 200,
            learning_rate: 0.3,
            min_child_weight: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// One regression tree, nodes in a flat arena with the root at index 0.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn eval(&self, v: &SparseVector) -> f64 {
        let mut i = 0u32;
        loop {
            match &self.nodes[i as usize] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if v.get(*feature) < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// Boosted tree ensemble. `prediction = sigmoid(base_score + learning_rate *
/// sum of tree scores)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub hash_base: u32,
    pub watchlist_count: usize,
}

/// Training accuracy and feature usage, reported alongside the model.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub positive_accuracy: f64,
    pub negative_accuracy: f64,
    pub features_used: usize,
    /// Mean logistic loss after each boosting round.
    pub round_losses: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// E-style weight for a positivity probability: good clauses get 1.0, the
/// rest 10.0.
pub fn clause_weight(prob: f64) -> f64 {
    if prob >= 0.5 {
        1.0
    } else {
        10.0
    }
}

pub fn predict(m: &Model, v: &SparseVector) -> f64 {
    let score: f64 = m.trees.iter().map(|t| t.eval(v)).sum();
    sigmoid(m.base_score + m.learning_rate * score)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelStats {
    pub clause_features: usize,
    pub conjecture_features: usize,
    pub watchlist_features: usize,
}

impl ModelStats {
    pub fn total(&self) -> usize {
        self.clause_features + self.conjecture_features + self.watchlist_features
    }
}

/// Distinct feature indices referenced by the trees, split by vector block.
pub fn model_stats(m: &Model) -> ModelStats {
    let mut seen = HashSet::new();
    for t in &m.trees {
        for n in &t.nodes {
            if let Node::Split { feature, .. } = n {
                seen.insert(*feature);
            }
        }
    }
    let hb = m.hash_base;
    let mut stats = ModelStats {
        clause_features: 0,
        conjecture_features: 0,
        watchlist_features: 0,
    };
    for f in seen {
        if f < hb {
            stats.clause_features += 1;
        } else if f < 2 * hb {
            stats.conjecture_features += 1;
        } else {
            stats.watchlist_features += 1;
        }
    }
    stats
}

struct SplitCandidate {
    gain: f64,
    feature: u32,
    threshold: f64,
}

struct TreeBuilder<'a> {
    examples: &'a [(SparseVector, bool)],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a TrainParams,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn leaf_value(g: f64, h: f64) -> f64 {
        -g / (h + REG_LAMBDA)
    }

    fn objective(g: f64, h: f64) -> f64 {
        g * g / (h + REG_LAMBDA)
    }

    fn build(&mut self, rows: Vec<u32>, depth: usize) -> u32 {
        let g: f64 = rows.iter().map(|&r| self.grad[r as usize]).sum();
        let h: f64 = rows.iter().map(|&r| self.hess[r as usize]).sum();
        if depth >= self.params.max_depth || rows.len() < 2 {
            return self.push(Node::Leaf {
                value: Self::leaf_value(g, h),
            });
        }
        let best = self.best_split(&rows, g, h);
        let Some(best) = best else {
            return self.push(Node::Leaf {
                value: Self::leaf_value(g, h),
            });
        };
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
            .iter()
            .partition(|&&r| self.examples[r as usize].0.get(best.feature) < best.threshold);
        if left_rows.is_empty() || right_rows.is_empty() {
            return self.push(Node::Leaf {
                value: Self::leaf_value(g, h),
            });
        }
        let slot = self.push(Node::Leaf { value: 0.0 });
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[slot as usize] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        slot
    }

    fn push(&mut self, n: Node) -> u32 {
        self.nodes.push(n);
        (self.nodes.len() - 1) as u32
    }

    /// Exact greedy split search. Features are visited in ascending index
    /// order and thresholds ascending, so ties resolve deterministically.
    fn best_split(&self, rows: &[u32], total_g: f64, total_h: f64) -> Option<SplitCandidate> {
        let parent_obj = Self::objective(total_g, total_h);
        let mcw = self.params.min_child_weight;
        // Nonzero entries per feature across the node's rows.
        let mut by_feature: BTreeMap<u32, Vec<(f64, u32)>> = BTreeMap::new();
        for &r in rows {
            for (&f, &v) in &self.examples[r as usize].0.entries {
                by_feature.entry(f).or_default().push((v, r));
            }
        }
        let mut best: Option<SplitCandidate> = None;
        for (&feature, entries) in by_feature.iter_mut() {
            entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let nz_g: f64 = entries.iter().map(|&(_, r)| self.grad[r as usize]).sum();
            let nz_h: f64 = entries.iter().map(|&(_, r)| self.hess[r as usize]).sum();
            let zero_count = rows.len() - entries.len();
            // Group by distinct value, with the absent-entry group at 0.
            let mut groups: Vec<(f64, f64, f64)> = Vec::new();
            if zero_count > 0 {
                groups.push((0.0, total_g - nz_g, total_h - nz_h));
            }
            for &(v, r) in entries.iter() {
                match groups.last_mut() {
                    Some(last) if last.0 == v => {
                        last.1 += self.grad[r as usize];
                        last.2 += self.hess[r as usize];
                    }
                    _ => groups.push((v, self.grad[r as usize], self.hess[r as usize])),
                }
            }
            groups.sort_by(|a, b| a.0.total_cmp(&b.0));
            // Merge duplicates created by the zero group landing mid-list.
            let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(groups.len());
            for gq in groups {
                match merged.last_mut() {
                    Some(last) if last.0 == gq.0 => {
                        last.1 += gq.1;
                        last.2 += gq.2;
                    }
                    _ => merged.push(gq),
                }
            }
            let mut left_g = 0.0;
            let mut left_h = 0.0;
            for w in merged.windows(2) {
                left_g += w[0].1;
                left_h += w[0].2;
                let right_g = total_g - left_g;
                let right_h = total_h - left_h;
                if left_h < mcw || right_h < mcw {
                    continue;
                }
                let gain =
                    Self::objective(left_g, left_h) + Self::objective(right_g, right_h) - parent_obj;
                if gain > MIN_GAIN && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        gain,
                        feature,
                        threshold: (w[0].0 + w[1].0) / 2.0,
                    });
                }
            }
        }
        best
    }
}

/// Fits a boosted ensemble on logistic loss. Deterministic for a fixed seed:
/// feature and threshold sweeps are ordered and row subsampling uses a seeded
/// generator.
pub fn train(
    examples: &[(SparseVector, bool)],
    params: &TrainParams,
    cfg: &FeatureConfig,
) -> Result<(Model, TrainReport), TrainError> {
    if examples.is_empty() {
        return Err(TrainError::Empty);
    }
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 {
        return Err(TrainError::SingleClass("negative"));
    }
    if positives == examples.len() {
        return Err(TrainError::SingleClass("positive"));
    }
    let n = examples.len();
    let mut model = Model {
        trees: Vec::with_capacity(params.rounds),
        learning_rate: params.learning_rate,
        base_score: 0.0,
        hash_base: cfg.hash_base,
        watchlist_count: cfg.watchlist_count,
    };
    let mut margins = vec![model.base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut round_losses = Vec::with_capacity(params.rounds);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            let y = f64::from(u8::from(examples[i].1));
            grad[i] = p - y;
            hess[i] = p * (1.0 - p);
        }
        let rows: Vec<u32> = if params.subsample < 1.0 {
            let k = ((n as f64) * params.subsample).floor().max(1.0) as usize;
            let mut idx = rand::seq::index::sample(&mut rng, n, k.min(n)).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| i as u32).collect()
        } else {
            (0..n as u32).collect()
        };
        let mut builder = TreeBuilder {
            examples,
            grad: &grad,
            hess: &hess,
            params,
            nodes: Vec::new(),
        };
        let root_rows = rows;
        builder.build(root_rows, 0);
        let tree = Tree {
            nodes: builder.nodes,
        };
        for i in 0..n {
            margins[i] += params.learning_rate * tree.eval(&examples[i].0);
        }
        model.trees.push(tree);
        let loss = examples
            .iter()
            .enumerate()
            .map(|(i, (_, y))| {
                let p = sigmoid(margins[i]).clamp(1e-15, 1.0 - 1e-15);
                if *y {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / n as f64;
        round_losses.push(loss);
    }
    let mut pos_correct = 0usize;
    let mut neg_correct = 0usize;
    for (v, y) in examples {
        let predicted_positive = predict(&model, v) >= 0.5;
        if *y && predicted_positive {
            pos_correct += 1;
        }
        if !*y && !predicted_positive {
            neg_correct += 1;
        }
    }
    let report = TrainReport {
        positive_accuracy: pos_correct as f64 / positives as f64,
        negative_accuracy: neg_correct as f64 / (n - positives) as f64,
        features_used: model_stats(&model).total(),
        round_losses,
    };
    Ok((model, report))
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ModelIoError {
    #[error("model file: {0}")]
    Format(String),
}

const MODEL_MAGIC: &str = "hintgrind-gbt 1";

impl Model {
    /// Versioned text format: header fields, then each tree in preorder with
    /// `s <feature> <threshold>` split lines and `l <value>` leaf lines.
    pub fn save(&self) -> String {
        let mut out = String::new();
        out.push_str(MODEL_MAGIC);
        out.push('\n');
        out.push_str(&format!("learning_rate {}\n", self.learning_rate));
        out.push_str(&format!("base_score {}\n", self.base_score));
        out.push_str(&format!("hash_base {}\n", self.hash_base));
        out.push_str(&format!("watchlist_count {}\n", self.watchlist_count));
        out.push_str(&format!("trees {}\n", self.trees.len()));
        for (i, t) in self.trees.iter().enumerate() {
            out.push_str(&format!("tree {i}\n"));
            write_preorder(&mut out, t, 0);
        }
        out
    }

    pub fn load(text: &str) -> Result<Model, ModelIoError> {
        let mut lines = text.lines();
        let magic = lines.next().unwrap_or_default();
        if magic != MODEL_MAGIC {
            return Err(ModelIoError::Format(format!("bad header `{magic}`")));
        }
        let mut field = |name: &str| -> Result<String, ModelIoError> {
            let line = lines
                .next()
                .ok_or_else(|| ModelIoError::Format(format!("missing field {name}")))?;
            line.strip_prefix(name)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| ModelIoError::Format(format!("expected field {name}, got `{line}`")))
        };
        let learning_rate: f64 = parse_field(&field("learning_rate")?)?;
        let base_score: f64 = parse_field(&field("base_score")?)?;
        let hash_base: u32 = parse_field(&field("hash_base")?)?;
        let watchlist_count: usize = parse_field(&field("watchlist_count")?)?;
        let tree_count: usize = parse_field(&field("trees")?)?;
        let rest: Vec<&str> = lines.collect();
        let mut pos = 0usize;
        let mut trees = Vec::with_capacity(tree_count);
        for i in 0..tree_count {
            let header = rest
                .get(pos)
                .ok_or_else(|| ModelIoError::Format(format!("missing tree {i}")))?;
            if *header != format!("tree {i}") {
                return Err(ModelIoError::Format(format!(
                    "expected `tree {i}`, got `{header}`"
                )));
            }
            pos += 1;
            let mut nodes = Vec::new();
            read_preorder(&rest, &mut pos, &mut nodes)?;
            trees.push(Tree { nodes });
        }
        Ok(Model {
            trees,
            learning_rate,
            base_score,
            hash_base,
            watchlist_count,
        })
    }
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T, ModelIoError> {
    s.parse()
        .map_err(|_| ModelIoError::Format(format!("bad value `{s}`")))
}

fn write_preorder(out: &mut String, t: &Tree, node: u32) {
    match &t.nodes[node as usize] {
        Node::Leaf { value } => out.push_str(&format!("l {value}\n")),
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push_str(&format!("s {feature} {threshold}\n"));
            write_preorder(out, t, *left);
            write_preorder(out, t, *right);
        }
    }
}

fn read_preorder(lines: &[&str], pos: &mut usize, nodes: &mut Vec<Node>) -> Result<u32, ModelIoError> {
    let line = lines
        .get(*pos)
        .ok_or_else(|| ModelIoError::Format("truncated tree".to_string()))?;
    *pos += 1;
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some("l") => {
            let value: f64 = parse_field(parts.next().unwrap_or_default())?;
            nodes.push(Node::Leaf { value });
            Ok((nodes.len() - 1) as u32)
        }
        Some("s") => {
            let feature: u32 = parse_field(parts.next().unwrap_or_default())?;
            let threshold: f64 = parse_field(parts.next().unwrap_or_default())?;
            let slot = nodes.len() as u32;
            nodes.push(Node::Leaf { value: 0.0 });
            let left = read_preorder(lines, pos, nodes)?;
            let right = read_preorder(lines, pos, nodes)?;
            nodes[slot as usize] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
            Ok(slot)
        }
        other => Err(ModelIoError::Format(format!(
            "bad node line `{}`",
            other.unwrap_or_default()
        ))),
    }
}
