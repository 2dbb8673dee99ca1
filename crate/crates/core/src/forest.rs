//! From-scratch decision-tree and random-forest engine: seeded bootstrap
//! sampling, Gini splitting with midpoint thresholds, grid search over a
//! dev split, and versioned model serialization.
//!
//! Training is deterministic given (dataset order, hyperparameters) and
//! identical across thread counts: each tree draws from its own RNG
//! stream derived from the master seed and the tree ordinal.

use crate::features::{FeatureSchema, FeatureVector, Vocabulary};
use crate::metrics::{evaluate, EvalReport};
use crate::transcript::Appropriateness;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const K: usize = 3;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("sample from dialogue `{dialogue_id}` turn {turn_index} has no label")]
    UnlabeledSample {
        dialogue_id: String,
        turn_index: usize,
    },
    #[error("gini is undefined for all-zero class counts")]
    AllZeroCounts,
    #[error("schema fingerprint mismatch: model was trained on different features")]
    SchemaMismatch,
    #[error("unsupported model format_version {found} (this build reads version {MODEL_FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt model file: {0}")]
    Corrupt(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    Sqrt,
    Log2,
    All,
}

impl FeatureSubset {
    fn size(self, n_features: usize) -> usize {
        let size = match self {
            FeatureSubset::Sqrt => (n_features as f64).sqrt().floor() as usize,
            FeatureSubset::Log2 => (n_features as f64).log2().floor() as usize,
            FeatureSubset::All => n_features,
        };
        size.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub features_per_split: FeatureSubset,
    pub seed: u64,
}

impl Default for Hyperparams {
    /// The default operating point: 500 trees of depth at most 45.
    fn default() -> Self {
        Hyperparams {
            n_trees: 500,
            max_depth: 45,
            min_samples_leaf: 1,
            min_samples_split: 2,
            features_per_split: FeatureSubset::Sqrt,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidHyperparams("n_trees must be positive".into()));
        }
        if self.max_depth == 0 {
            return Err(ForestError::InvalidHyperparams("max_depth must be positive".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ForestError::InvalidHyperparams(
                "min_samples_leaf must be positive".into(),
            ));
        }
        if self.min_samples_split < 2 {
            return Err(ForestError::InvalidHyperparams(
                "min_samples_split must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// The default grid brackets the 500-tree / depth-45 operating point.
pub fn default_grid(seed: u64) -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for n_trees in [100, 300, 500] {
        for max_depth in [15, 30, 45] {
            for min_samples_leaf in [1, 5] {
                for features_per_split in [FeatureSubset::Sqrt, FeatureSubset::Log2] {
                    grid.push(Hyperparams {
                        n_trees,
                        max_depth,
                        min_samples_leaf,
                        min_samples_split: 2,
                        features_per_split,
                        seed,
                    });
                }
            }
        }
    }
    grid
}

/// CART impurity: `1 - sum(p_i^2)`.
pub fn gini(class_counts: &[u64]) -> Result<f64, ForestError> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(ForestError::AllZeroCounts);
    }
    let total = total as f64;
    Ok(1.0
        - class_counts
            .iter()
            .map(|&c| {
                let p = c as f64 / total;
                p * p
            })
            .sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Internal {
        feature_index: usize,
        /// Samples with value <= threshold go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class_counts: [u64; K],
    },
}

impl TreeNode {
    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaf_counts(&self, lookup: &impl Fn(usize) -> f64) -> &[u64; K] {
        match self {
            TreeNode::Leaf { class_counts } => class_counts,
            TreeNode::Internal {
                feature_index,
                threshold,
                left,
                right,
            } => {
                if lookup(*feature_index) <= *threshold {
                    left.leaf_counts(lookup)
                } else {
                    right.leaf_counts(lookup)
                }
            }
        }
    }

    /// Majority class at the reached leaf; ties break toward the lower
    /// class index (Inappropriate first).
    pub fn vote(&self, lookup: &impl Fn(usize) -> f64) -> usize {
        let counts = self.leaf_counts(lookup);
        let mut best = 0;
        for c in 1..K {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        best
    }

    /// Decision path for one sample: (feature_index, threshold, went_left)
    /// per internal node, root first.
    pub fn decision_path(&self, lookup: &impl Fn(usize) -> f64) -> Vec<(usize, f64, bool)> {
        let mut path = Vec::new();
        let mut node = self;
        while let TreeNode::Internal {
            feature_index,
            threshold,
            left,
            right,
        } = node
        {
            let went_left = lookup(*feature_index) <= *threshold;
            path.push((*feature_index, *threshold, went_left));
            node = if went_left { left } else { right };
        }
        path
    }
}

/// Dense labeled dataset used during training.
pub struct DenseDataset {
    x: Vec<f64>,
    y: Vec<usize>,
    n_features: usize,
}

impl DenseDataset {
    pub fn from_vectors(
        dataset: &[FeatureVector],
        schema: &FeatureSchema,
    ) -> Result<Self, ForestError> {
        if dataset.is_empty() {
            return Err(ForestError::EmptyDataset);
        }
        let n_features = schema.dimension();
        let mut x = Vec::with_capacity(dataset.len() * n_features);
        let mut y = Vec::with_capacity(dataset.len());
        for v in dataset {
            let label = v.label.ok_or_else(|| ForestError::UnlabeledSample {
                dialogue_id: v.dialogue_id.clone(),
                turn_index: v.turn_index,
            })?;
            x.extend(v.to_dense(n_features));
            y.push(label.index());
        }
        Ok(DenseDataset { x, y, n_features })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn value(&self, row: usize, feature: usize) -> f64 {
        self.x[row * self.n_features + feature]
    }
}

struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn gini_from(counts: &[u64; K], total: usize) -> f64 {
    let total = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

/// Exhaustive best split over the given features: midpoint thresholds
/// between consecutive distinct sorted values, Gini gain, ties broken by
/// lowest feature index then lowest threshold.
fn best_split(
    data: &DenseDataset,
    indices: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let n = indices.len();
    let mut parent_counts = [0u64; K];
    for &i in indices {
        parent_counts[data.y[i]] += 1;
    }
    let parent_gini = gini_from(&parent_counts, n);

    let mut best: Option<SplitCandidate> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &f in features {
        column.clear();
        column.extend(indices.iter().map(|&i| (data.value(i, f), data.y[i])));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if column[0].0 == column[n - 1].0 {
            continue;
        }
        let mut left_counts = [0u64; K];
        for pos in 0..n - 1 {
            left_counts[column[pos].1] += 1;
            if column[pos].0 == column[pos + 1].0 {
                continue;
            }
            let n_left = pos + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let mut right_counts = [0u64; K];
            for c in 0..K {
                right_counts[c] = parent_counts[c] - left_counts[c];
            }
            let weighted = (n_left as f64 / n as f64) * gini_from(&left_counts, n_left)
                + (n_right as f64 / n as f64) * gini_from(&right_counts, n_right);
            let gain = parent_gini - weighted;
            if gain <= 1e-12 {
                continue;
            }
            let threshold = (column[pos].0 + column[pos + 1].0) / 2.0;
            let better = match &best {
                None => true,
                Some(b) => {
                    gain > b.gain
                        || (gain == b.gain
                            && (f < b.feature || (f == b.feature && threshold < b.threshold)))
                }
            };
            if better {
                best = Some(SplitCandidate {
                    gain,
                    feature: f,
                    threshold,
                });
            }
        }
    }
    best
}

fn sample_features(n_features: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if count >= n_features {
        return (0..n_features).collect();
    }
    let mut picked = rand::seq::index::sample(rng, n_features, count).into_vec();
    picked.sort_unstable();
    picked
}

fn grow(
    data: &DenseDataset,
    indices: &mut Vec<usize>,
    depth: usize,
    hp: &Hyperparams,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let mut class_counts = [0u64; K];
    for &i in indices.iter() {
        class_counts[data.y[i]] += 1;
    }
    let n = indices.len();
    let pure = class_counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= hp.max_depth || n < hp.min_samples_split {
        return TreeNode::Leaf { class_counts };
    }

    let subset_size = hp.features_per_split.size(data.n_features);
    let features = sample_features(data.n_features, subset_size, rng);
    let Some(split) = best_split(data, indices, &features, hp.min_samples_leaf) else {
        return TreeNode::Leaf { class_counts };
    };

    let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| data.value(i, split.feature) <= split.threshold);
    let left = grow(data, &mut left_idx, depth + 1, hp, rng);
    let right = grow(data, &mut right_idx, depth + 1, hp, rng);
    TreeNode::Internal {
        feature_index: split.feature,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Trains one tree on the given sample indices (no bootstrap), using
/// `tree_seed` for the per-node feature subsets.
pub fn train_tree(
    data: &DenseDataset,
    hp: &Hyperparams,
    tree_seed: u64,
) -> Result<TreeNode, ForestError> {
    hp.validate()?;
    if data.is_empty() {
        return Err(ForestError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
    let mut indices: Vec<usize> = (0..data.len()).collect();
    Ok(grow(data, &mut indices, 0, hp, &mut rng))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub hyperparams: Hyperparams,
    pub class_order: Vec<String>,
    pub vocabulary: Vocabulary,
    pub schema: FeatureSchema,
    pub trees: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub label: Appropriateness,
    pub votes: [u64; K],
}

impl Prediction {
    /// Margin of the winning class over the runner-up, in votes.
    pub fn margin(&self) -> u64 {
        let mut sorted = self.votes;
        sorted.sort_unstable();
        sorted[K - 1] - sorted[K - 2]
    }
}

/// Trains `n_trees` trees, each on a bootstrap resample drawn from a
/// per-tree RNG stream. Output is independent of the rayon thread count.
pub fn train_forest(
    dataset: &[FeatureVector],
    vocab: &Vocabulary,
    schema: &FeatureSchema,
    hp: &Hyperparams,
) -> Result<ForestModel, ForestError> {
    hp.validate()?;
    let data = DenseDataset::from_vectors(dataset, schema)?;
    let n = data.len();

    let trees: Vec<TreeNode> = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
            rng.set_stream(t as u64 + 1);
            let mut indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grow(&data, &mut indices, 0, hp, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        hyperparams: hp.clone(),
        class_order: Appropriateness::ALL.iter().map(|c| c.name().to_string()).collect(),
        vocabulary: vocab.clone(),
        schema: schema.clone(),
        trees,
    })
}

impl ForestModel {
    pub fn total_nodes(&self) -> usize {
        self.trees.iter().map(TreeNode::node_count).sum()
    }

    /// Majority vote over all trees; ties break toward the earlier class
    /// in the fixed order (prefer flagging Inappropriate).
    pub fn predict(
        &self,
        vector: &FeatureVector,
        schema: &FeatureSchema,
    ) -> Result<Prediction, ForestError> {
        if schema.fingerprint() != self.schema.fingerprint() {
            return Err(ForestError::SchemaMismatch);
        }
        let lookup = |i: usize| vector.get(i);
        let mut votes = [0u64; K];
        for tree in &self.trees {
            votes[tree.vote(&lookup)] += 1;
        }
        let mut best = 0;
        for c in 1..K {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        Ok(Prediction {
            label: Appropriateness::from_index(best).unwrap(),
            votes,
        })
    }

    /// Per-tree decision paths for one vector, for the explanation
    /// appendix.
    pub fn decision_paths(
        &self,
        vector: &FeatureVector,
        max_trees: usize,
    ) -> Vec<Vec<(usize, f64, bool)>> {
        let lookup = |i: usize| vector.get(i);
        self.trees
            .iter()
            .take(max_trees)
            .map(|t| t.decision_path(&lookup))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridEntry {
    pub hyperparams: Hyperparams,
    pub dev_weighted_f1: f64,
    pub dev_report: EvalReport,
}

/// Trains every configuration on the train split, scores support-weighted
/// F1 on the dev split, and returns the winner plus the full audit report.
/// Ties break toward fewer trees, then smaller depth.
pub fn grid_search(
    train_set: &[FeatureVector],
    dev_set: &[FeatureVector],
    vocab: &Vocabulary,
    schema: &FeatureSchema,
    grid: &[Hyperparams],
) -> Result<(Hyperparams, Vec<GridEntry>), ForestError> {
    if grid.is_empty() {
        return Err(ForestError::EmptyGrid);
    }
    let mut entries = Vec::with_capacity(grid.len());
    for hp in grid {
        let model = train_forest(train_set, vocab, schema, hp)?;
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for v in dev_set {
            let Some(label) = v.label else { continue };
            gold.push(label);
            pred.push(model.predict(v, schema)?.label);
        }
        if gold.is_empty() {
            return Err(ForestError::EmptyDataset);
        }
        let report = evaluate(&gold, &pred).expect("non-empty dev labels");
        entries.push(GridEntry {
            hyperparams: hp.clone(),
            dev_weighted_f1: report.weighted_f1,
            dev_report: report,
        });
    }
    let best = entries
        .iter()
        .max_by(|a, b| {
            a.dev_weighted_f1
                .partial_cmp(&b.dev_weighted_f1)
                .unwrap()
                .then_with(|| b.hyperparams.n_trees.cmp(&a.hyperparams.n_trees))
                .then_with(|| b.hyperparams.max_depth.cmp(&a.hyperparams.max_depth))
        })
        .unwrap()
        .hyperparams
        .clone();
    Ok((best, entries))
}

/// Serializes the model as versioned JSON.
pub fn save_model(model: &ForestModel, path: &Path) -> Result<(), ForestError> {
    let json = serde_json::to_string(model)?;
    std::fs::write(path, json).map_err(|source| ForestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a model, rejecting unknown format versions.
pub fn load_model(path: &Path) -> Result<ForestModel, ForestError> {
    let json = std::fs::read_to_string(path).map_err(|source| ForestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    // peek at the version before committing to the full schema
    #[derive(Deserialize)]
    struct Versioned {
        format_version: u32,
    }
    let v: Versioned = serde_json::from_str(&json)?;
    if v.format_version != MODEL_FORMAT_VERSION {
        return Err(ForestError::VersionMismatch {
            found: v.format_version,
        });
    }
    let mut model: ForestModel = serde_json::from_str(&json)?;
    model.vocabulary.rebuild_index();
    Ok(model)
}
