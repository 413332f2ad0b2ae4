//! Binary gradient-boosted decision trees with logistic loss.
//!
//! Trees grow leaf-wise: the leaf whose best split has the largest gain is
//! split next, until `max_leaves` is reached or no leaf can be split. Split
//! search runs over per-feature quantile histograms (up to 256 bins) built
//! from the training rows. Boosting stops early when the held-out loss has
//! not improved for `early_stopping_rounds` rounds, and the ensemble is
//! truncated to its best round.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub max_leaves: usize,
    pub max_trees: usize,
    pub learning_rate: f64,
    pub num_bins: usize,
    pub min_data_in_leaf: usize,
    pub min_sum_hessian: f64,
    pub lambda_l2: f64,
    pub min_split_gain: f64,
    /// Fraction of rows held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    pub early_stopping_rounds: usize,
    /// Held-out loss must drop by more than this to count as progress.
    pub early_stopping_min_delta: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            max_leaves: 64,
            max_trees: 1000,
            learning_rate: 0.1,
            num_bins: 256,
            min_data_in_leaf: 20,
            min_sum_hessian: 1e-3,
            lambda_l2: 1.0,
            min_split_gain: 0.0,
            validation_fraction: 0.1,
            early_stopping_rounds: 50,
            early_stopping_min_delta: 1e-6,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.max_leaves < 2 {
            return fail("max_leaves must be at least 2");
        }
        if self.max_trees == 0 {
            return fail("max_trees must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return fail("learning_rate must be in (0, 1]");
        }
        if !(2..=256).contains(&self.num_bins) {
            return fail("num_bins must be within 2..=256");
        }
        if self.min_data_in_leaf == 0 {
            return fail("min_data_in_leaf must be at least 1");
        }
        if !(self.lambda_l2 >= 0.0 && self.min_sum_hessian >= 0.0 && self.min_split_gain >= 0.0) {
            return fail("regularisation terms must be non-negative");
        }
        if !(0.0..0.5).contains(&self.validation_fraction) {
            return fail("validation_fraction must be in [0, 0.5)");
        }
        if self.early_stopping_rounds == 0 {
            return fail("early_stopping_rounds must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Rows with `row[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { score: f64 },
}

/// A tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    /// Checks that the arena forms a proper binary tree rooted at node 0.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Validation("tree has no nodes".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= nodes.len() || seen[i] {
                return Err(Error::Validation(format!("tree node {i} is missing or shared")));
            }
            seen[i] = true;
            if let TreeNode::Split { left, right, .. } = nodes[i] {
                stack.push(left);
                stack.push(right);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Validation("tree has unreachable nodes".into()));
        }
        Ok(Tree { nodes })
    }

    /// A balanced tree with exactly `num_leaves` leaves, splitting feature 0
    /// at 0 everywhere and scoring 0. Used for budget arithmetic.
    pub fn full(num_leaves: usize) -> Self {
        fn build(nodes: &mut Vec<TreeNode>, leaves: usize) -> usize {
            let id = nodes.len();
            nodes.push(TreeNode::Leaf { score: 0.0 });
            if leaves > 1 {
                let left = build(nodes, leaves.div_ceil(2));
                let right = build(nodes, leaves / 2);
                nodes[id] = TreeNode::Split {
                    feature: 0,
                    threshold: 0.0,
                    left,
                    right,
                };
            }
            id
        }
        let mut nodes = Vec::with_capacity(2 * num_leaves.max(1));
        build(&mut nodes, num_leaves.max(1));
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len() - self.num_leaves()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
                TreeNode::Leaf { score } => return score,
            }
        }
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let TreeNode::Leaf { score } = n {
                *score *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    /// Log-odds of the training prior.
    pub base_score: f64,
    pub num_features: usize,
    pub config: GbdtConfig,
}

impl GbdtModel {
    /// An ensemble with no trees, predicting the prior.
    pub fn empty(num_features: usize, base_score: f64, config: GbdtConfig) -> Self {
        GbdtModel {
            trees: Vec::new(),
            learning_rate: config.learning_rate,
            base_score,
            num_features,
            config,
        }
    }

    pub fn from_trees(trees: Vec<Tree>, num_features: usize, base_score: f64, config: GbdtConfig) -> Result<Self> {
        if let Some(f) = trees.iter().filter_map(Tree::max_feature).max() {
            if f >= num_features {
                return Err(Error::Validation(format!(
                    "tree uses feature {f} but the model has {num_features}"
                )));
            }
        }
        Ok(GbdtModel {
            trees,
            learning_rate: config.learning_rate,
            base_score,
            num_features,
            config,
        })
    }

    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Probability of class 1 (fake).
pub fn predict_proba(model: &GbdtModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.num_features {
        return Err(Error::Argument(format!(
            "expected {} features, got {}",
            model.num_features,
            row.len()
        )));
    }
    Ok(sigmoid(model.raw_score(row)))
}

/// Stored numbers: a feature index and a threshold per internal node, one
/// score per leaf.
pub fn count_parameters(model: &GbdtModel) -> usize {
    model.trees.iter().map(|t| 2 * t.num_internal() + t.num_leaves()).sum()
}

/// Mean logistic loss of raw scores against 0/1 labels.
pub fn logistic_loss(raw: &[f64], labels: &[u8]) -> f64 {
    let n = raw.len().max(1) as f64;
    raw.iter()
        .zip(labels)
        .map(|(&z, &y)| {
            // log(1 + e^z) - y z, computed stably
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - f64::from(y) * z
        })
        .sum::<f64>()
        / n
}

/// Per-round losses recorded during fitting. Index 0 is the loss of the
/// prior alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    pub best_round: usize,
}

pub fn fit_gbdt(features: ArrayView2<'_, f64>, labels: &[u8], config: &GbdtConfig) -> Result<GbdtModel> {
    fit_gbdt_traced(features, labels, config).map(|(m, _)| m)
}

pub fn fit_gbdt_traced(
    features: ArrayView2<'_, f64>,
    labels: &[u8],
    config: &GbdtConfig,
) -> Result<(GbdtModel, TrainingTrace)> {
    config.validate()?;
    let features = features.as_standard_layout();
    let features = features.view();
    let (n, d) = features.dim();
    if labels.len() != n {
        return Err(Error::Argument(format!("{n} rows but {} labels", labels.len())));
    }
    if d == 0 {
        return Err(Error::Argument("no features".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Validation("labels must be 0 or 1".into()));
    }
    if features.iter().any(|v| v.is_nan()) {
        return Err(Error::Validation("features contain NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::Fitting("boosting needs both classes".into()));
    }

    let (train_rows, valid_rows) = holdout_split(labels, config);
    let train_labels: Vec<u8> = train_rows.iter().map(|&r| labels[r]).collect();
    let valid_labels: Vec<u8> = valid_rows.iter().map(|&r| labels[r]).collect();
    let prior = train_labels.iter().filter(|&&l| l == 1).count() as f64 / train_rows.len() as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let binned = BinnedMatrix::build(features, &train_rows, config.num_bins);
    let mut train_raw = vec![base_score; train_rows.len()];
    let mut valid_raw = vec![base_score; valid_rows.len()];
    let mut trace = TrainingTrace {
        train_loss: vec![logistic_loss(&train_raw, &train_labels)],
        valid_loss: vec![logistic_loss(&valid_raw, &valid_labels)],
        best_round: 0,
    };
    let mut trees = Vec::new();
    let mut best_valid = trace.valid_loss[0];
    let mut grad = vec![0.0; train_rows.len()];
    let mut hess = vec![0.0; train_rows.len()];

    for round in 1..=config.max_trees {
        for i in 0..train_rows.len() {
            let p = sigmoid(train_raw[i]);
            grad[i] = p - f64::from(train_labels[i]);
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let (mut tree, leaf_of_row) = grow_tree(&binned, &grad, &hess, config);

        // Step back along the tree direction if the full step raises the
        // training loss.
        let prev = *trace.train_loss.last().expect("non-empty");
        let leaf_scores: Vec<f64> = leaf_of_row.iter().map(|&node| leaf_score(&tree, node)).collect();
        let mut factor = 1.0;
        let mut candidate: Vec<f64>;
        let mut loss;
        let mut halvings = 0;
        loop {
            candidate = train_raw
                .iter()
                .zip(&leaf_scores)
                .map(|(r, s)| r + config.learning_rate * factor * s)
                .collect();
            loss = logistic_loss(&candidate, &train_labels);
            if loss <= prev || halvings == 30 {
                break;
            }
            factor *= 0.5;
            halvings += 1;
        }
        if loss > prev {
            break;
        }
        if factor != 1.0 {
            tree.scale_leaves(factor);
        }
        train_raw = candidate;
        for (raw, &row) in valid_raw.iter_mut().zip(&valid_rows) {
            let r = features.row(row);
            *raw += config.learning_rate * tree.predict(r.as_slice().expect("row-major features"));
        }
        trees.push(tree);
        trace.train_loss.push(loss);

        if valid_rows.is_empty() {
            trace.best_round = round;
            continue;
        }
        let vloss = logistic_loss(&valid_raw, &valid_labels);
        trace.valid_loss.push(vloss);
        if vloss < best_valid - config.early_stopping_min_delta {
            best_valid = vloss;
            trace.best_round = round;
        } else if round - trace.best_round >= config.early_stopping_rounds {
            break;
        }
    }
    trees.truncate(trace.best_round);
    trace.train_loss.truncate(trace.best_round + 1);
    let model = GbdtModel::from_trees(trees, d, base_score, config.clone())?;
    Ok((model, trace))
}

fn leaf_score(tree: &Tree, node: usize) -> f64 {
    match tree.nodes[node] {
        TreeNode::Leaf { score } => score,
        TreeNode::Split { .. } => unreachable!("rows are assigned to leaves"),
    }
}

/// Stratified, seeded holdout. Returns (train rows, validation rows), each
/// ascending.
fn holdout_split(labels: &[u8], config: &GbdtConfig) -> (Vec<usize>, Vec<usize>) {
    let all: Vec<usize> = (0..labels.len()).collect();
    if config.validation_fraction == 0.0 {
        return (all, Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = all.iter().copied().filter(|&r| labels[r] == class).collect();
        rows.shuffle(&mut rng);
        let n_valid = (rows.len() as f64 * config.validation_fraction).floor() as usize;
        if n_valid == 0 || rows.len() - n_valid < 1 {
            return (all, Vec::new());
        }
        valid.extend_from_slice(&rows[..n_valid]);
        train.extend_from_slice(&rows[n_valid..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    (train, valid)
}

/// Training rows quantised per feature, stored column-major.
struct BinnedMatrix {
    rows: usize,
    features: usize,
    bins: Vec<u8>,
    /// Upper edges per feature: bin `b` holds values `<= edges[b]`, the last
    /// bin everything above the final edge.
    edges: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    fn build(features: ArrayView2<'_, f64>, rows: &[usize], num_bins: usize) -> Self {
        let d = features.ncols();
        let columns: Vec<(Vec<f64>, Vec<u8>)> = (0..d)
            .into_par_iter()
            .map(|f| {
                let col = features.column(f);
                let values: Vec<f64> = rows.iter().map(|&r| col[r]).collect();
                let edges = bin_edges(&values, num_bins);
                let bins = values
                    .iter()
                    .map(|&v| edges.partition_point(|&e| e < v) as u8)
                    .collect();
                (edges, bins)
            })
            .collect();
        let mut bins = Vec::with_capacity(d * rows.len());
        let mut edges = Vec::with_capacity(d);
        for (e, b) in columns {
            edges.push(e);
            bins.extend_from_slice(&b);
        }
        BinnedMatrix {
            rows: rows.len(),
            features: d,
            bins,
            edges,
        }
    }

    fn column(&self, f: usize) -> &[u8] {
        &self.bins[f * self.rows..(f + 1) * self.rows]
    }
}

/// At most `num_bins - 1` increasing cut points placed at quantiles, halfway
/// between neighbouring distinct values.
fn bin_edges(values: &[f64], num_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= num_bins {
        return distinct.windows(2).map(|w| w[0] + 0.5 * (w[1] - w[0])).collect();
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = Vec::with_capacity(num_bins - 1);
    for k in 1..num_bins {
        let i = k * n / num_bins;
        let (lo, hi) = (sorted[i - 1], sorted[i]);
        let e = if lo < hi { lo + 0.5 * (hi - lo) } else { lo };
        if edges.last().is_none_or(|&last| e > last) && e < sorted[n - 1] {
            edges.push(e);
        }
    }
    edges
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    bin: u8,
}

impl SplitCandidate {
    /// Larger gain wins; ties go to the lower feature, then the lower bin.
    fn better_than(&self, other: &SplitCandidate) -> bool {
        self.gain > other.gain
            || (self.gain == other.gain && (self.feature, self.bin) < (other.feature, other.bin))
    }
}

fn leaf_objective(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Best split of one leaf over all features, scanning only the bins that
/// the leaf's rows touch.
fn best_split(binned: &BinnedMatrix, rows: &[u32], grad: &[f64], hess: &[f64], cfg: &GbdtConfig) -> Option<SplitCandidate> {
    if rows.len() < 2 * cfg.min_data_in_leaf {
        return None;
    }
    let (g_total, h_total) = rows
        .iter()
        .fold((0.0, 0.0), |(g, h), &r| (g + grad[r as usize], h + hess[r as usize]));
    let parent = leaf_objective(g_total, h_total, cfg.lambda_l2);
    let n_total = rows.len();

    let chunk = 64;
    (0..binned.features.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut g_hist = [0.0f64; 256];
            let mut h_hist = [0.0f64; 256];
            let mut n_hist = [0u32; 256];
            let mut best: Option<SplitCandidate> = None;
            for f in c * chunk..((c + 1) * chunk).min(binned.features) {
                let col = binned.column(f);
                let mut touched = [0u64; 4];
                for &r in rows {
                    let b = col[r as usize] as usize;
                    g_hist[b] += grad[r as usize];
                    h_hist[b] += hess[r as usize];
                    n_hist[b] += 1;
                    touched[b >> 6] |= 1 << (b & 63);
                }
                let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
                for (word, &bits) in touched.iter().enumerate() {
                    let mut m = bits;
                    while m != 0 {
                        let b = word * 64 + m.trailing_zeros() as usize;
                        m &= m - 1;
                        gl += g_hist[b];
                        hl += h_hist[b];
                        nl += n_hist[b] as usize;
                        g_hist[b] = 0.0;
                        h_hist[b] = 0.0;
                        n_hist[b] = 0;
                        let nr = n_total - nl;
                        if nl < cfg.min_data_in_leaf || nr < cfg.min_data_in_leaf {
                            continue;
                        }
                        let (gr, hr) = (g_total - gl, h_total - hl);
                        if hl < cfg.min_sum_hessian || hr < cfg.min_sum_hessian {
                            continue;
                        }
                        let gain = leaf_objective(gl, hl, cfg.lambda_l2) + leaf_objective(gr, hr, cfg.lambda_l2) - parent;
                        let cand = SplitCandidate {
                            gain,
                            feature: f,
                            bin: b as u8,
                        };
                        if best.as_ref().is_none_or(|cur| cand.better_than(cur)) {
                            best = Some(cand);
                        }
                    }
                }
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if y.better_than(&x) { y } else { x }),
                (x, None) => x,
                (None, y) => y,
            },
        )
        .filter(|c| c.gain > cfg.min_split_gain && c.gain.is_finite())
}

struct OpenLeaf {
    node: usize,
    rows: Vec<u32>,
    split: Option<SplitCandidate>,
}

/// Grows one tree on the gradients. Also returns, for every training row,
/// the index of the leaf node it ends up in.
fn grow_tree(binned: &BinnedMatrix, grad: &[f64], hess: &[f64], cfg: &GbdtConfig) -> (Tree, Vec<usize>) {
    let all: Vec<u32> = (0..binned.rows as u32).collect();
    let mut nodes = vec![TreeNode::Leaf { score: 0.0 }];
    let mut open = vec![OpenLeaf {
        node: 0,
        split: best_split(binned, &all, grad, hess, cfg),
        rows: all,
    }];
    let mut closed: Vec<OpenLeaf> = Vec::new();

    while open.len() + closed.len() < cfg.max_leaves {
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.split.map(|s| (i, s)))
            .reduce(|a, b| if b.1.better_than(&a.1) { b } else { a });
        let Some((i, split)) = pick else { break };
        let leaf = open.swap_remove(i);
        let col = binned.column(split.feature);
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            leaf.rows.iter().partition(|&&r| col[r as usize] <= split.bin);
        let left = nodes.len();
        nodes.push(TreeNode::Leaf { score: 0.0 });
        nodes.push(TreeNode::Leaf { score: 0.0 });
        nodes[leaf.node] = TreeNode::Split {
            feature: split.feature,
            threshold: binned.edges[split.feature][split.bin as usize],
            left,
            right: left + 1,
        };
        for (node, rows) in [(left, left_rows), (left + 1, right_rows)] {
            let split = best_split(binned, &rows, grad, hess, cfg);
            let child = OpenLeaf { node, rows, split };
            if child.split.is_some() {
                open.push(child);
            } else {
                closed.push(child);
            }
        }
    }

    let mut leaf_of_row = vec![0usize; binned.rows];
    for leaf in open.iter().chain(&closed) {
        let (g, h) = leaf
            .rows
            .iter()
            .fold((0.0, 0.0), |(g, h), &r| (g + grad[r as usize], h + hess[r as usize]));
        nodes[leaf.node] = TreeNode::Leaf {
            score: -g / (h + cfg.lambda_l2),
        };
        for &r in &leaf.rows {
            leaf_of_row[r as usize] = leaf.node;
        }
    }
    (Tree { nodes }, leaf_of_row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn empty_ensemble_predicts_prior() {
        let m = GbdtModel::empty(3, 0.4, GbdtConfig::default());
        assert!((predict_proba(&m, &[0.0, 1.0, 2.0]).unwrap() - sigmoid(0.4)).abs() < 1e-15);
        assert_eq!(count_parameters(&m), 0);
        assert!(predict_proba(&m, &[0.0]).is_err());
    }

    #[test]
    fn full_tree_shape() {
        for leaves in [1, 2, 5, 64] {
            let t = Tree::full(leaves);
            assert_eq!(t.num_leaves(), leaves);
            assert_eq!(t.num_internal(), leaves - 1);
            Tree::from_nodes(t.nodes().to_vec()).unwrap();
        }
    }

    #[test]
    fn saturated_leaf() {
        let tree = Tree::from_nodes(vec![TreeNode::Leaf { score: 1e6 }]).unwrap();
        let m = GbdtModel::from_trees(vec![tree], 1, 0.0, GbdtConfig::default()).unwrap();
        assert_eq!(predict_proba(&m, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn malformed_trees_are_rejected() {
        let dangling = vec![TreeNode::Split {
            feature: 0,
            threshold: 0.0,
            left: 1,
            right: 2,
        }];
        assert!(Tree::from_nodes(dangling).is_err());
        let shared = vec![
            TreeNode::Split {
                feature: 0,
                threshold: 0.0,
                left: 1,
                right: 1,
            },
            TreeNode::Leaf { score: 0.0 },
        ];
        assert!(Tree::from_nodes(shared).is_err());
        let tree = Tree::from_nodes(vec![
            TreeNode::Split {
                feature: 4,
                threshold: 0.0,
                left: 1,
                right: 2,
            },
            TreeNode::Leaf { score: 0.0 },
            TreeNode::Leaf { score: 1.0 },
        ])
        .unwrap();
        assert!(GbdtModel::from_trees(vec![tree], 3, 0.0, GbdtConfig::default()).is_err());
    }

    #[test]
    fn bin_edges_for_few_distinct_values() {
        assert_eq!(bin_edges(&[3.0, 1.0, 2.0, 1.0], 256), vec![1.5, 2.5]);
        let many: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let e = bin_edges(&many, 256);
        assert!(e.len() <= 255 && e.len() > 200);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * j) as f64);
        let cfg = GbdtConfig::default();
        assert!(matches!(fit_gbdt(x.view(), &[1; 10], &cfg), Err(Error::Fitting(_))));
        let mut nan = x.clone();
        nan[[3, 1]] = f64::NAN;
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        assert!(matches!(fit_gbdt(nan.view(), &labels, &cfg), Err(Error::Validation(_))));
        let bad = GbdtConfig {
            max_leaves: 1,
            ..GbdtConfig::default()
        };
        assert!(matches!(fit_gbdt(x.view(), &labels, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn separable_one_dimensional() {
        let x = Array2::from_shape_fn((200, 1), |(i, _)| i as f64);
        let y: Vec<u8> = (0..200).map(|i| u8::from(i >= 100)).collect();
        let cfg = GbdtConfig {
            max_trees: 10,
            ..GbdtConfig::default()
        };
        let m = fit_gbdt(x.view(), &y, &cfg).unwrap();
        assert!(!m.trees.is_empty() && m.trees.len() <= 10);
        for i in 0..200 {
            let p = predict_proba(&m, &[i as f64]).unwrap();
            assert_eq!(p > 0.5, i >= 100, "row {i}: {p}");
        }
    }

    #[test]
    fn leaves_bounded_and_loss_monotone() {
        let n = 3000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((n, 3), |_| rand::Rng::random::<f64>(&mut rng));
        let y: Vec<u8> = (0..n)
            .map(|i| u8::from((x[[i, 0]] * 10.0).floor() as usize % 2 == (x[[i, 1]] * 7.0).floor() as usize % 2))
            .collect();
        let cfg = GbdtConfig {
            max_trees: 30,
            min_data_in_leaf: 5,
            ..GbdtConfig::default()
        };
        let (m, trace) = fit_gbdt_traced(x.view(), &y, &cfg).unwrap();
        assert!(m.trees.iter().all(|t| t.num_leaves() <= 64 && t.num_internal() + 1 == t.num_leaves()));
        assert!(m.trees.iter().any(|t| t.num_leaves() == 64));
        assert!(trace.train_loss.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(trace.train_loss.len(), m.trees.len() + 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let x = Array2::from_shape_fn((300, 4), |(i, j)| ((i * 31 + j * 17) % 97) as f64);
        let y: Vec<u8> = (0..300).map(|i| u8::from(x[[i, 0]] + x[[i, 2]] > 97.0)).collect();
        let cfg = GbdtConfig {
            max_trees: 40,
            seed: 7,
            ..GbdtConfig::default()
        };
        let a = fit_gbdt(x.view(), &y, &cfg).unwrap();
        let b = fit_gbdt(x.view(), &y, &cfg).unwrap();
        assert_eq!(bincode::serialize(&a).unwrap(), bincode::serialize(&b).unwrap());
    }
}
