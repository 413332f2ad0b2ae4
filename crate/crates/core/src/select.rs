//! Feature selection: the supervised discriminant feature test (DFT) and the
//! unsupervised channel-energy baseline.
//!
//! DFT scores a feature by splitting its `[min, max]` range at equally spaced
//! interior points. Each side predicts its empirical class-1 fraction, and a
//! split costs the sample-weighted binary cross entropy (in bits) of those
//! predictions. A feature's cost is its best split's cost; low cost means
//! discriminant.

use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NUM_SPLITS: usize = 31;
pub const LANDMARK_KEEP_FRACTION: f64 = 0.35;
pub const REGION_KEEP_FRACTION: f64 = 0.15;

/// `N x D` feature values with binary labels (0 real, 1 fake).
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub labels: Vec<u8>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if values.nrows() != labels.len() {
            return Err(Error::Argument(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        if values.nrows() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: values.nrows(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Validation("labels must be 0 or 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("feature matrix contains non-finite values".into()));
        }
        Ok(FeatureMatrix { values, labels })
    }

    pub fn num_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn has_both_classes(&self) -> bool {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        ones > 0 && ones < self.labels.len()
    }
}

/// Binary entropy in bits of `ones` positives among `n`, with `0 log 0 = 0`.
pub fn binary_entropy_bits(ones: usize, n: usize) -> f64 {
    if n == 0 || ones == 0 || ones == n {
        return 0.0;
    }
    let p = ones as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DftCost {
    pub cost: f64,
    pub split: f64,
}

/// The interior candidate thresholds `min + (max - min) * j / (num_splits + 1)`.
pub fn split_candidates(min: f64, max: f64, num_splits: usize) -> Vec<f64> {
    let range = max - min;
    let denom = (num_splits + 1) as f64;
    (1..=num_splits).map(|j| min + range * j as f64 / denom).collect()
}

/// Best split and its cross-entropy cost for one feature column. Samples with
/// `x <= threshold` go left. A constant column costs the label-prior entropy.
pub fn dft_cost(column: &[f64], labels: &[u8], num_splits: usize) -> Result<DftCost> {
    let n = column.len();
    if n != labels.len() {
        return Err(Error::Argument(format!("{n} values but {} labels", labels.len())));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if num_splits == 0 {
        return Err(Error::Argument("num_splits must be at least 1".into()));
    }
    let (min, max) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let total_ones = labels.iter().filter(|&&l| l == 1).count();
    if !(max > min) {
        return Ok(DftCost {
            cost: binary_entropy_bits(total_ones, n),
            split: min,
        });
    }

    let thresholds = split_candidates(min, max, num_splits);
    // bucket b holds samples with exactly b thresholds strictly below them
    let mut count = vec![0usize; num_splits + 1];
    let mut ones = vec![0usize; num_splits + 1];
    for (&x, &y) in column.iter().zip(labels) {
        let b = thresholds.partition_point(|&t| t < x);
        count[b] += 1;
        ones[b] += y as usize;
    }

    let mut best = DftCost {
        cost: f64::INFINITY,
        split: thresholds[0],
    };
    let (mut left_n, mut left_ones) = (0, 0);
    for (j, &t) in thresholds.iter().enumerate() {
        left_n += count[j];
        left_ones += ones[j];
        let right_n = n - left_n;
        let right_ones = total_ones - left_ones;
        let cost = (left_n as f64 * binary_entropy_bits(left_ones, left_n)
            + right_n as f64 * binary_entropy_bits(right_ones, right_n))
            / n as f64;
        if cost < best.cost {
            best = DftCost { cost, split: t };
        }
    }
    Ok(best)
}

/// Number of features kept for a fraction of `dim`: nearest integer, at
/// least one.
pub fn keep_count(dim: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * dim as f64).round() as usize).clamp(1, dim.max(1))
}

fn validate_fraction(keep_fraction: f64) -> Result<()> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Config(format!("keep fraction must be in (0, 1], got {keep_fraction}")));
    }
    Ok(())
}

/// Indices of the `k` lowest scores (ties: lower index), ascending.
fn lowest_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    kept
}

/// A fitted subset of feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub dimension: usize,
    pub kept_indices: Vec<usize>,
}

impl FeatureSelection {
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dimension {
            return Err(Error::Argument(format!(
                "expected a row of {} features, got {}",
                self.dimension,
                row.len()
            )));
        }
        Ok(self.kept_indices.iter().map(|&i| row[i]).collect())
    }

    pub fn len(&self) -> usize {
        self.kept_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept_indices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DftSelector {
    pub costs: Vec<f64>,
    pub best_splits: Vec<f64>,
    pub keep_fraction: f64,
    pub num_splits: usize,
    pub selection: FeatureSelection,
}

impl DftSelector {
    pub fn kept_indices(&self) -> &[usize] {
        &self.selection.kept_indices
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.selection.apply(row)
    }
}

pub fn fit_dft(features: &FeatureMatrix, keep_fraction: f64, num_splits: usize) -> Result<DftSelector> {
    validate_fraction(keep_fraction)?;
    if num_splits == 0 {
        return Err(Error::Config("num_splits must be at least 1".into()));
    }
    if !features.has_both_classes() {
        return Err(Error::Fitting("DFT needs both classes in the training labels".into()));
    }
    let d = features.num_features();
    if d == 0 {
        return Err(Error::Argument("feature matrix has no columns".into()));
    }
    let scored: Vec<DftCost> = (0..d)
        .into_par_iter()
        .map(|j| {
            let column = features.values.column(j).to_vec();
            dft_cost(&column, &features.labels, num_splits)
        })
        .collect::<Result<_>>()?;
    let costs: Vec<f64> = scored.iter().map(|c| c.cost).collect();
    let kept_indices = lowest_k(&costs, keep_count(d, keep_fraction));
    Ok(DftSelector {
        best_splits: scored.iter().map(|c| c.split).collect(),
        costs,
        keep_fraction,
        num_splits,
        selection: FeatureSelection {
            dimension: d,
            kept_indices,
        },
    })
}

pub fn apply_selector(selector: &DftSelector, row: &[f64]) -> Result<Vec<f64>> {
    selector.apply(row)
}

/// Unsupervised baseline: keep the features with the largest energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySelector {
    pub energies: Vec<f64>,
    pub keep_fraction: f64,
    pub selection: FeatureSelection,
}

impl EnergySelector {
    pub fn kept_indices(&self) -> &[usize] {
        &self.selection.kept_indices
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.selection.apply(row)
    }
}

/// `energies` has one entry per feature (e.g. the Saab channel energy of
/// each response). Ties go to the lower index.
pub fn fit_energy_selector(energies: &[f64], keep_fraction: f64) -> Result<EnergySelector> {
    validate_fraction(keep_fraction)?;
    if energies.is_empty() {
        return Err(Error::Argument("no energies given".into()));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Validation("energies must be finite".into()));
    }
    let negated: Vec<f64> = energies.iter().map(|e| -e).collect();
    let kept_indices = lowest_k(&negated, keep_count(energies.len(), keep_fraction));
    Ok(EnergySelector {
        energies: energies.to_vec(),
        keep_fraction,
        selection: FeatureSelection {
            dimension: energies.len(),
            kept_indices,
        },
    })
}

/// Per-feature cost table, tab separated: feature index, cost, best split,
/// rank in the sorted cost curve, and whether it was kept.
pub fn cost_table(selector: &DftSelector) -> String {
    let mut order: Vec<usize> = (0..selector.costs.len()).collect();
    order.sort_by(|&a, &b| selector.costs[a].total_cmp(&selector.costs[b]).then(a.cmp(&b)));
    let mut rank = vec![0; order.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut out = String::from("index\tcost\tsplit\trank\tkept\n");
    for (i, (&c, &s)) in selector.costs.iter().zip(&selector.best_splits).enumerate() {
        let kept = selector.selection.kept_indices.binary_search(&i).is_ok();
        let _ = writeln!(out, "{i}\t{c}\t{s}\t{}\t{}", rank[i], u8::from(kept));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separable_column_costs_zero() {
        let c = dft_cost(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1], 31).unwrap();
        assert_eq!(c.cost, 0.0);
        assert!(c.split > 2.0 && c.split < 3.0);
    }

    #[test]
    fn constant_column_costs_prior_entropy() {
        let c = dft_cost(&[0.5; 6], &[0, 1, 0, 1, 1, 0], 31).unwrap();
        assert_eq!(c.cost, 1.0);
        assert_eq!(c.split, 0.5);
        let skewed = dft_cost(&[2.0; 4], &[0, 0, 0, 1], 31).unwrap();
        assert!((skewed.cost - binary_entropy_bits(1, 4)).abs() < 1e-15);
    }

    #[test]
    fn argument_errors() {
        assert!(dft_cost(&[1.0], &[1], 31).is_err());
        assert!(dft_cost(&[1.0, 2.0], &[1], 31).is_err());
        assert!(dft_cost(&[1.0, 2.0], &[0, 1], 0).is_err());
    }

    #[test]
    fn keep_counts_follow_fractions() {
        assert_eq!(keep_count(972, 0.35), 340);
        assert_eq!(keep_count(6075, 0.15), 911);
        assert_eq!(keep_count(10, 1.0 / 10.0), 1);
        assert_eq!(keep_count(10, 1.0), 10);
    }

    #[test]
    fn single_class_cannot_fit() {
        let fm = FeatureMatrix::new(Array2::from_shape_fn((4, 2), |(i, j)| (i + j) as f64), vec![1; 4]).unwrap();
        assert!(matches!(fit_dft(&fm, 0.5, 31), Err(Error::Fitting(_))));
    }

    #[test]
    fn selector_gathers_kept_indices() {
        let sel = FeatureSelection {
            dimension: 8,
            kept_indices: vec![0, 5],
        };
        let row: Vec<f64> = (0..8).map(|i| i as f64 * 1.5).collect();
        assert_eq!(sel.apply(&row).unwrap(), vec![0.0, 7.5]);
        assert!(sel.apply(&row[..7]).is_err());
    }

    #[test]
    fn keep_all_is_identity() {
        let values = Array2::from_shape_fn((6, 5), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let fm = FeatureMatrix::new(values, vec![0, 1, 0, 1, 0, 1]).unwrap();
        let sel = fit_dft(&fm, 1.0, 31).unwrap();
        let row = [9.0, 8.0, 7.0, 6.0, 5.0];
        assert_eq!(sel.apply(&row).unwrap(), row.to_vec());
    }

    #[test]
    fn energy_selector_rules() {
        let e = fit_energy_selector(&[9.0, 7.0, 5.0, 3.0, 2.0, 1.0], 0.5).unwrap();
        assert_eq!(e.kept_indices(), &[0, 1, 2]);
        let tied = fit_energy_selector(&[1.0, 2.0, 2.0, 2.0], 0.5).unwrap();
        assert_eq!(tied.kept_indices(), &[1, 2]);
        assert!(fit_energy_selector(&[1.0], 0.0).is_err());
    }

    #[test]
    fn cost_table_has_a_row_per_feature() {
        let values = Array2::from_shape_fn((4, 3), |(i, j)| if j == 1 { i as f64 } else { ((i * 5 + j) % 3) as f64 });
        let fm = FeatureMatrix::new(values, vec![0, 0, 1, 1]).unwrap();
        let sel = fit_dft(&fm, 1.0 / 3.0, 31).unwrap();
        assert_eq!(sel.kept_indices(), &[1]);
        let table = cost_table(&sel);
        assert_eq!(table.lines().count(), 4);
        assert!(table.lines().nth(2).unwrap().starts_with("1\t0\t"));
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            data in proptest::collection::vec((-5.0f64..5.0, 0u8..2), 2..60),
            seed in any::<u64>(),
        ) {
            let (col, lab): (Vec<f64>, Vec<u8>) = data.iter().copied().unzip();
            let mut idx: Vec<usize> = (0..col.len()).collect();
            // deterministic shuffle
            let mut s = seed | 1;
            for i in (1..idx.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                idx.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let pc: Vec<f64> = idx.iter().map(|&i| col[i]).collect();
            let pl: Vec<u8> = idx.iter().map(|&i| lab[i]).collect();
            let a = dft_cost(&col, &lab, 31).unwrap();
            let b = dft_cost(&pc, &pl, 31).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a.cost));
        }

        #[test]
        fn selection_grows_with_fraction(
            costs in proptest::collection::vec(0.0f64..1.0, 1..200),
            f1 in 0.01f64..1.0,
            f2 in 0.01f64..1.0,
        ) {
            let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            let k_lo = keep_count(costs.len(), lo);
            let k_hi = keep_count(costs.len(), hi);
            let small = lowest_k(&costs, k_lo);
            let large = lowest_k(&costs, k_hi);
            prop_assert!(small.iter().all(|i| large.binary_search(i).is_ok()));
        }
    }
}
