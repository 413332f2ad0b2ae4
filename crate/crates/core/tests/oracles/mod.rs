//! Brute-force reference implementations shared by the integration tests.
//! None of these call into the library's numeric code.

#![allow(dead_code)]

use defakehop::gbdt::{GbdtModel, TreeNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order and matching unit eigenvectors (rows).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]));
    let values = order.iter().map(|&k| m[k][k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Two-pass `1/N` covariance.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / n)
                .collect()
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Distance between two vectors allowing a sign flip.
pub fn dist_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

/// Correlated random 3x3x3 patches, flattened row, column, channel.
pub fn random_patches(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix: Vec<Vec<f64>> = (0..27).map(|_| (0..27).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..27).map(|k| rng.random_range(-1.0..1.0) / (1.0 + k as f64)).collect();
            let offset = rng.random_range(0.0..2.0);
            (0..27).map(|j| offset + dot(&mix[j], &z)).collect()
        })
        .collect()
}

/// Probability that a positive outranks a negative, over all pairs.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn entropy_bits(ones: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = ones as f64 / n as f64;
    let h = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    h(p) + h(1.0 - p)
}

/// Enumerates every candidate threshold and counts each side directly.
/// Returns (cost, threshold) of the first minimum.
pub fn exhaustive_dft(column: &[f64], labels: &[u8], num_splits: usize) -> (f64, f64) {
    let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = column.len();
    let mut best = (f64::INFINITY, f64::NAN);
    for j in 1..=num_splits {
        let t = lo + (hi - lo) * j as f64 / (num_splits + 1) as f64;
        let left: Vec<usize> = (0..n).filter(|&i| column[i] <= t).collect();
        let right: Vec<usize> = (0..n).filter(|&i| column[i] > t).collect();
        let ones = |idx: &[usize]| idx.iter().filter(|&&i| labels[i] == 1).count();
        let cost = (left.len() as f64 * entropy_bits(ones(&left), left.len())
            + right.len() as f64 * entropy_bits(ones(&right), right.len()))
            / n as f64;
        if cost < best.0 {
            best = (cost, t);
        }
    }
    best
}

fn walk(nodes: &[TreeNode], i: usize, row: &[f64]) -> f64 {
    match &nodes[i] {
        TreeNode::Leaf { score } => *score,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if row[*feature] <= *threshold {
                walk(nodes, *left, row)
            } else {
                walk(nodes, *right, row)
            }
        }
    }
}

/// Recursive forward pass through the ensemble.
pub fn tree_walk_proba(model: &GbdtModel, row: &[f64]) -> f64 {
    let sum: f64 = model.trees.iter().map(|t| walk(t.nodes(), 0, row)).sum();
    let z = model.base_score + model.learning_rate * sum;
    1.0 / (1.0 + (-z).exp())
}
