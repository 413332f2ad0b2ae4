//! Covariance accumulation and a sorted symmetric eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenpairs sorted by descending eigenvalue. Each eigenvector's
/// largest-magnitude entry is made positive (first such entry on ties), so
/// the decomposition is deterministic.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// One eigenvector per row.
    pub vectors: DMatrix<f64>,
}

pub fn sorted_eigen(symmetric: DMatrix<f64>) -> SortedEigen {
    let n = symmetric.nrows();
    let eig = SymmetricEigen::new(symmetric);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (row, &k) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        canonical_sign(v.as_mut_slice());
        vectors.row_mut(row).copy_from(&v.transpose());
        values.push(eig.eigenvalues[k]);
    }
    SortedEigen { values, vectors }
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Streaming mean and `1/N` covariance of fixed-length samples.
#[derive(Debug, Clone)]
pub struct CovarianceAccumulator {
    dim: usize,
    count: usize,
    sum: Vec<f64>,
    /// Upper triangle of the raw second moment, row-major.
    outer: Vec<f64>,
}

impl CovarianceAccumulator {
    pub fn new(dim: usize) -> Self {
        CovarianceAccumulator {
            dim,
            count: 0,
            sum: vec![0.0; dim],
            outer: vec![0.0; dim * dim],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.count += 1;
        for (s, v) in self.sum.iter_mut().zip(x) {
            *s += v;
        }
        for i in 0..self.dim {
            let xi = x[i];
            let row = &mut self.outer[i * self.dim..(i + 1) * self.dim];
            for j in i..self.dim {
                row[j] += xi * x[j];
            }
        }
    }

    pub fn merge(&mut self, other: &CovarianceAccumulator) {
        self.count += other.count;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.outer.iter_mut().zip(&other.outer).for_each(|(a, b)| *a += b);
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.count.max(1) as f64;
        let mean = self.mean();
        let mut cov = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let c = self.outer[i * self.dim + j] / n - mean[i] * mean[j];
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        cov
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_signed() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let e = sorted_eigen(m);
        assert_eq!(e.values.len(), 3);
        assert!((e.values[0] - 5.0).abs() < 1e-12);
        assert!((e.values[2] - 1.0).abs() < 1e-12);
        assert!((e.vectors[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_matches_two_pass() {
        let xs = [[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [2.0, 2.0]];
        let mut acc = CovarianceAccumulator::new(2);
        xs.iter().for_each(|x| acc.push(x));
        let mean = [6.5 / 4.0, 3.5 / 4.0];
        let c01: f64 = xs.iter().map(|x| (x[0] - mean[0]) * (x[1] - mean[1])).sum::<f64>() / 4.0;
        assert!((acc.covariance()[(0, 1)] - c01).abs() < 1e-12);
        assert!((acc.covariance()[(1, 0)] - c01).abs() < 1e-12);
    }
}
