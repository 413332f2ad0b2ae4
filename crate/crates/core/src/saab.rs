//! Saab filter banks (one-stage PixelHop).
//!
//! A bank maps each flattened `3x3x3` patch to 27 decorrelated responses: one
//! DC response along the constant direction and 26 AC responses along the
//! principal directions of the patch residuals left after removing the DC
//! part. The filters form an orthonormal basis, so the transform is linear,
//! energy preserving and exactly invertible.
//!
//! Patches are flattened row, column, channel with the channel fastest.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, ArrayView2, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, sorted_eigen, CovarianceAccumulator};
use crate::preprocess::{Block, BlockOrigin, CHANNELS};

pub const KERNEL_SIZE: usize = 3;
pub const DEFAULT_STRIDE: usize = 2;
pub const PATCH_DIM: usize = KERNEL_SIZE * KERNEL_SIZE * CHANNELS;
/// Stored numbers per bank: a full `27 x 27` filter matrix.
pub const BANK_PARAMETERS: usize = PATCH_DIM * PATCH_DIM;

/// Number of window positions along one axis:
/// `(block_size - filter_size) / stride + 1`.
pub fn output_size(block_size: usize, filter_size: usize, stride: usize) -> Result<usize> {
    if filter_size == 0 || stride == 0 {
        return Err(Error::Config("filter size and stride must be at least 1".into()));
    }
    if block_size < filter_size {
        return Err(Error::Config(format!(
            "block size {block_size} is smaller than filter size {filter_size}"
        )));
    }
    let span = block_size - filter_size;
    if span % stride != 0 {
        return Err(Error::Config(format!(
            "block size {block_size} with filter {filter_size} is not divisible by stride {stride}"
        )));
    }
    Ok(span / stride + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaabFilterBank {
    /// Row 0 is the DC filter, rows 1..27 the AC filters by descending energy.
    filters: Array2<f64>,
    /// DC response variance, then the AC eigenvalues.
    channel_energy: Vec<f64>,
    /// Mean of the training patches.
    patch_mean: Vec<f64>,
}

impl SaabFilterBank {
    pub fn filters(&self) -> ArrayView2<'_, f64> {
        self.filters.view()
    }

    pub fn dc_filter(&self) -> &[f64] {
        &self.filters.as_slice().expect("standard layout")[..PATCH_DIM]
    }

    pub fn ac_filters(&self) -> ArrayView2<'_, f64> {
        self.filters.slice(ndarray::s![1.., ..])
    }

    pub fn channel_energy(&self) -> &[f64] {
        &self.channel_energy
    }

    pub fn patch_mean(&self) -> &[f64] {
        &self.patch_mean
    }

    pub fn num_channels(&self) -> usize {
        PATCH_DIM
    }

    /// The 27 responses of one flattened patch.
    pub fn transform_patch(&self, patch: &[f64], out: &mut [f64]) {
        debug_assert_eq!(patch.len(), PATCH_DIM);
        let f = self.filters.as_slice().expect("standard layout");
        for (k, o) in out.iter_mut().enumerate() {
            let row = &f[k * PATCH_DIM..(k + 1) * PATCH_DIM];
            *o = row.iter().zip(patch).map(|(a, b)| a * b).sum();
        }
    }

    /// Inverse of [`Self::transform_patch`].
    pub fn reconstruct_patch(&self, responses: &[f64]) -> Vec<f64> {
        let f = self.filters.as_slice().expect("standard layout");
        let mut patch = vec![0.0; PATCH_DIM];
        for (k, &y) in responses.iter().enumerate() {
            let row = &f[k * PATCH_DIM..(k + 1) * PATCH_DIM];
            for (p, a) in patch.iter_mut().zip(row) {
                *p += y * a;
            }
        }
        patch
    }
}

/// Orthonormal basis of the complement of the constant direction (Helmert
/// rows), `26 x 27`.
fn ac_subspace_basis() -> DMatrix<f64> {
    let mut basis = DMatrix::zeros(PATCH_DIM - 1, PATCH_DIM);
    for k in 1..PATCH_DIM {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for j in 0..k {
            basis[(k - 1, j)] = 1.0 / norm;
        }
        basis[(k - 1, k)] = -(k as f64) / norm;
    }
    basis
}

/// Accumulates patch statistics so a bank can be fitted without holding
/// every patch in memory.
#[derive(Debug, Clone)]
pub struct SaabFitter {
    stats: CovarianceAccumulator,
}

impl Default for SaabFitter {
    fn default() -> Self {
        SaabFitter {
            stats: CovarianceAccumulator::new(PATCH_DIM),
        }
    }
}

impl SaabFitter {
    pub fn push_patch(&mut self, patch: &[f64]) {
        self.stats.push(patch);
    }

    /// Adds every window of `block` at the given stride.
    pub fn push_block(&mut self, block: ArrayView3<'_, f64>, stride: usize) -> Result<()> {
        for_each_window(block, stride, |_, _, patch| self.stats.push(patch))
    }

    pub fn merge(&mut self, other: &SaabFitter) {
        self.stats.merge(&other.stats);
    }

    pub fn finish(&self) -> Result<SaabFilterBank> {
        let n = self.stats.count();
        if n < PATCH_DIM {
            return Err(Error::InsufficientData { needed: PATCH_DIM, got: n });
        }
        if self.stats.mean().iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("patches contain non-finite values".into()));
        }
        let cov = self.stats.covariance();
        let dc = vec![1.0 / (PATCH_DIM as f64).sqrt(); PATCH_DIM];
        let dc_col = nalgebra::DVector::from_column_slice(&dc);
        let dc_energy = (dc_col.transpose() * &cov * &dc_col)[(0, 0)].max(0.0);

        // The residual covariance restricted to the AC subspace. Removing the
        // per-patch DC part does not change it, since the basis is orthogonal
        // to the constant direction.
        let basis = ac_subspace_basis();
        let reduced = &basis * &cov * basis.transpose();
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let eig = sorted_eigen(reduced);
        let ac = &eig.vectors * &basis;

        let mut filters = Array2::zeros((PATCH_DIM, PATCH_DIM));
        for (j, &v) in dc.iter().enumerate() {
            filters[[0, j]] = v;
        }
        for k in 0..PATCH_DIM - 1 {
            let mut row: Vec<f64> = ac.row(k).iter().copied().collect();
            canonical_sign(&mut row);
            for (j, v) in row.into_iter().enumerate() {
                filters[[k + 1, j]] = v;
            }
        }
        let mut channel_energy = Vec::with_capacity(PATCH_DIM);
        channel_energy.push(dc_energy);
        channel_energy.extend(eig.values.iter().map(|&v| v.max(0.0)));
        Ok(SaabFilterBank {
            filters,
            channel_energy,
            patch_mean: self.stats.mean(),
        })
    }
}

/// Fits a bank to an `N x 27` matrix of flattened patches.
pub fn fit_saab(patches: ArrayView2<'_, f64>) -> Result<SaabFilterBank> {
    if patches.ncols() != PATCH_DIM {
        return Err(Error::Argument(format!(
            "patches must have {PATCH_DIM} columns, got {}",
            patches.ncols()
        )));
    }
    let mut fitter = SaabFitter::default();
    let mut buf = [0.0; PATCH_DIM];
    for row in patches.rows() {
        for (b, v) in buf.iter_mut().zip(row.iter()) {
            *b = *v;
        }
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("patches contain non-finite values".into()));
        }
        fitter.push_patch(&buf);
    }
    fitter.finish()
}

/// Calls `f(row, col, patch)` for every `3x3x3` window at `stride`.
pub fn for_each_window(
    block: ArrayView3<'_, f64>,
    stride: usize,
    mut f: impl FnMut(usize, usize, &[f64]),
) -> Result<()> {
    let (h, w, c) = block.dim();
    if c != CHANNELS {
        return Err(Error::Config(format!("expected {CHANNELS} channels, got {c}")));
    }
    let out_h = output_size(h, KERNEL_SIZE, stride)?;
    let out_w = output_size(w, KERNEL_SIZE, stride)?;
    let mut patch = [0.0; PATCH_DIM];
    for i in 0..out_h {
        for j in 0..out_w {
            let mut k = 0;
            for dy in 0..KERNEL_SIZE {
                for dx in 0..KERNEL_SIZE {
                    for ch in 0..CHANNELS {
                        patch[k] = block[[i * stride + dy, j * stride + dx, ch]];
                        k += 1;
                    }
                }
            }
            f(i, j, &patch);
        }
    }
    Ok(())
}

/// Responses of one block: `out_h x out_w x 27`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTensor {
    pub values: Array3<f64>,
    pub origin: BlockOrigin,
}

impl ResponseTensor {
    /// Flattened row, column, channel (channel fastest).
    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice().expect("standard layout")
    }

    pub fn spatial_len(&self) -> usize {
        let (h, w, _) = self.values.dim();
        h * w
    }
}

pub fn apply_saab(bank: &SaabFilterBank, block: &Block, stride: usize) -> Result<ResponseTensor> {
    Ok(ResponseTensor {
        values: apply_saab_view(bank, block.pixels.view(), stride)?,
        origin: block.origin.clone(),
    })
}

pub fn apply_saab_view(bank: &SaabFilterBank, block: ArrayView3<'_, f64>, stride: usize) -> Result<Array3<f64>> {
    let (h, w, _) = block.dim();
    let out_h = output_size(h, KERNEL_SIZE, stride)?;
    let out_w = output_size(w, KERNEL_SIZE, stride)?;
    let mut values = Array3::zeros((out_h, out_w, PATCH_DIM));
    let mut resp = [0.0; PATCH_DIM];
    for_each_window(block, stride, |i, j, patch| {
        bank.transform_patch(patch, &mut resp);
        for (k, &r) in resp.iter().enumerate() {
            values[[i, j, k]] = r;
        }
    })?;
    Ok(values)
}
