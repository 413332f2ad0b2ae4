//! Per-channel spatial PCA over Saab response maps.
//!
//! Each high-energy Saab channel of a block gets its own PCA over the
//! flattened `out_h * out_w` response maps, eigenface style. The leading
//! components covering the energy cutoff are kept, capped per channel.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sorted_eigen, CovarianceAccumulator};

pub const DEFAULT_ENERGY_CUTOFF: f64 = 0.8;
pub const DEFAULT_MAX_COMPONENTS: usize = 10;

/// Relative slack when comparing cumulative energy to a cutoff, so that
/// e.g. `5 + 3 >= 0.8 * 10` holds despite rounding in the eigensolver.
const CUTOFF_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPca {
    pub channel: usize,
    pub mean: Vec<f64>,
    /// `k x (out_h * out_w)`, orthonormal rows.
    pub components: Array2<f64>,
    /// Eigenvalues of the kept components.
    pub eigenvalues: Vec<f64>,
    /// Sum of all eigenvalues (total spatial variance).
    pub total_energy: f64,
    /// The channel had no spatial variance; its single component is arbitrary.
    pub degenerate: bool,
}

impl ChannelPca {
    pub fn num_components(&self) -> usize {
        self.components.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialPcaModel {
    pub spatial_shape: (usize, usize),
    pub num_channels: usize,
    pub energy_cutoff: f64,
    pub max_components: usize,
    /// Fitted channels in ascending channel order.
    pub channels: Vec<ChannelPca>,
}

impl SpatialPcaModel {
    pub fn spatial_len(&self) -> usize {
        self.spatial_shape.0 * self.spatial_shape.1
    }

    /// Total kept components over all channels, i.e. the output length.
    pub fn total_components(&self) -> usize {
        self.channels.iter().map(ChannelPca::num_components).sum()
    }

    pub fn selected_channels(&self) -> Vec<usize> {
        self.channels.iter().map(|c| c.channel).collect()
    }
}

/// Channels taken by descending energy (ties: lower index first) until the
/// cumulative energy reaches `cutoff` of the total. Returned ascending.
pub fn select_channels(energy: &[f64], cutoff: f64) -> Vec<usize> {
    let total: f64 = energy.iter().sum();
    let mut order: Vec<usize> = (0..energy.len()).collect();
    order.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));
    let mut picked = Vec::new();
    let mut cum = 0.0;
    for &c in &order {
        picked.push(c);
        cum += energy[c];
        if cum >= cutoff * total * (1.0 - CUTOFF_SLACK) {
            break;
        }
    }
    picked.sort_unstable();
    picked
}

fn kept_count(eigenvalues: &[f64], cutoff: f64, cap: usize) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    let mut cum = 0.0;
    let mut k = eigenvalues.len();
    for (i, &v) in eigenvalues.iter().enumerate() {
        cum += v;
        if cum >= cutoff * total * (1.0 - CUTOFF_SLACK) {
            k = i + 1;
            break;
        }
    }
    k.clamp(1, cap)
}

/// Fits the spatial PCA of one block slot.
///
/// `responses` are the Saab response tensors (`out_h x out_w x channels`) of
/// the training samples; `saab_energy` drives channel selection.
pub fn fit_spatial_pca(
    responses: &[ArrayView3<'_, f64>],
    saab_energy: &[f64],
    energy_cutoff: f64,
    max_components: usize,
) -> Result<SpatialPcaModel> {
    if !(energy_cutoff > 0.0 && energy_cutoff <= 1.0) {
        return Err(Error::Config(format!("energy cutoff must be in (0, 1], got {energy_cutoff}")));
    }
    if max_components == 0 {
        return Err(Error::Config("max_components must be at least 1".into()));
    }
    if responses.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: responses.len(),
        });
    }
    let (h, w, c) = responses[0].dim();
    if saab_energy.len() != c {
        return Err(Error::Argument(format!(
            "{} channel energies for {c} response channels",
            saab_energy.len()
        )));
    }
    if let Some(r) = responses.iter().find(|r| r.dim() != (h, w, c)) {
        return Err(Error::Config(format!(
            "response shape {:?} differs from {:?}",
            r.dim(),
            (h, w, c)
        )));
    }

    let channels = select_channels(saab_energy, energy_cutoff)
        .into_iter()
        .map(|ch| fit_channel(responses, ch, energy_cutoff, max_components))
        .collect();
    Ok(SpatialPcaModel {
        spatial_shape: (h, w),
        num_channels: c,
        energy_cutoff,
        max_components,
        channels,
    })
}

fn fit_channel(responses: &[ArrayView3<'_, f64>], channel: usize, cutoff: f64, cap: usize) -> ChannelPca {
    let (h, w, _) = responses[0].dim();
    let dim = h * w;
    let mut acc = CovarianceAccumulator::new(dim);
    let mut map = vec![0.0; dim];
    for r in responses {
        for (m, v) in map.iter_mut().zip(r.slice(ndarray::s![.., .., channel]).iter()) {
            *m = *v;
        }
        acc.push(&map);
    }
    let mean = acc.mean();
    let eig = sorted_eigen(acc.covariance());
    let values: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    let scale = 1.0 + mean.iter().map(|m| m * m).sum::<f64>() / dim as f64;
    let degenerate = total <= 1e-12 * scale;
    let k = if degenerate { 1 } else { kept_count(&values, cutoff, cap) };
    let components = Array2::from_shape_fn((k, dim), |(i, j)| eig.vectors[(i, j)]);
    ChannelPca {
        channel,
        mean,
        components,
        eigenvalues: values[..k].to_vec(),
        total_energy: total,
        degenerate,
    }
}

/// Projection coefficients of one response tensor, channel-major.
pub fn apply_spatial_pca(model: &SpatialPcaModel, response: ArrayView3<'_, f64>) -> Result<Vec<f64>> {
    let (h, w, c) = response.dim();
    if (h, w) != model.spatial_shape || c != model.num_channels {
        return Err(Error::Config(format!(
            "response shape {:?} does not match fitted {:?}x{}",
            (h, w, c),
            model.spatial_shape,
            model.num_channels
        )));
    }
    let mut out = Vec::with_capacity(model.total_components());
    let mut centred = vec![0.0; h * w];
    for ch in &model.channels {
        for ((dst, v), m) in centred
            .iter_mut()
            .zip(response.slice(ndarray::s![.., .., ch.channel]).iter())
            .zip(&ch.mean)
        {
            *dst = v - m;
        }
        for comp in ch.components.rows() {
            out.push(comp.iter().zip(&centred).map(|(a, b)| a * b).sum());
        }
    }
    Ok(out)
}

/// Dense `k x d` component matrix of one channel, for cross-checks.
pub fn component_matrix(ch: &ChannelPca) -> DMatrix<f64> {
    let (k, d) = ch.components.dim();
    DMatrix::from_fn(k, d, |i, j| ch.components[[i, j]])
}
