//! Parameter budget accounting.
//!
//! Counting rules: a Saab bank stores 27 x 27 numbers; spatial PCA stores
//! (spatial size) x (components kept across the block's channels); a
//! selector stores its kept indices; the classifier stores two numbers per
//! internal node and one per leaf.

use std::fmt;

use crate::config::RunConfig;
use crate::error::Result;
use crate::gbdt::{count_parameters, GbdtModel, Tree};
use crate::saab::{output_size, BANK_PARAMETERS, KERNEL_SIZE, PATCH_DIM};
use crate::select::keep_count;

use super::DetectorModel;

/// Parameter ceiling the default configuration is designed to stay under.
pub const PARAMETER_BUDGET: usize = 256_000;

/// Components kept per landmark block and per region block in the reference
/// budget (averages across blocks).
pub const REFERENCE_LANDMARK_COMPONENTS: usize = 35;
pub const REFERENCE_REGION_COMPONENTS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockShape {
    pub landmark: bool,
    /// `out_h * out_w` of the block's Saab response.
    pub spatial_len: usize,
    /// Spatial PCA components summed over the block's channels.
    pub spatial_components: usize,
    pub kept_features: usize,
}

/// Everything the audit needs to know about a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelShape {
    pub blocks: Vec<BlockShape>,
    pub classifier_parameters: usize,
}

impl ModelShape {
    pub fn of_model(model: &DetectorModel) -> Self {
        ModelShape {
            blocks: model
                .slots
                .iter()
                .map(|s| BlockShape {
                    landmark: s.slot.origin.is_landmark(),
                    spatial_len: s.spatial.spatial_len(),
                    spatial_components: s.spatial.total_components(),
                    kept_features: s.selector.kept_indices().len(),
                })
                .collect(),
            classifier_parameters: count_parameters(&model.classifier),
        }
    }

    /// Geometry of `config` with fixed per-block component counts and a
    /// classifier of `max_trees` full trees.
    pub fn from_config(config: &RunConfig, landmark_components: usize, region_components: usize) -> Result<Self> {
        config.validate()?;
        let block = |landmark: bool| -> Result<BlockShape> {
            let (size, fraction, comps) = if landmark {
                (config.layout.small_block_size, config.landmark_keep_fraction, landmark_components)
            } else {
                (config.layout.large_block_size, config.region_keep_fraction, region_components)
            };
            let side = output_size(size, KERNEL_SIZE, config.stride)?;
            let spatial_len = side * side;
            Ok(BlockShape {
                landmark,
                spatial_len,
                spatial_components: comps,
                kept_features: keep_count(spatial_len * PATCH_DIM, fraction),
            })
        };
        let blocks = config
            .layout
            .slots()
            .iter()
            .map(|s| block(s.origin.is_landmark()))
            .collect::<Result<_>>()?;
        let trees = vec![Tree::full(config.gbdt.max_leaves); config.gbdt.max_trees];
        let full = GbdtModel::from_trees(trees, 1, 0.0, config.gbdt.clone())?;
        Ok(ModelShape {
            blocks,
            classifier_parameters: count_parameters(&full),
        })
    }

    /// Default geometry with the reference component counts.
    pub fn reference() -> Self {
        Self::from_config(
            &RunConfig::default(),
            REFERENCE_LANDMARK_COMPONENTS,
            REFERENCE_REGION_COMPONENTS,
        )
        .expect("default config is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterRow {
    pub name: &'static str,
    pub count: usize,
    /// How the count was formed, e.g. `8 x 36 x 35`.
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterReport {
    pub rows: Vec<ParameterRow>,
    pub total: usize,
}

impl ParameterReport {
    pub fn get(&self, name: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.name == name).map(|r| r.count)
    }

    pub fn within_budget(&self) -> bool {
        self.total <= PARAMETER_BUDGET
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("subsystem\tparameters\tformula\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{}\t{}\n", r.name, r.count, r.formula));
        }
        out.push_str(&format!("total\t{}\t\n", self.total));
        out
    }
}

impl fmt::Display for ParameterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(f, "{:<22}{:>10}  {}", r.name, r.count, r.formula)?;
        }
        write!(f, "{:<22}{:>10}", "total", self.total)
    }
}

/// `n x a x b` when every block agrees on the per-block product, otherwise
/// the explicit sum.
fn product_formula(terms: &[(usize, usize)]) -> String {
    match terms.first() {
        Some(&first) if terms.iter().all(|&t| t == first) => format!("{} x {} x {}", terms.len(), first.0, first.1),
        _ => terms
            .iter()
            .map(|(a, b)| format!("{a} x {b}"))
            .collect::<Vec<_>>()
            .join(" + "),
    }
}

pub fn audit_shape(shape: &ModelShape) -> ParameterReport {
    let mut rows = Vec::with_capacity(7);
    for landmark in [true, false] {
        let n = shape.blocks.iter().filter(|b| b.landmark == landmark).count();
        rows.push(ParameterRow {
            name: if landmark { "pixelhop-landmarks" } else { "pixelhop-regions" },
            count: n * BANK_PARAMETERS,
            formula: format!("{n} x {PATCH_DIM} x {PATCH_DIM}"),
        });
    }
    for landmark in [true, false] {
        let terms: Vec<(usize, usize)> = shape
            .blocks
            .iter()
            .filter(|b| b.landmark == landmark)
            .map(|b| (b.spatial_len, b.spatial_components))
            .collect();
        rows.push(ParameterRow {
            name: if landmark { "spatialpca-landmarks" } else { "spatialpca-regions" },
            count: terms.iter().map(|(a, b)| a * b).sum(),
            formula: product_formula(&terms),
        });
    }
    for landmark in [true, false] {
        let kept: Vec<usize> = shape
            .blocks
            .iter()
            .filter(|b| b.landmark == landmark)
            .map(|b| b.kept_features)
            .collect();
        let formula = match kept.first() {
            Some(&k) if kept.iter().all(|&x| x == k) => format!("{} x {k}", kept.len()),
            _ => kept.iter().map(usize::to_string).collect::<Vec<_>>().join(" + "),
        };
        rows.push(ParameterRow {
            name: if landmark { "dft-landmarks" } else { "dft-regions" },
            count: kept.iter().sum(),
            formula,
        });
    }
    rows.push(ParameterRow {
        name: "classifier",
        count: shape.classifier_parameters,
        formula: "sum of 2 x internal + leaves".into(),
    });
    let total = rows.iter().map(|r| r.count).sum();
    ParameterReport { rows, total }
}

pub fn audit_parameters(model: &DetectorModel) -> ParameterReport {
    audit_shape(&ModelShape::of_model(model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rows() {
        let r = audit_shape(&ModelShape::reference());
        assert_eq!(r.rows.len(), 7);
        assert_eq!(r.get("pixelhop-landmarks"), Some(5_832));
        assert_eq!(r.get("spatialpca-regions"), Some(27_000));
        assert_eq!(r.get("classifier"), Some(190_000));
        assert_eq!(r.total, r.rows.iter().map(|x| x.count).sum::<usize>());
        assert!(r.to_tsv().ends_with("total\t240552\t\n"));
    }

    #[test]
    fn mixed_components_listed() {
        assert_eq!(product_formula(&[(36, 30), (36, 40)]), "36 x 30 + 36 x 40");
        assert_eq!(product_formula(&[(36, 35), (36, 35)]), "2 x 36 x 35");
    }
}
