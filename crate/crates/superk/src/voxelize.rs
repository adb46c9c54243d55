//! Multidimensional voxelization: turns one class's instances into initial
//! generator points.
//!
//! The grid geometry comes from the requested voxel count `k`: with
//! `c = k^(1/m)` bounded by the integers `a = floor(c)` and `b = ceil(c)`,
//! a subset of `m_v` "variant" dimensions is divided into `b` ranges and the
//! rest into `a`, so that the total grid size `a^(m-m_v) * b^(m_v)` tracks
//! `k`. Variant dimensions are the ones with the most distinct values.
//! Each nonempty voxel is summarized by the mean of its members.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tessellation::GeneratorSet;

/// Tolerance for snapping `k^(1/m)` to an integer, so exact roots such as
/// `8^(1/3)` land on the all-equal-divisions branch despite float error.
const INTEGRALITY_SNAP: f64 = 1e-9;

/// Voxel grid geometry for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPlan {
    /// Requested minimum voxel count.
    pub k: usize,
    /// Real scale of divisions, `k^(1/m)`.
    pub c: f64,
    /// Division count for non-variant dimensions, `floor(c)`.
    pub a: u32,
    /// Division count for variant dimensions, `ceil(c)`.
    pub b: u32,
    /// Number of variant dimensions.
    pub m_v: usize,
    /// Per-dimension division counts: `b` on variant dimensions, `a` elsewhere.
    pub divisions: Vec<u32>,
    /// Sorted indices of the variant dimensions; empty until selected.
    pub variant_indices: Vec<usize>,
}

impl GridPlan {
    /// Fixes the variant dimensions, granting them the larger division count.
    pub fn with_variants(mut self, variant_indices: Vec<usize>) -> Result<Self> {
        let m = self.divisions.len();
        if variant_indices.len() != self.m_v {
            return Err(Error::InvalidParam(format!(
                "expected {} variant indices, got {}",
                self.m_v,
                variant_indices.len()
            )));
        }
        if variant_indices.iter().any(|&i| i >= m) {
            return Err(Error::InvalidParam("variant index out of range".into()));
        }
        self.divisions = vec![self.a; m];
        for &i in &variant_indices {
            self.divisions[i] = self.b;
        }
        self.variant_indices = variant_indices;
        Ok(self)
    }
}

/// Computes the grid geometry for dimensionality `m` and requested voxel
/// count `k`. Variant dimensions are left unselected.
///
/// When `c` is an exact integer (`a == b`) every dimension gets `a`
/// divisions and `m_v = 0`; otherwise `m_v` follows the rounded log-ratio
/// formula, with rounding half away from zero.
pub fn plan_grid(m: usize, k: usize) -> Result<GridPlan> {
    if m < 1 {
        return Err(Error::InvalidParam("dimensionality must be >= 1".into()));
    }
    if k < 1 {
        return Err(Error::InvalidParam("requested voxel count must be >= 1".into()));
    }

    let c_raw = ((k as f64).ln() / m as f64).exp();
    let c = if (c_raw - c_raw.round()).abs() < INTEGRALITY_SNAP {
        c_raw.round()
    } else {
        c_raw
    };
    let a = c.floor() as u32;
    let b = c.ceil() as u32;

    let m_v = if a == b {
        0
    } else {
        let raw = m as f64 * ((c / a as f64).ln() / (b as f64 / a as f64).ln());
        (raw.round() as usize).min(m)
    };

    Ok(GridPlan {
        k,
        c,
        a,
        b,
        m_v,
        divisions: vec![a; m],
        variant_indices: Vec::new(),
    })
}

/// Number of distinct values in every column, under exact equality.
pub fn count_unique_values(features: &Matrix) -> Vec<usize> {
    let m = features.n_cols();
    let mut counts = Vec::with_capacity(m);
    for j in 0..m {
        let mut col: Vec<f64> = features.rows_iter().map(|r| r[j]).collect();
        col.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite features"));
        col.dedup();
        counts.push(col.len());
    }
    counts
}

/// Indices of the `m_v` largest counts, ties broken toward the lower index,
/// returned sorted ascending.
pub fn select_variant_features(counts: &[usize], m_v: usize) -> Vec<usize> {
    assert!(m_v <= counts.len(), "m_v exceeds dimensionality");
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i]), i));
    let mut chosen: Vec<usize> = order[..m_v].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Quantizes each value to its bin index: `floor((v - lo) / (hi - lo) * d)`
/// clamped to `[0, d-1]`; a degenerate range maps everything to bin 0.
///
/// `features`, `divisions`, and `ranges` are all over the same (possibly
/// projected) dimension list.
pub fn quantize(features: &Matrix, divisions: &[u32], ranges: &[(f64, f64)]) -> Vec<Vec<u32>> {
    assert_eq!(features.n_cols(), divisions.len());
    assert_eq!(features.n_cols(), ranges.len());
    features
        .rows_iter()
        .map(|row| {
            row.iter()
                .zip(divisions)
                .zip(ranges)
                .map(|((&v, &d), &(lo, hi))| {
                    if hi == lo || d <= 1 {
                        0
                    } else {
                        let raw = ((v - lo) / (hi - lo) * d as f64).floor();
                        raw.clamp(0.0, (d - 1) as f64) as u32
                    }
                })
                .collect()
        })
        .collect()
}

/// Nonempty voxels of one class: member count and member sum per voxel index
/// tuple, keyed over the quantized dimensions.
#[derive(Debug, Clone)]
pub struct VoxelTable {
    dim: usize,
    cells: BTreeMap<Vec<u32>, (usize, Vec<f64>)>,
}

impl VoxelTable {
    /// Groups full-dimensional rows by their quantized index tuples.
    pub fn build(features: &Matrix, indices: &[Vec<u32>]) -> Self {
        assert_eq!(features.n_rows(), indices.len());
        let dim = features.n_cols();
        let mut cells: BTreeMap<Vec<u32>, (usize, Vec<f64>)> = BTreeMap::new();
        for (row, key) in features.rows_iter().zip(indices) {
            let entry = cells
                .entry(key.clone())
                .or_insert_with(|| (0, vec![0.0; dim]));
            entry.0 += 1;
            for (acc, &v) in entry.1.iter_mut().zip(row) {
                *acc += v;
            }
        }
        Self { dim, cells }
    }

    pub fn n_voxels(&self) -> usize {
        self.cells.len()
    }

    pub fn total_count(&self) -> usize {
        self.cells.values().map(|(c, _)| *c).sum()
    }

    /// (index tuple, member count, mean point), in lexicographic key order.
    pub fn entries(&self) -> impl Iterator<Item = (&[u32], usize, Vec<f64>)> + '_ {
        self.cells.iter().map(|(key, (count, sum))| {
            let mean: Vec<f64> = sum.iter().map(|s| s / *count as f64).collect();
            (key.as_slice(), *count, mean)
        })
    }

    /// Voxel means in lexicographic key order as an `n_voxels × m` matrix.
    pub fn means(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.cells.len() * self.dim);
        for (_, _, mean) in self.entries() {
            data.extend_from_slice(&mean);
        }
        Matrix::from_vec(self.cells.len(), self.dim, data)
    }
}

/// Voxelizes one class's instances into generator points.
///
/// Quantization ranges are the per-dimension min/max of this class's data.
/// When `a == 1`, non-variant dimensions form a single bin and are skipped
/// in the voxel key; the result is identical either way. Generators are the
/// means of nonempty voxels, ordered by voxel index tuple.
pub fn voxelize_class(features: &Matrix, k: usize) -> Result<GeneratorSet> {
    let n = features.n_rows();
    let m = features.n_cols();
    if n < 1 {
        return Err(Error::InvalidParam("voxelize needs at least one instance".into()));
    }
    let plan = plan_grid(m, k)?;
    let counts = count_unique_values(features);
    let variants = select_variant_features(&counts, plan.m_v);
    let plan = plan.with_variants(variants)?;

    // Theoretical full-grid size, for the practicability warning only; the
    // sparse grouping below never materializes the grid.
    let grid_ln: f64 = plan.divisions.iter().map(|&d| (d as f64).ln()).sum();
    if grid_ln > (usize::MAX as f64).ln() {
        eprintln!(
            "warning: voxel grid {}^{} x {}^{} exceeds addressable size; \
             continuing with sparse voxels",
            plan.b,
            plan.m_v,
            plan.a,
            m - plan.m_v
        );
    }

    let active_dims: Vec<usize> = if plan.a == 1 {
        plan.variant_indices.clone()
    } else {
        (0..m).collect()
    };

    let indices: Vec<Vec<u32>> = if active_dims.is_empty() {
        vec![Vec::new(); n]
    } else {
        let projected = features.select_cols(&active_dims);
        let divisions: Vec<u32> = active_dims.iter().map(|&i| plan.divisions[i]).collect();
        let ranges = projected.col_ranges();
        quantize(&projected, &divisions, &ranges)
    };

    let table = VoxelTable::build(features, &indices);
    debug_assert_eq!(table.total_count(), n);
    GeneratorSet::new(table.means())
}
