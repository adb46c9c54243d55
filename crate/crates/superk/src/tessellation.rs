//! Scoring and classification over a labeled generator set.
//!
//! The score of a point `x` against generator `p_i` is
//! `g_i(x) = x . p_i - 0.5 * p_i . p_i`. Maximizing it over `i` selects the
//! generator nearest to `x` in Euclidean distance, so the generator set
//! behaves as an implicit Voronoi tessellation while classification costs one
//! inner product per generator plus a precomputed constant.
//!
//! Ties everywhere resolve to the lowest generator index, in both the
//! likelihood and the Euclidean route, which keeps the two argmaxes equal
//! even on knife-edge inputs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Current model format revision, stored on every trained model.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Rows scored per work unit when batch scoring splits across threads.
const BATCH_BLOCK_ROWS: usize = 256;

/// An ordered set of generator points, optionally with cached score offsets
/// (`offsets[i] = 0.5 * ||p_i||^2`).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    points: Matrix,
    offsets: Option<Vec<f64>>,
}

impl GeneratorSet {
    pub fn new(points: Matrix) -> Result<Self> {
        if points.n_rows() == 0 {
            return Err(Error::InvalidParam("generator set cannot be empty".into()));
        }
        Ok(Self {
            points,
            offsets: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.n_rows() == 0
    }

    /// Dimensionality of the generator points.
    pub fn dim(&self) -> usize {
        self.points.n_cols()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn offsets(&self) -> Option<&[f64]> {
        self.offsets.as_deref()
    }

    /// Caches `0.5 * ||p_i||^2` for every generator.
    pub fn precompute_offsets(&mut self) {
        self.offsets = Some(
            self.points
                .rows_iter()
                .map(|p| 0.5 * dot(p, p))
                .collect(),
        );
    }

    fn offset(&self, i: usize) -> f64 {
        match &self.offsets {
            Some(offs) => offs[i],
            None => {
                let p = self.points.row(i);
                0.5 * dot(p, p)
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// Returns a copy of the set with offsets cached.
pub fn precompute_offsets(mut set: GeneratorSet) -> GeneratorSet {
    set.precompute_offsets();
    set
}

/// Scores `x` against every generator: `score[i] = x . p_i - offsets[i]`.
pub fn likelihood(x: &[f64], set: &GeneratorSet) -> Result<Vec<f64>> {
    set.check_dim(x)?;
    Ok((0..set.len())
        .map(|i| dot(x, set.point(i)) - set.offset(i))
        .collect())
}

/// Index of the best-scoring generator, lowest index on ties.
pub(crate) fn best_generator(x: &[f64], set: &GeneratorSet) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..set.len() {
        let score = dot(x, set.point(i)) - set.offset(i);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

/// Best-scoring generator per row, computed in parallel blocks.
///
/// Every row is scored independently with sequential accumulation, so the
/// result does not depend on the block size or thread count.
pub(crate) fn assign_all(x: &Matrix, set: &GeneratorSet) -> Vec<usize> {
    let n_rows = x.n_rows();
    let cols = x.n_cols();
    let mut out = vec![0usize; n_rows];
    out.par_chunks_mut(BATCH_BLOCK_ROWS)
        .zip(x.as_slice().par_chunks(BATCH_BLOCK_ROWS * cols))
        .for_each(|(out_block, row_block)| {
            for (slot, row) in out_block.iter_mut().zip(row_block.chunks_exact(cols)) {
                *slot = best_generator(row, set);
            }
        });
    out
}

/// A trained tessellation: generator points plus one class label per
/// generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    generators: GeneratorSet,
    labels: Vec<usize>,
    n_classes: usize,
    label_names: Option<Vec<String>>,
    format_version: u32,
}

impl Model {
    pub fn new(
        generators: GeneratorSet,
        labels: Vec<usize>,
        n_classes: usize,
        label_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if labels.len() != generators.len() {
            return Err(Error::InvalidParam(format!(
                "{} labels for {} generators",
                labels.len(),
                generators.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidParam(format!(
                "generator label {bad} out of range for {n_classes} classes"
            )));
        }
        if let Some(names) = &label_names {
            if names.len() != n_classes {
                return Err(Error::InvalidParam(format!(
                    "{} label names for {} classes",
                    names.len(),
                    n_classes
                )));
            }
        }
        Ok(Self {
            generators,
            labels,
            n_classes,
            label_names,
            format_version: MODEL_FORMAT_VERSION,
        })
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    /// Dimensionality the model classifies.
    pub fn dim(&self) -> usize {
        self.generators.dim()
    }

    pub fn precompute_offsets(&mut self) {
        self.generators.precompute_offsets();
    }

    /// Attaches human-readable class names, indexed by class id.
    pub fn with_label_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes {
            return Err(Error::InvalidParam(format!(
                "{} label names for {} classes",
                names.len(),
                self.n_classes
            )));
        }
        self.label_names = Some(names);
        Ok(self)
    }

    /// Generator count per class label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Classifies one point: label of the best-scoring generator.
pub fn classify(x: &[f64], model: &Model) -> Result<usize> {
    model.generators.check_dim(x)?;
    Ok(model.labels[best_generator(x, &model.generators)])
}

/// Classifies every row of a batch; elementwise identical to [`classify`]
/// per row, parallelized over rows.
pub fn classify_batch(x: &Matrix, model: &Model) -> Result<Vec<usize>> {
    if x.n_cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.n_cols(),
        });
    }
    Ok(assign_all(x, &model.generators)
        .into_iter()
        .map(|g| model.labels[g])
        .collect())
}

/// Index of the generator nearest to `x` in Euclidean distance, lowest index
/// on ties. This route never touches the likelihood scores.
pub fn nearest_euclidean(x: &[f64], set: &GeneratorSet) -> Result<usize> {
    set.check_dim(x)?;
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for i in 0..set.len() {
        let d2: f64 = x
            .iter()
            .zip(set.point(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[Vec<f64>]) -> GeneratorSet {
        precompute_offsets(GeneratorSet::new(Matrix::from_rows(points)).unwrap())
    }

    #[test]
    fn offsets_are_half_squared_norm() {
        let s = set(&[vec![3.0, 4.0], vec![0.0, 0.0]]);
        assert_eq!(s.offsets().unwrap(), &[12.5, 0.0]);
    }

    #[test]
    fn likelihood_at_generator_equals_half_norm() {
        let s = set(&[vec![1.0, 1.0]]);
        assert_eq!(likelihood(&[1.0, 1.0], &s).unwrap(), vec![1.0]);
    }

    #[test]
    fn likelihood_at_origin_is_negative_offset() {
        let s = set(&[vec![3.0, 4.0]]);
        assert_eq!(likelihood(&[0.0, 0.0], &s).unwrap(), vec![-12.5]);
    }

    #[test]
    fn likelihood_midpoint_tie() {
        let s = set(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(likelihood(&[1.0, 0.0], &s).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn likelihood_rejects_dimension_mismatch() {
        let s = set(&[vec![0.0, 0.0]]);
        assert!(matches!(
            likelihood(&[1.0], &s),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn classify_tie_breaks_to_lowest_index() {
        let s = set(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let model = Model::new(s, vec![0, 1], 2, None).unwrap();
        assert_eq!(classify(&[1.0, 0.0], &model).unwrap(), 0);
    }

    #[test]
    fn classify_on_top_of_unique_maximizer() {
        let s = set(&[vec![0.0, 0.0], vec![5.0, 5.0]]);
        let model = Model::new(s, vec![1, 0], 2, None).unwrap();
        assert_eq!(classify(&[5.0, 5.0], &model).unwrap(), 0);
        assert_eq!(classify(&[0.0, 0.0], &model).unwrap(), 1);
    }

    #[test]
    fn batch_matches_single_and_permutes_with_rows() {
        let s = set(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0]]);
        let model = Model::new(s, vec![0, 1, 2], 3, None).unwrap();
        let x = Matrix::from_rows(&[
            vec![0.1, 0.1],
            vec![3.9, 0.2],
            vec![0.3, 3.3],
            vec![2.0, 2.0],
        ]);
        let batch = classify_batch(&x, &model).unwrap();
        for (row, &label) in x.rows_iter().zip(&batch) {
            assert_eq!(label, classify(row, &model).unwrap());
        }
        let perm = [3, 0, 2, 1];
        let x_perm = x.select_rows(&perm);
        let batch_perm = classify_batch(&x_perm, &model).unwrap();
        for (out_pos, &src) in perm.iter().enumerate() {
            assert_eq!(batch_perm[out_pos], batch[src]);
        }
    }

    #[test]
    fn nearest_euclidean_basic_and_tie() {
        let s = set(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(nearest_euclidean(&[0.0, 0.0], &s).unwrap(), 0);
        let tie = set(&[vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(nearest_euclidean(&[0.0, 0.0], &tie).unwrap(), 0);
    }

    #[test]
    fn empty_generator_set_rejected() {
        assert!(GeneratorSet::new(Matrix::from_rows(&[])).is_err());
    }
}
