//! The four-stage training pipeline: per-class voxelization, EM cycling,
//! merge-and-relabel with plurality voting, and false-positive correction
//! with keep-best, plus k selection via stratified cross-validation.
//!
//! Every stage is a deterministic function of its inputs; repeated `fit`
//! calls on the same data produce bit-identical models.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tessellation::{assign_all, precompute_offsets, GeneratorSet, Model};
use crate::voxelize::voxelize_class;

/// Default EM cycle count used when none is requested explicitly.
pub const DEFAULT_EM_CYCLES: usize = 10;
/// Default correction cycle count used when none is requested explicitly.
pub const DEFAULT_CORRECTION_CYCLES: usize = 50;
/// Default k grid for cross-validated selection.
pub const DEFAULT_K_GRID: &[usize] = &[2, 3, 5, 8, 12, 17, 25, 40];

/// Training hyperparameters. A cycle count of zero disables that stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hyperparams {
    /// Requested voxels per class.
    pub k: usize,
    pub em_cycles: usize,
    pub correction_cycles: usize,
}

impl Hyperparams {
    /// Hyperparameters with the default cycle counts.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            em_cycles: DEFAULT_EM_CYCLES,
            correction_cycles: DEFAULT_CORRECTION_CYCLES,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParam("k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-stage diagnostics collected by [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Training accuracy of the merged raw voxel means (diagnostic stage).
    pub accuracy_after_voxelize: f64,
    /// Training accuracy of the merged model entering correction.
    pub accuracy_after_em: f64,
    /// Training accuracy after each correction cycle.
    pub correction_accuracies: Vec<f64>,
    /// Best training accuracy over the pre-correction model and every cycle.
    pub best_accuracy: f64,
    /// Generator count per class after voxelization.
    pub generators_per_class_voxelized: Vec<usize>,
    /// Generator count per class after EM.
    pub generators_per_class_em: Vec<usize>,
    /// Generator count per assigned label after merge-and-relabel.
    pub generators_per_label_merged: Vec<usize>,
}

/// Redistributes generator points over one class's instances.
///
/// Each cycle assigns every instance to its best-scoring generator (lowest
/// index on ties), replaces each generator by the mean of its assignees, and
/// removes generators that attracted nothing. With `n_cycles == 0` the set
/// is returned unchanged.
pub fn apply_em(x: &Matrix, set: &GeneratorSet, n_cycles: usize) -> Result<GeneratorSet> {
    if x.n_cols() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            actual: x.n_cols(),
        });
    }
    let m = x.n_cols();
    let mut current = precompute_offsets(set.clone());
    for _ in 0..n_cycles {
        let assignments = assign_all(x, &current);
        let n_gen = current.len();
        let mut counts = vec![0usize; n_gen];
        let mut sums = vec![0.0f64; n_gen * m];
        for (row, &g) in x.rows_iter().zip(&assignments) {
            counts[g] += 1;
            for (acc, &v) in sums[g * m..(g + 1) * m].iter_mut().zip(row) {
                *acc += v;
            }
        }
        let mut data = Vec::with_capacity(n_gen * m);
        let mut survivors = 0;
        for g in 0..n_gen {
            if counts[g] > 0 {
                survivors += 1;
                data.extend(sums[g * m..(g + 1) * m].iter().map(|s| s / counts[g] as f64));
            }
        }
        current = precompute_offsets(GeneratorSet::new(Matrix::from_vec(survivors, m, data))?);
    }
    Ok(current)
}

/// Merges per-class generator sets into one labeled tessellation.
///
/// Generators are concatenated in ascending class order (stable within a
/// class), every instance is assigned to its best-scoring generator, and each
/// generator takes the plurality class of its assignees, ties toward the
/// smallest class id. A generator that attracted nothing keeps the class it
/// was voxelized from.
pub fn merge_relabel(
    x: &Matrix,
    y: &[usize],
    class_generators: &[GeneratorSet],
) -> Result<Model> {
    let n_classes = class_generators.len();
    if n_classes == 0 || class_generators.iter().all(|g| g.is_empty()) {
        return Err(Error::InvalidParam("no generators to merge".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::InvalidParam(format!(
            "{} labels for {} instances",
            y.len(),
            x.n_rows()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidParam(format!(
            "instance label {bad} out of range for {n_classes} classes"
        )));
    }
    let dim = class_generators[0].dim();
    for g in class_generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: g.dim(),
            });
        }
    }
    if x.n_cols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.n_cols(),
        });
    }

    let parts: Vec<&Matrix> = class_generators.iter().map(|g| g.points()).collect();
    let merged = precompute_offsets(GeneratorSet::new(Matrix::vstack(&parts))?);
    let origin: Vec<usize> = class_generators
        .iter()
        .enumerate()
        .flat_map(|(class, g)| std::iter::repeat_n(class, g.len()))
        .collect();

    let assignments = assign_all(x, &merged);
    let mut votes = vec![vec![0usize; n_classes]; merged.len()];
    for (&g, &label) in assignments.iter().zip(y) {
        votes[g][label] += 1;
    }
    let labels: Vec<usize> = votes
        .iter()
        .zip(&origin)
        .map(|(cell_votes, &origin_class)| {
            if cell_votes.iter().all(|&v| v == 0) {
                return origin_class;
            }
            let mut best_class = 0;
            let mut best_votes = 0;
            for (class, &v) in cell_votes.iter().enumerate() {
                if v > best_votes {
                    best_votes = v;
                    best_class = class;
                }
            }
            best_class
        })
        .collect();

    Model::new(merged, labels, n_classes, None)
}

fn training_accuracy(x: &Matrix, y: &[usize], generators: &GeneratorSet, labels: &[usize]) -> f64 {
    let assignments = assign_all(x, generators);
    let correct = assignments
        .iter()
        .zip(y)
        .filter(|(&g, &truth)| labels[g] == truth)
        .count();
    correct as f64 / y.len() as f64
}

/// One correction pass over every generator, using a fixed assignment
/// snapshot: `p <- (p * n_all - sum(x_fp)) / (n_all - n_fp)` wherever
/// `0 < n_fp < n_all`.
fn correction_pass(x: &Matrix, y: &[usize], points: &mut Matrix, labels: &[usize]) {
    let m = x.n_cols();
    let n_gen = points.n_rows();
    let mut set = GeneratorSet::new(points.clone()).expect("nonempty generators");
    set.precompute_offsets();
    let assignments = assign_all(x, &set);

    let mut n_all = vec![0usize; n_gen];
    let mut n_fp = vec![0usize; n_gen];
    let mut fp_sums = vec![0.0f64; n_gen * m];
    for ((row, &g), &truth) in x.rows_iter().zip(&assignments).zip(y) {
        n_all[g] += 1;
        if labels[g] != truth {
            n_fp[g] += 1;
            for (acc, &v) in fp_sums[g * m..(g + 1) * m].iter_mut().zip(row) {
                *acc += v;
            }
        }
    }
    for g in 0..n_gen {
        if n_fp[g] == 0 || n_fp[g] >= n_all[g] {
            continue;
        }
        let denom = (n_all[g] - n_fp[g]) as f64;
        let weight = n_all[g] as f64;
        let row = points.row_mut(g);
        for (p, fp) in row.iter_mut().zip(&fp_sums[g * m..(g + 1) * m]) {
            *p = (*p * weight - fp) / denom;
        }
    }
}

pub(crate) fn correct_traced(
    x: &Matrix,
    y: &[usize],
    model: &Model,
    n_cycles: usize,
) -> Result<(Model, Vec<f64>)> {
    if x.n_cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.n_cols(),
        });
    }
    if y.len() != x.n_rows() {
        return Err(Error::InvalidParam(format!(
            "{} labels for {} instances",
            y.len(),
            x.n_rows()
        )));
    }
    let labels = model.labels().to_vec();
    let mut current = model.generators().points().clone();

    let eval = |pts: &Matrix| -> f64 {
        let mut set = GeneratorSet::new(pts.clone()).expect("nonempty generators");
        set.precompute_offsets();
        training_accuracy(x, y, &set, &labels)
    };

    let mut best_points = current.clone();
    let mut best_accuracy = eval(&current);
    let mut cycle_accuracies = Vec::with_capacity(n_cycles);
    for _ in 0..n_cycles {
        correction_pass(x, y, &mut current, &labels);
        let accuracy = eval(&current);
        cycle_accuracies.push(accuracy);
        if accuracy > best_accuracy {
            best_accuracy = accuracy;
            best_points = current.clone();
        }
    }

    let generators = precompute_offsets(GeneratorSet::new(best_points)?);
    let corrected = Model::new(
        generators,
        labels,
        model.n_classes(),
        model.label_names().map(<[String]>::to_vec),
    )?;
    Ok((corrected, cycle_accuracies))
}

/// Pushes generators away from their false-positive instances.
///
/// The incoming model's training accuracy is evaluated first; after each of
/// the `n_cycles` passes the updated configuration is evaluated, and the
/// best-scoring configuration seen (including the incoming one) is returned.
/// Generator labels never change.
pub fn correct(x: &Matrix, y: &[usize], model: &Model, n_cycles: usize) -> Result<Model> {
    correct_traced(x, y, model, n_cycles).map(|(model, _)| model)
}

/// Runs the full training pipeline on labeled data.
///
/// Per class: voxelize with `hp.k`, then redistribute with `hp.em_cycles` of
/// EM. The class tessellations are merged and relabeled by plurality, then
/// corrected for `hp.correction_cycles`. The returned model carries cached
/// score offsets.
pub fn fit(x: &Matrix, y: &[usize], hp: &Hyperparams) -> Result<(Model, TrainTrace)> {
    hp.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::InvalidParam(format!(
            "{} labels for {} instances",
            y.len(),
            x.n_rows()
        )));
    }
    let n_classes = y.iter().max().map_or(0, |&l| l + 1);
    if n_classes < 2 {
        return Err(Error::InvalidParam(
            "training needs at least two classes".into(),
        ));
    }
    let mut class_counts = vec![0usize; n_classes];
    for &l in y {
        class_counts[l] += 1;
    }
    if let Some(empty) = class_counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidParam(format!(
            "class {empty} has zero instances"
        )));
    }

    // Voxelization and EM touch only their own class's rows.
    let per_class: Vec<(GeneratorSet, GeneratorSet)> = (0..n_classes)
        .into_par_iter()
        .map(|class| {
            let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
            let rows = x.select_rows(&idx);
            let voxelized = voxelize_class(&rows, hp.k)?;
            let relaxed = apply_em(&rows, &voxelized, hp.em_cycles)?;
            Ok((voxelized, relaxed))
        })
        .collect::<Result<_>>()?;
    let (voxel_gens, em_gens): (Vec<GeneratorSet>, Vec<GeneratorSet>) =
        per_class.into_iter().unzip();

    let voxel_stage = merge_relabel(x, y, &voxel_gens)?;
    let accuracy_after_voxelize =
        training_accuracy(x, y, voxel_stage.generators(), voxel_stage.labels());

    let merged = merge_relabel(x, y, &em_gens)?;
    let accuracy_after_em = training_accuracy(x, y, merged.generators(), merged.labels());

    let (model, correction_accuracies) = correct_traced(x, y, &merged, hp.correction_cycles)?;

    let best_accuracy = correction_accuracies
        .iter()
        .copied()
        .fold(accuracy_after_em, f64::max);
    let trace = TrainTrace {
        accuracy_after_voxelize,
        accuracy_after_em,
        correction_accuracies,
        best_accuracy,
        generators_per_class_voxelized: voxel_gens.iter().map(GeneratorSet::len).collect(),
        generators_per_class_em: em_gens.iter().map(GeneratorSet::len).collect(),
        generators_per_label_merged: merged.label_counts(),
    };
    Ok((model, trace))
}

/// Mean cross-validation accuracy for one k value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KScore {
    pub k: usize,
    pub mean_accuracy: f64,
}

/// Outcome of [`cross_validate_k`].
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best_k: usize,
    pub scores: Vec<KScore>,
}

/// Deterministic stratified fold ids: per class, a seeded shuffle deals
/// instances round-robin over the folds.
fn stratified_folds(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; y.len()];
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::InvalidParam(format!(
                "class {class} has {} instances, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }
    Ok(fold_of)
}

/// Selects k by stratified cross-validation.
///
/// For every k in the grid, each fold is held out once while the rest trains
/// a model; the per-k score is the mean held-out accuracy. The best k is the
/// argmax, ties toward the smallest k. Deterministic for a fixed seed.
pub fn cross_validate_k(
    x: &Matrix,
    y: &[usize],
    k_grid: &[usize],
    folds: usize,
    em_cycles: usize,
    correction_cycles: usize,
    seed: u64,
) -> Result<CvOutcome> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParam("k grid cannot be empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidParam("cross-validation needs >= 2 folds".into()));
    }
    let n_classes = y.iter().max().map_or(0, |&l| l + 1);
    let fold_of = stratified_folds(y, n_classes, folds, seed)?;

    let mut scores = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let hp = Hyperparams {
            k,
            em_cycles,
            correction_cycles,
        };
        let mut total = 0.0;
        for fold in 0..folds {
            let train_idx: Vec<usize> =
                (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
            let val_idx: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
            let x_train = x.select_rows(&train_idx);
            let y_train: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
            let (model, _) = fit(&x_train, &y_train, &hp)?;
            let x_val = x.select_rows(&val_idx);
            let predictions = crate::tessellation::classify_batch(&x_val, &model)?;
            let correct = val_idx
                .iter()
                .zip(&predictions)
                .filter(|&(&i, &p)| y[i] == p)
                .count();
            total += correct as f64 / val_idx.len() as f64;
        }
        scores.push(KScore {
            k,
            mean_accuracy: total / folds as f64,
        });
    }

    let mut best = scores[0];
    for s in &scores[1..] {
        if s.mean_accuracy > best.mean_accuracy
            || (s.mean_accuracy == best.mean_accuracy && s.k < best.k)
        {
            best = *s;
        }
    }
    Ok(CvOutcome {
        best_k: best.k,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>())
    }

    fn gens(points: &[f64]) -> GeneratorSet {
        GeneratorSet::new(column(points)).unwrap()
    }

    #[test]
    fn em_single_cycle_moves_to_cluster_means() {
        let x = column(&[0.0, 1.0, 9.0, 10.0]);
        let p = gens(&[0.5, 9.0]);
        let out = apply_em(&x, &p, 1).unwrap();
        assert_eq!(out.points().as_slice(), &[0.5, 9.5]);
    }

    #[test]
    fn em_fixed_point_is_stable() {
        let x = column(&[0.0, 1.0, 9.0, 10.0]);
        let p = gens(&[0.5, 9.5]);
        for cycles in [1, 3, 7] {
            let out = apply_em(&x, &p, cycles).unwrap();
            assert_eq!(out.points().as_slice(), &[0.5, 9.5]);
        }
    }

    #[test]
    fn em_drops_starved_generator() {
        let x = column(&[0.0, 1.0]);
        let p = gens(&[0.5, 100.0]);
        let out = apply_em(&x, &p, 1).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.points().as_slice(), &[0.5]);
    }

    #[test]
    fn em_zero_cycles_is_identity() {
        let x = column(&[0.0, 1.0]);
        let p = gens(&[0.3, 77.0]);
        let out = apply_em(&x, &p, 0).unwrap();
        assert_eq!(out.points(), p.points());
    }

    #[test]
    fn merge_plurality_single_cell() {
        // Coincident generators: every instance lands on generator 0 by the
        // lowest-index tie-break, so its cell holds labels {0,0,1}.
        let x = column(&[0.0, 1.0, 2.0]);
        let y = [0, 0, 1];
        let model = merge_relabel(&x, &y, &[gens(&[1.0]), gens(&[1.0])]).unwrap();
        assert_eq!(model.labels()[0], 0);
    }

    #[test]
    fn merge_tie_breaks_to_smallest_class() {
        // Votes 2 vs 2 in generator 0's cell.
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        let y = [0, 1, 0, 1];
        let model = merge_relabel(&x, &y, &[gens(&[1.5]), gens(&[1.5])]).unwrap();
        assert_eq!(model.labels()[0], 0);
    }

    #[test]
    fn merge_well_separated_keeps_origin_classes() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![9.0, 9.0],
            vec![9.0, 10.0],
        ]);
        let y = [0, 0, 1, 1];
        let class0 = GeneratorSet::new(Matrix::from_rows(&[vec![0.0, 0.5]])).unwrap();
        let class1 = GeneratorSet::new(Matrix::from_rows(&[vec![9.0, 9.5]])).unwrap();
        let model = merge_relabel(&x, &y, &[class0, class1]).unwrap();
        assert_eq!(model.labels(), &[0, 1]);
    }

    #[test]
    fn merge_starved_generator_keeps_origin_label() {
        // Class 1's generator sits far from every instance, so nothing is
        // assigned to it; it keeps the class it was voxelized from.
        let x = column(&[0.0, 1.0]);
        let y = [0, 0];
        let model = merge_relabel(&x, &y, &[gens(&[0.5]), gens(&[1000.0])]).unwrap();
        assert_eq!(model.labels(), &[0, 1]);
    }

    #[test]
    fn correction_update_arithmetic() {
        // p = (2,2) holding 4 instances, one FP at (3,3):
        // p' = ((8,8) - (3,3)) / 3 = (5/3, 5/3).
        let x = Matrix::from_rows(&[
            vec![2.0, 2.0],
            vec![2.0, 2.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
            vec![100.0, 100.0],
        ]);
        let y = [0, 0, 0, 1, 1];
        let mut points = Matrix::from_rows(&[vec![2.0, 2.0], vec![100.0, 100.0]]);
        correction_pass(&x, &y, &mut points, &[0, 1]);
        let got = points.row(0);
        assert!((got[0] - 5.0 / 3.0).abs() < 1e-12);
        assert!((got[1] - 5.0 / 3.0).abs() < 1e-12);
        // The pure cell is untouched.
        assert_eq!(points.row(1), &[100.0, 100.0]);
    }

    #[test]
    fn correct_no_false_positives_is_identity() {
        let x = column(&[0.0, 1.0, 9.0, 10.0]);
        let y = [0, 0, 1, 1];
        let set = precompute_offsets(gens(&[0.5, 9.5]));
        let model = Model::new(set, vec![0, 1], 2, None).unwrap();
        let out = correct(&x, &y, &model, 5).unwrap();
        assert_eq!(out.generators().points(), model.generators().points());
        assert_eq!(
            training_accuracy(&x, &y, out.generators(), out.labels()),
            1.0
        );
    }

    #[test]
    fn correct_skips_all_fp_cell() {
        // Generator 1's only instance is a FP (n_fp == n_all): skipped.
        let x = column(&[0.0, 10.0]);
        let y = [0, 0];
        let mut points = column(&[0.0, 10.0]);
        correction_pass(&x, &y, &mut points, &[0, 1]);
        assert_eq!(points.as_slice(), &[0.0, 10.0]);
    }

    #[test]
    fn fit_separable_one_dimensional_classes() {
        let x = column(&[0.0, 1.0, 9.0, 10.0]);
        let y = [0, 0, 1, 1];
        let (model, trace) = fit(&x, &y, &Hyperparams::new(1)).unwrap();
        assert_eq!(model.generators().len(), 2);
        assert_eq!(model.labels(), &[0, 1]);
        let p: Vec<f64> = model.generators().points().as_slice().to_vec();
        assert_eq!(p, vec![0.5, 9.5]);
        assert_eq!(trace.best_accuracy, 1.0);
    }

    #[test]
    fn fit_disabled_stages_yields_relabeled_voxel_means() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![8.0, 9.0],
            vec![9.5, 9.1],
        ]);
        let y = [0, 0, 1, 1];
        let hp = Hyperparams {
            k: 2,
            em_cycles: 0,
            correction_cycles: 0,
        };
        let (model, trace) = fit(&x, &y, &hp).unwrap();
        let mut expected_parts = Vec::new();
        for class in 0..2 {
            let idx: Vec<usize> = (0..4).filter(|&i| y[i] == class).collect();
            expected_parts.push(voxelize_class(&x.select_rows(&idx), 2).unwrap());
        }
        let expected = merge_relabel(&x, &y, &expected_parts).unwrap();
        assert_eq!(model.generators().points(), expected.generators().points());
        assert_eq!(model.labels(), expected.labels());
        assert!(trace.correction_accuracies.is_empty());
    }

    #[test]
    fn fit_rejects_single_class_and_empty_class() {
        let x = column(&[0.0, 1.0]);
        assert!(fit(&x, &[0, 0], &Hyperparams::new(1)).is_err());
        // Label 2 present but label 1 absent.
        let x3 = column(&[0.0, 1.0, 2.0]);
        assert!(fit(&x3, &[0, 0, 2], &Hyperparams::new(1)).is_err());
    }

    #[test]
    fn fit_is_bit_deterministic() {
        let data = crate::dataset::make_moons(120, 0.2, 11).unwrap();
        let hp = Hyperparams::new(5);
        let (a, _) = fit(data.features(), data.labels(), &hp).unwrap();
        let (b, _) = fit(data.features(), data.labels(), &hp).unwrap();
        assert_eq!(a.generators().points(), b.generators().points());
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn cv_singleton_grid_returns_it() {
        let data = crate::dataset::make_gaussians(60, 2, 0.5, 3).unwrap();
        let out = cross_validate_k(data.features(), data.labels(), &[7], 3, 2, 2, 0).unwrap();
        assert_eq!(out.best_k, 7);
        assert_eq!(out.scores.len(), 1);
    }

    #[test]
    fn cv_exact_ties_prefer_smallest_k() {
        // Perfectly separable blobs: every k scores 1.0.
        let data = crate::dataset::make_gaussians(40, 2, 0.01, 5).unwrap();
        let out =
            cross_validate_k(data.features(), data.labels(), &[9, 2, 4], 2, 1, 1, 1).unwrap();
        assert!(out.scores.iter().all(|s| s.mean_accuracy == 1.0));
        assert_eq!(out.best_k, 2);
    }

    #[test]
    fn cv_rejects_small_class() {
        let x = column(&[0.0, 1.0, 2.0, 10.0]);
        let y = [0, 0, 0, 1];
        let err = cross_validate_k(&x, &y, &[1], 2, 0, 0, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
    }

    #[test]
    fn cv_separable_gaussians_score_high() {
        let data = crate::dataset::make_gaussians(300, 3, 0.3, 5).unwrap();
        let out = cross_validate_k(
            data.features(),
            data.labels(),
            &[2, 5, 10],
            5,
            DEFAULT_EM_CYCLES,
            DEFAULT_CORRECTION_CYCLES,
            0,
        )
        .unwrap();
        let best = out
            .scores
            .iter()
            .find(|s| s.k == out.best_k)
            .unwrap()
            .mean_accuracy;
        assert!(best >= 0.95, "best CV accuracy {best}");
    }
}
