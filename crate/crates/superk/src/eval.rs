//! Metrics, a KNN reference classifier, decision-region rasterization, and
//! the repeated-run timing harness.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tessellation::{classify_batch, Model};

/// Mean and standard deviation over timing repetitions, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_ms: f64,
    pub stddev_ms: f64,
}

/// Evaluation outcome for one run. Timing fields are filled only by the
/// benchmark path and are never covered by determinism guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class_correct: Vec<usize>,
    /// `confusion[true_class][predicted_class]` instance counts.
    pub confusion: Vec<Vec<usize>>,
    pub train_time_ms: Option<TimingStats>,
    pub infer_time_ms: Option<TimingStats>,
}

/// Fraction of exact label matches.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::InvalidParam(format!(
            "accuracy needs equal nonempty label vectors, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// `n_classes x n_classes` count matrix indexed `[true][predicted]`.
pub fn confusion_matrix(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::InvalidParam(format!(
            "confusion needs equal nonempty label vectors, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut table = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::InvalidParam(format!(
                "label pair ({t}, {p}) out of range for {n_classes} classes"
            )));
        }
        table[t][p] += 1;
    }
    Ok(table)
}

/// Builds a full report (accuracy, per-class hits, confusion) without timing.
pub fn evaluate(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<EvalReport> {
    let confusion = confusion_matrix(y_true, y_pred, n_classes)?;
    let per_class_correct: Vec<usize> = (0..n_classes).map(|c| confusion[c][c]).collect();
    Ok(EvalReport {
        accuracy: accuracy(y_true, y_pred)?,
        per_class_correct,
        confusion,
        train_time_ms: None,
        infer_time_ms: None,
    })
}

/// K-nearest-neighbor predictions with uniform vote weights.
///
/// Neighbors are ordered by Euclidean distance with ties toward the lower
/// training index; vote ties resolve to the smallest class id.
pub fn knn_predict(train: &Dataset, x_test: &Matrix, k_neighbors: usize) -> Result<Vec<usize>> {
    let n = train.n_instances();
    if k_neighbors < 1 || k_neighbors > n {
        return Err(Error::InvalidParam(format!(
            "k_neighbors must lie in [1, {n}], got {k_neighbors}"
        )));
    }
    if x_test.n_cols() != train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: train.n_features(),
            actual: x_test.n_cols(),
        });
    }
    let features = train.features();
    let labels = train.labels();
    let n_classes = train.n_classes();

    let rows: Vec<&[f64]> = x_test.rows_iter().collect();
    Ok(rows
        .par_iter()
        .map(|x| {
            let mut ranked: Vec<(f64, usize)> = features
                .rows_iter()
                .enumerate()
                .map(|(i, t)| {
                    let d2: f64 = x.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2, i)
                })
                .collect();
            ranked.sort_unstable_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .expect("finite distances")
                    .then(a.1.cmp(&b.1))
            });
            let mut votes = vec![0usize; n_classes];
            for &(_, i) in &ranked[..k_neighbors] {
                votes[labels[i]] += 1;
            }
            let mut best_class = 0;
            let mut best_votes = 0;
            for (class, &v) in votes.iter().enumerate() {
                if v > best_votes {
                    best_votes = v;
                    best_class = class;
                }
            }
            best_class
        })
        .collect())
}

/// Axis-aligned rectangle for decision-region rasterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterBounds {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl RasterBounds {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "bounds need x1 > x0 and y1 > y0, got ({x0}, {y0}, {x1}, {y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }
}

/// Classifies a `resolution x resolution` grid of cell centers over `bounds`.
///
/// The grid is row-major with row 0 at the top (largest y), matching image
/// conventions; entry `[r * resolution + c]` is the class at the center of
/// that cell.
pub fn raster_regions(
    model: &Model,
    bounds: &RasterBounds,
    resolution: usize,
) -> Result<Vec<usize>> {
    if model.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: model.dim(),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidParam(format!(
            "resolution must be >= 2, got {resolution}"
        )));
    }
    let dx = (bounds.x1 - bounds.x0) / resolution as f64;
    let dy = (bounds.y1 - bounds.y0) / resolution as f64;
    let mut centers = Vec::with_capacity(resolution * resolution * 2);
    for r in 0..resolution {
        let y = bounds.y1 - (r as f64 + 0.5) * dy;
        for c in 0..resolution {
            let x = bounds.x0 + (c as f64 + 0.5) * dx;
            centers.push(x);
            centers.push(y);
        }
    }
    classify_batch(&Matrix::from_vec(resolution * resolution, 2, centers), model)
}

/// Writes a label grid as an ASCII PGM (P2) image, one class id per pixel.
pub fn write_pgm(
    grid: &[usize],
    resolution: usize,
    max_label: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    if grid.len() != resolution * resolution {
        return Err(Error::InvalidParam(format!(
            "grid length {} does not match resolution {resolution}",
            grid.len()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "P2");
    let _ = writeln!(out, "{resolution} {resolution}");
    let _ = writeln!(out, "{}", max_label.max(1));
    for row in grid.chunks(resolution) {
        let line: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    std::fs::write(path, out).map_err(|e| Error::io(&display, e))
}

/// Measures an action with the repeated-run protocol: each repetition loops
/// the action until at least `min_duration_ms` has elapsed and records the
/// per-invocation mean; the result is the mean and (population) standard
/// deviation over repetitions.
pub fn time_run<F: FnMut()>(
    mut action: F,
    min_duration_ms: u64,
    repetitions: usize,
) -> Result<TimingStats> {
    if repetitions < 1 {
        return Err(Error::InvalidParam("repetitions must be >= 1".into()));
    }
    let min_duration = Duration::from_millis(min_duration_ms);
    let mut per_rep = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let mut invocations = 0u64;
        loop {
            action();
            invocations += 1;
            if start.elapsed() >= min_duration {
                break;
            }
        }
        per_rep.push(start.elapsed().as_secs_f64() * 1e3 / invocations as f64);
    }
    let mean = per_rep.iter().sum::<f64>() / repetitions as f64;
    let variance =
        per_rep.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / repetitions as f64;
    Ok(TimingStats {
        mean_ms: mean,
        stddev_ms: variance.sqrt(),
    })
}
