//! Labeled datasets: CSV loading, synthetic generators, and stratified splits.
//!
//! All randomized operations take an explicit seed and draw from
//! `ChaCha8Rng::seed_from_u64(seed)`, so repeated calls with the same
//! arguments return identical datasets.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A labeled dataset: `N × m` features plus one class id per instance.
///
/// Class ids are always the dense range `0..n_classes`; the original label
/// spellings are kept in `class_names`, indexed by class id in order of first
/// appearance in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
    class_names: Vec<String>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Validates invariants: at least one instance and one feature, label
    /// vector of matching length, dense class ids, finite features.
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.n_rows() == 0 || features.n_cols() == 0 {
            return Err(Error::InvalidParam(
                "dataset needs at least one instance and one feature".into(),
            ));
        }
        if labels.len() != features.n_rows() {
            return Err(Error::InvalidParam(format!(
                "label count {} does not match instance count {}",
                labels.len(),
                features.n_rows()
            )));
        }
        let n_classes = class_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidParam(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != features.n_cols() {
                return Err(Error::InvalidParam(format!(
                    "{} feature names for {} features",
                    names.len(),
                    features.n_cols()
                )));
            }
        }
        for (i, row) in features.rows_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "non-finite feature value at row {i}, column {j}"
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            n_classes,
            class_names,
            feature_names,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_instances(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Instance count per class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Feature rows belonging to one class, in dataset order.
    pub fn class_rows(&self, class: usize) -> Matrix {
        let idx: Vec<usize> = (0..self.labels.len())
            .filter(|&i| self.labels[i] == class)
            .collect();
        self.features.select_rows(&idx)
    }
}

/// Selects the label column of a CSV file by header name or 0-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// All-digit strings select by index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(LabelColumn::Index(s.parse().expect("digits parse as usize")))
        } else {
            Ok(LabelColumn::Name(s.to_string()))
        }
    }
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let display = path.display().to_string();
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&display, io),
            other => Error::csv(&display, 0, format!("{other:?}")),
        })?;
    let mut records = Vec::new();
    for (i, rec) in reader.into_records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(&display, i + 1, e.to_string()))?;
        records.push(rec);
    }
    Ok(records)
}

/// Loads a labeled dataset from CSV.
///
/// The first row is treated as a header when any feature cell in it fails to
/// parse as a number (selection by name always requires a header). Source
/// labels are remapped to dense ids in order of first appearance; the
/// original spellings are kept in `class_names`.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let records = read_records(path)?;
    if records.is_empty() {
        return Err(Error::csv(&display, 1, "file contains no rows"));
    }

    let width = records[0].len();
    if width < 2 {
        return Err(Error::csv(
            &display,
            1,
            "need at least one feature column and one label column",
        ));
    }

    let numeric = |cell: &str| cell.trim().parse::<f64>().is_ok();
    let (label_idx, has_header) = match label {
        LabelColumn::Name(name) => {
            let idx = records[0]
                .iter()
                .position(|c| c.trim() == name)
                .ok_or_else(|| {
                    Error::csv(&display, 1, format!("label column {name:?} not found in header"))
                })?;
            (idx, true)
        }
        LabelColumn::Index(idx) => {
            if *idx >= width {
                return Err(Error::csv(
                    &display,
                    1,
                    format!("label column index {idx} out of range for {width} columns"),
                ));
            }
            let header = records[0]
                .iter()
                .enumerate()
                .any(|(j, cell)| j != *idx && !numeric(cell));
            (*idx, header)
        }
    };

    let feature_names = if has_header {
        Some(
            records[0]
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != label_idx)
                .map(|(_, c)| c.trim().to_string())
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };

    let data_rows = &records[has_header as usize..];
    if data_rows.is_empty() {
        return Err(Error::csv(&display, 1, "fewer than 1 data instance"));
    }

    let m = width - 1;
    let mut features = Vec::with_capacity(data_rows.len() * m);
    let mut labels = Vec::with_capacity(data_rows.len());
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut class_names: Vec<String> = Vec::new();

    for (i, rec) in data_rows.iter().enumerate() {
        let file_row = i + 1 + has_header as usize;
        if rec.len() != width {
            return Err(Error::csv(
                &display,
                file_row,
                format!("ragged row: expected {width} columns, found {}", rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                let name = cell.trim().to_string();
                let next_id = class_names.len();
                let id = *class_ids.entry(name.clone()).or_insert_with(|| {
                    class_names.push(name);
                    next_id
                });
                labels.push(id);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::csv(
                        &display,
                        file_row,
                        format!("column {j}: non-numeric feature cell {:?}", cell.trim()),
                    )
                })?;
                if !v.is_finite() {
                    return Err(Error::csv(
                        &display,
                        file_row,
                        format!("column {j}: non-finite feature value {v}"),
                    ));
                }
                features.push(v);
            }
        }
    }

    Dataset::new(
        Matrix::from_vec(data_rows.len(), m, features),
        labels,
        class_names,
        feature_names,
    )
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes a dataset as CSV with a header row; the label column is written
/// last, named `label`, holding the original class spellings.
///
/// Floats are written in shortest round-trip form, so a save/load cycle
/// reproduces the feature matrix bit-exactly.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut out = String::new();
    let names: Vec<String> = match data.feature_names() {
        Some(names) => names.iter().map(|n| csv_field(n)).collect(),
        None => (0..data.n_features()).map(|j| format!("f{j}")).collect(),
    };
    out.push_str(&names.join(","));
    out.push_str(",label\n");
    for (row, &label) in data.features.rows_iter().zip(&data.labels) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", csv_field(&data.class_names[label]));
    }
    std::fs::write(path, out).map_err(|e| Error::io(&display, e))
}

fn normal_noise(rng: &mut ChaCha8Rng, noise: f64, n: usize) -> Result<Vec<f64>> {
    if noise < 0.0 || !noise.is_finite() {
        return Err(Error::InvalidParam(format!(
            "noise standard deviation must be finite and >= 0, got {noise}"
        )));
    }
    let dist = Normal::new(0.0, noise)
        .map_err(|e| Error::InvalidParam(format!("noise distribution: {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

fn two_class_names() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

/// Evenly spaced values in `[start, end]`, inclusive of both ends.
fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (end - start) / (n - 1) as f64;
    (0..n).map(|i| start + step * i as f64).collect()
}

/// Two interleaving half circles with additive Gaussian noise.
///
/// Class 0 holds ceil(n/2) points on the upper unit half circle centered at
/// the origin, class 1 holds floor(n/2) points on the lower half circle
/// centered at (1, 0.5).
pub fn make_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("moons needs n >= 2, got {n}")));
    }
    let n0 = n.div_ceil(2);
    let n1 = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows = Vec::with_capacity(n);
    for t in linspace(0.0, std::f64::consts::PI, n0) {
        rows.push(vec![t.cos(), t.sin()]);
    }
    for t in linspace(0.0, std::f64::consts::PI, n1) {
        rows.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
    }
    let dx = normal_noise(&mut rng, noise, n)?;
    let dy = normal_noise(&mut rng, noise, n)?;
    for (i, row) in rows.iter_mut().enumerate() {
        row[0] += dx[i];
        row[1] += dy[i];
    }

    let labels = std::iter::repeat_n(0, n0)
        .chain(std::iter::repeat_n(1, n1))
        .collect();
    Dataset::new(Matrix::from_rows(&rows), labels, two_class_names(), None)
}

/// Two concentric circles: class 0 on the unit circle, class 1 on a circle of
/// radius `factor`, both centered at the origin, with additive Gaussian noise.
pub fn make_circles(n: usize, noise: f64, factor: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("circles needs n >= 2, got {n}")));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::InvalidParam(format!(
            "circle radius factor must lie in (0, 1), got {factor}"
        )));
    }
    let n0 = n.div_ceil(2);
    let n1 = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = 2.0 * std::f64::consts::PI;

    let mut rows = Vec::with_capacity(n);
    for i in 0..n0 {
        let t = full * i as f64 / n0 as f64;
        rows.push(vec![t.cos(), t.sin()]);
    }
    for i in 0..n1 {
        let t = full * i as f64 / n1 as f64;
        rows.push(vec![factor * t.cos(), factor * t.sin()]);
    }
    let dx = normal_noise(&mut rng, noise, n)?;
    let dy = normal_noise(&mut rng, noise, n)?;
    for (i, row) in rows.iter_mut().enumerate() {
        row[0] += dx[i];
        row[1] += dy[i];
    }

    let labels = std::iter::repeat_n(0, n0)
        .chain(std::iter::repeat_n(1, n1))
        .collect();
    Dataset::new(Matrix::from_rows(&rows), labels, two_class_names(), None)
}

/// Isotropic 2-D Gaussian blobs with centers drawn uniformly in [-10, 10]².
///
/// Class sizes are balanced to within one instance; the first `n % n_classes`
/// classes receive the extra point.
pub fn make_gaussians(n: usize, n_classes: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if n_classes < 2 {
        return Err(Error::InvalidParam(format!(
            "gaussians needs n_classes >= 2, got {n_classes}"
        )));
    }
    if n < n_classes {
        return Err(Error::InvalidParam(format!(
            "gaussians needs n >= n_classes, got n={n} with {n_classes} classes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center_box = Uniform::new_inclusive(-10.0, 10.0)
        .map_err(|e| Error::InvalidParam(format!("center box: {e}")))?;
    let centers: Vec<(f64, f64)> = (0..n_classes)
        .map(|_| (center_box.sample(&mut rng), center_box.sample(&mut rng)))
        .collect();

    let base = n / n_classes;
    let extra = n % n_classes;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (c, &(cx, cy)) in centers.iter().enumerate() {
        let count = base + usize::from(c < extra);
        let dx = normal_noise(&mut rng, spread, count)?;
        let dy = normal_noise(&mut rng, spread, count)?;
        for i in 0..count {
            rows.push(vec![cx + dx[i], cy + dy[i]]);
            labels.push(c);
        }
    }

    let class_names = (0..n_classes).map(|c| c.to_string()).collect();
    Dataset::new(Matrix::from_rows(&rows), labels, class_names, None)
}

/// Stratified train/test split.
///
/// Per class, a seeded shuffle selects round(count * test_fraction) test
/// instances; both parts keep the original row order. The two parts are
/// disjoint and their union restores the input multiset.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_idx = Vec::new();
    let mut train_idx = Vec::new();
    for class in 0..data.n_classes() {
        let mut idx: Vec<usize> = (0..data.n_instances())
            .filter(|&i| data.labels[i] == class)
            .collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test_idx.extend_from_slice(&idx[..n_test]);
        train_idx.extend_from_slice(&idx[n_test..]);
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::InvalidParam(format!(
            "test_fraction {test_fraction} produces an empty part ({} train / {} test)",
            train_idx.len(),
            test_idx.len()
        )));
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let part = |idx: &[usize]| {
        Dataset::new(
            data.features.select_rows(idx),
            idx.iter().map(|&i| data.labels[i]).collect(),
            data.class_names.clone(),
            data.feature_names.clone(),
        )
    };
    Ok((part(&train_idx)?, part(&test_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_remaps_labels_by_first_appearance() {
        let f = write_tmp("1.0,2.0,cat\n3.0,4.0,dog\n5.0,6.0,cat\n");
        let d = load_csv(f.path(), &LabelColumn::Index(2)).unwrap();
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.n_instances(), 3);
        assert_eq!(d.class_names(), &["cat".to_string(), "dog".to_string()]);
        assert!(d.feature_names().is_none());
    }

    #[test]
    fn load_rejects_nan_cell_with_row() {
        let f = write_tmp("1.0,0\nNaN,1\n2.0,0\n");
        let err = load_csv(f.path(), &LabelColumn::Index(1)).unwrap_err();
        match err {
            Error::CsvFormat { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_rejects_ragged_row_with_position() {
        let f = write_tmp("1.0,2.0,0\n1.0,0\n");
        let err = load_csv(f.path(), &LabelColumn::Index(2)).unwrap_err();
        match err {
            Error::CsvFormat { row, message, .. } => {
                assert_eq!(row, 2);
                assert!(message.contains("ragged"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_detects_header_and_selects_by_name() {
        let f = write_tmp("x,y,class\n1.0,2.0,a\n3.0,4.0,b\n");
        let d = load_csv(f.path(), &LabelColumn::Name("class".into())).unwrap();
        assert_eq!(d.feature_names(), Some(&["x".to_string(), "y".to_string()][..]));
        assert_eq!(d.labels(), &[0, 1]);
    }

    #[test]
    fn load_missing_file_is_io_error() {
        let err = load_csv("/nonexistent/none.csv", &LabelColumn::Index(0)).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn load_missing_header_name_errors() {
        let f = write_tmp("1.0,2.0,0\n");
        let err = load_csv(f.path(), &LabelColumn::Name("class".into())).unwrap_err();
        assert!(matches!(err, Error::CsvFormat { row: 1, .. }));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let d = make_moons(51, 0.3, 9).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_csv(&d, f.path()).unwrap();
        let d2 = load_csv(f.path(), &LabelColumn::Name("label".into())).unwrap();
        assert_eq!(d.features(), d2.features());
        assert_eq!(d.labels(), d2.labels());
    }

    #[test]
    fn csv_round_trip_quotes_awkward_class_names() {
        let f = write_tmp("1.0,\"a,b\"\n2.0,plain\n3.0,\"a,b\"\n");
        let d = load_csv(f.path(), &LabelColumn::Index(1)).unwrap();
        assert_eq!(d.class_names(), &["a,b".to_string(), "plain".to_string()]);
        let out = tempfile::NamedTempFile::new().unwrap();
        save_csv(&d, out.path()).unwrap();
        let d2 = load_csv(out.path(), &LabelColumn::Name("label".into())).unwrap();
        assert_eq!(d.labels(), d2.labels());
        assert_eq!(d.class_names(), d2.class_names());
    }

    #[test]
    fn moons_zero_noise_lies_on_arcs() {
        let d = make_moons(100, 0.0, 7).unwrap();
        assert_eq!(d.class_counts(), vec![50, 50]);
        for (row, &label) in d.features().rows_iter().zip(d.labels()) {
            let (cx, cy) = if label == 0 { (0.0, 0.0) } else { (1.0, 0.5) };
            let r = ((row[0] - cx).powi(2) + (row[1] - cy).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12, "off-arc point {row:?}");
        }
    }

    #[test]
    fn moons_is_deterministic() {
        let a = make_moons(101, 0.1, 7).unwrap();
        let b = make_moons(101, 0.1, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), vec![51, 50]);
    }

    #[test]
    fn moons_balanced_counts() {
        let d = make_moons(500, 0.2, 1).unwrap();
        assert_eq!(d.class_counts(), vec![250, 250]);
    }

    #[test]
    fn moons_rejects_tiny_n() {
        assert!(make_moons(1, 0.0, 0).is_err());
    }

    #[test]
    fn circles_zero_noise_radii() {
        let d = make_circles(4, 0.0, 0.5, 0).unwrap();
        for (row, &label) in d.features().rows_iter().zip(d.labels()) {
            let r = (row[0].powi(2) + row[1].powi(2)).sqrt();
            let expect = if label == 0 { 1.0 } else { 0.5 };
            assert!((r - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn circles_rejects_factor_outside_unit_interval() {
        assert!(make_circles(10, 0.0, 1.2, 0).is_err());
        assert!(make_circles(10, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn circles_deterministic() {
        let a = make_circles(400, 0.05, 0.5, 3).unwrap();
        let b = make_circles(400, 0.05, 0.5, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussians_zero_spread_collapses_to_centers() {
        let d = make_gaussians(3, 3, 0.0, 5).unwrap();
        assert_eq!(d.n_instances(), 3);
        assert_eq!(d.class_counts(), vec![1, 1, 1]);
        // All three points distinct with probability 1 over the center draw.
        assert_ne!(d.features().row(0), d.features().row(1));
    }

    #[test]
    fn gaussians_balanced_and_seed_sensitive() {
        let d = make_gaussians(300, 3, 1.0, 5).unwrap();
        assert_eq!(d.class_counts(), vec![100, 100, 100]);
        let e = make_gaussians(300, 3, 1.0, 6).unwrap();
        assert_ne!(d.features().row(0), e.features().row(0));
    }

    #[test]
    fn gaussians_rejects_n_below_classes() {
        assert!(make_gaussians(2, 3, 1.0, 0).is_err());
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = make_moons(10, 0.1, 3).unwrap();
        let (train, test) = split(&d, 0.2, 1).unwrap();
        assert_eq!(train.n_instances(), 8);
        assert_eq!(test.n_instances(), 2);

        // Union restores the multiset of rows.
        let mut all: Vec<Vec<u64>> = d
            .features()
            .rows_iter()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        let mut joined: Vec<Vec<u64>> = train
            .features()
            .rows_iter()
            .chain(test.features().rows_iter())
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        all.sort();
        joined.sort();
        assert_eq!(all, joined);
    }

    #[test]
    fn split_preserves_class_proportions() {
        let d = make_gaussians(90, 3, 1.0, 2).unwrap();
        let (train, test) = split(&d, 0.3, 7).unwrap();
        for c in 0..3 {
            assert_eq!(test.class_counts()[c], 9);
            assert_eq!(train.class_counts()[c], 21);
        }
    }

    #[test]
    fn split_rejects_empty_part() {
        let d = make_moons(2, 0.0, 0).unwrap();
        assert!(split(&d, 0.05, 0).is_err());
    }

    #[test]
    fn label_column_parses_index_or_name() {
        assert_eq!("64".parse::<LabelColumn>().unwrap(), LabelColumn::Index(64));
        assert_eq!(
            "class".parse::<LabelColumn>().unwrap(),
            LabelColumn::Name("class".into())
        );
    }
}
