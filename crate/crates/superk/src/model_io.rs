//! Versioned JSON persistence for trained models.
//!
//! A model file is a single UTF-8 JSON object holding the generator matrix,
//! per-generator labels, and the cached score offsets. Offsets are
//! recomputable from the generators; storing them makes corruption
//! detectable on load. Numbers are written in shortest round-trip form, so
//! save followed by load reproduces the generators bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::tessellation::{GeneratorSet, Model, MODEL_FORMAT_VERSION};

/// Relative tolerance for the stored-offset integrity check.
const OFFSET_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    m: usize,
    n_classes: usize,
    label_names: Option<Vec<String>>,
    generators: Vec<Vec<f64>>,
    labels: Vec<usize>,
    offsets: Vec<f64>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u64,
}

/// Writes `model` as a JSON document at `path`.
pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let generators: Vec<Vec<f64>> = model
        .generators()
        .points()
        .rows_iter()
        .map(<[f64]>::to_vec)
        .collect();
    let offsets: Vec<f64> = match model.generators().offsets() {
        Some(offs) => offs.to_vec(),
        None => generators.iter().map(|p| 0.5 * dot(p, p)).collect(),
    };
    let file = ModelFile {
        format_version: model.format_version(),
        m: model.dim(),
        n_classes: model.n_classes(),
        label_names: model.label_names().map(<[String]>::to_vec),
        generators,
        labels: model.labels().to_vec(),
        offsets,
    };
    let mut body = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::ModelFormat(format!("serialize: {e}")))?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::io(&display, e))
}

/// Reads and validates a model file.
///
/// Rejects unknown format versions, documents that do not match the schema,
/// dimension inconsistencies, and stored offsets that disagree with the
/// recomputed values beyond `1e-12` relative tolerance.
pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;

    let probe: VersionProbe = serde_json::from_str(&body)
        .map_err(|e| Error::ModelFormat(format!("{display}: {e}")))?;
    if probe.format_version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::UnsupportedVersion {
            found: probe.format_version,
            supported: MODEL_FORMAT_VERSION,
        });
    }

    let file: ModelFile = serde_json::from_str(&body)
        .map_err(|e| Error::ModelFormat(format!("{display}: {e}")))?;

    if file.generators.is_empty() {
        return Err(Error::ModelFormat(format!(
            "{display}: model holds no generators"
        )));
    }
    for (i, row) in file.generators.iter().enumerate() {
        if row.len() != file.m {
            return Err(Error::ModelFormat(format!(
                "{display}: generator {i} has {} coordinates, expected m={}",
                row.len(),
                file.m
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelFormat(format!(
                "{display}: generator {i} holds a non-finite coordinate"
            )));
        }
    }
    if file.labels.len() != file.generators.len() {
        return Err(Error::ModelFormat(format!(
            "{display}: {} labels for {} generators",
            file.labels.len(),
            file.generators.len()
        )));
    }
    if file.offsets.len() != file.generators.len() {
        return Err(Error::ModelFormat(format!(
            "{display}: {} offsets for {} generators",
            file.offsets.len(),
            file.generators.len()
        )));
    }
    for (i, (row, &stored)) in file.generators.iter().zip(&file.offsets).enumerate() {
        let recomputed = 0.5 * dot(row, row);
        let tolerance = OFFSET_TOLERANCE * recomputed.abs().max(1.0);
        if (stored - recomputed).abs() > tolerance {
            return Err(Error::CorruptModel(format!(
                "{display}: offset {i} is {stored}, expected {recomputed}"
            )));
        }
    }

    let points = Matrix::from_rows(&file.generators);
    let mut generators = GeneratorSet::new(points)?;
    generators.precompute_offsets();
    Model::new(generators, file.labels, file.n_classes, file.label_names)
        .map_err(|e| Error::ModelFormat(format!("{display}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::precompute_offsets;

    fn toy_model() -> Model {
        let points = Matrix::from_rows(&[vec![0.5, -1.25], vec![3.0, 4.0]]);
        let set = precompute_offsets(GeneratorSet::new(points).unwrap());
        Model::new(set, vec![0, 1], 2, Some(vec!["a".into(), "b".into()])).unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let model = toy_model();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&model, f.path()).unwrap();
        let loaded = load_model(f.path()).unwrap();
        assert_eq!(loaded.generators().points(), model.generators().points());
        assert_eq!(loaded.labels(), model.labels());
        assert_eq!(loaded.n_classes(), model.n_classes());
        assert_eq!(loaded.label_names(), model.label_names());
    }

    #[test]
    fn file_carries_format_version_one() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&toy_model(), f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert!(text.contains("\"format_version\": 1"), "{text}");
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = save_model(&toy_model(), "/nonexistent/dir/model.json").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn tampered_offset_is_corruption() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&toy_model(), f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let tampered = text.replace("12.5", "12.6");
        assert_ne!(text, tampered);
        std::fs::write(f.path(), tampered).unwrap();
        let err = load_model(f.path()).unwrap_err();
        assert!(matches!(err, Error::CorruptModel(_)), "{err:?}");
    }

    #[test]
    fn future_version_is_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&toy_model(), f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let future = text.replace("\"format_version\": 1", "\"format_version\": 99");
        std::fs::write(f.path(), future).unwrap();
        let err = load_model(f.path()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedVersion { found: 99, .. }));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&toy_model(), f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let extra = text.replacen('{', "{\n  \"surprise\": true,", 1);
        std::fs::write(f.path(), extra).unwrap();
        let err = load_model(f.path()).unwrap_err();
        assert!(matches!(err, Error::ModelFormat(_)), "{err:?}");
    }

    #[test]
    fn dimension_inconsistency_is_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&toy_model(), f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let bad = text.replace("\"m\": 2", "\"m\": 3");
        std::fs::write(f.path(), bad).unwrap();
        let err = load_model(f.path()).unwrap_err();
        assert!(matches!(err, Error::ModelFormat(_)), "{err:?}");
    }

    #[test]
    fn predictions_survive_round_trip() {
        let data = crate::dataset::make_moons(200, 0.15, 4).unwrap();
        let (model, _) =
            crate::training::fit(data.features(), data.labels(), &crate::training::Hyperparams::new(6))
                .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&model, f.path()).unwrap();
        let loaded = load_model(f.path()).unwrap();
        let before = crate::tessellation::classify_batch(data.features(), &model).unwrap();
        let after = crate::tessellation::classify_batch(data.features(), &loaded).unwrap();
        assert_eq!(before, after);
    }
}
