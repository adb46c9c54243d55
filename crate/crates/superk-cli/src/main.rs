//! `superk` command line: train, predict, evaluate, cross-validate,
//! synthesize datasets, rasterize decision regions, and benchmark.
//!
//! Every command prints a single JSON report on stdout and human diagnostics
//! on stderr. All randomness is controlled by explicit `--seed` flags, so two
//! invocations with identical flags produce byte-identical reports apart from
//! timing fields.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use superk::dataset::{self, Dataset, LabelColumn};
use superk::error::Error;
use superk::eval::{self, EvalReport, RasterBounds, TimingStats};
use superk::matrix::Matrix;
use superk::model_io;
use superk::tessellation::{classify_batch, Model};
use superk::training::{
    cross_validate_k, fit, Hyperparams, KScore, DEFAULT_CORRECTION_CYCLES, DEFAULT_EM_CYCLES,
};

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  2  command line usage error
  3  file system error
  4  malformed CSV input
  5  dimension mismatch between data and model
  6  argument outside its documented domain
  7  malformed model file
  8  unsupported model format version
  9  corrupt model file (integrity check failed)";

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 3,
        Error::CsvFormat { .. } => 4,
        Error::DimensionMismatch { .. } => 5,
        Error::InvalidParam(_) => 6,
        Error::ModelFormat(_) => 7,
        Error::UnsupportedVersion { .. } => 8,
        Error::CorruptModel(_) => 9,
    }
}

#[derive(Parser)]
#[command(
    name = "superk",
    version,
    about = "Piecewise linear classification with labeled Voronoi tessellations",
    after_help = EXIT_CODES_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a labeled CSV file.
    Train(TrainArgs),
    /// Predict labels for a CSV file with a saved model.
    Predict(PredictArgs),
    /// Evaluate a saved model against a labeled CSV file.
    Evaluate(EvaluateArgs),
    /// Select k by stratified cross-validation.
    Cv(CvArgs),
    /// Generate a synthetic dataset CSV.
    Synth(SynthArgs),
    /// Rasterize the decision regions of a 2-D model to a PGM image.
    Raster(RasterArgs),
    /// Measure training and batch inference times.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Labeled CSV training data.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or 0-based index.
    #[arg(long)]
    label_col: LabelColumn,
    /// Requested voxels per class.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_EM_CYCLES)]
    em_cycles: usize,
    #[arg(long, default_value_t = DEFAULT_CORRECTION_CYCLES)]
    correction_cycles: usize,
    /// Where to write the trained model (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Recorded in the report; the training pipeline itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct PredictArgs {
    /// Trained model (JSON).
    #[arg(long)]
    model: PathBuf,
    /// CSV of feature rows. All columns are features unless --label-col names
    /// a column to skip.
    #[arg(long)]
    data: PathBuf,
    /// Optional column to exclude from the features (by name or index).
    #[arg(long)]
    label_col: Option<LabelColumn>,
    /// Where to write predictions (CSV, one label name per row).
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Trained model (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Labeled CSV test data.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or 0-based index [default: last column].
    #[arg(long)]
    label_col: Option<LabelColumn>,
}

#[derive(clap::Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_col: LabelColumn,
    /// Comma-separated k values, e.g. 3,10,17.
    #[arg(long, value_delimiter = ',', required = true)]
    k_grid: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = DEFAULT_EM_CYCLES)]
    em_cycles: usize,
    #[arg(long, default_value_t = DEFAULT_CORRECTION_CYCLES)]
    correction_cycles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    Moons,
    Circles,
    Gaussians,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Instance count.
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Gaussian noise standard deviation (moons, circles).
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Inner/outer radius ratio in (0, 1) (circles).
    #[arg(long, default_value_t = 0.5)]
    factor: f64,
    /// Class count (gaussians).
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Blob standard deviation (gaussians).
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the dataset CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct RasterArgs {
    /// Trained 2-D model (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Rectangle to rasterize: x0,y0,x1,y1.
    #[arg(long, allow_hyphen_values = true)]
    bounds: String,
    /// Pixels per axis.
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    /// Where to write the PGM image; a JSON sidecar lands at <out>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_col: LabelColumn,
    #[arg(long)]
    k: usize,
    /// Timing repetitions.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Minimum duration per repetition, in milliseconds.
    #[arg(long, default_value_t = 1000)]
    min_ms: u64,
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => println!("{report}"),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

fn to_json<T: Serialize>(report: &T) -> String {
    serde_json::to_string(report).expect("report serialization cannot fail")
}

fn run(command: Command) -> Result<String, Error> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Raster(args) => cmd_raster(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// For each dataset class id, the corresponding model class id.
///
/// Models trained by this CLI carry label names, so datasets loaded from a
/// different file (with a different first-appearance order) still line up.
/// A model without names requires the dataset ids to fit its class range.
fn dataset_to_model_classes(data: &Dataset, model: &Model) -> Result<Vec<usize>, Error> {
    match model.label_names() {
        Some(names) => data
            .class_names()
            .iter()
            .map(|n| {
                names.iter().position(|m| m == n).ok_or_else(|| {
                    Error::InvalidParam(format!("class {n:?} is not known to the model"))
                })
            })
            .collect(),
        None => {
            if data.n_classes() > model.n_classes() {
                return Err(Error::InvalidParam(format!(
                    "data holds {} classes but the unnamed model only {}",
                    data.n_classes(),
                    model.n_classes()
                )));
            }
            Ok((0..data.n_classes()).collect())
        }
    }
}

#[derive(Serialize)]
struct TrainReport<'a> {
    command: &'static str,
    data: String,
    n_instances: usize,
    n_features: usize,
    n_classes: usize,
    k: usize,
    em_cycles: usize,
    correction_cycles: usize,
    seed: u64,
    train_accuracy: f64,
    accuracy_after_voxelize: f64,
    accuracy_after_em: f64,
    n_generators: usize,
    generators_per_label: &'a [usize],
    model_path: String,
}

fn cmd_train(args: TrainArgs) -> Result<String, Error> {
    let data = dataset::load_csv(&args.data, &args.label_col)?;
    let hp = Hyperparams {
        k: args.k,
        em_cycles: args.em_cycles,
        correction_cycles: args.correction_cycles,
    };
    let (model, trace) = fit(data.features(), data.labels(), &hp)?;
    let model = model.with_label_names(data.class_names().to_vec())?;
    model_io::save_model(&model, &args.out)?;
    let label_counts = model.label_counts();
    Ok(to_json(&TrainReport {
        command: "train",
        data: args.data.display().to_string(),
        n_instances: data.n_instances(),
        n_features: data.n_features(),
        n_classes: data.n_classes(),
        k: args.k,
        em_cycles: args.em_cycles,
        correction_cycles: args.correction_cycles,
        seed: args.seed,
        train_accuracy: trace.best_accuracy,
        accuracy_after_voxelize: trace.accuracy_after_voxelize,
        accuracy_after_em: trace.accuracy_after_em,
        n_generators: model.generators().len(),
        generators_per_label: &label_counts,
        model_path: args.out.display().to_string(),
    }))
}

/// Reads a CSV of numeric feature rows, skipping `skip_col` when given.
/// A first row whose feature cells are not all numeric is taken as a header.
fn load_features_csv(path: &Path, skip_col: Option<&LabelColumn>) -> Result<Matrix, Error> {
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
        records.push(rec.map_err(|e| Error::csv(&display, i + 1, e.to_string()))?);
    }
    if records.is_empty() {
        return Err(Error::csv(&display, 1, "file contains no rows"));
    }
    let width = records[0].len();
    let numeric = |cell: &str| cell.trim().parse::<f64>().is_ok();

    let skip_idx = match skip_col {
        None => None,
        Some(LabelColumn::Index(i)) => {
            if *i >= width {
                return Err(Error::csv(
                    &display,
                    1,
                    format!("label column index {i} out of range for {width} columns"),
                ));
            }
            Some(*i)
        }
        Some(LabelColumn::Name(name)) => Some(
            records[0]
                .iter()
                .position(|c| c.trim() == name)
                .ok_or_else(|| {
                    Error::csv(&display, 1, format!("label column {name:?} not found in header"))
                })?,
        ),
    };
    let has_header = matches!(skip_col, Some(LabelColumn::Name(_)))
        || records[0]
            .iter()
            .enumerate()
            .any(|(j, cell)| Some(j) != skip_idx && !numeric(cell));

    let data_rows = &records[has_header as usize..];
    if data_rows.is_empty() {
        return Err(Error::csv(&display, 1, "fewer than 1 data instance"));
    }
    let m = width - usize::from(skip_idx.is_some());
    let mut values = Vec::with_capacity(data_rows.len() * m);
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
            if Some(j) == skip_idx {
                continue;
            }
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
            values.push(v);
        }
    }
    Ok(Matrix::from_vec(data_rows.len(), m, values))
}

#[derive(Serialize)]
struct PredictReport {
    command: &'static str,
    model: String,
    data: String,
    n_predictions: usize,
    out: String,
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_predict(args: PredictArgs) -> Result<String, Error> {
    let model = model_io::load_model(&args.model)?;
    let features = load_features_csv(&args.data, args.label_col.as_ref())?;
    let predictions = classify_batch(&features, &model)?;
    let mut out = String::from("prediction\n");
    for p in &predictions {
        match model.label_names() {
            Some(names) => {
                let _ = writeln!(out, "{}", csv_field(&names[*p]));
            }
            None => {
                let _ = writeln!(out, "{p}");
            }
        }
    }
    std::fs::write(&args.out, out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    Ok(to_json(&PredictReport {
        command: "predict",
        model: args.model.display().to_string(),
        data: args.data.display().to_string(),
        n_predictions: predictions.len(),
        out: args.out.display().to_string(),
    }))
}

#[derive(Serialize)]
struct EvaluateReport {
    command: &'static str,
    model: String,
    data: String,
    n_instances: usize,
    #[serde(flatten)]
    report: EvalReport,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<String, Error> {
    let model = model_io::load_model(&args.model)?;
    let label_col = args
        .label_col
        .unwrap_or(LabelColumn::Index(last_column_index(&args.data)?));
    let data = dataset::load_csv(&args.data, &label_col)?;
    let class_map = dataset_to_model_classes(&data, &model)?;
    let y_true: Vec<usize> = data.labels().iter().map(|&l| class_map[l]).collect();
    let y_pred = classify_batch(data.features(), &model)?;
    let report = eval::evaluate(&y_true, &y_pred, model.n_classes())?;
    Ok(to_json(&EvaluateReport {
        command: "evaluate",
        model: args.model.display().to_string(),
        data: args.data.display().to_string(),
        n_instances: data.n_instances(),
        report,
    }))
}

/// 0-based index of the last column in the file's first row.
fn last_column_index(path: &Path) -> Result<usize, Error> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&display, io),
            other => Error::csv(&display, 0, format!("{other:?}")),
        })?;
    let mut first = csv::StringRecord::new();
    let got = reader
        .read_record(&mut first)
        .map_err(|e| Error::csv(&display, 1, e.to_string()))?;
    if !got || first.is_empty() {
        return Err(Error::csv(&display, 1, "file contains no rows"));
    }
    Ok(first.len() - 1)
}

#[derive(Serialize)]
struct CvReport {
    command: &'static str,
    data: String,
    k_grid: Vec<usize>,
    folds: usize,
    em_cycles: usize,
    correction_cycles: usize,
    seed: u64,
    best_k: usize,
    scores: Vec<KScoreReport>,
}

#[derive(Serialize)]
struct KScoreReport {
    k: usize,
    mean_accuracy: f64,
}

impl From<&KScore> for KScoreReport {
    fn from(s: &KScore) -> Self {
        Self {
            k: s.k,
            mean_accuracy: s.mean_accuracy,
        }
    }
}

fn cmd_cv(args: CvArgs) -> Result<String, Error> {
    let data = dataset::load_csv(&args.data, &args.label_col)?;
    let outcome = cross_validate_k(
        data.features(),
        data.labels(),
        &args.k_grid,
        args.folds,
        args.em_cycles,
        args.correction_cycles,
        args.seed,
    )?;
    Ok(to_json(&CvReport {
        command: "cv",
        data: args.data.display().to_string(),
        k_grid: args.k_grid,
        folds: args.folds,
        em_cycles: args.em_cycles,
        correction_cycles: args.correction_cycles,
        seed: args.seed,
        best_k: outcome.best_k,
        scores: outcome.scores.iter().map(KScoreReport::from).collect(),
    }))
}

#[derive(Serialize)]
struct SynthReport {
    command: &'static str,
    kind: String,
    n: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spread: Option<f64>,
    class_counts: Vec<usize>,
    out: String,
}

fn cmd_synth(args: SynthArgs) -> Result<String, Error> {
    let (data, report) = match args.kind {
        SynthKind::Moons => {
            let d = dataset::make_moons(args.n, args.noise, args.seed)?;
            let counts = d.class_counts();
            (
                d,
                SynthReport {
                    command: "synth",
                    kind: "moons".into(),
                    n: args.n,
                    seed: args.seed,
                    noise: Some(args.noise),
                    factor: None,
                    classes: None,
                    spread: None,
                    class_counts: counts,
                    out: args.out.display().to_string(),
                },
            )
        }
        SynthKind::Circles => {
            let d = dataset::make_circles(args.n, args.noise, args.factor, args.seed)?;
            let counts = d.class_counts();
            (
                d,
                SynthReport {
                    command: "synth",
                    kind: "circles".into(),
                    n: args.n,
                    seed: args.seed,
                    noise: Some(args.noise),
                    factor: Some(args.factor),
                    classes: None,
                    spread: None,
                    class_counts: counts,
                    out: args.out.display().to_string(),
                },
            )
        }
        SynthKind::Gaussians => {
            let d = dataset::make_gaussians(args.n, args.classes, args.spread, args.seed)?;
            let counts = d.class_counts();
            (
                d,
                SynthReport {
                    command: "synth",
                    kind: "gaussians".into(),
                    n: args.n,
                    seed: args.seed,
                    noise: None,
                    factor: None,
                    classes: Some(args.classes),
                    spread: Some(args.spread),
                    class_counts: counts,
                    out: args.out.display().to_string(),
                },
            )
        }
    };
    dataset::save_csv(&data, &args.out)?;
    Ok(to_json(&report))
}

#[derive(Serialize)]
struct RasterReport {
    command: &'static str,
    model: String,
    bounds: RasterBounds,
    resolution: usize,
    out: String,
    sidecar: String,
}

#[derive(Serialize)]
struct RasterSidecar {
    bounds: RasterBounds,
    resolution: usize,
    /// Row 0 of the image is the top of the bounds (largest y); pixel values
    /// are class ids.
    row_order: &'static str,
}

fn parse_bounds(text: &str) -> Result<RasterBounds, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidParam(format!(
            "--bounds needs x0,y0,x1,y1, got {text:?}"
        )));
    }
    let mut vals = [0.0f64; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParam(format!("--bounds component {p:?} is not a number")))?;
    }
    RasterBounds::new(vals[0], vals[1], vals[2], vals[3])
}

fn cmd_raster(args: RasterArgs) -> Result<String, Error> {
    let model = model_io::load_model(&args.model)?;
    let bounds = parse_bounds(&args.bounds)?;
    let grid = eval::raster_regions(&model, &bounds, args.resolution)?;
    eval::write_pgm(
        &grid,
        args.resolution,
        model.n_classes().saturating_sub(1),
        &args.out,
    )?;
    let sidecar_path = format!("{}.json", args.out.display());
    let sidecar = RasterSidecar {
        bounds,
        resolution: args.resolution,
        row_order: "top-to-bottom",
    };
    std::fs::write(&sidecar_path, format!("{}\n", to_json(&sidecar)))
        .map_err(|e| Error::io(&sidecar_path, e))?;
    Ok(to_json(&RasterReport {
        command: "raster",
        model: args.model.display().to_string(),
        bounds,
        resolution: args.resolution,
        out: args.out.display().to_string(),
        sidecar: sidecar_path,
    }))
}

#[derive(Serialize)]
struct BenchReport {
    command: &'static str,
    data: String,
    k: usize,
    reps: usize,
    min_ms: u64,
    n_instances: usize,
    n_generators: usize,
    train_accuracy: f64,
    train_time_ms: TimingStats,
    infer_time_ms: TimingStats,
}

fn cmd_bench(args: BenchArgs) -> Result<String, Error> {
    let data = dataset::load_csv(&args.data, &args.label_col)?;
    let hp = Hyperparams::new(args.k);

    // Train once for the reported model statistics, then time fit alone.
    let (model, trace) = fit(data.features(), data.labels(), &hp)?;
    let train_time = eval::time_run(
        || {
            let _ = fit(data.features(), data.labels(), &hp).expect("timed fit");
        },
        args.min_ms,
        args.reps,
    )?;
    let infer_time = eval::time_run(
        || {
            let _ = classify_batch(data.features(), &model).expect("timed inference");
        },
        args.min_ms,
        args.reps,
    )?;
    Ok(to_json(&BenchReport {
        command: "bench",
        data: args.data.display().to_string(),
        k: args.k,
        reps: args.reps,
        min_ms: args.min_ms,
        n_instances: data.n_instances(),
        n_generators: model.generators().len(),
        train_accuracy: trace.best_accuracy,
        train_time_ms: train_time,
        infer_time_ms: infer_time,
    }))
}
