//! Super-k: a piecewise linear classifier built on labeled Voronoi
//! tessellations.
//!
//! Training voxelizes each class of the data into initial generator points,
//! redistributes them with a simple EM loop, merges all classes into one
//! tessellation relabeled by plurality vote, and finally nudges generators
//! away from their false-positive instances, keeping the best configuration
//! seen. Classification scores a point against every generator with
//! `g_i(x) = x . p_i - 0.5 * ||p_i||^2` and returns the label of the argmax,
//! which coincides with the Euclidean-nearest generator.
//!
//! ```
//! use superk::dataset::make_moons;
//! use superk::tessellation::classify_batch;
//! use superk::training::{fit, Hyperparams};
//!
//! let data = make_moons(200, 0.1, 0).unwrap();
//! let (model, trace) = fit(data.features(), data.labels(), &Hyperparams::new(10)).unwrap();
//! let predictions = classify_batch(data.features(), &model).unwrap();
//! assert_eq!(predictions.len(), 200);
//! assert!(trace.best_accuracy > 0.9);
//! ```

pub mod dataset;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod model_io;
pub mod tessellation;
pub mod training;
pub mod voxelize;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use tessellation::{Model, MODEL_FORMAT_VERSION};
