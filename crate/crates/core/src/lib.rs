//! Real concept-drift detection for chunked data streams with a small
//! labeling budget.
//!
//! Two incremental classifiers are kept side by side: one frozen at the
//! previous chunk, one updated with a few oracle labels plus hard pseudo
//! labels. When the labeling rule changes, the oracle labels contradict what
//! the model has learned and the two models start to disagree. The
//! disagreement is measured as the mean per-class cosine similarity of their
//! confidence matrices and compared against a sliding mean − k·std threshold.
//!
//! Module map:
//!
//! - [`stream`]: samples, chunks, confidence matrices and chunk streams (in
//!   memory or CSV-backed).
//! - [`classifiers`]: Gaussian naive Bayes and a random-feature recursive
//!   least-squares learner behind one incremental contract.
//! - [`similarity`]: the per-class cosine similarity between two models.
//! - [`threshold`]: the deviation-adaptive threshold window.
//! - [`detector`]: the detection loop itself.
//! - [`datagen`]: seeded synthetic streams with label-reversal drift.
//! - [`metrics`]: detection matching and accuracy aggregation.
//! - [`experiment`]: the multi-seed runner behind the `cadm` binary.

pub mod classifiers;
pub mod datagen;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod similarity;
pub mod stream;
pub mod threshold;

pub use classifiers::{Classifier, ClassifierKind, GaussianNb, IncrementalClassifier, RandomFeatureRls, RlsParams};
pub use datagen::{BoundarySpec, DriftSchedule, Shape, SyntheticStream};
pub use detector::{CadmConfig, CadmState, DriftReport, LabelOracle, StepTrace};
pub use error::{Error, Result};
pub use metrics::DetectionSummary;
pub use similarity::sim;
pub use stream::{Chunk, ChunkStream, ProbMatrix, Sample, StreamConfig};
pub use threshold::{SimilarityWindow, StdKind};
