//! Python bindings for `cadm`.
//!
//! Feature matrices are lists of rows, probability matrices come back as
//! one list per class (the rows of the confidence matrix).

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cadm::datagen::{generate_stream as generate, BoundarySpec, DriftSchedule, Shape};
use cadm::detector::{run, CadmConfig, DriftReport as CoreReport, StepTrace};
use cadm::metrics;
use cadm::stream::{ProbMatrix, Sample, StreamConfig};
use cadm::threshold::StdKind;
use cadm::{Classifier, ClassifierKind, IncrementalClassifier, RlsParams};

fn to_py(e: cadm::Error) -> PyErr {
    match e {
        cadm::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        cadm::Error::State(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn labeled(x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<Vec<Sample>> {
    if x.len() != y.len() {
        return Err(PyValueError::new_err(format!("{} rows but {} labels", x.len(), y.len())));
    }
    Ok(x.into_iter().zip(y).map(|(f, l)| Sample::labeled(f, l)).collect())
}

fn unlabeled(x: Vec<Vec<f64>>) -> Vec<Sample> {
    x.into_iter().map(Sample::unlabeled).collect()
}

fn rows(p: &ProbMatrix) -> Vec<Vec<f64>> {
    p.rows().map(<[f64]>::to_vec).collect()
}

macro_rules! classifier_methods {
    ($ty:ident, $($ctor:tt)*) => {
        #[pymethods]
        impl $ty {
            $($ctor)*

            #[getter]
            fn classes(&self) -> usize {
                self.inner.classes()
            }

            #[getter]
            fn dimension(&self) -> usize {
                self.inner.dimension()
            }

            #[getter]
            fn is_fitted(&self) -> bool {
                self.inner.is_fitted()
            }

            /// Refit from scratch on `x`, `y`.
            fn fit(&mut self, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<()> {
                self.inner.fit(&labeled(x, y)?).map_err(to_py)
            }

            /// Fold `x`, `y` into the current model.
            fn partial_fit(&mut self, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<()> {
                self.inner.partial_fit(&labeled(x, y)?).map_err(to_py)
            }

            /// Class-by-sample confidences, one list per class.
            fn predict_prob(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
                self.inner.predict_prob(&unlabeled(x)).map(|p| rows(&p)).map_err(to_py)
            }

            fn hard_pseudo_label(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
                self.inner.hard_pseudo_label(&unlabeled(x)).map_err(to_py)
            }

            /// Independent copy of the current state.
            fn snapshot(&self) -> Self {
                Self {
                    inner: self.inner.snapshot(),
                }
            }
        }
    };
}

#[pyclass(name = "GaussianNB", module = "cadm_py")]
struct PyGaussianNb {
    inner: Classifier,
}

classifier_methods!(PyGaussianNb,
    #[new]
    fn new(dimension: usize, classes: usize) -> PyResult<Self> {
        let inner = ClassifierKind::GaussianNb.build(dimension, classes).map_err(to_py)?;
        Ok(Self { inner })
    }
);

#[pyclass(name = "RandomFeatureRLS", module = "cadm_py")]
struct PyRls {
    inner: Classifier,
}

classifier_methods!(PyRls,
    #[new]
    #[pyo3(signature = (dimension, classes, hidden = 64, ridge = 1e-3, seed = 0))]
    fn new(dimension: usize, classes: usize, hidden: usize, ridge: f64, seed: u64) -> PyResult<Self> {
        let kind = ClassifierKind::Rls(RlsParams { hidden, ridge, seed });
        let inner = kind.build(dimension, classes).map_err(to_py)?;
        Ok(Self { inner })
    }
);

/// Mean per-class cosine between two confidence matrices given as rows.
#[pyfunction]
fn sim(prev: Vec<Vec<f64>>, curr: Vec<Vec<f64>>) -> PyResult<f64> {
    cadm::similarity::sim_rows(&prev, &curr).map_err(to_py)
}

#[pyclass(name = "SimilarityWindow", module = "cadm_py")]
struct PyWindow {
    inner: cadm::SimilarityWindow,
}

#[pymethods]
impl PyWindow {
    #[new]
    #[pyo3(signature = (capacity = 10, k = 2.0, sample_std = false))]
    fn new(capacity: usize, k: f64, sample_std: bool) -> PyResult<Self> {
        let kind = if sample_std { StdKind::Sample } else { StdKind::Population };
        let inner = cadm::SimilarityWindow::with_std(capacity, k, kind).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Push a similarity value and return the new threshold.
    fn update(&mut self, value: f64) -> f64 {
        self.inner.update(value)
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn shape(name: &str) -> PyResult<Shape> {
    name.parse().map_err(to_py)
}

fn schedule(drift_every: usize, chunks: usize) -> PyResult<DriftSchedule> {
    match drift_every {
        0 => Ok(DriftSchedule::none()),
        p => DriftSchedule::every(p, chunks).map_err(to_py),
    }
}

/// Generate a labeled synthetic stream as `(x, y)`.
#[pyfunction]
#[pyo3(signature = (dataset = "line", chunks = 500, chunk_size = 200, drift_every = 25, seed = 0))]
fn generate_stream(
    dataset: &str,
    chunks: usize,
    chunk_size: usize,
    drift_every: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
    let config = StreamConfig {
        dimension: 2,
        classes: 2,
        chunk_size,
        chunks,
        seed,
    };
    let stream = generate(BoundarySpec::new(shape(dataset)?), schedule(drift_every, chunks)?, config).map_err(to_py)?;
    let samples = stream.collect_samples();
    let y = samples.iter().map(|s| s.label.unwrap_or(0)).collect();
    Ok((samples.into_iter().map(|s| s.features).collect(), y))
}

#[pyclass(name = "DriftReport", module = "cadm_py", frozen)]
struct PyReport {
    inner: CoreReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn drifts(&self) -> Vec<usize> {
        self.inner.drifts.clone()
    }

    #[getter]
    fn accuracy(&self) -> f64 {
        self.inner.accuracy
    }

    #[getter]
    fn total_labels(&self) -> usize {
        self.inner.total_labels()
    }

    /// One dict per processed chunk.
    #[getter]
    fn traces<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner.traces.iter().map(|t| trace_dict(py, t)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "DriftReport(drifts={:?}, accuracy={:.4}, chunks={})",
            self.inner.drifts,
            self.inner.accuracy,
            self.inner.traces.len() + 1
        )
    }
}

fn trace_dict<'py>(py: Python<'py>, t: &StepTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("chunk_index", t.chunk_index)?;
    d.set_item("cosine", t.cosine)?;
    d.set_item("threshold", t.threshold)?;
    d.set_item("drift", t.drift)?;
    d.set_item("labels_spent", t.labels_spent)?;
    d.set_item("accuracy", t.accuracy())?;
    Ok(d)
}

/// Run the detector over a synthetic stream.
#[pyfunction]
#[pyo3(signature = (
    dataset = "line", classifier = "gnb", seed = 0, chunks = 500, chunk_size = 200,
    drift_every = 25, label_ratio = 0.2, window = 10, k = 2.0, detect = true
))]
#[allow(clippy::too_many_arguments)]
fn run_cadm(
    py: Python<'_>,
    dataset: &str,
    classifier: &str,
    seed: u64,
    chunks: usize,
    chunk_size: usize,
    drift_every: usize,
    label_ratio: f64,
    window: usize,
    k: f64,
    detect: bool,
) -> PyResult<PyReport> {
    let classifier = match classifier {
        "gnb" => ClassifierKind::GaussianNb,
        "rls" => ClassifierKind::Rls(RlsParams { seed, ..RlsParams::default() }),
        other => return Err(PyValueError::new_err(format!("unknown classifier {other:?}"))),
    };
    let config = CadmConfig {
        label_ratio,
        window,
        k,
        seed,
        classifier,
        detect,
        ..CadmConfig::default()
    };
    let stream_config = StreamConfig {
        dimension: 2,
        classes: 2,
        chunk_size,
        chunks,
        seed,
    };
    let mut stream =
        generate(BoundarySpec::new(shape(dataset)?), schedule(drift_every, chunks)?, stream_config).map_err(to_py)?;
    let oracle = stream.oracle();
    let inner = py.detach(|| run(&mut stream, config, &oracle)).map_err(to_py)?;
    Ok(PyReport { inner })
}

/// Match detections to true drifts; returns delays, false alarms and misses.
#[pyfunction]
#[pyo3(signature = (true_drifts, detections, tolerance = 3))]
fn match_detections<'py>(
    py: Python<'py>,
    true_drifts: Vec<usize>,
    detections: Vec<usize>,
    tolerance: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let s = metrics::match_detections(&true_drifts, &detections, tolerance);
    let d = PyDict::new(py);
    d.set_item("delays", s.delays())?;
    d.set_item("false_alarms", s.false_alarms.clone())?;
    d.set_item("false_negatives", s.false_negatives())?;
    d.set_item("detection_rate", s.detection_rate())?;
    Ok(d)
}

#[pymodule]
pub fn cadm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussianNb>()?;
    m.add_class::<PyRls>()?;
    m.add_class::<PyWindow>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(sim, m)?)?;
    m.add_function(wrap_pyfunction!(generate_stream, m)?)?;
    m.add_function(wrap_pyfunction!(run_cadm, m)?)?;
    m.add_function(wrap_pyfunction!(match_detections, m)?)?;
    Ok(())
}
