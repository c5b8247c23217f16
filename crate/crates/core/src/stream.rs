//! Samples, chunks, confidence matrices and the chunk-stream abstraction.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column sums of a [`ProbMatrix`] must be within this of 1.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-9;

/// A feature vector with an optional dense class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Option<usize>,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: Option<usize>) -> Self {
        Self { features, label }
    }

    pub fn labeled(features: Vec<f64>, label: usize) -> Self {
        Self::new(features, Some(label))
    }

    pub fn unlabeled(features: Vec<f64>) -> Self {
        Self::new(features, None)
    }

    pub fn dimension(&self) -> usize {
        self.features.len()
    }

    /// Same features with the label removed.
    pub fn without_label(&self) -> Self {
        Self::unlabeled(self.features.clone())
    }
}

/// An ordered batch of samples with a 1-based stream position.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub index: usize,
    pub samples: Vec<Sample>,
}

impl Chunk {
    /// Builds a chunk, checking that it is nonempty and dimensionally uniform.
    pub fn new(index: usize, samples: Vec<Sample>) -> Result<Self> {
        if index == 0 {
            return Err(Error::invalid("chunk index is 1-based"));
        }
        let Some(first) = samples.first() else {
            return Err(Error::invalid("chunk must contain at least one sample"));
        };
        let d = first.dimension();
        if let Some(bad) = samples.iter().position(|s| s.dimension() != d) {
            return Err(Error::invalid(format!(
                "sample {bad} has dimension {} but chunk dimension is {d}",
                samples[bad].dimension()
            )));
        }
        Ok(Self { index, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.samples.first().map_or(0, Sample::dimension)
    }
}

/// An m×n class-confidence matrix: row i holds class i's confidences over
/// the n samples, column j is the confidence vector of sample j.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    classes: usize,
    samples: usize,
    // row-major, classes × samples
    values: Vec<f64>,
}

impl ProbMatrix {
    /// Builds from row-major values, validating range and column sums.
    pub fn from_rows(classes: usize, samples: usize, values: Vec<f64>) -> Result<Self> {
        if classes == 0 || samples == 0 {
            return Err(Error::invalid("probability matrix must be nonempty"));
        }
        if values.len() != classes * samples {
            return Err(Error::invalid(format!(
                "expected {} values for a {classes}x{samples} matrix, got {}",
                classes * samples,
                values.len()
            )));
        }
        let m = Self {
            classes,
            samples,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds from one confidence vector per sample.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::invalid("probability matrix must be nonempty"));
        };
        let classes = first.len();
        let samples = columns.len();
        let mut values = vec![0.0; classes * samples];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != classes {
                return Err(Error::invalid(format!(
                    "column {j} has {} entries, expected {classes}",
                    col.len()
                )));
            }
            for (i, &p) in col.iter().enumerate() {
                values[i * samples + j] = p;
            }
        }
        Self::from_rows(classes, samples, values)
    }

    /// Entries in [0, 1] and every column summing to 1.
    pub fn validate(&self) -> Result<()> {
        if let Some(pos) = self
            .values
            .iter()
            .position(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::invalid(format!(
                "confidence {} at ({}, {}) is outside [0, 1]",
                self.values[pos],
                pos / self.samples,
                pos % self.samples
            )));
        }
        for j in 0..self.samples {
            let sum: f64 = (0..self.classes).map(|i| self.get(i, j)).sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
                return Err(Error::invalid(format!(
                    "column {j} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn get(&self, class: usize, sample: usize) -> f64 {
        self.values[class * self.samples + sample]
    }

    /// Confidences of one class over all samples.
    pub fn row(&self, class: usize) -> &[f64] {
        &self.values[class * self.samples..(class + 1) * self.samples]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.samples)
    }

    /// Confidence vector of one sample.
    pub fn column(&self, sample: usize) -> Vec<f64> {
        (0..self.classes).map(|i| self.get(i, sample)).collect()
    }

    /// Most confident class for a sample; ties go to the lowest index.
    pub fn argmax(&self, sample: usize) -> usize {
        argmax(&self.column(sample))
    }

    pub fn argmax_all(&self) -> Vec<usize> {
        (0..self.samples).map(|j| self.argmax(j)).collect()
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Shape of a stream: feature dimension, class count, chunk geometry, seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub dimension: usize,
    pub classes: usize,
    pub chunk_size: usize,
    pub chunks: usize,
    pub seed: u64,
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.chunk_size == 0 || self.chunks == 0 {
            return Err(Error::invalid(
                "dimension, chunk size and chunk count must be positive",
            ));
        }
        if self.classes < 2 {
            return Err(Error::invalid(format!(
                "at least 2 classes required, got {}",
                self.classes
            )));
        }
        Ok(())
    }
}

/// A source of chunks consumed in order, exhausted by returning `None`.
pub trait ChunkStream {
    fn next_chunk(&mut self) -> Option<Chunk>;
    fn dimension(&self) -> usize;
    fn classes(&self) -> usize;
}

/// A stream over chunks already held in memory.
#[derive(Debug, Clone)]
pub struct VecStream {
    chunks: std::vec::IntoIter<Chunk>,
    dimension: usize,
    classes: usize,
}

impl VecStream {
    pub fn new(chunks: Vec<Chunk>, dimension: usize, classes: usize) -> Self {
        Self {
            chunks: chunks.into_iter(),
            dimension,
            classes,
        }
    }

    /// Cuts samples into consecutive chunks of `chunk_size`, numbered from 1.
    /// A trailing partial chunk is dropped.
    pub fn from_samples(
        samples: Vec<Sample>,
        chunk_size: usize,
        dimension: usize,
        classes: usize,
    ) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::invalid("chunk size must be positive"));
        }
        let full = samples.len() / chunk_size;
        let mut it = samples.into_iter();
        let mut chunks = Vec::with_capacity(full);
        for index in 1..=full {
            chunks.push(Chunk::new(index, it.by_ref().take(chunk_size).collect())?);
        }
        Ok(Self::new(chunks, dimension, classes))
    }
}

impl ChunkStream for VecStream {
    fn next_chunk(&mut self) -> Option<Chunk> {
        self.chunks.next()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn classes(&self) -> usize {
        self.classes
    }
}

/// Samples loaded from a `f0,…,f{d−1}[,label]` CSV file.
#[derive(Debug, Clone)]
pub struct CsvData {
    pub dimension: usize,
    pub classes: usize,
    pub samples: Vec<Sample>,
    /// Original label strings, indexed by dense class id.
    pub label_names: Vec<String>,
}

impl CsvData {
    pub fn has_labels(&self) -> bool {
        self.samples.iter().all(|s| s.label.is_some())
    }

    pub fn into_stream(self, chunk_size: usize) -> Result<VecStream> {
        VecStream::from_samples(self.samples, chunk_size, self.dimension, self.classes)
    }
}

/// Reads a stream CSV. Integer labels are used as class ids directly; any
/// other label strings are mapped to ids in sorted order.
pub fn read_csv(path: &Path) -> Result<CsvData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let has_label = names.last() == Some(&"label");
    let dimension = names.len() - usize::from(has_label);
    if dimension == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "header declares no feature columns".into(),
        });
    }
    for (i, name) in names.iter().take(dimension).enumerate() {
        if *name != format!("f{i}") {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected column f{i}, found {name:?}"),
            });
        }
    }

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .take(dimension)
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("non-finite feature {bad}"),
            });
        }
        features.push(row);
        if has_label {
            raw_labels.push((line, record[dimension].trim().to_string()));
        }
    }

    let (labels, label_names) = if has_label {
        map_labels(&raw_labels)?
    } else {
        (vec![None; features.len()], Vec::new())
    };
    let classes = label_names.len().max(2);
    let samples = features
        .into_iter()
        .zip(labels)
        .map(|(f, l)| Sample::new(f, l))
        .collect();
    Ok(CsvData {
        dimension,
        classes,
        samples,
        label_names,
    })
}

fn map_labels(raw: &[(u64, String)]) -> Result<(Vec<Option<usize>>, Vec<String>)> {
    if let Some((line, _)) = raw.iter().find(|(_, s)| s.is_empty()) {
        return Err(Error::Parse {
            line: *line,
            message: "empty label".into(),
        });
    }
    let numeric: Option<Vec<usize>> = raw.iter().map(|(_, s)| s.parse().ok()).collect();
    if let Some(ids) = numeric {
        let m = ids.iter().max().map_or(0, |&x| x + 1);
        let names = (0..m).map(|i| i.to_string()).collect();
        return Ok((ids.into_iter().map(Some).collect(), names));
    }
    let mut ids: BTreeMap<&str, usize> = raw.iter().map(|(_, s)| (s.as_str(), 0)).collect();
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    let names = ids.keys().map(|s| s.to_string()).collect();
    let labels = raw.iter().map(|(_, s)| Some(ids[s.as_str()])).collect();
    Ok((labels, names))
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Writes samples as a stream CSV. Features use the shortest representation
/// that parses back to the same `f64`, so a written stream replays exactly.
pub fn write_csv(path: &Path, samples: &[Sample], dimension: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv_to(&mut w, samples, dimension).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(w: &mut W, samples: &[Sample], dimension: usize) -> std::io::Result<()> {
    let with_label = samples.iter().all(|s| s.label.is_some());
    let mut header: Vec<String> = (0..dimension).map(|i| format!("f{i}")).collect();
    if with_label {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let mut fields: Vec<String> = s.features.iter().map(|v| format!("{v:?}")).collect();
        if let (true, Some(l)) = (with_label, s.label) {
            fields.push(l.to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
