//! Multi-seed experiment runner and its on-disk outputs.
//!
//! For every seed the runner writes `trace_seed<seed>.csv`:
//!
//! ```text
//! # schema: cadm-trace/1
//! chunk_index,cosine,threshold,drift_flag,labels_spent,chunk_accuracy
//! 2,1,1,0,40,0.985
//! ```
//!
//! then one `detections.csv` (`seed,detected_chunk,matched_drift,delay`,
//! the last two empty for false alarms) and one `summary.json` whose
//! top-level keys are `schema`, `dataset`, `classifier`, `parameters`,
//! `runs` and `aggregate`. Floats in CSV files carry 9 significant digits;
//! JSON numbers are unrounded. Seeds run in parallel but files are written
//! in seed order, so reruns are byte-identical.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::classifiers::{ClassifierKind, RlsParams};
use crate::datagen::{generate_stream, BoundarySpec, DriftSchedule, Shape, SyntheticOracle};
use crate::detector::{run, CadmConfig, DriftReport, SampleLabels};
use crate::error::{Error, Result};
use crate::metrics::{match_detections, mean_std, DetectionSummary, DEFAULT_TOLERANCE};
use crate::stream::{read_csv, write_csv, CsvData, StreamConfig};
use crate::threshold::StdKind;

pub const TRACE_SCHEMA: &str = "cadm-trace/1";
pub const SUMMARY_SCHEMA: &str = "cadm-summary/1";
pub const TRACE_HEADER: &str = "chunk_index,cosine,threshold,drift_flag,labels_spent,chunk_accuracy";
pub const DETECTIONS_HEADER: &str = "seed,detected_chunk,matched_drift,delay";

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Synthetic(Shape),
    Csv(PathBuf),
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dataset::Synthetic(s) => write!(f, "{s}"),
            Dataset::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("csv:") {
            Some(path) if !path.is_empty() => Ok(Dataset::Csv(PathBuf::from(path))),
            Some(_) => Err(Error::invalid("csv: dataset needs a path")),
            None => s.parse().map(Dataset::Synthetic),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerName {
    Gnb,
    Rls,
}

impl FromStr for LearnerName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnb" => Ok(LearnerName::Gnb),
            "rls" => Ok(LearnerName::Rls),
            other => Err(Error::invalid(format!("unknown classifier {other:?}"))),
        }
    }
}

impl LearnerName {
    pub fn kind(self, seed: u64) -> ClassifierKind {
        match self {
            LearnerName::Gnb => ClassifierKind::GaussianNb,
            LearnerName::Rls => ClassifierKind::Rls(RlsParams {
                seed,
                ..RlsParams::default()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: Dataset,
    pub classifier: LearnerName,
    pub label_ratio: f64,
    pub window: usize,
    pub k: f64,
    pub std_kind: StdKind,
    pub chunk_size: usize,
    pub chunks: usize,
    /// Synthetic drift period; 0 means a stationary stream. For CSV data it
    /// only defines the ground truth used for scoring detections.
    pub drift_every: usize,
    pub tolerance: usize,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub detect: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            dataset: Dataset::Synthetic(Shape::line()),
            classifier: LearnerName::Gnb,
            label_ratio: 0.2,
            window: 10,
            k: 2.0,
            std_kind: StdKind::Population,
            chunk_size: 200,
            chunks: 500,
            drift_every: 25,
            tolerance: DEFAULT_TOLERANCE,
            seeds: (1..=10).collect(),
            out_dir: PathBuf::from("results"),
            detect: true,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed required"));
        }
        if let Dataset::Csv(p) = &self.dataset {
            if !p.is_file() {
                return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
            }
        }
        self.detector_config(0).validate()?;
        if self.chunk_size == 0 || self.chunks < 2 {
            return Err(Error::invalid("need a positive chunk size and at least 2 chunks"));
        }
        Ok(())
    }

    pub fn detector_config(&self, seed: u64) -> CadmConfig {
        CadmConfig {
            label_ratio: self.label_ratio,
            window: self.window,
            k: self.k,
            std_kind: self.std_kind,
            seed,
            classifier: self.classifier.kind(seed),
            detect: self.detect,
            self_labeling: false,
        }
    }

    pub fn schedule(&self) -> Result<DriftSchedule> {
        match self.drift_every {
            0 => Ok(DriftSchedule::none()),
            p => DriftSchedule::every(p, self.chunks),
        }
    }

    pub fn stream_config(&self, seed: u64) -> StreamConfig {
        StreamConfig {
            dimension: 2,
            classes: 2,
            chunk_size: self.chunk_size,
            chunks: self.chunks,
            seed,
        }
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub report: DriftReport,
    pub summary: DetectionSummary,
}

#[derive(Debug, Clone, Serialize)]
struct RunJson<'a> {
    seed: u64,
    detections: &'a [usize],
    delays: Vec<usize>,
    false_alarms: &'a [usize],
    false_negatives: usize,
    detection_rate: f64,
    accuracy: f64,
    labels_spent: usize,
}

#[derive(Debug, Clone, Serialize)]
struct AggregateJson {
    accuracy_mean: f64,
    accuracy_std: Option<f64>,
    detection_rate_mean: f64,
    false_alarms_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ParametersJson {
    label_ratio: f64,
    window: usize,
    k: f64,
    std: StdKind,
    chunk_size: usize,
    chunks: usize,
    drift_every: usize,
    tolerance: usize,
    detect: bool,
    seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
struct SummaryJson<'a> {
    schema: &'static str,
    dataset: String,
    classifier: LearnerName,
    parameters: ParametersJson,
    runs: Vec<RunJson<'a>>,
    aggregate: AggregateJson,
}

/// Runs the detector once for a seed.
pub fn run_seed(spec: &ExperimentSpec, seed: u64, csv: Option<&CsvData>) -> Result<SeedRun> {
    let config = spec.detector_config(seed);
    let schedule = spec.schedule()?;
    let report = match (&spec.dataset, csv) {
        (Dataset::Synthetic(shape), _) => {
            let mut stream = generate_stream(BoundarySpec::new(*shape), schedule.clone(), spec.stream_config(seed))?;
            let oracle: SyntheticOracle = stream.oracle();
            run(&mut stream, config, &oracle)?
        }
        (Dataset::Csv(_), Some(data)) => replay_data(data, spec, seed)?,
        (Dataset::Csv(p), None) => replay_data(&read_csv(p)?, spec, seed)?,
    };
    let summary = match_detections(schedule.flips(), &report.drifts, spec.tolerance);
    Ok(SeedRun { seed, report, summary })
}

fn replay_data(data: &CsvData, spec: &ExperimentSpec, seed: u64) -> Result<DriftReport> {
    if !data.has_labels() {
        return Err(Error::invalid("replay needs a label column to serve as the oracle"));
    }
    let mut samples = data.samples.clone();
    samples.truncate(spec.chunks * spec.chunk_size);
    let mut stream = CsvData { samples, ..data.clone() }.into_stream(spec.chunk_size)?;
    run(&mut stream, spec.detector_config(seed), &SampleLabels)
}

/// Runs the detector over a labeled stream CSV, labels served from the file.
pub fn replay(csv_path: &Path, spec: &ExperimentSpec, seed: u64) -> Result<DriftReport> {
    replay_data(&read_csv(csv_path)?, spec, seed)
}

/// Writes a synthetic stream, labels included, to `path`.
pub fn export(shape: Shape, schedule: DriftSchedule, config: StreamConfig, path: &Path) -> Result<()> {
    let samples = generate_stream(BoundarySpec::new(shape), schedule, config)?.collect_samples();
    write_csv(path, &samples, config.dimension)
}

/// Runs every seed and writes traces, detections and the summary.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<SeedRun>> {
    spec.validate()?;
    let csv = match &spec.dataset {
        Dataset::Csv(p) => Some(read_csv(p)?),
        Dataset::Synthetic(_) => None,
    };
    let runs = spec
        .seeds
        .par_iter()
        .map(|&seed| run_seed(spec, seed, csv.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    write_outputs(spec, &runs)?;
    Ok(runs)
}

pub fn trace_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("trace_seed{seed}.csv"))
}

fn write_outputs(spec: &ExperimentSpec, runs: &[SeedRun]) -> Result<()> {
    let dir = &spec.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for r in runs {
        write_file(&trace_path(dir, r.seed), &trace_csv(&r.report))?;
    }
    write_file(&dir.join("detections.csv"), &detections_csv(runs))?;
    let json = serde_json::to_string_pretty(&summary_json(spec, runs)).map_err(|e| Error::State(e.to_string()))?;
    write_file(&dir.join("summary.json"), &(json + "\n"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn trace_csv(report: &DriftReport) -> String {
    let mut out = format!("# schema: {TRACE_SCHEMA}\n{TRACE_HEADER}\n");
    for t in &report.traces {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.chunk_index,
            format_sig9(t.cosine),
            format_sig9(t.threshold),
            u8::from(t.drift),
            t.labels_spent,
            format_sig9(t.accuracy())
        ));
    }
    out
}

fn detections_csv(runs: &[SeedRun]) -> String {
    let mut rows: Vec<(u64, usize, String)> = Vec::new();
    for r in runs {
        for m in &r.summary.matches {
            if let Some(d) = m.detected {
                rows.push((r.seed, d, format!("{},{},{}", d, m.drift, d - m.drift)));
            }
        }
        for &fa in &r.summary.false_alarms {
            rows.push((r.seed, fa, format!("{fa},,")));
        }
    }
    rows.sort_by_key(|(s, d, _)| (*s, *d));
    let mut out = format!("{DETECTIONS_HEADER}\n");
    for (seed, _, rest) in rows {
        out.push_str(&format!("{seed},{rest}\n"));
    }
    out
}

fn summary_json<'a>(spec: &ExperimentSpec, runs: &'a [SeedRun]) -> SummaryJson<'a> {
    let acc: Vec<f64> = runs.iter().map(|r| r.report.accuracy).collect();
    let n = runs.len() as f64;
    let aggregate = AggregateJson {
        accuracy_mean: acc.iter().sum::<f64>() / n,
        accuracy_std: mean_std(&acc).ok().map(|(_, s)| s),
        detection_rate_mean: runs.iter().map(|r| r.summary.detection_rate()).sum::<f64>() / n,
        false_alarms_mean: runs.iter().map(|r| r.summary.false_alarms.len() as f64).sum::<f64>() / n,
    };
    SummaryJson {
        schema: SUMMARY_SCHEMA,
        dataset: spec.dataset.to_string(),
        classifier: spec.classifier,
        parameters: ParametersJson {
            label_ratio: spec.label_ratio,
            window: spec.window,
            k: spec.k,
            std: spec.std_kind,
            chunk_size: spec.chunk_size,
            chunks: spec.chunks,
            drift_every: spec.drift_every,
            tolerance: spec.tolerance,
            detect: spec.detect,
            seeds: spec.seeds.clone(),
        },
        runs: runs
            .iter()
            .map(|r| RunJson {
                seed: r.seed,
                detections: &r.report.drifts,
                delays: r.summary.delays(),
                false_alarms: &r.summary.false_alarms,
                false_negatives: r.summary.false_negatives(),
                detection_rate: r.summary.detection_rate(),
                accuracy: r.report.accuracy,
                labels_spent: r.report.total_labels(),
            })
            .collect(),
        aggregate,
    }
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed,
/// scientific notation outside `1e-5 ≤ |x| < 1e9`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Parses `3`, `1,4,9` or the inclusive range `1..10`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::invalid(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}
