//! Detection matching and accuracy aggregation.

use serde::{Deserialize, Serialize};

use crate::detector::{DriftReport, StepTrace};
use crate::error::{Error, Result};

/// Default matching tolerance, in chunks.
pub const DEFAULT_TOLERANCE: usize = 3;

/// A true drift and the detection assigned to it, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftMatch {
    pub drift: usize,
    pub detected: Option<usize>,
}

impl DriftMatch {
    pub fn delay(&self) -> Option<usize> {
        self.detected.map(|d| d - self.drift)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub tolerance: usize,
    pub matches: Vec<DriftMatch>,
    pub false_alarms: Vec<usize>,
}

impl DetectionSummary {
    pub fn delays(&self) -> Vec<usize> {
        self.matches.iter().filter_map(DriftMatch::delay).collect()
    }

    pub fn detected(&self) -> usize {
        self.matches.iter().filter(|m| m.detected.is_some()).count()
    }

    pub fn false_negatives(&self) -> usize {
        self.matches.len() - self.detected()
    }

    /// Fraction of true drifts detected; 1 when there are none.
    pub fn detection_rate(&self) -> f64 {
        if self.matches.is_empty() {
            1.0
        } else {
            self.detected() as f64 / self.matches.len() as f64
        }
    }
}

/// Greedy in-order matching: each detection `d` claims the earliest
/// unmatched drift `g` with `g ≤ d ≤ g + tolerance`; detections that claim
/// nothing are false alarms.
pub fn match_detections(true_drifts: &[usize], detections: &[usize], tolerance: usize) -> DetectionSummary {
    let mut matches: Vec<DriftMatch> = true_drifts
        .iter()
        .map(|&drift| DriftMatch { drift, detected: None })
        .collect();
    let mut false_alarms = Vec::new();
    for &d in detections {
        let slot = matches
            .iter_mut()
            .find(|m| m.detected.is_none() && m.drift <= d && d <= m.drift + tolerance);
        match slot {
            Some(m) => m.detected = Some(d),
            None => false_alarms.push(d),
        }
    }
    DetectionSummary {
        tolerance,
        matches,
        false_alarms,
    }
}

/// Mean per-chunk prequential accuracy.
pub fn overall_accuracy(traces: &[StepTrace]) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::invalid("no traces to average"));
    }
    Ok(traces.iter().map(StepTrace::accuracy).sum::<f64>() / traces.len() as f64)
}

/// Sample mean and sample (n − 1) standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 values, got {}", values.len())));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Mean and sample std of overall accuracy across runs.
pub fn aggregate_runs(reports: &[DriftReport]) -> Result<(f64, f64)> {
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    mean_std(&acc)
}
