//! Deviation-adaptive threshold: a bounded window of recent similarity
//! values and the cut-off `mean − k·std` computed over it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization used for the window standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divide by the window length.
    #[default]
    Population,
    /// Divide by length − 1; a single value has std 0.
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityWindow {
    values: VecDeque<f64>,
    capacity: usize,
    k: f64,
    std_kind: StdKind,
}

impl SimilarityWindow {
    pub const DEFAULT_CAPACITY: usize = 10;
    pub const DEFAULT_K: f64 = 2.0;

    pub fn new(capacity: usize, k: f64) -> Result<Self> {
        Self::with_std(capacity, k, StdKind::Population)
    }

    pub fn with_std(capacity: usize, k: f64, std_kind: StdKind) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("window size must be at least 1"));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::invalid(format!("deviation coefficient must be >= 0, got {k}")));
        }
        Ok(Self {
            values: VecDeque::with_capacity(capacity),
            capacity,
            k,
            std_kind,
        })
    }

    /// Pushes a new value (evicting the oldest when full) and returns the
    /// threshold over the updated window, the new value included.
    pub fn update(&mut self, value: f64) -> f64 {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(value);
        self.threshold()
    }

    /// `mean − k·std` of the current contents; NaN when empty.
    pub fn threshold(&self) -> f64 {
        let (mean, std) = window_stats(self.values.iter().copied(), self.std_kind);
        mean - self.k * std
    }

    pub fn mean(&self) -> f64 {
        window_stats(self.values.iter().copied(), self.std_kind).0
    }

    pub fn std(&self) -> f64 {
        window_stats(self.values.iter().copied(), self.std_kind).1
    }

    pub fn reset(&mut self) {
        self.values.clear();
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn std_kind(&self) -> StdKind {
        self.std_kind
    }

    /// Oldest first.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

/// Functional form: returns the threshold and the updated window.
pub fn dat_update(mut window: SimilarityWindow, value: f64) -> (f64, SimilarityWindow) {
    let t = window.update(value);
    (t, window)
}

fn window_stats(values: impl Iterator<Item = f64> + Clone, kind: StdKind) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Shifted by the oldest value so a constant window has exactly that mean.
    let first = values.clone().next().unwrap_or(0.0);
    let mean = first + values.clone().map(|v| v - first).sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let denom = match kind {
        StdKind::Population => n as f64,
        StdKind::Sample if n > 1 => (n - 1) as f64,
        StdKind::Sample => return (mean, 0.0),
    };
    (mean, (ss / denom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_value_threshold_is_the_value() {
        let w = SimilarityWindow::new(10, 2.0).unwrap();
        let (t, w) = dat_update(w, 0.8);
        assert_eq!(t, 0.8);
        assert_eq!(w.values().collect::<Vec<_>>(), vec![0.8]);
    }

    #[test]
    fn growing_window() {
        let mut w = SimilarityWindow::new(3, 2.0).unwrap();
        w.update(0.9);
        w.update(0.8);
        let t = w.update(0.7);
        assert_eq!(w.values().collect::<Vec<_>>(), vec![0.9, 0.8, 0.7]);
        // population std of {0.9, 0.8, 0.7} = sqrt(0.02 / 3)
        assert!((w.mean() - 0.8).abs() < 1e-12);
        assert!((w.std() - 0.081_649_658_092_772_6).abs() < 1e-9);
        assert!((t - 0.636_700_683_814_454_8).abs() < 1e-9);
    }

    #[test]
    fn full_window_evicts_oldest() {
        let mut w = SimilarityWindow::new(3, 2.0).unwrap();
        for v in [0.9, 0.8, 0.7] {
            w.update(v);
        }
        let t = w.update(0.6);
        assert_eq!(w.values().collect::<Vec<_>>(), vec![0.8, 0.7, 0.6]);
        assert!((w.mean() - 0.7).abs() < 1e-12);
        assert!((t - 0.536_700_683_814_454_8).abs() < 1e-9);
    }

    #[test]
    fn reset_keeps_parameters_and_is_idempotent() {
        let mut w = SimilarityWindow::new(4, 1.5).unwrap();
        w.update(0.3);
        w.update(0.4);
        w.reset();
        assert!(w.is_empty());
        w.reset();
        assert!(w.is_empty());
        assert_eq!((w.capacity(), w.k()), (4, 1.5));
        assert_eq!(w.update(0.42), 0.42);
    }

    #[test]
    fn sample_std_variant() {
        let mut w = SimilarityWindow::with_std(5, 1.0, StdKind::Sample).unwrap();
        assert_eq!(w.update(0.5), 0.5);
        let t = w.update(0.7);
        // sample std of {0.5, 0.7} = 0.1·√2
        assert!((t - (0.6 - 0.1 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SimilarityWindow::new(0, 2.0).is_err());
        assert!(SimilarityWindow::new(3, -1.0).is_err());
        assert!(SimilarityWindow::new(3, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn threshold_never_exceeds_mean(values in prop::collection::vec(-1.0f64..1.0, 1..40), k in 0.0f64..5.0, cap in 1usize..12) {
            let mut w = SimilarityWindow::new(cap, k).unwrap();
            for v in values {
                let t = w.update(v);
                prop_assert!(t <= w.mean());
                prop_assert!(w.len() <= cap);
            }
        }

        #[test]
        fn zero_k_threshold_is_mean(values in prop::collection::vec(-1.0f64..1.0, 1..40), cap in 1usize..12) {
            let mut w = SimilarityWindow::new(cap, 0.0).unwrap();
            for v in values {
                prop_assert_eq!(w.update(v), w.mean());
            }
        }

        #[test]
        fn constant_stream_never_fires(c in -1.0f64..1.0, len in 1usize..40, cap in 1usize..12) {
            let mut w = SimilarityWindow::new(cap, 2.0).unwrap();
            for _ in 0..len {
                let t = w.update(c);
                prop_assert_eq!(t, c);
                prop_assert!(c >= t, "strict comparison would fire");
            }
        }
    }
}
