//! Seeded two-feature streams with a fixed decision boundary and
//! label-reversal drift.
//!
//! Features are uniform on `[−1, 1]²`. The base label is 1 where the shape's
//! predicate holds and 0 elsewhere; at every chunk listed in the
//! [`DriftSchedule`] all labels flip, so the effective label is
//! `base XOR (number of flips at or before the chunk) mod 2`.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`) seeded with the stream
//! seed, which is stable across platforms; a stream and its CSV export are
//! reproducible from `(shape, schedule, config)` alone.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detector::LabelOracle;
use crate::error::{Error, Result};
use crate::stream::{Chunk, ChunkStream, Sample, StreamConfig};

/// Decision boundary family with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    /// Class 1 above the diagonal: `x₂ > x₁ + offset`.
    Line { offset: f64 },
    /// Class 1 inside the disc `x₁² + x₂² < radius_sq`.
    Circle { radius_sq: f64 },
    /// Class 1 inside the square `max(|x₁|, |x₂|) < half_side`.
    Square { half_side: f64 },
    /// Class 1 outside the band `|x₂ − x₁| ≤ half_gap`.
    #[serde(rename = "doubleline")]
    DoubleLines { half_gap: f64 },
}

impl Shape {
    /// Diagonal through the origin; splits the domain in half.
    pub fn line() -> Self {
        Shape::Line { offset: 0.0 }
    }

    /// Disc of area 2, half the domain.
    pub fn circle() -> Self {
        Shape::Circle { radius_sq: 2.0 / PI }
    }

    /// Square of area 2, half the domain.
    pub fn square() -> Self {
        Shape::Square { half_side: FRAC_1_SQRT_2 }
    }

    /// Two parallel lines at `x₂ = x₁ ± 0.5`; class 1 covers 9/16 of the domain.
    pub fn double_lines() -> Self {
        Shape::DoubleLines { half_gap: 0.5 }
    }

    pub fn all() -> [Shape; 4] {
        [Self::line(), Self::circle(), Self::square(), Self::double_lines()]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Line { .. } => "line",
            Shape::Circle { .. } => "circle",
            Shape::Square { .. } => "square",
            Shape::DoubleLines { .. } => "doubleline",
        }
    }

    /// Undrifted label of a point.
    pub fn base_label(&self, x: &[f64]) -> usize {
        let (a, b) = (x[0], x[1]);
        let positive = match *self {
            Shape::Line { offset } => b > a + offset,
            Shape::Circle { radius_sq } => a * a + b * b < radius_sq,
            Shape::Square { half_side } => a.abs().max(b.abs()) < half_side,
            Shape::DoubleLines { half_gap } => (b - a).abs() > half_gap,
        };
        usize::from(positive)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "line" => Ok(Self::line()),
            "circle" => Ok(Self::circle()),
            "square" => Ok(Self::square()),
            "doubleline" | "doublelines" | "double-lines" => Ok(Self::double_lines()),
            other => Err(Error::invalid(format!("unknown dataset {other:?}"))),
        }
    }
}

/// Boundary used by a synthetic stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub shape: Shape,
}

impl BoundarySpec {
    pub fn new(shape: Shape) -> Self {
        Self { shape }
    }
}

/// Chunks at which every label flips.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DriftSchedule {
    flips: Vec<usize>,
}

impl DriftSchedule {
    pub fn new(flips: Vec<usize>) -> Result<Self> {
        if let Some(&first) = flips.first() {
            if first < 2 {
                return Err(Error::invalid("drift chunks must be at least 2"));
            }
        }
        if flips.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("drift chunks must be strictly increasing"));
        }
        Ok(Self { flips })
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// Flips at `period + 1, 2·period + 1, …` up to `chunks`.
    pub fn every(period: usize, chunks: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("drift period must be positive"));
        }
        Self::new((1..).map(|k| k * period + 1).take_while(|&c| c <= chunks).collect())
    }

    pub fn flips(&self) -> &[usize] {
        &self.flips
    }

    /// Whether labels at `chunk` are reversed relative to chunk 1.
    pub fn is_flipped(&self, chunk: usize) -> bool {
        self.flips.iter().take_while(|&&f| f <= chunk).count() % 2 == 1
    }
}

/// Ground-truth label of a point observed in a given chunk.
pub fn label_oracle(spec: &BoundarySpec, schedule: &DriftSchedule, chunk: usize, features: &[f64]) -> usize {
    spec.shape.base_label(features) ^ usize::from(schedule.is_flipped(chunk))
}

/// Oracle that labels from the generating boundary, ignoring any label
/// carried by the sample.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    pub spec: BoundarySpec,
    pub schedule: DriftSchedule,
}

impl LabelOracle for SyntheticOracle {
    fn label(&self, chunk: usize, _position: usize, sample: &Sample) -> Result<usize> {
        if sample.dimension() != 2 {
            return Err(Error::invalid("synthetic streams are two-dimensional"));
        }
        Ok(label_oracle(&self.spec, &self.schedule, chunk, &sample.features))
    }
}

/// A finite synthetic stream. Samples carry their effective labels.
#[derive(Debug, Clone)]
pub struct SyntheticStream {
    spec: BoundarySpec,
    schedule: DriftSchedule,
    config: StreamConfig,
    rng: ChaCha8Rng,
    next_index: usize,
}

/// Builds a synthetic stream; the config must be two-dimensional and binary.
pub fn generate_stream(spec: BoundarySpec, schedule: DriftSchedule, config: StreamConfig) -> Result<SyntheticStream> {
    config.validate()?;
    if config.dimension != 2 || config.classes != 2 {
        return Err(Error::invalid("synthetic streams have 2 features and 2 classes"));
    }
    Ok(SyntheticStream {
        spec,
        schedule,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        config,
        next_index: 1,
    })
}

impl SyntheticStream {
    pub fn oracle(&self) -> SyntheticOracle {
        SyntheticOracle {
            spec: self.spec,
            schedule: self.schedule.clone(),
        }
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn schedule(&self) -> &DriftSchedule {
        &self.schedule
    }

    /// Drains the remaining chunks into one flat sample list.
    pub fn collect_samples(mut self) -> Vec<Sample> {
        std::iter::from_fn(|| self.next_chunk()).flat_map(|c| c.samples).collect()
    }
}

impl ChunkStream for SyntheticStream {
    fn next_chunk(&mut self) -> Option<Chunk> {
        if self.next_index > self.config.chunks {
            return None;
        }
        let index = self.next_index;
        self.next_index += 1;
        let samples = (0..self.config.chunk_size)
            .map(|_| {
                let x = vec![self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0)];
                let y = label_oracle(&self.spec, &self.schedule, index, &x);
                Sample::labeled(x, y)
            })
            .collect();
        Some(Chunk { index, samples })
    }

    fn dimension(&self) -> usize {
        2
    }

    fn classes(&self) -> usize {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(chunks: usize, chunk_size: usize, seed: u64) -> StreamConfig {
        StreamConfig {
            dimension: 2,
            classes: 2,
            chunk_size,
            chunks,
            seed,
        }
    }

    #[test]
    fn boundary_predicates() {
        assert_eq!(Shape::line().base_label(&[0.0, 0.5]), 1);
        assert_eq!(Shape::line().base_label(&[0.5, 0.0]), 0);
        assert_eq!(Shape::circle().base_label(&[0.0, 0.0]), 1);
        assert_eq!(Shape::circle().base_label(&[0.9, 0.9]), 0);
        assert_eq!(Shape::square().base_label(&[0.0, 0.0]), 1);
        assert_eq!(Shape::square().base_label(&[0.9, 0.9]), 0);
        assert_eq!(Shape::double_lines().base_label(&[0.0, 0.0]), 0);
        assert_eq!(Shape::double_lines().base_label(&[-0.9, 0.9]), 1);
    }

    #[test]
    fn schedule_parity() {
        let s = DriftSchedule::new(vec![26, 51]).unwrap();
        assert!(!s.is_flipped(25));
        assert!(s.is_flipped(26));
        assert!(s.is_flipped(50));
        assert!(!s.is_flipped(51));
        assert!(DriftSchedule::new(vec![1]).is_err());
        assert!(DriftSchedule::new(vec![5, 5]).is_err());
        let every = DriftSchedule::every(25, 500).unwrap();
        assert_eq!(every.flips().len(), 19);
        assert_eq!(every.flips()[0], 26);
        assert_eq!(*every.flips().last().unwrap(), 476);
    }

    #[test]
    fn same_point_flips_across_drift() {
        let spec = BoundarySpec::new(Shape::line());
        let sched = DriftSchedule::new(vec![26]).unwrap();
        let x = [0.0, 0.5];
        assert_eq!(label_oracle(&spec, &sched, 25, &x), 1);
        assert_eq!(label_oracle(&spec, &sched, 26, &x), 0);
        let double = DriftSchedule::new(vec![26, 51]).unwrap();
        assert_eq!(label_oracle(&spec, &double, 51, &x), label_oracle(&spec, &double, 1, &x));
    }

    #[test]
    fn chunks_are_ordered_and_seeded() {
        let mk = |seed| generate_stream(BoundarySpec::new(Shape::circle()), DriftSchedule::none(), config(3, 5, seed)).unwrap();
        let mut a = mk(7);
        let idx: Vec<usize> = std::iter::from_fn(|| a.next_chunk()).map(|c| c.index).collect();
        assert_eq!(idx, vec![1, 2, 3]);
        assert!(a.next_chunk().is_none());
        assert_eq!(mk(7).collect_samples(), mk(7).collect_samples());
        assert_ne!(mk(7).collect_samples(), mk(8).collect_samples());
    }

    #[test]
    fn emitted_labels_match_oracle() {
        let sched = DriftSchedule::new(vec![2, 4]).unwrap();
        let mut s = generate_stream(BoundarySpec::new(Shape::square()), sched, config(5, 50, 1)).unwrap();
        let oracle = s.oracle();
        while let Some(c) = s.next_chunk() {
            for (j, x) in c.samples.iter().enumerate() {
                assert_eq!(oracle.label(c.index, j, x).unwrap(), x.label.unwrap());
                assert!(x.features.iter().all(|v| (-1.0..1.0).contains(v)));
            }
        }
    }

    #[test]
    fn class_balance() {
        for shape in Shape::all() {
            let s = generate_stream(BoundarySpec::new(shape), DriftSchedule::none(), config(50, 200, 11)).unwrap();
            let samples = s.collect_samples();
            let ones = samples.iter().filter(|s| s.label == Some(1)).count() as f64 / samples.len() as f64;
            match shape {
                // 9/16 of the domain lies outside the band
                Shape::DoubleLines { .. } => assert!((ones - 0.5625).abs() < 0.02, "{shape}: {ones}"),
                _ => assert!((0.45..=0.55).contains(&ones), "{shape}: {ones}"),
            }
        }
    }

    #[test]
    fn rejects_non_planar_config() {
        let mut cfg = config(2, 2, 0);
        cfg.dimension = 3;
        assert!(generate_stream(BoundarySpec::new(Shape::line()), DriftSchedule::none(), cfg).is_err());
    }

    #[test]
    fn shape_names_parse() {
        for shape in Shape::all() {
            assert_eq!(shape.name().parse::<Shape>().unwrap(), shape);
        }
        assert!("hexagon".parse::<Shape>().is_err());
    }
}
