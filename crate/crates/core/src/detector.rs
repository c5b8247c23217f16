//! The confusion-model detection loop.
//!
//! Two copies of the base learner are kept: `reference` is the model as it
//! was before the latest update, `current` has absorbed it. Every chunk is
//! scored by both; a similarity below the adaptive threshold flags drift,
//! clears the window and refits both models from fresh oracle labels on that
//! chunk. Otherwise `current` is snapshotted into `reference` and updated with
//! ⌊λn⌋ oracle labels plus ⌊λn⌋ disjoint hard pseudo labels.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, ClassifierKind, IncrementalClassifier};
use crate::error::{Error, Result};
use crate::similarity::sim;
use crate::stream::{Chunk, ChunkStream, Sample};
use crate::threshold::{SimilarityWindow, StdKind};

/// Redraws allowed when an initial labeled set holds a single class.
const MAX_REDRAWS: usize = 10;

/// Source of ground-truth labels. The detector counts every call made for
/// training as label spend; calls made only to score accuracy are free.
pub trait LabelOracle {
    fn label(&self, chunk: usize, position: usize, sample: &Sample) -> Result<usize>;
}

/// Serves the label stored on each sample (file-backed streams).
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleLabels;

impl LabelOracle for SampleLabels {
    fn label(&self, chunk: usize, position: usize, sample: &Sample) -> Result<usize> {
        sample
            .label
            .ok_or_else(|| Error::invalid(format!("sample {position} of chunk {chunk} has no label")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CadmConfig {
    /// Fraction λ of each chunk labeled by the oracle, in (0, 0.5].
    pub label_ratio: f64,
    /// Similarity window length l.
    pub window: usize,
    /// Deviation coefficient k.
    pub k: f64,
    pub std_kind: StdKind,
    /// Seeds the labeled / pseudo-labeled index draws.
    pub seed: u64,
    pub classifier: ClassifierKind,
    /// When false the drift branch never runs (no-detection baseline).
    pub detect: bool,
    /// When true, all labels after initialization come from the current
    /// model's own pseudo labels instead of the oracle.
    pub self_labeling: bool,
}

impl Default for CadmConfig {
    fn default() -> Self {
        Self {
            label_ratio: 0.2,
            window: SimilarityWindow::DEFAULT_CAPACITY,
            k: SimilarityWindow::DEFAULT_K,
            std_kind: StdKind::Population,
            seed: 0,
            classifier: ClassifierKind::GaussianNb,
            detect: true,
            self_labeling: false,
        }
    }
}

impl CadmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.label_ratio > 0.0 && self.label_ratio <= 0.5) {
            return Err(Error::invalid(format!("label ratio must be in (0, 0.5], got {}", self.label_ratio)));
        }
        SimilarityWindow::with_std(self.window, self.k, self.std_kind).map(|_| ())
    }

    /// ⌊λ·n⌋.
    pub fn label_budget(&self, chunk_size: usize) -> usize {
        (self.label_ratio * chunk_size as f64).floor() as usize
    }
}

/// What happened on one chunk after the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub chunk_index: usize,
    pub cosine: f64,
    pub threshold: f64,
    pub drift: bool,
    pub labels_spent: usize,
    pub pseudo_labels: usize,
    /// Samples the pre-update model classified correctly.
    pub correct: usize,
    pub total: usize,
}

impl StepTrace {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub drifts: Vec<usize>,
    pub traces: Vec<StepTrace>,
    /// Mean per-chunk accuracy over chunks 2…N.
    pub accuracy: f64,
    pub init_labels: usize,
}

impl DriftReport {
    pub fn total_labels(&self) -> usize {
        self.init_labels + self.traces.iter().map(|t| t.labels_spent).sum::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct CadmState {
    config: CadmConfig,
    dimension: usize,
    classes: usize,
    reference: Classifier,
    current: Classifier,
    window: SimilarityWindow,
    drifts: Vec<usize>,
    rng: ChaCha8Rng,
    init_labels: usize,
}

impl CadmState {
    /// Fits both models on ⌊λn⌋ oracle labels drawn from the first chunk.
    pub fn init(first: &Chunk, classes: usize, config: CadmConfig, oracle: &dyn LabelOracle) -> Result<Self> {
        config.validate()?;
        let dimension = first.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        // keep index draws independent of a data generator sharing the seed
        rng.set_stream(1);
        let model = config.classifier.build(dimension, classes)?;
        let mut state = Self {
            window: SimilarityWindow::with_std(config.window, config.k, config.std_kind)?,
            reference: model.clone(),
            current: model,
            config,
            dimension,
            classes,
            drifts: Vec::new(),
            rng,
            init_labels: 0,
        };
        state.init_labels = state.refit(first, Labeler::Oracle(oracle))?;
        Ok(state)
    }

    pub fn config(&self) -> &CadmConfig {
        &self.config
    }

    /// Model before the latest update.
    pub fn reference(&self) -> &Classifier {
        &self.reference
    }

    /// Model after the latest update.
    pub fn current(&self) -> &Classifier {
        &self.current
    }

    pub fn window(&self) -> &SimilarityWindow {
        &self.window
    }

    pub fn drifts(&self) -> &[usize] {
        &self.drifts
    }

    pub fn init_labels(&self) -> usize {
        self.init_labels
    }

    /// Processes one chunk: score, compare, threshold, then update or reset.
    pub fn step(&mut self, chunk: &Chunk, oracle: &dyn LabelOracle) -> Result<StepTrace> {
        if chunk.dimension() != self.dimension {
            return Err(Error::invalid(format!(
                "chunk {} has dimension {}, stream has {}",
                chunk.index,
                chunk.dimension(),
                self.dimension
            )));
        }
        let prev = self.reference.predict_prob(&chunk.samples)?;
        let curr = self.current.predict_prob(&chunk.samples)?;

        let mut correct = 0;
        for (j, s) in chunk.samples.iter().enumerate() {
            if curr.argmax(j) == oracle.label(chunk.index, j, s)? {
                correct += 1;
            }
        }

        let cosine = sim(&prev, &curr)?;
        let threshold = self.window.update(cosine);
        let drift = self.config.detect && cosine < threshold;

        let (labels_spent, pseudo_labels) = if drift {
            self.drifts.push(chunk.index);
            self.window.reset();
            let labeler = if self.config.self_labeling {
                Labeler::Model(self.current.clone())
            } else {
                Labeler::Oracle(oracle)
            };
            (self.refit(chunk, labeler)?, 0)
        } else {
            self.update(chunk, oracle)?
        };

        Ok(StepTrace {
            chunk_index: chunk.index,
            cosine,
            threshold,
            drift,
            labels_spent,
            pseudo_labels,
            correct,
            total: chunk.len(),
        })
    }

    /// Reinitializes both models from a fresh labeled draw on `chunk`.
    /// Returns the number of oracle labels spent.
    fn refit(&mut self, chunk: &Chunk, labeler: Labeler<'_>) -> Result<usize> {
        let n = chunk.len();
        let budget = self.config.label_budget(n);
        if budget < 1 {
            return Err(Error::invalid(format!(
                "label ratio {} gives no labels for chunks of {n}",
                self.config.label_ratio
            )));
        }
        let mut spent = 0;
        let mut labeled = Vec::new();
        for _attempt in 0..=MAX_REDRAWS {
            let picks = index::sample(&mut self.rng, n, budget).into_vec();
            labeled = labeler.label(chunk, &picks)?;
            if labeler.is_oracle() {
                spent += budget;
            }
            let first = labeled[0].label;
            if labeled.iter().any(|s| s.label != first) {
                break;
            }
        }
        let mut model = self.config.classifier.build(self.dimension, self.classes)?;
        model.fit(&labeled)?;
        self.reference = model.clone();
        self.current = model;
        Ok(spent)
    }

    /// No-drift branch: labeled + pseudo-labeled update of `current`.
    fn update(&mut self, chunk: &Chunk, oracle: &dyn LabelOracle) -> Result<(usize, usize)> {
        let n = chunk.len();
        let budget = self.config.label_budget(n);
        let (labeled_idx, pseudo_idx) = split_draw(&mut self.rng, n, budget);

        let (mut batch, spent) = if self.config.self_labeling {
            (Labeler::Model(self.current.clone()).label(chunk, &labeled_idx)?, 0)
        } else {
            (Labeler::Oracle(oracle).label(chunk, &labeled_idx)?, budget)
        };
        batch.extend(Labeler::Model(self.current.clone()).label(chunk, &pseudo_idx)?);

        self.reference = self.current.snapshot();
        self.current.partial_fit(&batch)?;
        Ok((spent, pseudo_idx.len()))
    }

    pub fn finish(self, traces: Vec<StepTrace>) -> DriftReport {
        let accuracy = if traces.is_empty() {
            f64::NAN
        } else {
            traces.iter().map(StepTrace::accuracy).sum::<f64>() / traces.len() as f64
        };
        DriftReport {
            drifts: self.drifts,
            traces,
            accuracy,
            init_labels: self.init_labels,
        }
    }
}

/// Draws `budget` positions to label and up to `budget` disjoint positions
/// from the remainder to pseudo-label.
fn split_draw(rng: &mut ChaCha8Rng, n: usize, budget: usize) -> (Vec<usize>, Vec<usize>) {
    let labeled = index::sample(rng, n, budget).into_vec();
    let mut taken = vec![false; n];
    labeled.iter().for_each(|&i| taken[i] = true);
    let rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
    let pseudo = index::sample(rng, rest.len(), budget.min(rest.len()))
        .into_iter()
        .map(|i| rest[i])
        .collect();
    (labeled, pseudo)
}

enum Labeler<'a> {
    Oracle(&'a dyn LabelOracle),
    Model(Classifier),
}

impl Labeler<'_> {
    fn is_oracle(&self) -> bool {
        matches!(self, Labeler::Oracle(_))
    }

    fn label(&self, chunk: &Chunk, picks: &[usize]) -> Result<Vec<Sample>> {
        match self {
            Labeler::Oracle(o) => picks
                .iter()
                .map(|&j| {
                    let s = &chunk.samples[j];
                    Ok(Sample::labeled(s.features.clone(), o.label(chunk.index, j, s)?))
                })
                .collect(),
            Labeler::Model(m) => {
                let selected: Vec<Sample> = picks.iter().map(|&j| chunk.samples[j].without_label()).collect();
                let labels = m.hard_pseudo_label(&selected)?;
                Ok(selected
                    .into_iter()
                    .zip(labels)
                    .map(|(s, y)| Sample::labeled(s.features, y))
                    .collect())
            }
        }
    }
}

/// Initializes on the first chunk and steps through the rest of the stream.
pub fn run(stream: &mut dyn ChunkStream, config: CadmConfig, oracle: &dyn LabelOracle) -> Result<DriftReport> {
    let classes = stream.classes();
    let first = stream
        .next_chunk()
        .ok_or_else(|| Error::invalid("stream must yield at least 2 chunks, got 0"))?;
    let mut state = CadmState::init(&first, classes, config, oracle)?;
    let mut traces = Vec::new();
    while let Some(chunk) = stream.next_chunk() {
        traces.push(state.step(&chunk, oracle)?);
    }
    if traces.is_empty() {
        return Err(Error::invalid("stream must yield at least 2 chunks, got 1"));
    }
    Ok(state.finish(traces))
}
