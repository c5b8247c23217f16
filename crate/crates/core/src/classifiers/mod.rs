//! Incremental base learners used as the paired confusion models.

mod gnb;
mod rls;

pub use gnb::GaussianNb;
pub use rls::{RandomFeatureRls, RlsParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::{ProbMatrix, Sample};

/// Contract shared by every base learner.
///
/// `fit` discards all prior state; `partial_fit` folds new samples into the
/// sufficient statistics so the result matches fitting on everything seen.
/// Cloning a learner yields an independent snapshot.
pub trait IncrementalClassifier: Clone + Send + Sync {
    fn classes(&self) -> usize;
    fn dimension(&self) -> usize;
    fn is_fitted(&self) -> bool;

    fn fit(&mut self, samples: &[Sample]) -> Result<()>;
    fn partial_fit(&mut self, samples: &[Sample]) -> Result<()>;

    /// Class confidences for each sample, one column per sample.
    fn predict_prob(&self, samples: &[Sample]) -> Result<ProbMatrix>;

    fn snapshot(&self) -> Self {
        self.clone()
    }

    /// Argmax class per sample, lowest index on ties.
    fn hard_pseudo_label(&self, samples: &[Sample]) -> Result<Vec<usize>> {
        if samples.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.predict_prob(samples)?.argmax_all())
    }
}

/// Which learner to build, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierKind {
    #[serde(rename = "gnb")]
    GaussianNb,
    #[serde(rename = "rls")]
    Rls(RlsParams),
}

impl ClassifierKind {
    pub fn build(&self, dimension: usize, classes: usize) -> Result<Classifier> {
        Ok(match self {
            ClassifierKind::GaussianNb => Classifier::GaussianNb(GaussianNb::new(dimension, classes)?),
            ClassifierKind::Rls(p) => Classifier::Rls(RandomFeatureRls::new(dimension, classes, *p)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::GaussianNb => "gnb",
            ClassifierKind::Rls(_) => "rls",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Classifier {
    GaussianNb(GaussianNb),
    Rls(RandomFeatureRls),
}

macro_rules! dispatch {
    ($self:ident, $c:ident => $e:expr) => {
        match $self {
            Classifier::GaussianNb($c) => $e,
            Classifier::Rls($c) => $e,
        }
    };
}

impl IncrementalClassifier for Classifier {
    fn classes(&self) -> usize {
        dispatch!(self, c => c.classes())
    }

    fn dimension(&self) -> usize {
        dispatch!(self, c => c.dimension())
    }

    fn is_fitted(&self) -> bool {
        dispatch!(self, c => c.is_fitted())
    }

    fn fit(&mut self, samples: &[Sample]) -> Result<()> {
        dispatch!(self, c => c.fit(samples))
    }

    fn partial_fit(&mut self, samples: &[Sample]) -> Result<()> {
        dispatch!(self, c => c.partial_fit(samples))
    }

    fn predict_prob(&self, samples: &[Sample]) -> Result<ProbMatrix> {
        dispatch!(self, c => c.predict_prob(samples))
    }
}

/// Checks dimensions and, when `need_labels`, that every label is present and < m.
pub(crate) fn check_samples(samples: &[Sample], dimension: usize, classes: usize, need_labels: bool) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        if s.dimension() != dimension {
            return Err(Error::invalid(format!(
                "sample {i} has dimension {}, classifier expects {dimension}",
                s.dimension()
            )));
        }
        if need_labels {
            match s.label {
                None => return Err(Error::invalid(format!("sample {i} has no label"))),
                Some(l) if l >= classes => {
                    return Err(Error::invalid(format!(
                        "sample {i} has label {l}, classifier has {classes} classes"
                    )))
                }
                Some(_) => {}
            }
        }
    }
    Ok(())
}

pub(crate) fn check_fit_input(samples: &[Sample], dimension: usize, classes: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot fit on an empty sample set"));
    }
    check_samples(samples, dimension, classes, true)
}

pub(crate) fn check_predict_input(samples: &[Sample], dimension: usize, fitted: bool) -> Result<()> {
    if !fitted {
        return Err(Error::State("classifier has not been fitted".into()));
    }
    if samples.is_empty() {
        return Err(Error::invalid("cannot predict on an empty sample set"));
    }
    check_samples(samples, dimension, usize::MAX, false)
}
