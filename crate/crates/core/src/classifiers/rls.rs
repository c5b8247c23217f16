use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{check_fit_input, check_predict_input, check_samples, IncrementalClassifier};
use crate::error::{Error, Result};
use crate::stream::{ProbMatrix, Sample};

/// Hyperparameters of [`RandomFeatureRls`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlsParams {
    pub hidden: usize,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for RlsParams {
    fn default() -> Self {
        Self {
            hidden: 64,
            ridge: 1e-3,
            seed: 0,
        }
    }
}

/// Online sequential learner over fixed random tanh features.
///
/// The hidden layer `tanh(Wx + b)` is drawn once from the seed and frozen.
/// Output weights solve the ridge problem `min ‖Hβ − T‖² + γ‖β‖²` and are
/// kept current chunk by chunk with the Woodbury identity on the inverse
/// Gram matrix `P = (HᵀH + γI)⁻¹`. Class confidences are the softmax of `Hβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFeatureRls {
    dimension: usize,
    classes: usize,
    params: RlsParams,
    weights: DMatrix<f64>,
    biases: DVector<f64>,
    beta: DMatrix<f64>,
    p: DMatrix<f64>,
    fitted: bool,
}

impl RandomFeatureRls {
    pub fn new(dimension: usize, classes: usize, params: RlsParams) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if classes < 2 {
            return Err(Error::invalid("at least 2 classes required"));
        }
        if params.hidden == 0 {
            return Err(Error::invalid("hidden width must be positive"));
        }
        if !(params.ridge > 0.0 && params.ridge.is_finite()) {
            return Err(Error::invalid(format!("ridge must be positive, got {}", params.ridge)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let weights = DMatrix::from_fn(params.hidden, dimension, |_, _| rng.random_range(-1.0..=1.0));
        let biases = DVector::from_fn(params.hidden, |_, _| rng.random_range(-1.0..=1.0));
        let h = params.hidden;
        Ok(Self {
            dimension,
            classes,
            params,
            weights,
            biases,
            beta: DMatrix::zeros(h, classes),
            p: DMatrix::identity(h, h) / params.ridge,
            fitted: false,
        })
    }

    pub fn params(&self) -> RlsParams {
        self.params
    }

    /// Output weights, hidden × classes.
    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    /// Inverse regularized Gram matrix, hidden × hidden.
    pub fn inverse_gram(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Hidden activations, one row per input.
    pub fn hidden_features(&self, inputs: &[Vec<f64>]) -> DMatrix<f64> {
        let h = self.params.hidden;
        let mut out = DMatrix::zeros(inputs.len(), h);
        for (r, x) in inputs.iter().enumerate() {
            let x = DVector::from_column_slice(x);
            let z = &self.weights * x + &self.biases;
            for c in 0..h {
                out[(r, c)] = z[c].tanh();
            }
        }
        out
    }

    /// Resets to the prior and solves the ridge problem on these targets.
    pub fn fit_targets(&mut self, inputs: &[Vec<f64>], targets: &DMatrix<f64>) -> Result<()> {
        self.check_targets(inputs, targets)?;
        let h = self.hidden_features(inputs);
        let gram = h.transpose() * &h + DMatrix::identity(self.params.hidden, self.params.hidden) * self.params.ridge;
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::State("regularized Gram matrix is not positive definite".into()))?;
        self.p = chol.inverse();
        symmetrize(&mut self.p);
        self.beta = &self.p * (h.transpose() * targets);
        self.fitted = true;
        Ok(())
    }

    /// Folds a block of targets into the running solution.
    pub fn partial_fit_targets(&mut self, inputs: &[Vec<f64>], targets: &DMatrix<f64>) -> Result<()> {
        self.check_targets(inputs, targets)?;
        if inputs.is_empty() {
            return Ok(());
        }
        let h = self.hidden_features(inputs);
        let ph_t = &self.p * h.transpose();
        let s = DMatrix::identity(inputs.len(), inputs.len()) + &h * &ph_t;
        let chol = s
            .cholesky()
            .ok_or_else(|| Error::State("innovation matrix is not positive definite".into()))?;
        // gain = P Hᵀ S⁻¹, computed as (S⁻¹ H P)ᵀ since S and P are symmetric
        let gain = chol.solve(&ph_t.transpose()).transpose();
        let residual = targets - &h * &self.beta;
        self.beta += &gain * residual;
        self.p -= &gain * ph_t.transpose();
        symmetrize(&mut self.p);
        self.fitted = true;
        Ok(())
    }

    fn check_targets(&self, inputs: &[Vec<f64>], targets: &DMatrix<f64>) -> Result<()> {
        if targets.nrows() != inputs.len() || targets.ncols() != self.classes {
            return Err(Error::invalid(format!(
                "targets must be {}x{}, got {}x{}",
                inputs.len(),
                self.classes,
                targets.nrows(),
                targets.ncols()
            )));
        }
        if let Some(x) = inputs.iter().find(|x| x.len() != self.dimension) {
            return Err(Error::invalid(format!(
                "input has dimension {}, learner expects {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(())
    }

    fn one_hot(&self, samples: &[Sample]) -> (Vec<Vec<f64>>, DMatrix<f64>) {
        let inputs = samples.iter().map(|s| s.features.clone()).collect();
        let mut t = DMatrix::zeros(samples.len(), self.classes);
        for (r, s) in samples.iter().enumerate() {
            if let Some(l) = s.label {
                t[(r, l)] = 1.0;
            }
        }
        (inputs, t)
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

impl IncrementalClassifier for RandomFeatureRls {
    fn classes(&self) -> usize {
        self.classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn is_fitted(&self) -> bool {
        self.fitted
    }

    fn fit(&mut self, samples: &[Sample]) -> Result<()> {
        check_fit_input(samples, self.dimension, self.classes)?;
        let (inputs, t) = self.one_hot(samples);
        self.fit_targets(&inputs, &t)
    }

    fn partial_fit(&mut self, samples: &[Sample]) -> Result<()> {
        check_samples(samples, self.dimension, self.classes, true)?;
        let (inputs, t) = self.one_hot(samples);
        self.partial_fit_targets(&inputs, &t)
    }

    fn predict_prob(&self, samples: &[Sample]) -> Result<ProbMatrix> {
        check_predict_input(samples, self.dimension, self.fitted)?;
        let inputs: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
        let out = self.hidden_features(&inputs) * &self.beta;
        let columns: Vec<Vec<f64>> = out
            .row_iter()
            .map(|row| {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exp: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
                let sum: f64 = exp.iter().sum();
                exp.into_iter().map(|e| e / sum).collect()
            })
            .collect();
        ProbMatrix::from_columns(&columns)
    }
}
