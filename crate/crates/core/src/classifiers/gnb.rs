use crate::classifiers::{check_fit_input, check_predict_input, check_samples, IncrementalClassifier};
use crate::error::{Error, Result};
use crate::stream::{ProbMatrix, Sample};

/// Variance floor relative to the squared widest feature range seen.
const VAR_SMOOTHING: f64 = 1e-9;

/// Confidence given to the only class seen when the training set has one class.
const SINGLE_CLASS_CONFIDENCE: f64 = 1.0 - 1e-6;

/// Gaussian naive Bayes with per-class, per-feature running moments.
///
/// Priors come from class counts. Moments are merged chunk-wise with the
/// pairwise update of Chan et al., so `fit(A); partial_fit(B)` matches
/// `fit(A ∪ B)` up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    dimension: usize,
    classes: usize,
    counts: Vec<u64>,
    // classes × dimension, row-major
    means: Vec<f64>,
    m2: Vec<f64>,
    feature_min: Vec<f64>,
    feature_max: Vec<f64>,
    var_floor: f64,
    fitted: bool,
}

impl GaussianNb {
    pub fn new(dimension: usize, classes: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if classes < 2 {
            return Err(Error::invalid("at least 2 classes required"));
        }
        Ok(Self {
            dimension,
            classes,
            counts: vec![0; classes],
            means: vec![0.0; classes * dimension],
            m2: vec![0.0; classes * dimension],
            feature_min: vec![f64::INFINITY; dimension],
            feature_max: vec![f64::NEG_INFINITY; dimension],
            var_floor: VAR_SMOOTHING,
            fitted: false,
        })
    }

    /// A fitted model from explicit counts, means and variances (row per class).
    pub fn from_parameters(counts: Vec<u64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        let classes = counts.len();
        let dimension = means.first().map_or(0, Vec::len);
        let mut nb = Self::new(dimension, classes)?;
        if means.len() != classes || variances.len() != classes {
            return Err(Error::invalid("one mean and variance row per class required"));
        }
        for c in 0..classes {
            if means[c].len() != dimension || variances[c].len() != dimension {
                return Err(Error::invalid("parameter rows must match the dimension"));
            }
            for f in 0..dimension {
                if variances[c][f] < 0.0 {
                    return Err(Error::invalid("variances must be nonnegative"));
                }
                nb.means[c * dimension + f] = means[c][f];
                nb.m2[c * dimension + f] = variances[c][f] * counts[c] as f64;
            }
        }
        if counts.iter().all(|&n| n == 0) {
            return Err(Error::invalid("at least one class needs a positive count"));
        }
        nb.counts = counts;
        nb.fitted = true;
        Ok(nb)
    }

    pub fn class_count(&self, class: usize) -> u64 {
        self.counts[class]
    }

    pub fn mean(&self, class: usize, feature: usize) -> f64 {
        self.means[class * self.dimension + feature]
    }

    /// Population variance before flooring.
    pub fn raw_variance(&self, class: usize, feature: usize) -> f64 {
        match self.counts[class] {
            0 => 0.0,
            n => self.m2[class * self.dimension + feature] / n as f64,
        }
    }

    /// Variance used for prediction, never below [`Self::var_floor`].
    pub fn variance(&self, class: usize, feature: usize) -> f64 {
        self.raw_variance(class, feature).max(self.var_floor)
    }

    pub fn var_floor(&self) -> f64 {
        self.var_floor
    }

    pub fn prior(&self, class: usize) -> f64 {
        let total: u64 = self.counts.iter().sum();
        self.counts[class] as f64 / total as f64
    }

    fn absorb(&mut self, samples: &[Sample]) {
        let d = self.dimension;
        for s in samples {
            for (f, &x) in s.features.iter().enumerate() {
                self.feature_min[f] = self.feature_min[f].min(x);
                self.feature_max[f] = self.feature_max[f].max(x);
            }
        }
        for class in 0..self.classes {
            let rows: Vec<&[f64]> = samples
                .iter()
                .filter(|s| s.label == Some(class))
                .map(|s| s.features.as_slice())
                .collect();
            if rows.is_empty() {
                continue;
            }
            let nb = rows.len() as f64;
            let na = self.counts[class] as f64;
            let total = na + nb;
            for f in 0..d {
                let mean_b = rows.iter().map(|r| r[f]).sum::<f64>() / nb;
                let m2_b: f64 = rows.iter().map(|r| (r[f] - mean_b) * (r[f] - mean_b)).sum();
                let i = class * d + f;
                let delta = mean_b - self.means[i];
                self.means[i] += delta * nb / total;
                self.m2[i] += m2_b + delta * delta * na * nb / total;
            }
            self.counts[class] += rows.len() as u64;
        }
        let widest = self
            .feature_min
            .iter()
            .zip(&self.feature_max)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        let scale = if widest > 0.0 { widest * widest } else { 1.0 };
        self.var_floor = VAR_SMOOTHING * scale;
        self.fitted = true;
    }

    fn joint_log_likelihood(&self, x: &[f64], class: usize) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut ll = self.prior(class).ln();
        for (f, &v) in x.iter().enumerate() {
            let var = self.variance(class, f);
            let diff = v - self.mean(class, f);
            ll -= 0.5 * (ln_2pi + var.ln()) + diff * diff / (2.0 * var);
        }
        ll
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let seen: Vec<usize> = (0..self.classes).filter(|&c| self.counts[c] > 0).collect();
        let mut probs = vec![0.0; self.classes];
        if let [only] = seen[..] {
            let rest = (1.0 - SINGLE_CLASS_CONFIDENCE) / (self.classes - 1) as f64;
            probs.iter_mut().for_each(|p| *p = rest);
            probs[only] = SINGLE_CLASS_CONFIDENCE;
            return probs;
        }
        let logs: Vec<f64> = seen.iter().map(|&c| self.joint_log_likelihood(x, c)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = shifted.iter().sum();
        for (&c, e) in seen.iter().zip(&shifted) {
            probs[c] = e / total;
        }
        probs
    }
}

impl IncrementalClassifier for GaussianNb {
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
        *self = Self::new(self.dimension, self.classes)?;
        self.absorb(samples);
        Ok(())
    }

    fn partial_fit(&mut self, samples: &[Sample]) -> Result<()> {
        check_samples(samples, self.dimension, self.classes, true)?;
        if !samples.is_empty() {
            self.absorb(samples);
        }
        Ok(())
    }

    fn predict_prob(&self, samples: &[Sample]) -> Result<ProbMatrix> {
        check_predict_input(samples, self.dimension, self.fitted)?;
        let columns: Vec<Vec<f64>> = samples.iter().map(|s| self.posterior(&s.features)).collect();
        ProbMatrix::from_columns(&columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_d(values: &[(f64, usize)]) -> Vec<Sample> {
        values.iter().map(|&(x, y)| Sample::labeled(vec![x], y)).collect()
    }

    fn logistic(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn hand_set_model_matches_bayes_rule() {
        let nb = GaussianNb::from_parameters(vec![10, 10], vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![1.0]]).unwrap();
        let h = nb.predict_prob(&[Sample::unlabeled(vec![0.5]), Sample::unlabeled(vec![0.0])]).unwrap();
        assert!((h.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((h.get(1, 0) - 0.5).abs() < 1e-12);
        // log-odds for class 0 at x=0: (x−1)²/2 − x²/2 = 0.5
        assert!((h.get(0, 1) - logistic(0.5)).abs() < 1e-12);
        assert!((h.get(1, 1) - logistic(-0.5)).abs() < 1e-12);
        assert!((h.get(0, 1) - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn separated_clusters_are_confident() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data = Vec::new();
        for _ in 0..200 {
            data.push(Sample::labeled(vec![-3.0 + rng.random_range(-0.5..0.5)], 0));
            data.push(Sample::labeled(vec![3.0 + rng.random_range(-0.5..0.5)], 1));
        }
        let mut nb = GaussianNb::new(1, 2).unwrap();
        nb.fit(&data).unwrap();
        let h = nb.predict_prob(&[Sample::unlabeled(vec![-3.0]), Sample::unlabeled(vec![3.0])]).unwrap();
        assert!(h.get(0, 0) > 0.99);
        assert!(h.get(1, 1) > 0.99);
    }

    #[test]
    fn one_sample_per_class_hits_the_floor() {
        let mut nb = GaussianNb::new(1, 2).unwrap();
        nb.fit(&one_d(&[(-1.0, 0), (1.0, 1)])).unwrap();
        assert_eq!(nb.raw_variance(0, 0), 0.0);
        // widest range is 2
        assert!((nb.var_floor() - 4e-9).abs() < 1e-24);
        assert_eq!(nb.variance(0, 0), nb.var_floor());
        let h = nb.predict_prob(&one_d(&[(-1.0, 0), (0.0, 0), (1.0, 0)])).unwrap();
        assert!(h.get(0, 0) > 0.999_999);
        assert!((h.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn incremental_moments_match_batch() {
        let data = one_d(&[(1.0, 0), (2.0, 0), (4.0, 0), (10.0, 1), (12.0, 1)]);
        let mut inc = GaussianNb::new(1, 2).unwrap();
        inc.fit(&data[..2]).unwrap();
        inc.partial_fit(&data[2..4]).unwrap();
        inc.partial_fit(&data[4..]).unwrap();
        assert_eq!(inc.class_count(0), 3);
        assert!((inc.mean(0, 0) - 7.0 / 3.0).abs() < 1e-12);
        // population variance of {1,2,4}
        assert!((inc.raw_variance(0, 0) - 14.0 / 9.0).abs() < 1e-12);
        assert!((inc.raw_variance(1, 0) - 1.0).abs() < 1e-12);
        assert!((inc.prior(1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn single_class_fit_is_degenerate_but_valid() {
        let mut nb = GaussianNb::new(2, 3).unwrap();
        nb.fit(&[Sample::labeled(vec![0.0, 0.0], 2), Sample::labeled(vec![1.0, 0.0], 2)]).unwrap();
        let h = nb.predict_prob(&[Sample::unlabeled(vec![5.0, 5.0])]).unwrap();
        let col = h.column(0);
        assert_eq!(col[2], 1.0 - 1e-6);
        assert!((col[0] - 5e-7).abs() < 1e-15 && col[0] == col[1]);
        assert_eq!(h.argmax(0), 2);
    }

    #[test]
    fn unseen_class_gets_zero_confidence() {
        let mut nb = GaussianNb::new(1, 3).unwrap();
        nb.fit(&one_d(&[(0.0, 0), (1.0, 0), (5.0, 1), (6.0, 1)])).unwrap();
        let h = nb.predict_prob(&one_d(&[(3.0, 0)])).unwrap();
        assert_eq!(h.get(2, 0), 0.0);
    }

    #[test]
    fn errors() {
        let mut nb = GaussianNb::new(1, 2).unwrap();
        assert!(matches!(nb.predict_prob(&one_d(&[(0.0, 0)])), Err(Error::State(_))));
        assert!(matches!(nb.fit(&[]), Err(Error::InvalidArgument(_))));
        assert!(nb.fit(&one_d(&[(0.0, 2)])).is_err());
        assert!(nb.fit(&[Sample::unlabeled(vec![0.0])]).is_err());
        nb.fit(&one_d(&[(0.0, 0), (1.0, 1)])).unwrap();
        assert!(nb.partial_fit(&[Sample::labeled(vec![0.0, 1.0], 0)]).is_err());
        assert!(GaussianNb::new(1, 1).is_err());
    }

    #[test]
    fn empty_partial_fit_is_a_no_op() {
        let mut nb = GaussianNb::new(1, 2).unwrap();
        nb.fit(&one_d(&[(0.0, 0), (1.0, 1), (0.2, 0)])).unwrap();
        let before = nb.clone();
        nb.partial_fit(&[]).unwrap();
        assert_eq!(nb, before);
    }

    #[test]
    fn far_points_do_not_underflow() {
        let mut nb = GaussianNb::new(1, 2).unwrap();
        nb.fit(&one_d(&[(0.0, 0), (0.1, 0), (1.0, 1), (1.1, 1)])).unwrap();
        let h = nb.predict_prob(&one_d(&[(1e6, 0)])).unwrap();
        assert!(h.column(0).iter().all(|p| p.is_finite()));
    }
}
