//! Model difference as the mean per-class cosine similarity of two
//! confidence matrices evaluated on the same samples.

use crate::error::{Error, Result};
use crate::stream::ProbMatrix;

/// Mean over classes of the cosine between the two models' confidence rows.
///
/// A class whose row is all zeros in both matrices counts as full agreement
/// (1); a class that is zero in only one of them counts as 0.
pub fn sim(prev: &ProbMatrix, curr: &ProbMatrix) -> Result<f64> {
    if prev.classes() != curr.classes() || prev.samples() != curr.samples() {
        return Err(Error::invalid(format!(
            "shape mismatch: {}x{} vs {}x{}",
            prev.classes(),
            prev.samples(),
            curr.classes(),
            curr.samples()
        )));
    }
    Ok(mean_row_cosine(prev.rows().zip(curr.rows()), prev.classes()))
}

/// Same measure on arbitrary real matrices given as rows.
pub fn sim_rows(prev: &[Vec<f64>], curr: &[Vec<f64>]) -> Result<f64> {
    if prev.is_empty() || prev.len() != curr.len() {
        return Err(Error::invalid(format!(
            "row count mismatch: {} vs {}",
            prev.len(),
            curr.len()
        )));
    }
    let n = prev[0].len();
    if prev.iter().chain(curr).any(|r| r.len() != n) {
        return Err(Error::invalid("rows must all have the same length"));
    }
    Ok(mean_row_cosine(
        prev.iter().map(Vec::as_slice).zip(curr.iter().map(Vec::as_slice)),
        prev.len(),
    ))
}

fn mean_row_cosine<'a>(pairs: impl Iterator<Item = (&'a [f64], &'a [f64])>, rows: usize) -> f64 {
    let total = pairs.map(|(a, b)| cosine(a, b)).fold(Neumaier::default(), |acc, c| acc.add(c));
    (total.value() / rows as f64).clamp(-1.0, 1.0)
}

/// Cosine of two equal-length vectors with the zero-norm conventions above.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = Neumaier::default();
    let mut aa = Neumaier::default();
    let mut bb = Neumaier::default();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot.add(x * y);
        aa = aa.add(x * x);
        bb = bb.add(y * y);
    }
    let (aa, bb) = (aa.value(), bb.value());
    match (aa == 0.0, bb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        // sqrt(x·x) == x exactly, so identical rows give exactly 1.
        _ => (dot.value() / (aa * bb).sqrt()).clamp(-1.0, 1.0),
    }
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(self, x: f64) -> Self {
        let t = self.sum + x;
        let comp = if self.sum.abs() >= x.abs() {
            self.comp + ((self.sum - t) + x)
        } else {
            self.comp + ((x - t) + self.sum)
        };
        Self { sum: t, comp }
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}
