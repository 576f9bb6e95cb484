//! Hard-thresholded evaluation metrics.

use serde::Serialize;

use crate::error::Result;
use crate::field::{check_shape, MaskField, ProbField};
use crate::geometry::binarize;

/// Pixel counts of a binarized prediction against ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Binarizes `p` at `threshold` (ties are foreground) and counts outcomes.
pub fn confusion(p: &ProbField, y: &MaskField, threshold: f64) -> Result<ConfusionCounts> {
    check_shape(p, y)?;
    let pred = binarize(p, threshold)?;
    let mut c = ConfusionCounts::default();
    for (&pred, &truth) in pred.values().iter().zip(y.values()) {
        match (pred, truth) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fp += 1,
            (_, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

/// Metrics whose denominator is zero are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub dice: Option<f64>,
}

impl MetricReport {
    pub const NAMES: [&'static str; 4] = ["precision", "recall", "specificity", "dice"];

    /// `(name, value)` pairs in [`MetricReport::NAMES`] order.
    pub fn entries(&self) -> [(&'static str, Option<f64>); 4] {
        [
            ("precision", self.precision),
            ("recall", self.recall),
            ("specificity", self.specificity),
            ("dice", self.dice),
        ]
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metric_report(c: &ConfusionCounts) -> MetricReport {
    MetricReport {
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        dice: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}
