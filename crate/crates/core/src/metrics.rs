//! Classification metrics: per-class and support-weighted
//! precision/recall/F1, accuracy, confusion matrices, and Cohen's kappa.

use crate::transcript::Appropriateness;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

const K: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("label sequences have different lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("cannot evaluate an empty label sequence")]
    Empty,
}

/// 3x3 counts, rows = gold, columns = predicted, in the fixed class order
/// Inappropriate / Neutral / Appropriate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn from_pairs(
        gold: &[Appropriateness],
        predicted: &[Appropriateness],
    ) -> Result<Self, MetricsError> {
        if gold.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                a: gold.len(),
                b: predicted.len(),
            });
        }
        if gold.is_empty() {
            return Err(MetricsError::Empty);
        }
        let mut counts = [[0u64; K]; K];
        for (g, p) in gold.iter().zip(predicted) {
            counts[g.index()][p.index()] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Full evaluation report in the per-class + weighted layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: [ClassMetrics; K],
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: f64, den: f64) -> f64 {
    // 0/0 cells resolve to 0
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Computes per-class precision/recall/F1 plus support-weighted averages
/// and accuracy.
pub fn evaluate(
    gold: &[Appropriateness],
    predicted: &[Appropriateness],
) -> Result<EvalReport, MetricsError> {
    let confusion = ConfusionMatrix::from_pairs(gold, predicted)?;
    let total = confusion.total() as f64;

    let mut per_class = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        support: 0,
    }; K];
    let mut weighted = (0.0, 0.0, 0.0);
    let mut correct = 0u64;

    for c in 0..K {
        let tp = confusion.counts[c][c];
        correct += tp;
        let predicted_c: u64 = (0..K).map(|g| confusion.counts[g][c]).sum();
        let support = confusion.support(c);
        let precision = ratio(tp as f64, predicted_c as f64);
        let recall = ratio(tp as f64, support as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        per_class[c] = ClassMetrics {
            precision,
            recall,
            f1,
            support,
        };
        let w = support as f64 / total;
        weighted.0 += w * precision;
        weighted.2 += w * f1;
    }

    // (support_c/N)·(TP_c/support_c) telescopes to Σ TP_c / N, so the
    // weighted recall is computed in that cancelled form to make the
    // identity with accuracy exact rather than within rounding error
    let accuracy = correct as f64 / total;
    weighted.1 = accuracy;

    Ok(EvalReport {
        per_class,
        weighted_precision: weighted.0,
        weighted_recall: weighted.1,
        weighted_f1: weighted.2,
        accuracy,
        confusion,
    })
}

impl fmt::Display for EvalReport {
    /// Aligned plain-text table in the per-class rows + accuracy shape.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<15} {:>9} {:>9} {:>9} {:>9}",
            "Class", "Precision", "Recall", "F1", "Support"
        )?;
        for (c, m) in self.per_class.iter().enumerate() {
            writeln!(
                f,
                "{:<15} {:>9.3} {:>9.3} {:>9.3} {:>9}",
                Appropriateness::from_index(c).unwrap().name(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            )?;
        }
        writeln!(
            f,
            "{:<15} {:>9.3} {:>9.3} {:>9.3} {:>9}",
            "weighted",
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
            self.confusion.total()
        )?;
        write!(f, "accuracy: {:.3}", self.accuracy)
    }
}

/// Outcome of a kappa computation; degenerate marginals (expected
/// agreement 1) are reported alongside the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa {
    pub value: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub degenerate_marginals: bool,
}

/// Cohen's kappa between two annotators over the same items.
pub fn cohen_kappa(
    annotator_a: &[Appropriateness],
    annotator_b: &[Appropriateness],
) -> Result<Kappa, MetricsError> {
    let confusion = ConfusionMatrix::from_pairs(annotator_a, annotator_b)?;
    let n = confusion.total() as f64;
    let p_o = (0..K).map(|c| confusion.counts[c][c]).sum::<u64>() as f64 / n;
    let p_e = (0..K)
        .map(|c| {
            let a: u64 = confusion.counts[c].iter().sum();
            let b: u64 = (0..K).map(|g| confusion.counts[g][c]).sum();
            (a as f64 / n) * (b as f64 / n)
        })
        .sum::<f64>();

    if (1.0 - p_e).abs() < 1e-12 {
        // both marginals concentrated on one class
        let value = if (1.0 - p_o).abs() < 1e-12 { 1.0 } else { 0.0 };
        return Ok(Kappa {
            value,
            observed_agreement: p_o,
            expected_agreement: p_e,
            degenerate_marginals: true,
        });
    }
    Ok(Kappa {
        value: (p_o - p_e) / (1.0 - p_e),
        observed_agreement: p_o,
        expected_agreement: p_e,
        degenerate_marginals: false,
    })
}
