//! Positive-class evaluation metrics and distance-stratified breakdowns.

use serde::{Deserialize, Serialize};

use crate::heads::Prediction;
use crate::scalar::Scalar;

/// Confusion counts plus derived positive-class precision/recall/F1.
/// An undefined ratio (zero denominator) is reported as 0 with
/// `zero_division` set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub zero_division: bool,
}

impl Metrics {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut m = Metrics::default();
        for (predicted, gold) in outcomes {
            match (predicted, gold) {
                (true, true) => m.true_positives += 1,
                (true, false) => m.false_positives += 1,
                (false, true) => m.false_negatives += 1,
                (false, false) => m.true_negatives += 1,
            }
        }
        m.derive();
        m
    }

    fn derive(&mut self) {
        let mut ratio = |num: usize, denom: usize| {
            if denom == 0 {
                self.zero_division = true;
                0.0
            } else {
                num as f64 / denom as f64
            }
        };
        let precision = ratio(
            self.true_positives,
            self.true_positives + self.false_positives,
        );
        let recall = ratio(
            self.true_positives,
            self.true_positives + self.false_negatives,
        );
        self.precision = precision;
        self.recall = recall;
        self.f1 = if precision + recall == 0.0 {
            self.zero_division = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }

    /// Gold positives covered by these outcomes.
    pub fn support(&self) -> usize {
        self.true_positives + self.false_negatives
    }
}

/// One scored pair: the model's decision next to the gold label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluatedPair<F: Scalar> {
    pub prediction: Prediction<F>,
    pub gold: bool,
    /// Distance from the event to the nearest evidence mention, the key for
    /// distance-stratified reporting.
    pub nearest_distance: usize,
}

impl<F: Scalar> EvaluatedPair<F> {
    pub fn outcome(&self) -> (bool, bool) {
        (self.prediction.positive, self.gold)
    }
}

pub fn metrics_over<F: Scalar>(evaluated: &[EvaluatedPair<F>]) -> Metrics {
    Metrics::from_outcomes(evaluated.iter().map(EvaluatedPair::outcome))
}

/// Distance bucket of a stratified evaluation. Buckets are 0 through 4 plus
/// a terminal 5+ bucket.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceBucket {
    pub label: String,
    pub lo: usize,
    /// Inclusive upper bound; open-ended for the last bucket.
    pub hi: Option<usize>,
    pub metrics: Metrics,
    /// Gold positives in the bucket.
    pub support: usize,
}

/// Split scored pairs by nearest-evidence distance and compute per-bucket
/// metrics. Every bucket appears even when empty.
pub fn stratify_by_distance<F: Scalar>(evaluated: &[EvaluatedPair<F>]) -> Vec<DistanceBucket> {
    let edges: [(usize, Option<usize>); 6] = [
        (0, Some(0)),
        (1, Some(1)),
        (2, Some(2)),
        (3, Some(3)),
        (4, Some(4)),
        (5, None),
    ];
    edges
        .into_iter()
        .map(|(lo, hi)| {
            let members = evaluated.iter().filter(|e| {
                e.nearest_distance >= lo && hi.is_none_or(|h| e.nearest_distance <= h)
            });
            let metrics = Metrics::from_outcomes(members.map(|e| e.outcome()));
            DistanceBucket {
                label: match hi {
                    Some(h) => h.to_string(),
                    None => format!("{lo}+"),
                },
                lo,
                hi,
                metrics,
                support: metrics.support(),
            }
        })
        .collect()
}
