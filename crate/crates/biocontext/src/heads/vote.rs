//! Evidence voting: classify each segment separately, then combine the
//! per-segment decisions into a pair decision.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::aggregate::inverse_distance_weights;

/// One segment's classifier output within a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDecision<F: Scalar> {
    pub mention_id: String,
    pub distance: usize,
    /// Positive-class probability.
    pub probability: F,
    pub positive: bool,
}

/// How per-segment decisions are combined in voting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Voter {
    /// Positive if any segment is positive.
    OneHit,
    /// Positive if at least half the segments are positive.
    Majority,
    /// Inverse-distance weighted class mass; ties go negative.
    PostInverseDistance,
    /// Confidence-normalized class mass; ties go negative.
    Confidence,
}

/// Pair decision plus the score that produced it; the score is a mass in
/// [0, 1] for every voter so decisions can be ranked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteOutcome<F: Scalar> {
    pub positive: bool,
    pub score: F,
}

/// Combine segment decisions. `decisions` must be nonempty.
pub fn vote<F: Scalar>(decisions: &[SegmentDecision<F>], voter: Voter) -> VoteOutcome<F> {
    assert!(!decisions.is_empty(), "vote needs at least one decision");
    let half = F::cast(0.5);
    match voter {
        Voter::OneHit => {
            let positive = decisions.iter().any(|d| d.positive);
            let score = decisions
                .iter()
                .map(|d| d.probability)
                .fold(F::zero(), F::max);
            VoteOutcome { positive, score }
        }
        Voter::Majority => {
            let pos = decisions.iter().filter(|d| d.positive).count();
            let score = F::cast(pos as f64 / decisions.len() as f64);
            VoteOutcome {
                positive: 2 * pos >= decisions.len(),
                score,
            }
        }
        Voter::PostInverseDistance => {
            let distances: Vec<usize> = decisions.iter().map(|d| d.distance).collect();
            let weights = inverse_distance_weights::<F>(&distances);
            let positive_mass: F = decisions
                .iter()
                .zip(&weights)
                .filter(|(d, _)| d.positive)
                .map(|(_, &w)| w)
                .sum();
            VoteOutcome {
                positive: positive_mass > half,
                score: positive_mass,
            }
        }
        Voter::Confidence => {
            // Each segment's confidence is the probability of its own
            // predicted class, normalized across segments.
            let confidences: Vec<F> = decisions
                .iter()
                .map(|d| {
                    if d.positive {
                        d.probability
                    } else {
                        F::one() - d.probability
                    }
                })
                .collect();
            let total: F = confidences.iter().copied().sum();
            let positive_mass: F = decisions
                .iter()
                .zip(&confidences)
                .filter(|(d, _)| d.positive)
                .map(|(_, &c)| c)
                .sum::<F>()
                / total;
            VoteOutcome {
                positive: positive_mass > half,
                score: positive_mass,
            }
        }
    }
}
