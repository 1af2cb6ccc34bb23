//! Decision heads: the pair classifier plus the evidence combination
//! strategies layered on top of it.
//!
//! Two families share the same classifier architecture. Aggregation heads
//! first combine the per-segment embeddings into one vector and classify it
//! once; voting heads classify every segment and combine the per-segment
//! decisions.

mod aggregate;
mod artifact;
mod mlp;
mod vote;

pub use aggregate::{aggregate, inverse_distance_weights, AggMap, AggMapGrads, Aggregator};
pub use artifact::ModelArtifact;
pub use mlp::{sigmoid, MlpCache, MlpClassifier, MlpGrads};
pub use vote::{vote, SegmentDecision, VoteOutcome, Voter};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::ClassificationEmbedding;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("pair {pair} has no evidence embeddings")]
    NoEvidence { pair: String },

    #[error("embedding dimension {got} does not match classifier input {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("model artifact {path}: {detail}")]
    Artifact { path: String, detail: String },

    #[error("model artifact format version {found} is not supported (expected {expected})")]
    ArtifactVersion { found: u32, expected: u32 },
}

/// Evidence combination strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    Aggregate(Aggregator),
    Vote(Voter),
}

/// Flat list of the eight head functions, for configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadFunction {
    Average,
    Nearest,
    InverseDistance,
    Parameterized,
    OneHit,
    Majority,
    PostInverseDistance,
    Confidence,
}

impl HeadFunction {
    pub const ALL: [HeadFunction; 8] = [
        HeadFunction::Average,
        HeadFunction::Nearest,
        HeadFunction::InverseDistance,
        HeadFunction::Parameterized,
        HeadFunction::OneHit,
        HeadFunction::Majority,
        HeadFunction::PostInverseDistance,
        HeadFunction::Confidence,
    ];

    pub fn mode(self) -> HeadMode {
        match self {
            HeadFunction::Average => HeadMode::Aggregate(Aggregator::Average),
            HeadFunction::Nearest => HeadMode::Aggregate(Aggregator::Nearest),
            HeadFunction::InverseDistance => HeadMode::Aggregate(Aggregator::InverseDistance),
            HeadFunction::Parameterized => HeadMode::Aggregate(Aggregator::Parameterized),
            HeadFunction::OneHit => HeadMode::Vote(Voter::OneHit),
            HeadFunction::Majority => HeadMode::Vote(Voter::Majority),
            HeadFunction::PostInverseDistance => HeadMode::Vote(Voter::PostInverseDistance),
            HeadFunction::Confidence => HeadMode::Vote(Voter::Confidence),
        }
    }

    /// Evidence cap that worked best for each head in the k sweep: five for
    /// the unweighted average, three everywhere else.
    pub fn default_k(self) -> usize {
        match self {
            HeadFunction::Average => 5,
            _ => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeadFunction::Average => "average",
            HeadFunction::Nearest => "nearest",
            HeadFunction::InverseDistance => "inverse_distance",
            HeadFunction::Parameterized => "parameterized",
            HeadFunction::OneHit => "one_hit",
            HeadFunction::Majority => "majority",
            HeadFunction::PostInverseDistance => "post_inverse_distance",
            HeadFunction::Confidence => "confidence",
        }
    }
}

impl std::str::FromStr for HeadFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HeadFunction::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = HeadFunction::ALL.iter().map(|f| f.as_str()).collect();
                format!("unknown head function {s:?}, expected one of {}", names.join(", "))
            })
    }
}

impl std::fmt::Display for HeadFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-evidence-mention audit record inside a prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvidenceTrace<F: Scalar> {
    pub mention_id: String,
    pub distance: usize,
    /// Mixing weight for linear aggregation, vote mass share for voters;
    /// absent for the learned aggregation map.
    pub weight: Option<F>,
    /// Per-segment positive probability (voting heads only).
    pub probability: Option<F>,
    /// Per-segment decision (voting heads only).
    pub positive: Option<bool>,
}

/// One pair-level decision with enough detail to explain it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction<F: Scalar> {
    pub pair: String,
    pub positive: bool,
    /// Positive probability for aggregation heads, vote mass for voters.
    pub score: F,
    pub evidence: Vec<EvidenceTrace<F>>,
}

/// A head function bound to trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextModel<F: Scalar> {
    pub function: HeadFunction,
    pub k: usize,
    pub mlp: MlpClassifier<F>,
    /// Present exactly when `function` is the learned aggregation map.
    pub agg_map: Option<AggMap<F>>,
    pub threshold: F,
}

impl<F: Scalar> ContextModel<F> {
    /// Fresh model with seeded initialization. `dim` is the classification
    /// embedding width.
    pub fn new(function: HeadFunction, k: usize, dim: usize, dropout: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agg_map = matches!(function.mode(), HeadMode::Aggregate(Aggregator::Parameterized))
            .then(|| AggMap::new(dim, k, &mut rng));
        ContextModel {
            function,
            k,
            mlp: MlpClassifier::new(dim, dropout, &mut rng),
            agg_map,
            threshold: F::cast(0.5),
        }
    }

    /// Decide one pair from its evidence embeddings. Evidence is sorted
    /// nearest-first (ties by mention id) and capped at k.
    pub fn predict(
        &self,
        pair: &str,
        embeddings: &[ClassificationEmbedding<F>],
    ) -> Result<Prediction<F>, HeadError> {
        if embeddings.is_empty() {
            return Err(HeadError::NoEvidence { pair: pair.to_string() });
        }
        for e in embeddings {
            if e.vector.len() != self.mlp.input_dim() {
                return Err(HeadError::DimensionMismatch {
                    expected: self.mlp.input_dim(),
                    got: e.vector.len(),
                });
            }
        }
        let mut order: Vec<usize> = (0..embeddings.len()).collect();
        order.sort_by(|&a, &b| {
            (embeddings[a].distance, &embeddings[a].mention_id)
                .cmp(&(embeddings[b].distance, &embeddings[b].mention_id))
        });
        order.truncate(self.k.max(1));
        let vectors: Vec<_> = order.iter().map(|&i| embeddings[i].vector.clone()).collect();
        let distances: Vec<usize> = order.iter().map(|&i| embeddings[i].distance).collect();

        match self.function.mode() {
            HeadMode::Aggregate(aggregator) => {
                let (combined, weights) =
                    aggregate(&vectors, &distances, aggregator, self.agg_map.as_ref());
                let probability = sigmoid(self.mlp.forward(&combined));
                let evidence = order
                    .iter()
                    .enumerate()
                    .map(|(rank, &i)| EvidenceTrace {
                        mention_id: embeddings[i].mention_id.clone(),
                        distance: embeddings[i].distance,
                        weight: weights.get(rank).copied(),
                        probability: None,
                        positive: None,
                    })
                    .collect();
                Ok(Prediction {
                    pair: pair.to_string(),
                    positive: probability >= self.threshold,
                    score: probability,
                    evidence,
                })
            }
            HeadMode::Vote(voter) => {
                let decisions: Vec<SegmentDecision<F>> = order
                    .iter()
                    .map(|&i| {
                        let probability = sigmoid(self.mlp.forward(&embeddings[i].vector));
                        SegmentDecision {
                            mention_id: embeddings[i].mention_id.clone(),
                            distance: embeddings[i].distance,
                            probability,
                            positive: probability >= self.threshold,
                        }
                    })
                    .collect();
                let outcome = vote(&decisions, voter);
                let weights = match voter {
                    Voter::PostInverseDistance => Some(inverse_distance_weights::<F>(&distances)),
                    _ => None,
                };
                let evidence = decisions
                    .iter()
                    .enumerate()
                    .map(|(rank, d)| EvidenceTrace {
                        mention_id: d.mention_id.clone(),
                        distance: d.distance,
                        weight: weights.as_ref().map(|w| w[rank]),
                        probability: Some(d.probability),
                        positive: Some(d.positive),
                    })
                    .collect();
                Ok(Prediction {
                    pair: pair.to_string(),
                    positive: outcome.positive,
                    score: outcome.score,
                    evidence,
                })
            }
        }
    }
}
