//! Corpus statistics: inter-sentence distance summaries, per-type detection
//! counts, and dataset split summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{generate_candidates, Corpus};

/// Summary of the sentence distances of positive inter-sentence relations.
///
/// Covers positive candidate pairs whose nearest evidence mention is in a
/// different sentence than the event (distance > 0); same-sentence relations
/// are excluded here but kept everywhere else in the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub count: usize,
    /// Absent when no inter-sentence relations exist.
    pub mean: Option<f64>,
    /// Median with the average-of-middles convention for even counts.
    pub median: Option<f64>,
    pub max: Option<usize>,
    pub histogram: Vec<HistogramBucket>,
}

/// One histogram bucket; `hi` is inclusive and `None` means open-ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub label: String,
    pub lo: usize,
    pub hi: Option<usize>,
    pub count: usize,
}

const HISTOGRAM_EDGES: [(usize, Option<usize>); 10] = [
    (1, Some(1)),
    (2, Some(2)),
    (3, Some(3)),
    (4, Some(4)),
    (5, Some(5)),
    (6, Some(10)),
    (11, Some(20)),
    (21, Some(50)),
    (51, Some(100)),
    (101, None),
];

fn histogram(distances: &[usize]) -> Vec<HistogramBucket> {
    HISTOGRAM_EDGES
        .iter()
        .map(|&(lo, hi)| {
            let count = distances
                .iter()
                .filter(|&&d| d >= lo && hi.is_none_or(|h| d <= h))
                .count();
            let label = match hi {
                Some(h) if h == lo => format!("{lo}"),
                Some(h) => format!("{lo}-{h}"),
                None => format!("{lo}+"),
            };
            HistogramBucket { label, lo, hi, count }
        })
        .collect()
}

/// Nearest-evidence distances of all positive pairs in the corpus.
fn positive_nearest_distances(corpus: &Corpus) -> Vec<usize> {
    corpus
        .documents
        .iter()
        .flat_map(generate_candidates)
        .filter(|p| p.label)
        .map(|p| p.nearest_distance())
        .collect()
}

/// Statistics over positive relations with nearest-evidence distance > 0.
pub fn corpus_distance_stats(corpus: &Corpus) -> DistanceStats {
    let mut distances: Vec<usize> = positive_nearest_distances(corpus)
        .into_iter()
        .filter(|&d| d > 0)
        .collect();
    distances.sort_unstable();

    if distances.is_empty() {
        return DistanceStats {
            count: 0,
            mean: None,
            median: None,
            max: None,
            histogram: histogram(&[]),
        };
    }

    let count = distances.len();
    let mean = distances.iter().sum::<usize>() as f64 / count as f64;
    let median = if count % 2 == 1 {
        distances[count / 2] as f64
    } else {
        (distances[count / 2 - 1] + distances[count / 2]) as f64 / 2.0
    };
    DistanceStats {
        count,
        mean: Some(mean),
        median: Some(median),
        max: distances.last().copied(),
        histogram: histogram(&distances),
    }
}

/// Per-document detection counts n_i for every context type, with a summary
/// of the multiplicity distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    /// grounding id -> doc id -> number of mentions in that document.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    /// Multiplicity histogram: n_i value -> number of (doc, type) entries.
    pub multiplicity: BTreeMap<usize, usize>,
    /// Share of (doc, type) entries detected two or more times.
    pub share_with_two_plus: f64,
}

pub fn detections_per_type(corpus: &Corpus) -> DetectionStats {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for doc in &corpus.documents {
        for mention in &doc.context_mentions {
            *counts
                .entry(mention.context_type.grounding_id.clone())
                .or_default()
                .entry(doc.doc_id.clone())
                .or_default() += 1;
        }
    }

    let mut multiplicity: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0usize;
    let mut two_plus = 0usize;
    for per_doc in counts.values() {
        for &n in per_doc.values() {
            *multiplicity.entry(n).or_default() += 1;
            total += 1;
            if n >= 2 {
                two_plus += 1;
            }
        }
    }
    let share_with_two_plus = if total == 0 {
        0.0
    } else {
        two_plus as f64 / total as f64
    };
    DetectionStats {
        counts,
        multiplicity,
        share_with_two_plus,
    }
}

/// Document/event/mention/annotation counts for one subset of documents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub documents: usize,
    pub event_mentions: usize,
    pub context_mentions: usize,
    pub annotations: usize,
}

/// Whole-corpus summary: totals, dev/CV split counts, and candidate-pair
/// class balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub total: SplitSummary,
    pub dev: SplitSummary,
    pub cross_validation: SplitSummary,
    pub positive_pairs: usize,
    pub negative_pairs: usize,
    pub negative_fraction: f64,
}

pub fn summarize_corpus(corpus: &Corpus) -> CorpusSummary {
    let mut total = SplitSummary::default();
    let mut dev = SplitSummary::default();
    let mut cv = SplitSummary::default();
    for doc in &corpus.documents {
        let is_dev = corpus.dev_doc_ids.contains(&doc.doc_id);
        for summary in [&mut total, if is_dev { &mut dev } else { &mut cv }] {
            summary.documents += 1;
            summary.event_mentions += doc.event_mentions.len();
            summary.context_mentions += doc.context_mentions.len();
            summary.annotations += doc.annotations.len();
        }
    }

    let mut positive_pairs = 0;
    let mut negative_pairs = 0;
    for doc in &corpus.documents {
        for pair in generate_candidates(doc) {
            if pair.label {
                positive_pairs += 1;
            } else {
                negative_pairs += 1;
            }
        }
    }
    let pairs = positive_pairs + negative_pairs;
    let negative_fraction = if pairs == 0 {
        0.0
    } else {
        negative_pairs as f64 / pairs as f64
    };
    CorpusSummary {
        total,
        dev,
        cross_validation: cv,
        positive_pairs,
        negative_pairs,
        negative_fraction,
    }
}
