//! Document-grouped cross-validation, evidence-budget sweeps, a distance
//! heuristic, and a paired bootstrap significance test.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CandidatePair, Corpus, FoldSplit};
use crate::encode::{Encoder, MarkerPooling};
use crate::heads::{ContextModel, HeadFunction};
use crate::scalar::Scalar;
use crate::segment::SubwordTokenizer;

use super::data::{encode_pairs, PairExample};
use super::fit::{evaluate, train, TrainConfig};
use super::metrics::{
    metrics_over, stratify_by_distance, DistanceBucket, EvaluatedPair, Metrics,
};
use super::{derive_seed, TrainError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub doc_ids: Vec<String>,
    pub metrics: Metrics,
    pub best_epoch: Option<usize>,
}

/// Cross-validation result: per-fold metrics plus everything pooled over
/// the held-out predictions of all folds.
#[derive(Debug, Clone)]
pub struct CvReport<F: Scalar> {
    pub function: HeadFunction,
    pub k: usize,
    pub folds: Vec<FoldReport>,
    /// Trained model of each fold, aligned with `folds`.
    pub models: Vec<ContextModel<F>>,
    pub pooled: Metrics,
    pub by_distance: Vec<DistanceBucket>,
    /// Held-out predictions of every fold, in fold order.
    pub evaluated: Vec<EvaluatedPair<F>>,
}

impl<F: Scalar> CvReport<F> {
    pub fn per_fold_f1(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.f1).collect()
    }

    /// (predicted, gold) per held-out pair, for significance testing.
    pub fn outcomes(&self) -> Vec<(bool, bool)> {
        self.evaluated.iter().map(EvaluatedPair::outcome).collect()
    }
}

/// Train one model per fold on the remaining folds plus the dev split and
/// score the held-out fold. Embeddings are computed once per fold up front;
/// the dev split doubles as the early-stopping monitor, mirroring its role
/// in the training pool.
pub fn cross_validate<F: Scalar>(
    corpus: &Corpus,
    split: &FoldSplit,
    encoder: &dyn Encoder<F>,
    tokenizer: &dyn SubwordTokenizer,
    config: &TrainConfig,
    max_len: usize,
    pooling: MarkerPooling,
) -> Result<CvReport<F>, TrainError> {
    let dev = encode_pairs(
        corpus, &split.dev, encoder, tokenizer, config.k, max_len, pooling,
    )?;
    let fold_examples: Vec<Vec<PairExample<F>>> = split
        .folds
        .iter()
        .map(|fold| {
            encode_pairs(
                corpus, &fold.pairs, encoder, tokenizer, config.k, max_len, pooling,
            )
        })
        .collect::<Result<_, _>>()?;

    let mut folds = Vec::with_capacity(split.folds.len());
    let mut models = Vec::with_capacity(split.folds.len());
    let mut evaluated = Vec::new();
    for (i, held_out) in fold_examples.iter().enumerate() {
        let mut pool: Vec<PairExample<F>> = fold_examples
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, examples)| examples.iter().cloned())
            .collect();
        pool.extend(dev.iter().cloned());

        let fold_config = TrainConfig {
            seed: derive_seed(config.seed, i as u64),
            ..config.clone()
        };
        let outcome = train(&fold_config, &pool, &dev)?;
        let (metrics, fold_evaluated) = evaluate(&outcome.model, held_out)?;
        folds.push(FoldReport {
            fold_index: i,
            doc_ids: split.folds[i].doc_ids.clone(),
            metrics,
            best_epoch: outcome.best_epoch,
        });
        models.push(outcome.model);
        evaluated.extend(fold_evaluated);
    }

    Ok(CvReport {
        function: config.function,
        k: config.k,
        folds,
        models,
        pooled: metrics_over(&evaluated),
        by_distance: stratify_by_distance(&evaluated),
        evaluated,
    })
}

/// Dev metrics of one evidence-budget setting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KSweepPoint {
    pub k: usize,
    pub dev_metrics: Metrics,
}

/// Retrain on the pooled cross-validation documents for each evidence
/// budget and score the dev split. Segments depend only on which evidence
/// mention they surround, so pairs are encoded once at the largest budget
/// and truncated down per setting.
#[allow(clippy::too_many_arguments)]
pub fn sweep_k<F: Scalar>(
    corpus: &Corpus,
    split: &FoldSplit,
    encoder: &dyn Encoder<F>,
    tokenizer: &dyn SubwordTokenizer,
    config: &TrainConfig,
    ks: &[usize],
    max_len: usize,
    pooling: MarkerPooling,
) -> Result<Vec<KSweepPoint>, TrainError> {
    assert!(!ks.is_empty(), "sweep needs at least one evidence budget");
    let max_k = ks.iter().copied().max().expect("nonempty ks");
    let pool_pairs: Vec<CandidatePair> = split
        .folds
        .iter()
        .flat_map(|f| f.pairs.iter().cloned())
        .collect();
    let pool = encode_pairs(
        corpus, &pool_pairs, encoder, tokenizer, max_k, max_len, pooling,
    )?;
    let dev = encode_pairs(
        corpus, &split.dev, encoder, tokenizer, max_k, max_len, pooling,
    )?;

    ks.iter()
        .map(|&k| {
            let train_pairs: Vec<PairExample<F>> =
                pool.iter().map(|p| p.truncated_to(k)).collect();
            let dev_pairs: Vec<PairExample<F>> =
                dev.iter().map(|p| p.truncated_to(k)).collect();
            let k_config = TrainConfig {
                k,
                seed: derive_seed(config.seed, 0x6b00 + k as u64),
                ..config.clone()
            };
            let outcome = train(&k_config, &train_pairs, &dev_pairs)?;
            let (dev_metrics, _) = evaluate(&outcome.model, &dev_pairs)?;
            Ok(KSweepPoint { k, dev_metrics })
        })
        .collect()
}

/// Distance-threshold baseline chosen on the dev split.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeuristicWindow {
    pub window: usize,
    pub dev_metrics: Metrics,
}

/// Call a pair positive when its nearest evidence mention lies within
/// `window` sentences of the event.
pub fn heuristic_metrics(pairs: &[CandidatePair], window: usize) -> Metrics {
    Metrics::from_outcomes(
        pairs
            .iter()
            .map(|p| (p.nearest_distance() <= window, p.label)),
    )
}

/// Pick the window with the best dev F1; ties go to the smallest window.
pub fn tune_heuristic_window(dev: &[CandidatePair]) -> HeuristicWindow {
    let max_distance = dev.iter().map(CandidatePair::nearest_distance).max().unwrap_or(0);
    let mut best = HeuristicWindow {
        window: 0,
        dev_metrics: heuristic_metrics(dev, 0),
    };
    for window in 1..=max_distance {
        let dev_metrics = heuristic_metrics(dev, window);
        if dev_metrics.f1 > best.dev_metrics.f1 {
            best = HeuristicWindow { window, dev_metrics };
        }
    }
    best
}

/// (predicted, gold) outcome pairs, one entry per evaluated candidate.
pub type Outcomes = Vec<(bool, bool)>;

/// Line up two systems' outcomes over their shared pairs, matched by pair
/// key, in the first system's order.
pub fn aligned_outcomes<F: Scalar>(
    a: &[EvaluatedPair<F>],
    b: &[EvaluatedPair<F>],
) -> (Outcomes, Outcomes) {
    let b_by_key: HashMap<&str, (bool, bool)> = b
        .iter()
        .map(|e| (e.prediction.pair.as_str(), e.outcome()))
        .collect();
    a.iter()
        .filter_map(|e| {
            b_by_key
                .get(e.prediction.pair.as_str())
                .map(|&outcome_b| (e.outcome(), outcome_b))
        })
        .unzip()
}

/// One-sided paired bootstrap test of "system A beats system B on F1".
/// Pairs are resampled with replacement `resamples` times; the returned
/// add-one-smoothed p-value is the share of resamples where A fails to beat
/// B, so identical systems give 1 and a consistently better A approaches
/// `1 / (resamples + 1)`.
pub fn paired_bootstrap_p(
    a: &[(bool, bool)],
    b: &[(bool, bool)],
    resamples: usize,
    seed: u64,
) -> f64 {
    assert_eq!(a.len(), b.len(), "paired test needs aligned outcome lists");
    assert!(!a.is_empty(), "paired test needs at least one outcome");
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut not_better = 0usize;
    for _ in 0..resamples {
        let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let f1_a = Metrics::from_outcomes(indices.iter().map(|&i| a[i])).f1;
        let f1_b = Metrics::from_outcomes(indices.iter().map(|&i| b[i])).f1;
        if f1_a <= f1_b {
            not_better += 1;
        }
    }
    (not_better + 1) as f64 / (resamples + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        split_folds, ContextCategory, ContextMention, ContextTypeId, EventMention,
        EvidenceMention,
    };
    use crate::encode::MockEncoder;
    use crate::segment::WordVocabTokenizer;
    use crate::synth::{synth_corpus, SynthConfig, POSITIVE_WORD};
    use approx::assert_abs_diff_eq;

    fn pair_at(distance: usize, label: bool) -> CandidatePair {
        let context_type = ContextTypeId::new("taxonomy:9606", ContextCategory::Species);
        CandidatePair {
            doc_id: "d".into(),
            event: EventMention {
                event_id: "e".into(),
                sentence_index: 0,
                start_token: 0,
                end_token: 1,
                event_label: "binding".into(),
            },
            context_type: context_type.clone(),
            label,
            evidence: vec![EvidenceMention {
                mention: ContextMention {
                    mention_id: "c".into(),
                    sentence_index: distance,
                    start_token: 0,
                    end_token: 1,
                    context_type,
                },
                distance,
            }],
        }
    }

    #[test]
    fn heuristic_window_tuning_reference_case() {
        let dev: Vec<CandidatePair> = [
            (0, true),
            (0, true),
            (1, true),
            (2, false),
            (5, false),
        ]
        .map(|(d, l)| pair_at(d, l))
        .to_vec();

        assert_abs_diff_eq!(heuristic_metrics(&dev, 0).f1, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(heuristic_metrics(&dev, 2).f1, 6.0 / 7.0, epsilon = 1e-12);

        let tuned = tune_heuristic_window(&dev);
        assert_eq!(tuned.window, 1);
        assert_abs_diff_eq!(tuned.dev_metrics.f1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn heuristic_ties_pick_the_smallest_window() {
        // Every window from 0 up scores F1 1, so 0 must win.
        let dev = vec![pair_at(0, true)];
        assert_eq!(tune_heuristic_window(&dev).window, 0);
    }

    #[test]
    fn bootstrap_identical_systems_give_p_one() {
        let outcomes: Vec<(bool, bool)> = (0..40).map(|i| (i % 3 == 0, i % 2 == 0)).collect();
        let p = paired_bootstrap_p(&outcomes, &outcomes, 500, 3);
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bootstrap_detects_a_clear_margin() {
        // A is perfect, B wrong on 60% of positives.
        let gold: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        let a: Vec<(bool, bool)> = gold.iter().map(|&g| (g, g)).collect();
        let b: Vec<(bool, bool)> = gold
            .iter()
            .enumerate()
            .map(|(i, &g)| (g && i % 5 >= 3, g))
            .collect();
        let p_a_over_b = paired_bootstrap_p(&a, &b, 10_000, 3);
        assert!(p_a_over_b <= 0.01, "expected significance, got p={p_a_over_b}");
        let p_b_over_a = paired_bootstrap_p(&b, &a, 10_000, 3);
        assert!(p_b_over_a > 0.9, "reverse direction must not be significant");

        // Same seed, same p-value.
        assert_abs_diff_eq!(p_a_over_b, paired_bootstrap_p(&a, &b, 10_000, 3), epsilon = 0.0);
    }

    #[test]
    fn outcome_alignment_matches_by_pair_key() {
        use crate::heads::Prediction;
        let make = |key: &str, predicted: bool, gold: bool| EvaluatedPair::<f64> {
            prediction: Prediction {
                pair: key.into(),
                positive: predicted,
                score: 0.5,
                evidence: Vec::new(),
            },
            gold,
            nearest_distance: 0,
        };
        let a = vec![make("p1", true, true), make("p2", false, true), make("p3", true, false)];
        let b = vec![make("p3", false, false), make("p1", true, true)];
        let (oa, ob) = aligned_outcomes(&a, &b);
        assert_eq!(oa, vec![(true, true), (true, false)]);
        assert_eq!(ob, vec![(true, true), (false, false)]);
    }

    #[test]
    fn cross_validation_recovers_a_planted_signal() {
        let corpus = synth_corpus(&SynthConfig {
            n_docs: 12,
            dev_docs: 2,
            events_per_doc: 2,
            positive_types_per_doc: 1,
            negative_types_per_doc: 2,
            ..SynthConfig::default()
        });
        let tokenizer = WordVocabTokenizer::from_corpus(&corpus);
        let sentinel = tokenizer.word_id(POSITIVE_WORD).unwrap();
        let encoder = MockEncoder::<f64>::new(8, 128, 11).with_sentinel(sentinel);
        let split = split_folds(&corpus, &corpus.dev_doc_ids.clone(), 5, 5).unwrap();

        // The corpus is tiny, so trade the default step budget for a
        // hotter learning rate.
        let config = TrainConfig {
            seed: 17,
            learning_rate: 5e-2,
            max_epochs: 30,
            patience: 6,
            ..TrainConfig::for_function(HeadFunction::Majority)
        };
        let report = cross_validate(
            &corpus, &split, &encoder, &tokenizer, &config, 128, MarkerPooling::AllMarkers,
        )
        .unwrap();
        assert_eq!(report.folds.len(), 2, "ten CV documents in folds of five");
        assert!(
            report.pooled.f1 > 0.9,
            "planted signal should be recoverable, got F1 {:.3}",
            report.pooled.f1,
        );
        assert_eq!(
            report.pooled.total(),
            split.folds.iter().map(|f| f.pairs.len()).sum::<usize>(),
        );
        let covered: usize = report.by_distance.iter().map(|b| b.metrics.total()).sum();
        assert_eq!(covered, report.pooled.total());

        // Same seed reproduces the pooled confusion exactly.
        let again = cross_validate(
            &corpus, &split, &encoder, &tokenizer, &config, 128, MarkerPooling::AllMarkers,
        )
        .unwrap();
        assert_eq!(report.pooled, again.pooled);
    }

    #[test]
    fn evidence_budget_sweep_is_consistent_with_direct_training() {
        let corpus = synth_corpus(&SynthConfig {
            n_docs: 10,
            dev_docs: 2,
            events_per_doc: 2,
            positive_types_per_doc: 1,
            negative_types_per_doc: 1,
            mentions_per_type: 3,
            ..SynthConfig::default()
        });
        let tokenizer = WordVocabTokenizer::from_corpus(&corpus);
        let sentinel = tokenizer.word_id(POSITIVE_WORD).unwrap();
        let encoder = MockEncoder::<f64>::new(8, 128, 11).with_sentinel(sentinel);
        let split = split_folds(&corpus, &corpus.dev_doc_ids.clone(), 4, 5).unwrap();

        let config = TrainConfig {
            seed: 23,
            learning_rate: 5e-2,
            max_epochs: 30,
            patience: 6,
            ..TrainConfig::for_function(HeadFunction::Average)
        };
        let points = sweep_k(
            &corpus, &split, &encoder, &tokenizer, &config, &[1, 2, 3], 128,
            MarkerPooling::AllMarkers,
        )
        .unwrap();
        assert_eq!(points.iter().map(|p| p.k).collect::<Vec<_>>(), vec![1, 2, 3]);
        // The signal sits in every segment, so every budget solves dev.
        for point in &points {
            assert!(
                point.dev_metrics.f1 > 0.9,
                "k={} got F1 {:.3}",
                point.k,
                point.dev_metrics.f1,
            );
        }
    }
}
