//! Document-grouped fold splitting for cross-validation.
//!
//! All candidate pairs of one document land in the same fold, so no article
//! leaks between training and testing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{generate_candidates, CandidatePair, Corpus, CorpusError};

/// One cross-validation fold: a group of documents and all their pairs.
#[derive(Debug, Clone)]
pub struct Fold {
    pub doc_ids: Vec<String>,
    pub pairs: Vec<CandidatePair>,
}

/// Result of splitting a corpus into a dev set and document-grouped folds.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub dev: Vec<CandidatePair>,
    pub folds: Vec<Fold>,
}

/// Partitions the non-dev documents into folds of `fold_size` documents
/// (the last fold may be smaller). Document order is shuffled with the seed,
/// so repeated calls with the same seed produce identical folds.
pub fn split_folds(
    corpus: &Corpus,
    dev_doc_ids: &[String],
    fold_size: usize,
    seed: u64,
) -> Result<FoldSplit, CorpusError> {
    assert!(fold_size >= 1, "fold_size must be at least 1");
    for dev_id in dev_doc_ids {
        if corpus.document(dev_id).is_none() {
            return Err(CorpusError::UnknownDevDocument {
                doc_id: dev_id.clone(),
            });
        }
    }

    let dev: Vec<CandidatePair> = dev_doc_ids
        .iter()
        .filter_map(|id| corpus.document(id))
        .flat_map(generate_candidates)
        .collect();

    let mut cv_doc_ids: Vec<&str> = corpus
        .documents
        .iter()
        .map(|d| d.doc_id.as_str())
        .filter(|id| !dev_doc_ids.iter().any(|dev| dev == id))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cv_doc_ids.shuffle(&mut rng);

    let folds = cv_doc_ids
        .chunks(fold_size)
        .map(|chunk| {
            let pairs = chunk
                .iter()
                .filter_map(|id| corpus.document(id))
                .flat_map(generate_candidates)
                .collect();
            Fold {
                doc_ids: chunk.iter().map(|s| s.to_string()).collect(),
                pairs,
            }
        })
        .collect();

    Ok(FoldSplit { dev, folds })
}
