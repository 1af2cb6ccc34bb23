//! Pipeline assembly and on-disk run artifacts.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use biocontext::corpus::{load_corpus, Corpus};
use biocontext::encode::{Encoder, MockEncoder, RobertaEncoder};
use biocontext::heads::HeadFunction;
use biocontext::scalar::Scalar;
use biocontext::segment::{BpeTokenizer, SubwordTokenizer, WordVocabTokenizer};
use biocontext::train::{CvReport, DistanceBucket, EvaluatedPair, FoldReport, Metrics};

use crate::config::RunConfig;

/// Tokenizer/encoder pair built from the `encoder` config value.
pub enum Built {
    Mock {
        tokenizer: WordVocabTokenizer,
        encoder: MockEncoder<f32>,
    },
    Checkpoint {
        tokenizer: Box<BpeTokenizer>,
        encoder: Box<RobertaEncoder<f32>>,
    },
}

impl Built {
    pub fn tokenizer(&self) -> &dyn SubwordTokenizer {
        match self {
            Built::Mock { tokenizer, .. } => tokenizer,
            Built::Checkpoint { tokenizer, .. } => tokenizer.as_ref(),
        }
    }

    pub fn encoder(&self) -> &dyn Encoder<f32> {
        match self {
            Built::Mock { encoder, .. } => encoder,
            Built::Checkpoint { encoder, .. } => encoder.as_ref(),
        }
    }

    /// Segment token budget: the configured cap, bounded by what the
    /// encoder accepts.
    pub fn segment_len(&self, config: &RunConfig) -> usize {
        config.max_len.min(self.encoder().max_len())
    }
}

/// Load the corpus and apply the dev-split override, if any.
pub fn load_run_corpus(config: &RunConfig) -> Result<Corpus> {
    let mut corpus = load_corpus(&config.corpus)
        .with_context(|| format!("loading corpus from {}", config.corpus.display()))?;
    if let Some(dev) = &config.dev_docs {
        for id in dev {
            if corpus.document(id).is_none() {
                bail!("dev document {id:?} is not in the corpus");
            }
        }
        corpus.dev_doc_ids = dev.clone();
    }
    Ok(corpus)
}

/// Build the tokenizer and encoder named by the config. "mock" derives a
/// word-level vocabulary from the corpus; anything else is read as a
/// checkpoint directory.
pub fn build_encoder(config: &RunConfig, corpus: &Corpus) -> Result<Built> {
    if config.encoder == "mock" {
        let tokenizer = WordVocabTokenizer::from_corpus(corpus);
        let mut encoder =
            MockEncoder::<f32>::new(config.embedding_dim, config.max_len, config.seed);
        if let Some(word) = &config.sentinel_word {
            let id = tokenizer.word_id(word).with_context(|| {
                format!("sentinel word {word:?} does not occur in the corpus")
            })?;
            encoder = encoder.with_sentinel(id);
        }
        Ok(Built::Mock { tokenizer, encoder })
    } else {
        if config.sentinel_word.is_some() {
            bail!("sentinel_word applies only to the mock encoder");
        }
        let dir = Path::new(&config.encoder);
        let tokenizer = BpeTokenizer::from_pretrained_dir(dir, config.separator)
            .with_context(|| format!("loading tokenizer from {}", dir.display()))?;
        let encoder = RobertaEncoder::<f32>::from_pretrained_dir(dir)
            .with_context(|| format!("loading encoder checkpoint from {}", dir.display()))?
            .with_extended_tokens(tokenizer.extended_tokens(), config.seed)
            .context("extending encoder vocabulary with marker tokens")?;
        Ok(Built::Checkpoint {
            tokenizer: Box::new(tokenizer),
            encoder: Box::new(encoder),
        })
    }
}

/// One scored pair as persisted in run files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub pair: String,
    pub predicted: bool,
    pub gold: bool,
    pub score: f64,
    pub nearest_distance: usize,
}

impl OutcomeRecord {
    fn from_evaluated<F: Scalar>(e: &EvaluatedPair<F>) -> Self {
        OutcomeRecord {
            pair: e.prediction.pair.clone(),
            predicted: e.prediction.positive,
            gold: e.gold,
            score: e.prediction.score.to_f64_lossy(),
            nearest_distance: e.nearest_distance,
        }
    }
}

/// Persisted cross-validation results, self-contained for later comparison.
#[derive(Debug, Serialize, Deserialize)]
pub struct CvRunFile {
    pub function: HeadFunction,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub pooled: Metrics,
    pub by_distance: Vec<DistanceBucket>,
    pub outcomes: Vec<OutcomeRecord>,
}

impl CvRunFile {
    pub fn from_report<F: Scalar>(report: &CvReport<F>, seed: u64) -> Self {
        CvRunFile {
            function: report.function,
            k: report.k,
            seed,
            folds: report.folds.clone(),
            pooled: report.pooled,
            by_distance: report.by_distance.clone(),
            outcomes: report
                .evaluated
                .iter()
                .map(OutcomeRecord::from_evaluated)
                .collect(),
        }
    }

    pub fn outcome_pairs(&self) -> Vec<(&str, (bool, bool))> {
        self.outcomes
            .iter()
            .map(|o| (o.pair.as_str(), (o.predicted, o.gold)))
            .collect()
    }
}

/// One evidence-budget record of a sweep run.
#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepFile {
    pub function: HeadFunction,
    pub seed: u64,
    pub records: Vec<SweepRecord>,
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Budgets from an expression like "3-10" or "3,5,7". Values must lie in
/// [1, 10].
pub fn parse_ks(expr: &str) -> Result<Vec<usize>> {
    let parse_one = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .with_context(|| format!("invalid evidence budget {s:?}"))
    };
    let ks: Vec<usize> = if let Some((lo, hi)) = expr.split_once('-') {
        let (lo, hi) = (parse_one(lo)?, parse_one(hi)?);
        if lo > hi {
            bail!("empty budget range {expr:?}");
        }
        (lo..=hi).collect()
    } else {
        expr.split(',').map(parse_one).collect::<Result<_>>()?
    };
    if ks.is_empty() {
        bail!("no evidence budgets in {expr:?}");
    }
    if let Some(bad) = ks.iter().find(|&&k| !(1..=10).contains(&k)) {
        bail!("evidence budget {bad} outside the supported range 1-10");
    }
    Ok(ks)
}
