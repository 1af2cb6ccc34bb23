//! Run configuration.
//!
//! Values resolve with flag > config file > default precedence, and the
//! fully resolved configuration is written next to every output so any run
//! can be reproduced from its own artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use biocontext::encode::MarkerPooling;
use biocontext::heads::HeadFunction;
use biocontext::segment::SeparatorStyle;
use biocontext::train::TrainConfig;

/// Command-line overrides shared by the pipeline subcommands. Every field
/// shadows one config-file key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Corpus directory (manifest.json plus one JSON file per document).
    #[arg(long)]
    pub corpus: Option<PathBuf>,

    /// Output directory for reports, artifacts, and the resolved config.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Decision head: average, nearest, inverse_distance, parameterized,
    /// one_hit, majority, post_inverse_distance, or confidence. The default
    /// majority with k 3 is the best-scoring configuration.
    #[arg(long)]
    pub function: Option<HeadFunction>,

    /// Evidence budget: how many nearest segments each pair may use.
    #[arg(long)]
    pub k: Option<usize>,

    /// "mock" or a checkpoint directory holding config.json, model.safetensors,
    /// vocab.json, and merges.txt.
    #[arg(long)]
    pub encoder: Option<String>,

    /// Embedding width of the mock encoder.
    #[arg(long)]
    pub embedding_dim: Option<usize>,

    /// Token budget per segment before prefix/suffix truncation.
    #[arg(long)]
    pub max_len: Option<usize>,

    /// Word whose presence the mock encoder marks in the embedding space.
    #[arg(long)]
    pub sentinel_word: Option<String>,

    /// Marker positions pooled into the classification embedding:
    /// all_markers or openers_only.
    #[arg(long, value_parser = parse_pooling)]
    pub pooling: Option<MarkerPooling>,

    /// Token joining the two halves of a truncated segment: native or
    /// dedicated.
    #[arg(long, value_parser = parse_separator)]
    pub separator: Option<SeparatorStyle>,

    /// Documents per cross-validation fold.
    #[arg(long)]
    pub fold_size: Option<usize>,

    /// Dev-split document ids, comma separated; overrides the manifest.
    #[arg(long, value_delimiter = ',')]
    pub dev_docs: Option<Vec<String>>,

    /// Root seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub learning_rate: Option<f64>,

    #[arg(long)]
    pub batch_size: Option<usize>,

    #[arg(long)]
    pub max_epochs: Option<usize>,

    /// Epochs without dev-F1 improvement before training stops.
    #[arg(long)]
    pub patience: Option<usize>,

    #[arg(long)]
    pub dropout: Option<f64>,

    /// Positive-class loss weight; defaults to the negative:positive ratio.
    #[arg(long)]
    pub pos_weight: Option<f64>,

    /// Worker threads for segment encoding; 0 uses all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_pooling(s: &str) -> Result<MarkerPooling, String> {
    match s {
        "all_markers" => Ok(MarkerPooling::AllMarkers),
        "openers_only" => Ok(MarkerPooling::OpenersOnly),
        _ => Err(format!(
            "unknown pooling {s:?}, expected all_markers or openers_only"
        )),
    }
}

fn parse_separator(s: &str) -> Result<SeparatorStyle, String> {
    match s {
        "native" => Ok(SeparatorStyle::Native),
        "dedicated" => Ok(SeparatorStyle::Dedicated),
        _ => Err(format!("unknown separator {s:?}, expected native or dedicated")),
    }
}

/// Config-file image: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    corpus: Option<PathBuf>,
    output: Option<PathBuf>,
    function: Option<HeadFunction>,
    k: Option<usize>,
    encoder: Option<String>,
    embedding_dim: Option<usize>,
    max_len: Option<usize>,
    sentinel_word: Option<String>,
    pooling: Option<MarkerPooling>,
    separator: Option<SeparatorStyle>,
    fold_size: Option<usize>,
    dev_docs: Option<Vec<String>>,
    seed: Option<u64>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
    dropout: Option<f64>,
    pos_weight: Option<f64>,
    threads: Option<usize>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub output: PathBuf,
    pub function: HeadFunction,
    pub k: usize,
    pub encoder: String,
    pub embedding_dim: usize,
    pub max_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentinel_word: Option<String>,
    pub pooling: MarkerPooling,
    pub separator: SeparatorStyle,
    pub fold_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_docs: Option<Vec<String>>,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub dropout: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos_weight: Option<f64>,
    pub threads: usize,
}

impl RunConfig {
    /// Merge flags over the optional config file over defaults. `corpus`
    /// and `out` have no defaults and must come from one of the two.
    pub fn resolve(flags: &Overrides) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let Some(corpus) = flags.corpus.clone().or(file.corpus) else {
            bail!("no corpus directory: pass --corpus or set `corpus` in the config file");
        };
        let Some(output) = flags.out.clone().or(file.output) else {
            bail!("no output directory: pass --out or set `output` in the config file");
        };
        let function = flags
            .function
            .or(file.function)
            .unwrap_or(HeadFunction::Majority);

        let config = RunConfig {
            corpus,
            output,
            function,
            k: flags.k.or(file.k).unwrap_or_else(|| function.default_k()),
            encoder: flags.encoder.clone().or(file.encoder).unwrap_or_else(|| "mock".into()),
            embedding_dim: flags.embedding_dim.or(file.embedding_dim).unwrap_or(32),
            max_len: flags.max_len.or(file.max_len).unwrap_or(512),
            sentinel_word: flags.sentinel_word.clone().or(file.sentinel_word),
            pooling: flags.pooling.or(file.pooling).unwrap_or_default(),
            separator: flags.separator.or(file.separator).unwrap_or_default(),
            fold_size: flags.fold_size.or(file.fold_size).unwrap_or(3),
            dev_docs: flags.dev_docs.clone().or(file.dev_docs),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            learning_rate: flags.learning_rate.or(file.learning_rate).unwrap_or(1e-3),
            batch_size: flags.batch_size.or(file.batch_size).unwrap_or(16),
            max_epochs: flags.max_epochs.or(file.max_epochs).unwrap_or(20),
            patience: flags.patience.or(file.patience).unwrap_or(3),
            dropout: flags.dropout.or(file.dropout).unwrap_or(0.1),
            pos_weight: flags.pos_weight.or(file.pos_weight),
            threads: flags.threads.or(file.threads).unwrap_or(0),
        };

        if config.k == 0 {
            bail!("k must be at least 1");
        }
        if config.fold_size == 0 {
            bail!("fold_size must be at least 1");
        }
        if config.max_len < 8 {
            bail!("max_len {} leaves no room for a marked segment", config.max_len);
        }
        if !(0.0..1.0).contains(&config.dropout) {
            bail!("dropout must lie in [0, 1), got {}", config.dropout);
        }
        Ok(config)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            function: self.function,
            k: self.k,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            dropout: self.dropout,
            seed: self.seed,
            freeze_encoder: true,
            pos_weight: self.pos_weight,
        }
    }

    /// Write the resolved config into the output directory.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serializing run config")?;
        let header = format!("# resolved biocontext run configuration (v{})\n", env!("CARGO_PKG_VERSION"));
        let path = dir.join("run_config.toml");
        fs::write(&path, header + &text)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
