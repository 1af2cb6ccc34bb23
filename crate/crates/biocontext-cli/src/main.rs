//! Command-line entry point: corpus statistics and preparation, head
//! training, cross-validation, evidence-budget sweeps, and run comparison.

mod config;
mod pipeline;

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use biocontext::corpus::{
    corpus_distance_stats, detections_per_type, load_corpus, split_folds, summarize_corpus,
    write_corpus, CandidatePair, CorpusSummary, DetectionStats, DistanceStats,
};
use biocontext::report::{
    render_comparison, render_corpus_report, render_cv_report, render_distance_table,
    render_history, render_k_sweep, ComparisonRow,
};
use biocontext::synth::{synth_corpus, SynthConfig};
use biocontext::train::{
    cross_validate, encode_pairs, evaluate, paired_bootstrap_p, stratify_by_distance, sweep_k,
    train, PairExample,
};

use config::{Overrides, RunConfig};
use pipeline::{
    build_encoder, ensure_dir, load_run_corpus, parse_ks, read_json, write_json, write_text,
    Built, CvRunFile, SweepFile, SweepRecord,
};

#[derive(Parser)]
#[command(
    name = "biocontext",
    version,
    about = "Assign biological context (species, organ, tissue, cell type, cell line) \
             to biochemical event mentions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print corpus statistics: split sizes, pair balance, distances.
    Stats(StatsArgs),
    /// Validate a corpus directory, or generate a synthetic one.
    Prepare(PrepareArgs),
    /// Train one model on the cross-validation documents, monitored on dev.
    Train(Overrides),
    /// Run document-grouped cross-validation for the configured head.
    Crossvalidate(Overrides),
    /// Sweep the evidence budget k and score each setting on dev.
    Sweep(SweepArgs),
    /// Compare persisted cross-validation runs with a significance test.
    Report(ReportArgs),
}

#[derive(Args)]
struct StatsArgs {
    /// Corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    /// Also write corpus_stats.txt and corpus_stats.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PrepareArgs {
    /// Corpus directory to validate (and normalize into --out, if given).
    #[arg(long, required_unless_present = "synth", conflicts_with = "synth")]
    corpus: Option<PathBuf>,
    /// Generate a synthetic corpus with this many documents instead.
    #[arg(long)]
    synth: Option<usize>,
    /// Where to write the prepared corpus.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for synthetic generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthetic documents reserved for the dev split.
    #[arg(long, default_value_t = 2)]
    dev: usize,
    /// Sentences per synthetic document.
    #[arg(long, default_value_t = 12)]
    sentences: usize,
    /// Event mentions per synthetic document.
    #[arg(long, default_value_t = 3)]
    events: usize,
    /// Context types annotated to every event, per document.
    #[arg(long, default_value_t = 2)]
    positive_types: usize,
    /// Distractor context types per document.
    #[arg(long, default_value_t = 2)]
    negative_types: usize,
    /// Mentions per context type.
    #[arg(long, default_value_t = 2)]
    mentions: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Budgets to sweep: a range like "3-10" or a list like "3,5,7".
    #[arg(long, default_value = "3-10")]
    ks: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories produced by `crossvalidate`.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Also write comparison.txt here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bootstrap resamples for the significance test.
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    /// Seed of the bootstrap resampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats(args) => cmd_stats(&args),
        Command::Prepare(args) => cmd_prepare(&args),
        Command::Train(flags) => cmd_train(&flags),
        Command::Crossvalidate(flags) => cmd_crossvalidate(&flags),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

#[derive(Serialize)]
struct StatsFile {
    summary: CorpusSummary,
    distances: DistanceStats,
    detections: DetectionStats,
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)
        .with_context(|| format!("loading corpus from {}", args.corpus.display()))?;
    let stats = StatsFile {
        summary: summarize_corpus(&corpus),
        distances: corpus_distance_stats(&corpus),
        detections: detections_per_type(&corpus),
    };
    let rendered = render_corpus_report(&stats.summary, &stats.distances, &stats.detections);
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&rendered, &out.join("corpus_stats.txt"))?;
        write_json(&stats, &out.join("corpus_stats.json"))?;
    }
    print!("{rendered}");
    Ok(())
}

fn cmd_prepare(args: &PrepareArgs) -> Result<()> {
    let corpus = match (&args.corpus, args.synth) {
        (Some(dir), None) => {
            let corpus = load_corpus(dir)
                .with_context(|| format!("validating corpus at {}", dir.display()))?;
            if let Some(out) = &args.out {
                if same_directory(dir, out) {
                    bail!("refusing to overwrite the source corpus at {}", dir.display());
                }
                write_corpus(&corpus, out).context("writing normalized corpus")?;
                println!("normalized corpus written to {}", out.display());
            }
            corpus
        }
        (None, Some(n_docs)) => {
            let out = args
                .out
                .as_ref()
                .context("--out is required when generating a synthetic corpus")?;
            let corpus = synth_corpus(&SynthConfig {
                n_docs,
                dev_docs: args.dev,
                sentences_per_doc: args.sentences,
                events_per_doc: args.events,
                positive_types_per_doc: args.positive_types,
                negative_types_per_doc: args.negative_types,
                mentions_per_type: args.mentions,
                seed: args.seed,
            });
            write_corpus(&corpus, out).context("writing synthetic corpus")?;
            println!("synthetic corpus of {n_docs} documents written to {}", out.display());
            corpus
        }
        _ => unreachable!("clap enforces exactly one of --corpus/--synth"),
    };
    print!(
        "{}",
        render_corpus_report(
            &summarize_corpus(&corpus),
            &corpus_distance_stats(&corpus),
            &detections_per_type(&corpus),
        )
    );
    Ok(())
}

fn same_directory(a: &PathBuf, b: &PathBuf) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn init_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("initializing worker threads")?;
    }
    Ok(())
}

/// Resolved config plus encoded train/dev pairs for the train subcommand.
struct Prepared {
    config: RunConfig,
    train_examples: Vec<PairExample<f32>>,
    dev_examples: Vec<PairExample<f32>>,
}

fn cmd_train(flags: &Overrides) -> Result<()> {
    let prepared = prepare_pipeline(flags)?;
    let config = &prepared.config;
    if prepared.dev_examples.is_empty() {
        log::warn!("dev split is empty: no early stopping, dev metrics will be undefined");
    }

    let outcome = train(
        &config.train_config(),
        &prepared.train_examples,
        &prepared.dev_examples,
    )
    .context("training")?;
    let (metrics, evaluated) =
        evaluate(&outcome.model, &prepared.dev_examples).context("evaluating on dev")?;

    ensure_dir(&config.output)?;
    config.persist(&config.output)?;
    outcome
        .model
        .save(&config.output.join("model.json"), config.dropout)
        .context("saving model artifact")?;

    let history = render_history(&outcome.history);
    let dev_report = format!(
        "{}\n{}",
        render_comparison(&[ComparisonRow {
            label: "dev".into(),
            metrics,
            p_value: None,
        }]),
        render_distance_table(&stratify_by_distance(&evaluated)),
    );
    write_text(&history, &config.output.join("history.txt"))?;
    write_text(&dev_report, &config.output.join("dev_report.txt"))?;

    println!(
        "trained {} (k={}) on {} pairs, positive weight {:.3}",
        config.function,
        config.k,
        prepared.train_examples.len(),
        outcome.pos_weight,
    );
    print!("{history}");
    if let Some(best) = outcome.best_epoch {
        println!("kept epoch {best}");
    }
    println!();
    print!("{dev_report}");
    println!("\nartifacts in {}", config.output.display());
    Ok(())
}

fn cmd_crossvalidate(flags: &Overrides) -> Result<()> {
    let config = RunConfig::resolve(flags)?;
    init_threads(config.threads)?;
    let corpus = load_run_corpus(&config)?;
    let built = build_encoder(&config, &corpus)?;
    let split = split_folds(&corpus, &corpus.dev_doc_ids.clone(), config.fold_size, config.seed)
        .context("splitting folds")?;
    let report = cross_validate(
        &corpus,
        &split,
        built.encoder(),
        built.tokenizer(),
        &config.train_config(),
        built.segment_len(&config),
        config.pooling,
    )
    .context("cross-validation")?;

    ensure_dir(&config.output)?;
    config.persist(&config.output)?;
    for (i, model) in report.models.iter().enumerate() {
        model
            .save(
                &config.output.join(format!("fold_{i}.model.json")),
                config.dropout,
            )
            .with_context(|| format!("saving fold {i} model artifact"))?;
    }
    write_json(
        &CvRunFile::from_report(&report, config.seed),
        &config.output.join("cv_report.json"),
    )?;
    let rendered = render_cv_report(&report);
    write_text(&rendered, &config.output.join("cv_report.txt"))?;
    print!("{rendered}");
    println!("\nartifacts in {}", config.output.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let ks = parse_ks(&args.ks)?;
    let config = RunConfig::resolve(&args.overrides)?;
    init_threads(config.threads)?;
    let corpus = load_run_corpus(&config)?;
    let built = build_encoder(&config, &corpus)?;
    let split = split_folds(&corpus, &corpus.dev_doc_ids.clone(), config.fold_size, config.seed)
        .context("splitting folds")?;
    let points = sweep_k(
        &corpus,
        &split,
        built.encoder(),
        built.tokenizer(),
        &config.train_config(),
        &ks,
        built.segment_len(&config),
        config.pooling,
    )
    .context("sweeping evidence budgets")?;

    ensure_dir(&config.output)?;
    config.persist(&config.output)?;
    let file = SweepFile {
        function: config.function,
        seed: config.seed,
        records: points
            .iter()
            .map(|p| SweepRecord {
                k: p.k,
                precision: p.dev_metrics.precision,
                recall: p.dev_metrics.recall,
                f1: p.dev_metrics.f1,
            })
            .collect(),
    };
    write_json(&file, &config.output.join("k_sweep.json"))?;
    let rendered = render_k_sweep(&[(config.function.to_string(), points)]);
    write_text(&rendered, &config.output.join("k_sweep.txt"))?;
    print!("{rendered}");
    println!("\nartifacts in {}", config.output.display());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let loaded: Vec<(String, CvRunFile)> = args
        .runs
        .iter()
        .map(|dir| {
            let file: CvRunFile = read_json(&dir.join("cv_report.json"))?;
            let label = dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string());
            Ok((format!("{label} ({} k={})", file.function, file.k), file))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for i in 1..loaded.len() {
        let better = loaded[i].1.pooled.f1 > loaded[best].1.pooled.f1
            || (loaded[i].1.pooled.f1 == loaded[best].1.pooled.f1
                && loaded[i].0 < loaded[best].0);
        if better {
            best = i;
        }
    }
    let best_outcomes: HashMap<&str, (bool, bool)> =
        loaded[best].1.outcome_pairs().into_iter().collect();

    let rows: Vec<ComparisonRow> = loaded
        .iter()
        .enumerate()
        .map(|(i, (label, file))| {
            let p_value = if i == best {
                None
            } else {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (key, outcome) in file.outcome_pairs() {
                    if let Some(&best_outcome) = best_outcomes.get(key) {
                        a.push(best_outcome);
                        b.push(outcome);
                    }
                }
                if a.is_empty() {
                    log::warn!("{label} shares no pairs with the best run; skipping test");
                    None
                } else {
                    Some(paired_bootstrap_p(
                        &a,
                        &b,
                        args.resamples,
                        args.seed.wrapping_add(i as u64),
                    ))
                }
            };
            ComparisonRow {
                label: label.clone(),
                metrics: file.pooled,
                p_value,
            }
        })
        .collect();

    let rendered = render_comparison(&rows);
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&rendered, &out.join("comparison.txt"))?;
    }
    print!("{rendered}");
    Ok(())
}

/// Shared front half of train/crossvalidate: resolve config, load corpus,
/// build the encoder stack, split folds, and encode all pairs.
fn prepare_pipeline(flags: &Overrides) -> Result<Prepared> {
    let config = RunConfig::resolve(flags)?;
    init_threads(config.threads)?;
    let corpus = load_run_corpus(&config)?;
    let built: Built = build_encoder(&config, &corpus)?;
    let split = split_folds(&corpus, &corpus.dev_doc_ids.clone(), config.fold_size, config.seed)
        .context("splitting folds")?;
    let max_len = built.segment_len(&config);

    let pool_pairs: Vec<CandidatePair> = split
        .folds
        .iter()
        .flat_map(|f| f.pairs.iter().cloned())
        .collect();
    let train_examples = encode_pairs(
        &corpus,
        &pool_pairs,
        built.encoder(),
        built.tokenizer(),
        config.k,
        max_len,
        config.pooling,
    )
    .context("encoding training pairs")?;
    let dev_examples = encode_pairs(
        &corpus,
        &split.dev,
        built.encoder(),
        built.tokenizer(),
        config.k,
        max_len,
        config.pooling,
    )
    .context("encoding dev pairs")?;

    Ok(Prepared {
        config,
        train_examples,
        dev_examples,
    })
}
