//! Head training on precomputed embeddings.
//!
//! The encoder stays frozen, so each pair's evidence embeddings are fixed
//! tensors and only the classifier (plus the learned aggregation map, when
//! present) is fitted. Aggregation heads train on one example per pair;
//! voting heads train each evidence segment against the pair label.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::heads::{aggregate, Aggregator, ContextModel, HeadFunction, HeadMode};
use crate::scalar::Scalar;

use super::data::PairExample;
use super::loss::WeightedBce;
use super::metrics::{metrics_over, EvaluatedPair, Metrics};
use super::optim::Adam;
use super::TrainError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub function: HeadFunction,
    /// Evidence cap per pair.
    pub k: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without dev F1 improvement before stopping.
    pub patience: usize,
    pub dropout: f64,
    pub seed: u64,
    /// Only `true` is supported: the encoders here are forward-only.
    pub freeze_encoder: bool,
    /// Positive-class loss weight; derived from the training split's
    /// negative:positive ratio when absent.
    pub pos_weight: Option<f64>,
}

impl TrainConfig {
    pub fn for_function(function: HeadFunction) -> Self {
        TrainConfig {
            function,
            k: function.default_k(),
            learning_rate: 1e-3,
            batch_size: 16,
            max_epochs: 20,
            patience: 3,
            dropout: 0.1,
            seed: 0,
            freeze_encoder: true,
            pos_weight: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F: Scalar> {
    pub model: ContextModel<F>,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (dev-monitored runs only).
    pub best_epoch: Option<usize>,
    pub pos_weight: f64,
}

/// Score every pair with the model.
pub fn evaluate<F: Scalar>(
    model: &ContextModel<F>,
    pairs: &[PairExample<F>],
) -> Result<(Metrics, Vec<EvaluatedPair<F>>), TrainError> {
    let evaluated = pairs
        .iter()
        .map(|example| {
            let prediction = model.predict(&example.pair, &example.embeddings)?;
            Ok(EvaluatedPair {
                prediction,
                gold: example.label,
                nearest_distance: example.nearest_distance,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    Ok((metrics_over(&evaluated), evaluated))
}

/// Loss and flat-parameter gradients for one batch. When the model carries
/// an aggregation map, `inputs` rows are packed slot vectors (`k * dim`);
/// otherwise they are classifier inputs (`dim`). The gradient vector lines
/// up with [`flat_params`].
pub fn loss_and_gradients<F: Scalar>(
    model: &ContextModel<F>,
    inputs: &Array2<F>,
    targets: &Array1<F>,
    pos_weight: F,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> (F, Array1<F>) {
    let loss = WeightedBce { pos_weight };
    match &model.agg_map {
        Some(map) => {
            let combined = map.forward_batch(inputs);
            let cache = model.mlp.forward_batch(&combined, dropout_rng);
            let value = loss.forward(&cache.logits, targets);
            let dlogits = loss.backward(&cache.logits, targets);
            let (mlp_grads, dcombined) = model.mlp.backward(&cache, &dlogits);
            let map_grads = map.backward_batch(inputs, &dcombined);
            let flat = ndarray::concatenate(
                Axis(0),
                &[mlp_grads.flat().view(), map_grads.flat().view()],
            )
            .expect("1-d concat");
            (value, flat)
        }
        None => {
            let cache = model.mlp.forward_batch(inputs, dropout_rng);
            let value = loss.forward(&cache.logits, targets);
            let dlogits = loss.backward(&cache.logits, targets);
            let (mlp_grads, _) = model.mlp.backward(&cache, &dlogits);
            (value, mlp_grads.flat())
        }
    }
}

/// All trainable parameters as one vector: classifier first, then the
/// aggregation map when present.
pub fn flat_params<F: Scalar>(model: &ContextModel<F>) -> Array1<F> {
    match &model.agg_map {
        Some(map) => ndarray::concatenate(
            Axis(0),
            &[model.mlp.flat_params().view(), map.flat_params().view()],
        )
        .expect("1-d concat"),
        None => model.mlp.flat_params(),
    }
}

pub fn set_flat_params<F: Scalar>(model: &mut ContextModel<F>, params: &Array1<F>) {
    let n_mlp = model.mlp.n_params();
    model
        .mlp
        .set_flat_params(&params.slice(ndarray::s![..n_mlp]).to_owned());
    if let Some(map) = &mut model.agg_map {
        map.set_flat_params(&params.slice(ndarray::s![n_mlp..]).to_owned());
    }
}

/// Training tensors for one head mode: classifier (or packed) inputs with
/// 0/1 targets, one row per example.
struct TrainingSet<F: Scalar> {
    inputs: Array2<F>,
    targets: Array1<F>,
}

fn build_training_set<F: Scalar>(
    model: &ContextModel<F>,
    pairs: &[PairExample<F>],
) -> Result<TrainingSet<F>, TrainError> {
    let dim = model.mlp.input_dim();
    let target = |label: bool| if label { F::one() } else { F::zero() };
    match model.function.mode() {
        HeadMode::Aggregate(aggregator) => {
            let width = match &model.agg_map {
                Some(map) => map.k() * dim,
                None => dim,
            };
            let mut inputs = Array2::zeros((pairs.len(), width));
            let mut targets = Array1::zeros(pairs.len());
            for (row, example) in pairs.iter().enumerate() {
                check_dims(dim, example)?;
                let vectors: Vec<Array1<F>> = example
                    .embeddings
                    .iter()
                    .take(model.k.max(1))
                    .map(|e| e.vector.clone())
                    .collect();
                match (&model.agg_map, aggregator) {
                    (Some(map), Aggregator::Parameterized) => {
                        inputs.row_mut(row).assign(&map.pack(&vectors));
                    }
                    (None, aggregator) => {
                        let distances: Vec<usize> = example
                            .embeddings
                            .iter()
                            .take(model.k.max(1))
                            .map(|e| e.distance)
                            .collect();
                        let (combined, _) = aggregate(&vectors, &distances, aggregator, None);
                        inputs.row_mut(row).assign(&combined);
                    }
                    _ => unreachable!("map presence is tied to the parameterized head"),
                }
                targets[row] = target(example.label);
            }
            Ok(TrainingSet { inputs, targets })
        }
        HeadMode::Vote(_) => {
            // Multi-instance: every evidence segment inherits the pair label.
            let rows: usize = pairs
                .iter()
                .map(|p| p.embeddings.len().min(model.k.max(1)))
                .sum();
            let mut inputs = Array2::zeros((rows, dim));
            let mut targets = Array1::zeros(rows);
            let mut row = 0;
            for example in pairs {
                check_dims(dim, example)?;
                for emb in example.embeddings.iter().take(model.k.max(1)) {
                    inputs.row_mut(row).assign(&emb.vector);
                    targets[row] = target(example.label);
                    row += 1;
                }
            }
            Ok(TrainingSet { inputs, targets })
        }
    }
}

fn check_dims<F: Scalar>(dim: usize, example: &PairExample<F>) -> Result<(), TrainError> {
    for emb in &example.embeddings {
        if emb.vector.len() != dim {
            return Err(TrainError::DimensionMismatch {
                expected: dim,
                got: emb.vector.len(),
            });
        }
    }
    Ok(())
}

fn select_rows<F: Scalar>(m: &Array2<F>, idx: &[usize]) -> Array2<F> {
    let mut out = Array2::zeros((idx.len(), m.ncols()));
    for (row, &i) in idx.iter().enumerate() {
        out.row_mut(row).assign(&m.row(i));
    }
    out
}

/// Fit a fresh model for the configured head on training pairs, monitoring
/// dev F1 for early stopping when dev pairs are given. Everything is driven
/// by the config seed: initialization, batch order, and dropout.
pub fn train<F: Scalar>(
    config: &TrainConfig,
    train_pairs: &[PairExample<F>],
    dev_pairs: &[PairExample<F>],
) -> Result<TrainOutcome<F>, TrainError> {
    if !config.freeze_encoder {
        return Err(TrainError::FineTuneUnsupported);
    }
    if train_pairs.is_empty() {
        return Err(TrainError::NoTrainingExamples);
    }
    let positives = train_pairs.iter().filter(|p| p.label).count();
    let negatives = train_pairs.len() - positives;
    if positives == 0 {
        return Err(TrainError::NoPositiveExamples);
    }
    let pos_weight = config.pos_weight.unwrap_or_else(|| {
        if negatives == 0 {
            log::warn!("training split has no negative pairs; using pos_weight 1");
            1.0
        } else {
            negatives as f64 / positives as f64
        }
    });

    let dim = train_pairs[0].embeddings[0].vector.len();
    let mut model =
        ContextModel::<F>::new(config.function, config.k, dim, config.dropout, config.seed);
    let set = build_training_set(&model, train_pairs)?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut adam = Adam::<F>::new(flat_params(&model).len(), config.learning_rate);
    let weight = F::cast(pos_weight);

    let mut history = Vec::new();
    let mut best: Option<(usize, f64, Array1<F>)> = None;
    let mut stale = 0usize;
    let batch_size = config.batch_size.max(1);

    for epoch in 0..config.max_epochs {
        let mut order: Vec<usize> = (0..set.targets.len()).collect();
        order.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0;
        for batch in order.chunks(batch_size) {
            let inputs = select_rows(&set.inputs, batch);
            let targets = Array1::from_iter(batch.iter().map(|&i| set.targets[i]));
            let (loss, grads) = loss_and_gradients(
                &model,
                &inputs,
                &targets,
                weight,
                Some(&mut dropout_rng),
            );
            loss_sum += loss.to_f64_lossy() * batch.len() as f64;
            let mut params = flat_params(&model);
            adam.step(&mut params, &grads);
            set_flat_params(&mut model, &params);
        }
        let train_loss = loss_sum / set.targets.len() as f64;

        let dev_f1 = if dev_pairs.is_empty() {
            None
        } else {
            let (metrics, _) = evaluate(&model, dev_pairs)?;
            Some(metrics.f1)
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            dev_f1,
        });

        if let Some(f1) = dev_f1 {
            let improved = best.as_ref().is_none_or(|(_, best_f1, _)| f1 > *best_f1);
            if improved {
                best = Some((epoch, f1, flat_params(&model)));
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
    }

    let best_epoch = match best {
        Some((epoch, _, params)) => {
            set_flat_params(&mut model, &params);
            Some(epoch)
        }
        None => None,
    };
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        pos_weight,
    })
}
