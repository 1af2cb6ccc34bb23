//! Frozen RoBERTa-style transformer encoder loaded from a checkpoint
//! directory (`config.json` + `model.safetensors`, with `vocab.json` and
//! `merges.txt` read separately by the tokenizer).
//!
//! Forward pass only: the weights cannot be updated, so training always
//! freezes this encoder and fits the heads on precomputed embeddings.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::scalar::Scalar;
use crate::segment::TokenId;

use super::{EncodeError, Encoder};

fn default_layer_norm_eps() -> f64 {
    1e-5
}

fn default_pad_token_id() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
pub struct RobertaConfig {
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "default_layer_norm_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_pad_token_id")]
    pub pad_token_id: u32,
    pub vocab_size: usize,
}

#[derive(Debug, Clone)]
struct Linear<F> {
    weight: Array2<F>, // [out, in] as stored in checkpoints
    bias: Array1<F>,
}

impl<F: Scalar> Linear<F> {
    fn apply(&self, x: &Array2<F>) -> Array2<F> {
        x.dot(&self.weight.t()) + &self.bias
    }
}

#[derive(Debug, Clone)]
struct LayerNorm<F> {
    weight: Array1<F>,
    bias: Array1<F>,
    eps: F,
}

impl<F: Scalar> LayerNorm<F> {
    fn apply(&self, x: &Array2<F>) -> Array2<F> {
        let mut out = x.clone();
        let n = F::cast(x.ncols() as f64);
        for mut row in out.rows_mut() {
            let mean = row.sum() / n;
            let var = row.fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean)) / n;
            let denom = (var + self.eps).sqrt();
            for (i, v) in row.iter_mut().enumerate() {
                *v = (*v - mean) / denom * self.weight[i] + self.bias[i];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct EncoderLayer<F> {
    query: Linear<F>,
    key: Linear<F>,
    value: Linear<F>,
    attn_output: Linear<F>,
    attn_norm: LayerNorm<F>,
    intermediate: Linear<F>,
    output: Linear<F>,
    output_norm: LayerNorm<F>,
}

/// BERT/RoBERTa encoder stack over ndarray, generic in the scalar type.
#[derive(Debug, Clone)]
pub struct RobertaEncoder<F: Scalar> {
    config: RobertaConfig,
    word_embeddings: Array2<F>,
    position_embeddings: Array2<F>,
    token_type_row: Array1<F>,
    embedding_norm: LayerNorm<F>,
    layers: Vec<EncoderLayer<F>>,
}

type TensorMap = HashMap<String, (Vec<usize>, Vec<f32>)>;

impl<F: Scalar> RobertaEncoder<F> {
    /// Load `config.json` and `model.safetensors` from a directory.
    pub fn from_pretrained_dir(dir: &Path) -> Result<Self, EncodeError> {
        let config_path = dir.join("config.json");
        let config_text =
            fs::read_to_string(&config_path).map_err(|e| EncodeError::Checkpoint {
                path: config_path.display().to_string(),
                detail: e.to_string(),
            })?;
        let config: RobertaConfig =
            serde_json::from_str(&config_text).map_err(|e| EncodeError::Checkpoint {
                path: config_path.display().to_string(),
                detail: e.to_string(),
            })?;
        let weights_path = dir.join("model.safetensors");
        let tensors = read_safetensors(&weights_path)?;
        Self::from_tensors(config, &tensors).map_err(|detail| EncodeError::Checkpoint {
            path: weights_path.display().to_string(),
            detail,
        })
    }

    fn from_tensors(config: RobertaConfig, tensors: &TensorMap) -> Result<Self, String> {
        let probe = "embeddings.word_embeddings.weight";
        let prefix = ["", "roberta.", "bert."]
            .into_iter()
            .find(|p| tensors.contains_key(&format!("{p}{probe}")))
            .ok_or_else(|| format!("no tensor named [roberta.|bert.]{probe}"))?;

        let matrix = |name: &str| -> Result<Array2<F>, String> {
            let key = format!("{prefix}{name}");
            let (shape, data) = tensors.get(&key).ok_or(format!("missing tensor {key}"))?;
            let [r, c] = shape[..] else {
                return Err(format!("tensor {key} is not 2-dimensional"));
            };
            Array2::from_shape_vec((r, c), data.iter().map(|&v| F::cast(v as f64)).collect())
                .map_err(|e| format!("tensor {key}: {e}"))
        };
        let vector = |name: &str| -> Result<Array1<F>, String> {
            let key = format!("{prefix}{name}");
            let (shape, data) = tensors.get(&key).ok_or(format!("missing tensor {key}"))?;
            if shape.len() != 1 {
                return Err(format!("tensor {key} is not 1-dimensional"));
            }
            Ok(Array1::from_vec(
                data.iter().map(|&v| F::cast(v as f64)).collect(),
            ))
        };
        let linear = |name: &str| -> Result<Linear<F>, String> {
            Ok(Linear {
                weight: matrix(&format!("{name}.weight"))?,
                bias: vector(&format!("{name}.bias"))?,
            })
        };
        let eps = F::cast(config.layer_norm_eps);
        let norm = |name: &str| -> Result<LayerNorm<F>, String> {
            Ok(LayerNorm {
                weight: vector(&format!("{name}.weight"))?,
                bias: vector(&format!("{name}.bias"))?,
                eps,
            })
        };

        let word_embeddings = matrix("embeddings.word_embeddings.weight")?;
        if word_embeddings.nrows() != config.vocab_size {
            return Err(format!(
                "word embedding rows {} do not match configured vocab_size {}",
                word_embeddings.nrows(),
                config.vocab_size,
            ));
        }
        let token_type = matrix("embeddings.token_type_embeddings.weight")?;
        let mut layers = Vec::with_capacity(config.num_hidden_layers);
        for i in 0..config.num_hidden_layers {
            let base = format!("encoder.layer.{i}");
            layers.push(EncoderLayer {
                query: linear(&format!("{base}.attention.self.query"))?,
                key: linear(&format!("{base}.attention.self.key"))?,
                value: linear(&format!("{base}.attention.self.value"))?,
                attn_output: linear(&format!("{base}.attention.output.dense"))?,
                attn_norm: norm(&format!("{base}.attention.output.LayerNorm"))?,
                intermediate: linear(&format!("{base}.intermediate.dense"))?,
                output: linear(&format!("{base}.output.dense"))?,
                output_norm: norm(&format!("{base}.output.LayerNorm"))?,
            });
        }
        Ok(RobertaEncoder {
            position_embeddings: matrix("embeddings.position_embeddings.weight")?,
            token_type_row: token_type.row(0).to_owned(),
            embedding_norm: norm("embeddings.LayerNorm")?,
            word_embeddings,
            config,
            layers,
        })
    }

    /// Append embedding rows for tokenizer-added marker ids. Rows are drawn
    /// uniformly from [-0.02, 0.02] from a seeded generator, so the same
    /// seed always yields the same extension. Ids must continue the current
    /// vocabulary contiguously.
    pub fn with_extended_tokens(
        mut self,
        extended: &[(u32, String)],
        seed: u64,
    ) -> Result<Self, EncodeError> {
        let dim = self.word_embeddings.ncols();
        let base = self.word_embeddings.nrows();
        for (offset, (id, surface)) in extended.iter().enumerate() {
            let expected = base + offset;
            if *id as usize != expected {
                return Err(EncodeError::Checkpoint {
                    path: String::new(),
                    detail: format!(
                        "extended token {surface:?} has id {id}, expected contiguous id {expected}"
                    ),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (*id as u64).rotate_left(17));
            let row: Array1<F> = Array1::from_shape_fn(dim, |_| {
                F::cast((rng.random::<f64>() * 2.0 - 1.0) * 0.02)
            });
            self.word_embeddings
                .push_row(row.view())
                .expect("row width matches embedding dim");
        }
        Ok(self)
    }

    pub fn config(&self) -> &RobertaConfig {
        &self.config
    }

    fn embed(&self, token_ids: &[TokenId]) -> Result<Array2<F>, EncodeError> {
        let pad = self.config.pad_token_id as usize;
        let mut x = Array2::zeros((token_ids.len(), self.config.hidden_size));
        for (i, id) in token_ids.iter().enumerate() {
            if id.index() >= self.word_embeddings.nrows() {
                return Err(EncodeError::TokenOutOfRange {
                    id: id.0,
                    vocab_size: self.word_embeddings.nrows(),
                });
            }
            let mut row = x.row_mut(i);
            row.assign(&self.word_embeddings.row(id.index()));
            // Position ids start one past the padding id.
            row += &self.position_embeddings.row(pad + 1 + i);
            row += &self.token_type_row;
        }
        Ok(self.embedding_norm.apply(&x))
    }

    fn attention(&self, layer: &EncoderLayer<F>, x: &Array2<F>) -> Array2<F> {
        let heads = self.config.num_attention_heads;
        let head_dim = self.config.hidden_size / heads;
        let q = layer.query.apply(x);
        let k = layer.key.apply(x);
        let v = layer.value.apply(x);
        let scale = F::cast(1.0 / (head_dim as f64).sqrt());
        let mut context = Array2::zeros(x.raw_dim());
        for h in 0..heads {
            let cols = s![.., h * head_dim..(h + 1) * head_dim];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);
            let mut scores = qh.dot(&kh.t());
            scores.mapv_inplace(|v| v * scale);
            softmax_rows(&mut scores);
            context.slice_mut(cols).assign(&scores.dot(&vh));
        }
        layer.attn_output.apply(&context)
    }
}

fn softmax_rows<F: Scalar>(x: &mut Array2<F>) {
    for mut row in x.rows_mut() {
        let max = row.fold(F::neg_infinity(), |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Error-function approximation accurate to ~1.5e-7, enough for f32 GELU.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736
                + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn gelu<F: Scalar>(v: F) -> F {
    let x = v.to_f64_lossy();
    F::cast(0.5 * x * (1.0 + erf(x / std::f64::consts::SQRT_2)))
}

impl<F: Scalar> Encoder<F> for RobertaEncoder<F> {
    fn embedding_dim(&self) -> usize {
        self.config.hidden_size
    }

    fn max_len(&self) -> usize {
        self.config.max_position_embeddings - self.config.pad_token_id as usize - 2
    }

    fn encode(&self, token_ids: &[TokenId]) -> Result<Array2<F>, EncodeError> {
        if token_ids.is_empty() {
            return Err(EncodeError::EmptySegment);
        }
        if token_ids.len() > self.max_len() {
            return Err(EncodeError::TooLong {
                len: token_ids.len(),
                max_len: self.max_len(),
            });
        }
        let mut x = self.embed(token_ids)?;
        for layer in &self.layers {
            let attn = self.attention(layer, &x);
            x = layer.attn_norm.apply(&(&x + &attn));
            let hidden = layer.intermediate.apply(&x).mapv_into(gelu);
            let out = layer.output.apply(&hidden);
            x = layer.output_norm.apply(&(&x + &out));
        }
        Ok(x)
    }
}

/// Minimal safetensors reader: 8-byte little-endian header length, JSON
/// header mapping tensor names to dtype/shape/offsets, then raw data.
fn read_safetensors(path: &Path) -> Result<TensorMap, EncodeError> {
    let err = |detail: String| EncodeError::Checkpoint {
        path: path.display().to_string(),
        detail,
    };
    let bytes = fs::read(path).map_err(|e| err(e.to_string()))?;
    if bytes.len() < 8 {
        return Err(err("file too short for a safetensors header".into()));
    }
    let header_len = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let header_end = 8usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| err(format!("header length {header_len} exceeds file size")))?;
    let header: serde_json::Map<String, serde_json::Value> =
        serde_json::from_slice(&bytes[8..header_end]).map_err(|e| err(e.to_string()))?;
    let data = &bytes[header_end..];

    let mut tensors = HashMap::new();
    for (name, meta) in header {
        if name == "__metadata__" {
            continue;
        }
        let get = |field: &str| {
            meta.get(field)
                .ok_or_else(|| err(format!("tensor {name}: missing {field}")))
        };
        let dtype = get("dtype")?.as_str().unwrap_or_default().to_string();
        if dtype != "F32" {
            return Err(err(format!("tensor {name}: unsupported dtype {dtype}")));
        }
        let shape: Vec<usize> = get("shape")?
            .as_array()
            .map(|a| a.iter().filter_map(|v| v.as_u64()).map(|v| v as usize).collect())
            .ok_or_else(|| err(format!("tensor {name}: bad shape")))?;
        let offsets = get("data_offsets")?
            .as_array()
            .and_then(|a| {
                let s = a.first()?.as_u64()? as usize;
                let e = a.get(1)?.as_u64()? as usize;
                Some((s, e))
            })
            .ok_or_else(|| err(format!("tensor {name}: bad data_offsets")))?;
        let (start, end) = offsets;
        if end > data.len() || start > end {
            return Err(err(format!("tensor {name}: offsets out of bounds")));
        }
        let raw = &data[start..end];
        let expected: usize = shape.iter().product::<usize>() * 4;
        if raw.len() != expected {
            return Err(err(format!(
                "tensor {name}: {} bytes for shape {shape:?}, expected {expected}",
                raw.len(),
            )));
        }
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        tensors.insert(name, (shape, values));
    }
    Ok(tensors)
}
