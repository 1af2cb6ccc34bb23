//! Deterministic hash-based encoder for tests and synthetic experiments.

use std::marker::PhantomData;
use std::ops::Range;

use ndarray::Array2;

use crate::scalar::Scalar;
use crate::segment::TokenId;

use super::{EncodeError, Encoder};

/// A token whose presence anywhere in a segment shifts part of every hidden
/// vector, making segments containing it linearly separable from the rest.
#[derive(Debug, Clone)]
pub struct Sentinel {
    pub token: TokenId,
    pub shift: f64,
    pub components: Range<usize>,
}

/// Encoder whose hidden vectors are a pure hash of (seed, token id,
/// position), each component in [-1, 1]. Optional sentinels inject a planted
/// signal for end-to-end pipeline tests. Same inputs always produce the same
/// hidden states.
#[derive(Debug, Clone)]
pub struct MockEncoder<F: Scalar> {
    dim: usize,
    max_len: usize,
    seed: u64,
    sentinels: Vec<Sentinel>,
    _marker: PhantomData<F>,
}

impl<F: Scalar> MockEncoder<F> {
    pub fn new(dim: usize, max_len: usize, seed: u64) -> Self {
        MockEncoder {
            dim,
            max_len,
            seed,
            sentinels: Vec::new(),
            _marker: PhantomData,
        }
    }

    /// Shift the first quarter of every hidden vector by 2.0 whenever
    /// `token` occurs in the segment.
    pub fn with_sentinel(mut self, token: TokenId) -> Self {
        let quarter = (self.dim / 4).max(1);
        self.sentinels.push(Sentinel {
            token,
            shift: 2.0,
            components: 0..quarter,
        });
        self
    }

    pub fn with_custom_sentinel(mut self, sentinel: Sentinel) -> Self {
        self.sentinels.push(sentinel);
        self
    }
}

/// Avalanche mix of the inputs mapped to [-1, 1].
fn hash_unit(seed: u64, token: u64, position: u64, component: u64) -> f64 {
    let mut x = seed;
    for v in [token, position, component] {
        x = splitmix(x ^ splitmix(v));
    }
    // 53 significant bits into [0, 1), then center.
    let unit = (x >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * unit - 1.0
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl<F: Scalar> Encoder<F> for MockEncoder<F> {
    fn embedding_dim(&self) -> usize {
        self.dim
    }

    fn max_len(&self) -> usize {
        self.max_len
    }

    fn encode(&self, token_ids: &[TokenId]) -> Result<Array2<F>, EncodeError> {
        if token_ids.is_empty() {
            return Err(EncodeError::EmptySegment);
        }
        if token_ids.len() > self.max_len {
            return Err(EncodeError::TooLong {
                len: token_ids.len(),
                max_len: self.max_len,
            });
        }
        let mut hidden = Array2::from_shape_fn((token_ids.len(), self.dim), |(p, c)| {
            F::cast(hash_unit(
                self.seed,
                token_ids[p].0 as u64,
                p as u64,
                c as u64,
            ))
        });
        for sentinel in &self.sentinels {
            if token_ids.contains(&sentinel.token) {
                let shift = F::cast(sentinel.shift);
                let mut block = hidden.slice_mut(ndarray::s![.., sentinel.components.clone()]);
                block += shift;
            }
        }
        Ok(hidden)
    }
}
