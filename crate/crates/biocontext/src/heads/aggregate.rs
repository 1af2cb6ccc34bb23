//! Evidence aggregation: combine per-segment embeddings into one pair
//! embedding before classification.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Normalized inverse-distance weights. Distances are shifted by one before
/// inversion so same-sentence evidence (distance 0) stays finite:
/// `w_i = (d_i + 1)^-1 / sum_j (d_j + 1)^-1`.
pub fn inverse_distance_weights<F: Scalar>(distances: &[usize]) -> Vec<F> {
    let inv: Vec<F> = distances
        .iter()
        .map(|&d| F::one() / F::cast(d as f64 + 1.0))
        .collect();
    let total: F = inv.iter().copied().sum();
    inv.into_iter().map(|v| v / total).collect()
}

/// How per-segment embeddings are combined in aggregation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    /// Unweighted mean of the available embeddings.
    Average,
    /// The single nearest embedding; ties already resolved by evidence order.
    Nearest,
    /// Inverse-distance weighted mean.
    InverseDistance,
    /// Learned affine map over the concatenation of the k nearest
    /// embeddings (zero-padded when fewer are available).
    Parameterized,
}

/// Affine map `dim * k -> dim` behind [`Aggregator::Parameterized`].
#[derive(Debug, Clone, PartialEq)]
pub struct AggMap<F: Scalar> {
    w: Array2<F>, // [dim, k * dim]
    b: Array1<F>,
    k: usize,
}

#[derive(Debug, Clone)]
pub struct AggMapGrads<F: Scalar> {
    pub w: Array2<F>,
    pub b: Array1<F>,
}

impl<F: Scalar> AggMap<F> {
    pub fn new(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / ((k * dim) as f64).sqrt();
        AggMap {
            w: Array2::from_shape_fn((dim, k * dim), |_| {
                F::cast((rng.random::<f64>() * 2.0 - 1.0) * bound)
            }),
            b: Array1::zeros(dim),
            k,
        }
    }

    /// The exact map that returns the first (nearest) slot unchanged:
    /// identity block in slot one, zeros elsewhere.
    pub fn identity_on_first_slot(dim: usize, k: usize) -> Self {
        let mut w = Array2::zeros((dim, k * dim));
        for i in 0..dim {
            w[[i, i]] = F::one();
        }
        AggMap {
            w,
            b: Array1::zeros(dim),
            k,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// Concatenate up to k embeddings in evidence order, zero-padding the
    /// missing slots.
    pub fn pack(&self, embeddings: &[Array1<F>]) -> Array1<F> {
        let dim = self.dim();
        let mut z = Array1::zeros(self.k * dim);
        for (slot, emb) in embeddings.iter().take(self.k).enumerate() {
            z.slice_mut(ndarray::s![slot * dim..(slot + 1) * dim])
                .assign(emb);
        }
        z
    }

    pub fn forward(&self, packed: &Array1<F>) -> Array1<F> {
        self.w.dot(packed) + &self.b
    }

    /// Gradients given d(loss)/d(output).
    pub fn backward(&self, packed: &Array1<F>, doutput: &Array1<F>) -> AggMapGrads<F> {
        let dout_col = doutput.view().insert_axis(ndarray::Axis(1));
        let packed_row = packed.view().insert_axis(ndarray::Axis(0));
        AggMapGrads {
            w: dout_col.dot(&packed_row),
            b: doutput.clone(),
        }
    }

    /// Batch forward: one packed vector per row.
    pub fn forward_batch(&self, packed: &Array2<F>) -> Array2<F> {
        packed.dot(&self.w.t()) + &self.b
    }

    /// Batch gradients given d(loss)/d(outputs), rows matching `packed`.
    pub fn backward_batch(&self, packed: &Array2<F>, doutputs: &Array2<F>) -> AggMapGrads<F> {
        AggMapGrads {
            w: doutputs.t().dot(packed),
            b: doutputs.sum_axis(ndarray::Axis(0)),
        }
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn flat_params(&self) -> Array1<F> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend(self.w.iter().copied());
        out.extend(self.b.iter().copied());
        Array1::from_vec(out)
    }

    pub fn set_flat_params(&mut self, params: &Array1<F>) {
        assert_eq!(params.len(), self.n_params(), "parameter count mismatch");
        let mut iter = params.iter().copied();
        for v in self.w.iter_mut() {
            *v = iter.next().expect("sized above");
        }
        for v in self.b.iter_mut() {
            *v = iter.next().expect("sized above");
        }
    }
}

impl<F: Scalar> AggMapGrads<F> {
    pub fn flat(&self) -> Array1<F> {
        let mut out = Vec::with_capacity(self.w.len() + self.b.len());
        out.extend(self.w.iter().copied());
        out.extend(self.b.iter().copied());
        Array1::from_vec(out)
    }
}

/// Combine embeddings (already sorted nearest-first, with distances) into
/// one vector. Returns the vector and the per-input mixing weight used,
/// which is the linearization of the combination for the first three modes
/// and empty for the learned map.
pub fn aggregate<F: Scalar>(
    embeddings: &[Array1<F>],
    distances: &[usize],
    aggregator: Aggregator,
    map: Option<&AggMap<F>>,
) -> (Array1<F>, Vec<F>) {
    debug_assert_eq!(embeddings.len(), distances.len());
    debug_assert!(!embeddings.is_empty(), "aggregate needs evidence");
    match aggregator {
        Aggregator::Average => {
            let n = F::cast(embeddings.len() as f64);
            let mut out = Array1::zeros(embeddings[0].len());
            for e in embeddings {
                out += e;
            }
            out.mapv_inplace(|v| v / n);
            (out, vec![F::one() / n; embeddings.len()])
        }
        Aggregator::Nearest => {
            let mut weights = vec![F::zero(); embeddings.len()];
            weights[0] = F::one();
            (embeddings[0].clone(), weights)
        }
        Aggregator::InverseDistance => {
            let weights = inverse_distance_weights::<F>(distances);
            let mut out = Array1::zeros(embeddings[0].len());
            for (e, &w) in embeddings.iter().zip(&weights) {
                out.scaled_add(w, e);
            }
            (out, weights)
        }
        Aggregator::Parameterized => {
            let map = map.expect("parameterized aggregation requires a map");
            let packed = map.pack(embeddings);
            (map.forward(&packed), Vec::new())
        }
    }
}
