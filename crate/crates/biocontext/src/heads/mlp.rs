//! Pair classifier: one hidden tanh layer over a classification embedding,
//! producing a single positive-class logit.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Numerically stable logistic function.
pub fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier<F: Scalar> {
    w1: Array2<F>, // [hidden, in]
    b1: Array1<F>,
    w2: Array1<F>, // hidden -> logit
    b2: F,
    dropout: f64,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<F: Scalar> {
    input: Array2<F>,
    hidden: Array2<F>,  // tanh output, before dropout
    dropped: Array2<F>, // after dropout (equals hidden in eval mode)
    pub logits: Array1<F>,
}

#[derive(Debug, Clone)]
pub struct MlpGrads<F: Scalar> {
    pub w1: Array2<F>,
    pub b1: Array1<F>,
    pub w2: Array1<F>,
    pub b2: F,
}

impl<F: Scalar> MlpClassifier<F> {
    /// Hidden width equals the input width; weights start uniform in
    /// [-1/sqrt(in), 1/sqrt(in)], biases at zero.
    pub fn new(dim: usize, dropout: f64, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let mut next = || F::cast((rng.random::<f64>() * 2.0 - 1.0) * bound);
        let w1 = Array2::from_shape_fn((dim, dim), |_| next());
        let w2 = Array1::from_shape_fn(dim, |_| next());
        MlpClassifier {
            w1,
            b1: Array1::zeros(dim),
            w2,
            b2: F::zero(),
            dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    /// Single-example logit, no dropout.
    pub fn forward(&self, x: &Array1<F>) -> F {
        let hidden = (self.w1.dot(x) + &self.b1).mapv_into(|v| v.tanh());
        hidden.dot(&self.w2) + self.b2
    }

    /// Batch forward (rows are examples). With a generator, hidden units are
    /// dropped at the configured rate and survivors rescaled; without one
    /// the pass is deterministic eval.
    pub fn forward_batch(
        &self,
        input: &Array2<F>,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> MlpCache<F> {
        let hidden = (input.dot(&self.w1.t()) + &self.b1).mapv_into(|v| v.tanh());
        let dropped = match dropout_rng {
            Some(rng) if self.dropout > 0.0 => {
                let keep = 1.0 - self.dropout;
                let scale = F::cast(1.0 / keep);
                let mask = Array2::from_shape_fn(hidden.raw_dim(), |_| {
                    if rng.random::<f64>() < keep {
                        scale
                    } else {
                        F::zero()
                    }
                });
                &hidden * &mask
            }
            _ => hidden.clone(),
        };
        let logits = dropped.dot(&self.w2) + self.b2;
        MlpCache {
            input: input.clone(),
            hidden,
            dropped,
            logits,
        }
    }

    /// Gradients of a scalar loss given d(loss)/d(logit) per example, plus
    /// the gradient with respect to the inputs (needed when an upstream
    /// aggregation map is being trained).
    pub fn backward(&self, cache: &MlpCache<F>, dlogits: &Array1<F>) -> (MlpGrads<F>, Array2<F>) {
        let dlogits_col = dlogits.view().insert_axis(Axis(1));
        // logit = dropped . w2 + b2
        let dw2 = cache.dropped.t().dot(dlogits);
        let db2 = dlogits.sum();
        let mut dhidden = dlogits_col.dot(&self.w2.view().insert_axis(Axis(0)));
        // Dropout mask (with its rescale) is dropped/hidden elementwise; the
        // mask is recovered rather than stored.
        ndarray::Zip::from(&mut dhidden)
            .and(&cache.dropped)
            .and(&cache.hidden)
            .for_each(|d, &dr, &h| {
                let mask = if h == F::zero() {
                    // tanh output can be exactly zero; dropout keeps it zero
                    // either way, so pick the kept-unit derivative.
                    if dr == F::zero() {
                        F::one()
                    } else {
                        dr / h
                    }
                } else {
                    dr / h
                };
                *d = *d * mask * (F::one() - h * h);
            });
        let dw1 = dhidden.t().dot(&cache.input);
        let db1 = dhidden.sum_axis(Axis(0));
        let dinput = dhidden.dot(&self.w1);
        (
            MlpGrads {
                w1: dw1,
                b1: db1,
                w2: dw2,
                b2: db2,
            },
            dinput,
        )
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn flat_params(&self) -> Array1<F> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend(self.w1.iter().copied());
        out.extend(self.b1.iter().copied());
        out.extend(self.w2.iter().copied());
        out.push(self.b2);
        Array1::from_vec(out)
    }

    pub fn set_flat_params(&mut self, params: &Array1<F>) {
        assert_eq!(params.len(), self.n_params(), "parameter count mismatch");
        let mut iter = params.iter().copied();
        for v in self.w1.iter_mut() {
            *v = iter.next().expect("sized above");
        }
        for v in self.b1.iter_mut() {
            *v = iter.next().expect("sized above");
        }
        for v in self.w2.iter_mut() {
            *v = iter.next().expect("sized above");
        }
        self.b2 = iter.next().expect("sized above");
    }
}

impl<F: Scalar> MlpGrads<F> {
    pub fn flat(&self) -> Array1<F> {
        let mut out = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + 1);
        out.extend(self.w1.iter().copied());
        out.extend(self.b1.iter().copied());
        out.extend(self.w2.iter().copied());
        out.push(self.b2);
        Array1::from_vec(out)
    }
}
