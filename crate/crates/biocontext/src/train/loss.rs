//! Class-weighted binary cross-entropy on logits.

use ndarray::Array1;

use crate::heads::sigmoid;
use crate::scalar::Scalar;

/// Mean BCE-with-logits where positive examples are scaled by `pos_weight`
/// to counter class imbalance (typically the negative:positive ratio of the
/// training split).
#[derive(Debug, Clone, Copy)]
pub struct WeightedBce<F: Scalar> {
    pub pos_weight: F,
}

impl<F: Scalar> WeightedBce<F> {
    pub fn forward(&self, logits: &Array1<F>, targets: &Array1<F>) -> F {
        debug_assert_eq!(logits.len(), targets.len());
        let n = F::cast(logits.len() as f64);
        logits
            .iter()
            .zip(targets)
            .map(|(&z, &y)| {
                // Stable: max(z, 0) - z*y' + ln(1 + e^-|z|), positive term
                // weighted. Split the cross-entropy into its two class terms
                // so the weight applies only to the positive one.
                let log_sig = -softplus(-z); // ln(sigmoid(z))
                let log_one_minus = -softplus(z); // ln(1 - sigmoid(z))
                -(self.pos_weight * y * log_sig + (F::one() - y) * log_one_minus)
            })
            .sum::<F>()
            / n
    }

    /// d(loss)/d(logits).
    pub fn backward(&self, logits: &Array1<F>, targets: &Array1<F>) -> Array1<F> {
        debug_assert_eq!(logits.len(), targets.len());
        let n = F::cast(logits.len() as f64);
        Array1::from_shape_fn(logits.len(), |i| {
            let s = sigmoid(logits[i]);
            let y = targets[i];
            (self.pos_weight * y * (s - F::one()) + (F::one() - y) * s) / n
        })
    }
}

/// ln(1 + e^x) without overflow.
fn softplus<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x + (F::one() + (-x).exp()).ln()
    } else {
        (F::one() + x.exp()).ln()
    }
}
