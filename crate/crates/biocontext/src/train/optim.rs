//! Adam over a flat parameter vector.

use ndarray::Array1;

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Adam<F: Scalar> {
    lr: F,
    beta1: F,
    beta2: F,
    eps: F,
    m: Array1<F>,
    v: Array1<F>,
    t: i32,
}

impl<F: Scalar> Adam<F> {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Adam {
            lr: F::cast(lr),
            beta1: F::cast(0.9),
            beta2: F::cast(0.999),
            eps: F::cast(1e-8),
            m: Array1::zeros(n_params),
            v: Array1::zeros(n_params),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut Array1<F>, grads: &Array1<F>) {
        debug_assert_eq!(params.len(), grads.len());
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bias1 = F::one() - self.beta1.powi(self.t);
        let bias2 = F::one() - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (F::one() - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (F::one() - self.beta2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
