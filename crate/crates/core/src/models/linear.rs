//! L2-regularised logistic regression trained by full-batch gradient
//! descent.

use serde::{Deserialize, Serialize};

use super::encoding::Matrix;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

/// Loss and gradient of the mean log-loss plus `l2 / 2 * |w|^2` (the
/// intercept is not penalised). Returns `(loss, grad_w, grad_b)`.
pub fn loss_and_gradient(
    x: &Matrix,
    y: &[u8],
    weights: &[f64],
    intercept: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.rows as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; x.cols];
    let mut grad_b = 0.0;
    for (i, &label) in y.iter().enumerate().take(x.rows) {
        let row = x.row(i);
        let z = intercept + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        let yi = f64::from(label);
        // -[y log p + (1-y) log(1-p)] = softplus(z) - y z
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        for (g, a) in grad.iter_mut().zip(row) {
            *g += r * a;
        }
        grad_b += r;
    }
    loss /= n;
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss, grad, grad_b / n)
}

pub fn fit(x: &Matrix, y: &[u8], learning_rate: f64, iterations: usize, l2: f64) -> LinearModel {
    let mut model = LinearModel {
        weights: vec![0.0; x.cols],
        intercept: 0.0,
    };
    for _ in 0..iterations {
        let (_, grad, grad_b) = loss_and_gradient(x, y, &model.weights, model.intercept, l2);
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= learning_rate * g;
        }
        model.intercept -= learning_rate * grad_b;
    }
    model
}
