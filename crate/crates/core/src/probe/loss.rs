use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::head::Target;

/// Softmax cross-entropy for one example: `(loss, d loss / d logits)`.
pub fn cross_entropy(logits: ArrayView1<'_, f64>, target: usize) -> Result<(f64, Array1<f64>)> {
    let c = logits.len();
    if c < 2 {
        return Err(Error::InvalidArgument(format!(
            "cross entropy needs at least 2 classes, got {c}"
        )));
    }
    if target >= c {
        return Err(Error::InvalidArgument(format!(
            "target {target} out of range for {c} classes"
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Array1<f64> = logits.mapv(|z| (z - max).exp());
    let total = exps.sum();
    let log_z = max + total.ln();
    let loss = log_z - logits[target];
    let mut grad = exps / total;
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// Mean over classes of the sigmoid binary cross-entropy.
pub fn binary_cross_entropy(
    logits: ArrayView1<'_, f64>,
    targets: ArrayView1<'_, f64>,
) -> Result<(f64, Array1<f64>)> {
    if logits.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.len(),
            found: targets.len(),
        });
    }
    if targets.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidArgument("BCE targets must be 0 or 1".into()));
    }
    let c = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array1::zeros(logits.len());
    for ((g, &z), &y) in grad.iter_mut().zip(logits.iter()).zip(targets.iter()) {
        // max(z, 0) - z*y + ln(1 + e^{-|z|})
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        *g = (sigmoid(z) - y) / c;
    }
    Ok((loss / c, grad))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss matching the target kind: cross-entropy for classes, BCE for
/// multi-label targets.
pub fn loss_for_target(logits: ArrayView1<'_, f64>, target: &Target) -> Result<(f64, Array1<f64>)> {
    match target {
        Target::Class(t) => cross_entropy(logits, *t),
        Target::Multi(y) => binary_cross_entropy(logits, y.view()),
    }
}
