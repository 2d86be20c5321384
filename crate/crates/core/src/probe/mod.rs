//! Linear probe heads over pooled frame sequences.
//!
//! A probe pools a sequence (plain mean, or learned attention average) and
//! applies one affine layer. In attention mode both the scoring vector and
//! the linear layer are trained jointly on one loss.

mod adam;
mod loss;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{binary_cross_entropy, cross_entropy, loss_for_target, sigmoid};
pub use train::{
    evaluate_head, predict, train_head, train_probe, EpochRecord, Example, TrainConfig,
    TrainedHead, TrainedProbe,
};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::head::{ParamGroup, Scorer, SequenceHead, Target};
use crate::pooling::{attention_pass, time_average, AttentionPass, AttentionPoolParams, Pooling};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbeParams {
    /// `C x d`
    pub weights: Array2<f64>,
    /// `C`
    pub bias: Array1<f64>,
}

impl LinearProbeParams {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: Array2::zeros((classes, dim)),
            bias: Array1::zeros(classes),
        }
    }

    /// Weights uniform in `(-1/sqrt(d), 1/sqrt(d))`, zero bias.
    pub fn init_uniform<R: Rng>(classes: usize, dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        Self {
            weights: Array2::from_shape_fn((classes, dim), |_| rng.gen_range(-bound..bound)),
            bias: Array1::zeros(classes),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }
}

/// `W x + b`.
pub fn linear_forward(x: ArrayView1<'_, f64>, p: &LinearProbeParams) -> Result<Array1<f64>> {
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: x.len(),
        });
    }
    if p.bias.len() != p.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: p.num_classes(),
            found: p.bias.len(),
        });
    }
    Ok(p.weights.dot(&x) + &p.bias)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledGradients {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Present only for time-weighted pooling.
    pub w_alpha: Option<Array1<f64>>,
    pub b_alpha: Option<f64>,
}

/// Gradients of a loss with respect to the probe and (if present) the
/// attention parameters, given `d loss / d logits`.
pub fn backward_pooled(
    frames: ArrayView2<'_, f32>,
    attention: Option<&AttentionPoolParams>,
    probe: &LinearProbeParams,
    logit_grad: ArrayView1<'_, f64>,
) -> Result<PooledGradients> {
    match attention {
        None => {
            let pooled = time_average(frames)?;
            backward_linear(&pooled.values, probe, logit_grad)
        }
        Some(att) => {
            let pass = attention_pass(frames, att)?;
            backward_attention(frames, &pass, probe, logit_grad)
        }
    }
}

fn backward_linear(
    x: &Array1<f64>,
    probe: &LinearProbeParams,
    logit_grad: ArrayView1<'_, f64>,
) -> Result<PooledGradients> {
    if logit_grad.len() != probe.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: probe.num_classes(),
            found: logit_grad.len(),
        });
    }
    if x.len() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: probe.dim(),
            found: x.len(),
        });
    }
    let g = logit_grad.to_owned();
    let weights = outer(&g, x);
    Ok(PooledGradients {
        weights,
        bias: g,
        w_alpha: None,
        b_alpha: None,
    })
}

fn backward_attention(
    frames: ArrayView2<'_, f32>,
    pass: &AttentionPass,
    probe: &LinearProbeParams,
    logit_grad: ArrayView1<'_, f64>,
) -> Result<PooledGradients> {
    let mut grads = backward_linear(&pass.pooled.values, probe, logit_grad)?;
    // d loss / d pooled
    let upstream = probe.weights.t().dot(&logit_grad);
    // d loss / d weight_t = upstream . x_t
    let per_frame: Vec<f64> = frames
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(upstream.iter()).map(|(&x, &u)| x as f64 * u).sum())
        .collect();
    let mean: f64 = pass
        .weights
        .iter()
        .zip(&per_frame)
        .map(|(a, s)| a * s)
        .sum();
    // softmax Jacobian: d loss / d score_t = a_t (s_t - sum_k a_k s_k)
    let mut w_alpha = Array1::<f64>::zeros(frames.ncols());
    let mut b_alpha = 0.0;
    for ((row, &a), &s) in frames.rows().into_iter().zip(pass.weights.iter()).zip(&per_frame) {
        let ds = a * (s - mean);
        b_alpha += ds;
        for (w, &x) in w_alpha.iter_mut().zip(row.iter()) {
            *w += ds * x as f64;
        }
    }
    grads.w_alpha = Some(w_alpha);
    grads.b_alpha = Some(b_alpha);
    Ok(grads)
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

/// Linear probe plus optional attention pooling; the trainable unit for
/// both T-A and T-WA probing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeHead {
    pub linear: LinearProbeParams,
    pub attention: Option<AttentionPoolParams>,
}

impl ProbeHead {
    pub fn init<R: Rng>(pooling: Pooling, classes: usize, dim: usize, rng: &mut R) -> Self {
        let linear = LinearProbeParams::init_uniform(classes, dim, rng);
        let attention = match pooling {
            Pooling::TimeAveraged => None,
            Pooling::TimeWeighted => Some(AttentionPoolParams::init_uniform(dim, rng)),
        };
        Self { linear, attention }
    }

    pub fn pooling(&self) -> Pooling {
        if self.attention.is_some() {
            Pooling::TimeWeighted
        } else {
            Pooling::TimeAveraged
        }
    }

    pub fn pool(&self, frames: ArrayView2<'_, f32>) -> Result<Array1<f64>> {
        Ok(match &self.attention {
            None => time_average(frames)?.values,
            Some(att) => attention_pass(frames, att)?.pooled.values,
        })
    }
}

impl Scorer for ProbeHead {
    fn num_classes(&self) -> usize {
        self.linear.num_classes()
    }

    fn logits(&self, frames: ArrayView2<'_, f32>) -> Result<Array1<f64>> {
        let pooled = self.pool(frames)?;
        linear_forward(pooled.view(), &self.linear)
    }
}

impl SequenceHead for ProbeHead {
    fn param_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.linear.weights.len(), self.linear.bias.len()];
        if let Some(att) = &self.attention {
            sizes.push(att.dim());
            sizes.push(1);
        }
        sizes
    }

    fn param_groups(&mut self) -> Vec<ParamGroup<'_>> {
        let mut groups = vec![
            ParamGroup {
                values: self.linear.weights.as_slice_mut().expect("standard layout"),
                decay: true,
            },
            ParamGroup {
                values: self.linear.bias.as_slice_mut().expect("standard layout"),
                decay: false,
            },
        ];
        if let Some(att) = &mut self.attention {
            groups.push(ParamGroup {
                values: att.w_alpha.as_slice_mut().expect("standard layout"),
                decay: true,
            });
            groups.push(ParamGroup {
                values: std::slice::from_mut(&mut att.b_alpha),
                decay: false,
            });
        }
        groups
    }

    fn accumulate_gradients(
        &self,
        frames: ArrayView2<'_, f32>,
        target: &Target,
        grads: &mut [Vec<f64>],
    ) -> Result<f64> {
        let (loss, g) = match &self.attention {
            None => {
                let x = time_average(frames)?.values;
                let logits = linear_forward(x.view(), &self.linear)?;
                let (loss, dz) = loss_for_target(logits.view(), target)?;
                (loss, backward_linear(&x, &self.linear, dz.view())?)
            }
            Some(att) => {
                let pass = attention_pass(frames, att)?;
                let logits = linear_forward(pass.pooled.values.view(), &self.linear)?;
                let (loss, dz) = loss_for_target(logits.view(), target)?;
                (loss, backward_attention(frames, &pass, &self.linear, dz.view())?)
            }
        };
        add_into(&mut grads[0], g.weights.iter());
        add_into(&mut grads[1], g.bias.iter());
        if let (Some(wa), Some(ba)) = (&g.w_alpha, g.b_alpha) {
            add_into(&mut grads[2], wa.iter());
            grads[3][0] += ba;
        }
        Ok(loss)
    }
}

fn add_into<'a>(dst: &mut [f64], src: impl Iterator<Item = &'a f64>) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
