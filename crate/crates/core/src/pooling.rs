//! Time pooling of frame sequences into a single vector.
//!
//! Two strategies: the plain mean over frames, and a learned soft-attention
//! average where each frame gets a scalar score `w . x_t + b`, the scores
//! are softmax-normalized over time, and the frames are averaged with those
//! weights. Arithmetic is carried out in `f64` regardless of storage width.

use ndarray::{Array1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    TimeAveraged,
    TimeWeighted,
}

impl Pooling {
    pub fn short_name(self) -> &'static str {
        match self {
            Pooling::TimeAveraged => "ta",
            Pooling::TimeWeighted => "twa",
        }
    }
}

/// Learned scoring parameters for time-weighted pooling (`d + 1` values).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionPoolParams {
    pub w_alpha: Array1<f64>,
    pub b_alpha: f64,
}

impl AttentionPoolParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            w_alpha: Array1::zeros(dim),
            b_alpha: 0.0,
        }
    }

    /// `w_alpha` uniform in `(-1/sqrt(d), 1/sqrt(d))`, zero bias.
    pub fn init_uniform<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        Self {
            w_alpha: Array1::from_shape_fn(dim, |_| rng.gen_range(-bound..bound)),
            b_alpha: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w_alpha.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.dim() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    pub values: Array1<f64>,
    pub source: Pooling,
}

fn require_frames(frames: &ArrayView2<'_, f32>) -> Result<()> {
    if frames.nrows() == 0 {
        return Err(Error::DegenerateInput("sequence has no frames".into()));
    }
    Ok(())
}

pub fn time_average(frames: ArrayView2<'_, f32>) -> Result<PooledVector> {
    require_frames(&frames)?;
    let mut acc = Array1::<f64>::zeros(frames.ncols());
    for row in frames.rows() {
        for (a, &v) in acc.iter_mut().zip(row.iter()) {
            *a += v as f64;
        }
    }
    acc /= frames.nrows() as f64;
    Ok(PooledVector {
        values: acc,
        source: Pooling::TimeAveraged,
    })
}

/// Raw per-frame scores `w_alpha . x_t + b_alpha`.
pub fn attention_scores(
    frames: ArrayView2<'_, f32>,
    params: &AttentionPoolParams,
) -> Result<Array1<f64>> {
    if frames.ncols() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: frames.ncols(),
        });
    }
    Ok(frames
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(params.w_alpha.iter())
                .map(|(&x, &w)| x as f64 * w)
                .sum::<f64>()
                + params.b_alpha
        })
        .collect())
}

/// Numerically stable softmax over the time axis.
pub fn softmax_over_time(scores: &[f64]) -> Result<Array1<f64>> {
    if scores.is_empty() {
        return Err(Error::DegenerateInput("softmax over zero frames".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN attention score".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Array1<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total = out.sum();
    out /= total;
    Ok(out)
}

/// Intermediate values of a time-weighted pooling pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct AttentionPass {
    pub weights: Array1<f64>,
    pub pooled: PooledVector,
}

pub fn attention_pass(
    frames: ArrayView2<'_, f32>,
    params: &AttentionPoolParams,
) -> Result<AttentionPass> {
    require_frames(&frames)?;
    let scores = attention_scores(frames, params)?;
    let weights = softmax_over_time(scores.as_slice().expect("contiguous"))?;
    let mut acc = Array1::<f64>::zeros(frames.ncols());
    for (row, &a) in frames.rows().into_iter().zip(weights.iter()) {
        for (o, &v) in acc.iter_mut().zip(row.iter()) {
            *o += a * v as f64;
        }
    }
    Ok(AttentionPass {
        weights,
        pooled: PooledVector {
            values: acc,
            source: Pooling::TimeWeighted,
        },
    })
}

pub fn time_weighted_average(
    frames: ArrayView2<'_, f32>,
    params: &AttentionPoolParams,
) -> Result<PooledVector> {
    Ok(attention_pass(frames, params)?.pooled)
}
