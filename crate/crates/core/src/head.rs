//! Shared abstractions for trainable sequence classification heads.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pooling::Pooling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    LinearTa,
    LinearTwa,
    Esn,
    Bilstm,
}

impl HeadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::LinearTa => "linear_ta",
            HeadKind::LinearTwa => "linear_twa",
            HeadKind::Esn => "esn",
            HeadKind::Bilstm => "bilstm",
        }
    }

    pub fn pooling(self) -> Option<Pooling> {
        match self {
            HeadKind::LinearTa => Some(Pooling::TimeAveraged),
            HeadKind::LinearTwa => Some(Pooling::TimeWeighted),
            _ => None,
        }
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_ta" => Ok(HeadKind::LinearTa),
            "linear_twa" => Ok(HeadKind::LinearTwa),
            "esn" => Ok(HeadKind::Esn),
            "bilstm" => Ok(HeadKind::Bilstm),
            other => Err(Error::InvalidArgument(format!("unknown head kind {other:?}"))),
        }
    }
}

/// Training target of one example.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Single-label classification.
    Class(usize),
    /// Multi-label detection, one 0/1 entry per class.
    Multi(Array1<f64>),
}

/// A mutable view of one parameter tensor handed to the optimizer.
pub struct ParamGroup<'a> {
    pub values: &'a mut [f64],
    /// Whether decoupled weight decay applies (weights yes, biases no).
    pub decay: bool,
}

/// Anything that maps a frame sequence to one score per class.
pub trait Scorer {
    fn num_classes(&self) -> usize;

    fn logits(&self, frames: ArrayView2<'_, f32>) -> Result<Array1<f64>>;
}

/// A scorer trainable by gradient descent.
pub trait SequenceHead: Scorer + Clone + Send + Sync {

    /// Lengths of the parameter tensors, in `param_groups` order.
    fn param_sizes(&self) -> Vec<usize>;

    fn param_groups(&mut self) -> Vec<ParamGroup<'_>>;

    /// Adds the gradient of one example's loss into `grads` and returns
    /// the loss.
    fn accumulate_gradients(
        &self,
        frames: ArrayView2<'_, f32>,
        target: &Target,
        grads: &mut [Vec<f64>],
    ) -> Result<f64>;

    fn zero_gradients(&self) -> Vec<Vec<f64>> {
        self.param_sizes().into_iter().map(|n| vec![0.0; n]).collect()
    }
}
