//! Accuracy, macro mean average precision, random baselines and sweep
//! selection.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::head::HeadKind;
use crate::store::{LabelSpace, TaskKind};

/// Ground truth for a batch of predictions.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// One class index per row.
    Classes(Vec<usize>),
    /// `M x C` indicator matrix.
    Binary(Array2<u8>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(v) => v.len(),
            Targets::Binary(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    pub scores: Array2<f64>,
    pub targets: Targets,
}

impl PredictionBatch {
    pub fn new(scores: Array2<f64>, targets: Targets) -> Result<Self> {
        if scores.nrows() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.nrows(),
                found: targets.len(),
            });
        }
        if let Targets::Binary(m) = &targets {
            if m.ncols() != scores.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: scores.ncols(),
                    found: m.ncols(),
                });
            }
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite prediction score".into()));
        }
        Ok(Self { scores, targets })
    }

    /// Accuracy for classification batches, mAP for detection batches.
    pub fn task_metric(&self) -> Result<f64> {
        match self.targets {
            Targets::Classes(_) => accuracy(self),
            Targets::Binary(_) => mean_average_precision(self),
        }
    }
}

/// Index of the maximal entry; ties go to the lowest index.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(batch: &PredictionBatch) -> Result<f64> {
    let Targets::Classes(targets) = &batch.targets else {
        return Err(Error::InvalidArgument(
            "accuracy needs a classification batch".into(),
        ));
    };
    if targets.is_empty() {
        return Err(Error::DegenerateInput("empty prediction batch".into()));
    }
    let correct = batch
        .scores
        .rows()
        .into_iter()
        .zip(targets)
        .filter(|(row, &t)| argmax(*row) == t)
        .count();
    Ok(correct as f64 / targets.len() as f64)
}

/// Non-interpolated average precision of one ranked list.
///
/// Items are ranked by descending score. Items sharing a score form one
/// threshold: every positive inside a tied block is credited with the
/// precision measured at the end of the block. With distinct scores this is
/// the mean over positives of precision at the positive's rank.
///
/// Returns `None` when there are no positives.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positives.len(), "scores and labels differ in length");
    let total_pos = positives.iter().filter(|&&p| p).count();
    if total_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut sum = 0.0;
    let mut hits = 0usize;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let block_hits = order[start..end].iter().filter(|&&i| positives[i]).count();
        if block_hits > 0 {
            hits += block_hits;
            let precision = hits as f64 / end as f64;
            sum += block_hits as f64 * precision;
        }
        start = end;
    }
    Some(sum / total_pos as f64)
}

/// Per-class AP; `None` for classes without positives.
pub fn per_class_average_precision(batch: &PredictionBatch) -> Result<Vec<Option<f64>>> {
    let Targets::Binary(targets) = &batch.targets else {
        return Err(Error::InvalidArgument("mAP needs a detection batch".into()));
    };
    Ok((0..batch.scores.ncols())
        .map(|c| {
            let scores: Vec<f64> = batch.scores.column(c).to_vec();
            let pos: Vec<bool> = targets.column(c).iter().map(|&v| v != 0).collect();
            average_precision(&scores, &pos)
        })
        .collect())
}

/// Macro mean of AP over the classes that have at least one positive.
pub fn mean_average_precision(batch: &PredictionBatch) -> Result<f64> {
    let aps: Vec<f64> = per_class_average_precision(batch)?
        .into_iter()
        .flatten()
        .collect();
    if aps.is_empty() {
        return Err(Error::DegenerateInput(
            "no class has a positive example".into(),
        ));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Chance-level score for a test set.
///
/// Classification: the better of always predicting the most frequent label
/// and uniform guessing (`1/C`). Detection: mAP of a constant scorer, which
/// is the mean positive prevalence over classes with positives.
pub fn random_baseline(label_space: &LabelSpace, targets: &Targets) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::DegenerateInput("empty target set".into()));
    }
    let c = label_space.num_classes();
    match (label_space.task_kind, targets) {
        (TaskKind::SingleLabelClassification, Targets::Classes(t)) => {
            let mut counts = vec![0usize; c];
            for &label in t {
                if label >= c {
                    return Err(Error::Validation(format!(
                        "label {label} outside label space of {c}"
                    )));
                }
                counts[label] += 1;
            }
            let majority = *counts.iter().max().expect("c >= 1") as f64 / t.len() as f64;
            Ok(majority.max(1.0 / c as f64))
        }
        (TaskKind::MultiLabelDetection, Targets::Binary(m)) => {
            let batch = PredictionBatch::new(Array2::zeros(m.dim()), targets.clone())?;
            mean_average_precision(&batch)
        }
        _ => Err(Error::InvalidArgument(
            "targets do not match the task kind".into(),
        )),
    }
}

/// Dev/test outcome of one `(layer, learning rate)` training cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub layer: u32,
    pub learning_rate: f64,
    pub head: HeadKind,
    pub dev_metric: f64,
    pub test_metric: f64,
}

/// Ordering used for selection: higher dev metric first, then lower layer,
/// then lower learning rate.
fn selection_order(a: &SweepResult, b: &SweepResult) -> Ordering {
    b.dev_metric
        .total_cmp(&a.dev_metric)
        .then(a.layer.cmp(&b.layer))
        .then(a.learning_rate.total_cmp(&b.learning_rate))
}

pub fn select_best(results: &[SweepResult]) -> Result<SweepResult> {
    results
        .iter()
        .min_by(|a, b| selection_order(a, b))
        .copied()
        .ok_or_else(|| Error::DegenerateInput("no sweep results to select from".into()))
}
