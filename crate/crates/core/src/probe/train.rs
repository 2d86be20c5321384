use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::{LinearProbeParams, ProbeHead};
use crate::error::{Error, Result};
use crate::head::{Scorer, SequenceHead, Target};
use crate::metrics::{PredictionBatch, Targets};
use crate::pooling::{AttentionPoolParams, Pooling};
use crate::store::{LabelSpace, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub pooling: Pooling,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            weight_decay: 1e-4,
            epochs: 100,
            batch_size: 64,
            seed: 0,
            pooling: Pooling::TimeAveraged,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument("weight decay must be non-negative".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// One labeled sequence.
#[derive(Debug, Clone)]
pub struct Example<'a> {
    pub frames: ArrayView2<'a, f32>,
    pub target: Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_metric: f64,
}

/// Snapshot of a head at its best dev epoch.
#[derive(Debug, Clone)]
pub struct TrainedHead<H> {
    pub head: H,
    /// 1-based.
    pub best_epoch: usize,
    pub dev_metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedProbe {
    pub probe: LinearProbeParams,
    pub attention: Option<AttentionPoolParams>,
    pub best_epoch: usize,
    pub dev_metric: f64,
}

impl TrainedProbe {
    pub fn head(&self) -> ProbeHead {
        ProbeHead {
            linear: self.probe.clone(),
            attention: self.attention.clone(),
        }
    }
}

/// Scores every example and pairs them with their targets.
pub fn predict<H: Scorer + ?Sized>(head: &H, examples: &[Example<'_>]) -> Result<PredictionBatch> {
    let c = head.num_classes();
    let mut scores = Array2::zeros((examples.len(), c));
    for (mut row, ex) in scores.rows_mut().into_iter().zip(examples) {
        row.assign(&head.logits(ex.frames)?);
    }
    PredictionBatch::new(scores, targets_of(examples, c)?)
}

pub(crate) fn targets_of(examples: &[Example<'_>], classes: usize) -> Result<Targets> {
    match examples.first().map(|e| &e.target) {
        None | Some(Target::Class(_)) => examples
            .iter()
            .map(|e| match e.target {
                Target::Class(t) if t < classes => Ok(t),
                Target::Class(t) => Err(Error::Validation(format!(
                    "label {t} outside {classes} classes"
                ))),
                Target::Multi(_) => Err(Error::Validation("mixed target kinds".into())),
            })
            .collect::<Result<Vec<_>>>()
            .map(Targets::Classes),
        Some(Target::Multi(_)) => {
            let mut m = Array2::<u8>::zeros((examples.len(), classes));
            for (i, e) in examples.iter().enumerate() {
                let Target::Multi(y) = &e.target else {
                    return Err(Error::Validation("mixed target kinds".into()));
                };
                if y.len() != classes {
                    return Err(Error::DimensionMismatch {
                        expected: classes,
                        found: y.len(),
                    });
                }
                for (c, &v) in y.iter().enumerate() {
                    m[[i, c]] = u8::from(v != 0.0);
                }
            }
            Ok(Targets::Binary(m))
        }
    }
}

/// Accuracy or mAP of `head` on `examples`, depending on the target kind.
pub fn evaluate_head<H: Scorer + ?Sized>(head: &H, examples: &[Example<'_>]) -> Result<f64> {
    predict(head, examples)?.task_metric()
}

/// Mini-batch Adam training with per-epoch dev evaluation.
///
/// The train order is reshuffled every epoch from `rng`. The returned head
/// is the snapshot with the highest dev metric; ties keep the earlier epoch.
pub fn train_head<H: SequenceHead, R: Rng>(
    mut head: H,
    train: &[Example<'_>],
    dev: &[Example<'_>],
    config: &TrainConfig,
    rng: &mut R,
) -> Result<(TrainedHead<H>, Vec<EpochRecord>)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::DegenerateInput("empty train split".into()));
    }
    if dev.is_empty() {
        return Err(Error::DegenerateInput("empty dev split".into()));
    }
    let adam = AdamConfig::new(config.learning_rate, config.weight_decay);
    let mut state = AdamState::new(&head.param_sizes());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    let mut best: Option<TrainedHead<H>> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = head.zero_gradients();
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += head.accumulate_gradients(train[i].frames, &train[i].target, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: batch_loss,
                });
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grads.iter_mut().flat_map(|g| g.iter_mut()) {
                *g *= scale;
            }
            adam_step(&mut head.param_groups(), &grads, &mut state, &adam);
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / train.len() as f64;
        let dev_metric = match evaluate_head(&head, dev) {
            Ok(m) => m,
            // diverged parameters produce non-finite scores
            Err(Error::InvalidArgument(_)) => {
                return Err(Error::Divergence {
                    epoch,
                    loss: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        curve.push(EpochRecord {
            epoch,
            train_loss,
            dev_metric,
        });
        if best.as_ref().is_none_or(|b| dev_metric > b.dev_metric) {
            best = Some(TrainedHead {
                head: head.clone(),
                best_epoch: epoch,
                dev_metric,
            });
        }
    }
    Ok((best.expect("at least one epoch"), curve))
}

fn check_targets(label_space: &LabelSpace, examples: &[Example<'_>]) -> Result<()> {
    let c = label_space.num_classes();
    for e in examples {
        match (&e.target, label_space.task_kind) {
            (Target::Class(t), TaskKind::SingleLabelClassification) if *t < c => {}
            (Target::Multi(y), TaskKind::MultiLabelDetection) if y.len() == c => {}
            _ => {
                return Err(Error::Validation(
                    "example target does not fit the label space".into(),
                ))
            }
        }
    }
    Ok(())
}

/// Trains a T-A or T-WA linear probe as configured by `config.pooling`.
pub fn train_probe(
    train: &[Example<'_>],
    dev: &[Example<'_>],
    label_space: &LabelSpace,
    config: &TrainConfig,
) -> Result<(TrainedProbe, Vec<EpochRecord>)> {
    let dim = train
        .first()
        .ok_or_else(|| Error::DegenerateInput("empty train split".into()))?
        .frames
        .ncols();
    let widths = train.iter().map(|e| e.frames.ncols());
    if let Some(bad) = widths.chain(dev.iter().map(|e| e.frames.ncols())).find(|&w| w != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad,
        });
    }
    check_targets(label_space, train)?;
    check_targets(label_space, dev)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let head = ProbeHead::init(config.pooling, label_space.num_classes(), dim, &mut rng);
    let (trained, curve) = train_head(head, train, dev, config, &mut rng)?;
    Ok((
        TrainedProbe {
            probe: trained.head.linear,
            attention: trained.head.attention,
            best_epoch: trained.best_epoch,
            dev_metric: trained.dev_metric,
        },
        curve,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand_distr::{Distribution, Normal};

    fn ls(c: usize) -> LabelSpace {
        LabelSpace {
            task_kind: TaskKind::SingleLabelClassification,
            label_names: (0..c).map(|i| i.to_string()).collect(),
        }
    }

    fn clusters(n: usize, seed: u64) -> Vec<(Array2<f32>, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0f32, 1.0).unwrap();
        (0..n)
            .map(|i| {
                let label = i % 2;
                let mean = if label == 0 { 2.0 } else { -2.0 };
                let f = Array2::from_shape_fn((4, 8), |_| mean + noise.sample(&mut rng));
                (f, label)
            })
            .collect()
    }

    fn examples(data: &[(Array2<f32>, usize)]) -> Vec<Example<'_>> {
        data.iter()
            .map(|(f, l)| Example {
                frames: f.view(),
                target: Target::Class(*l),
            })
            .collect()
    }

    #[test]
    fn empty_splits_rejected() {
        let data = clusters(4, 0);
        let ex = examples(&data);
        let cfg = TrainConfig::default();
        assert!(train_probe(&[], &ex, &ls(2), &cfg).is_err());
        assert!(matches!(
            train_probe(&ex, &[], &ls(2), &cfg),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn deterministic_curves() {
        let data = clusters(40, 1);
        let ex = examples(&data);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 8,
            seed: 42,
            ..Default::default()
        };
        let (a, ca) = train_probe(&ex, &ex, &ls(2), &cfg).unwrap();
        let (b, cb) = train_probe(&ex, &ex, &ls(2), &cfg).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(a, b);
    }

    #[test]
    fn best_epoch_snapshot_is_returned() {
        let data = clusters(40, 2);
        let ex = examples(&data);
        let cfg = TrainConfig {
            epochs: 6,
            batch_size: 8,
            learning_rate: 1e-2,
            pooling: Pooling::TimeWeighted,
            ..Default::default()
        };
        let (trained, curve) = train_probe(&ex, &ex, &ls(2), &cfg).unwrap();
        let best = curve
            .iter()
            .fold(None::<&EpochRecord>, |acc, r| match acc {
                Some(a) if a.dev_metric >= r.dev_metric => Some(a),
                _ => Some(r),
            })
            .unwrap();
        assert_eq!(trained.best_epoch, best.epoch);
        assert_eq!(trained.dev_metric, best.dev_metric);
        assert!(trained.attention.is_some());
        let again = evaluate_head(&trained.head(), &ex).unwrap();
        assert_eq!(again, trained.dev_metric);
    }

    #[test]
    fn divergence_is_reported() {
        let big = Array2::from_elem((2, 2), 1.0e30f32);
        let ex = vec![
            Example {
                frames: big.view(),
                target: Target::Class(0),
            },
            Example {
                frames: big.view(),
                target: Target::Class(1),
            },
        ];
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 2,
            learning_rate: 1e300,
            ..Default::default()
        };
        assert!(matches!(
            train_probe(&ex, &ex, &ls(2), &cfg),
            Err(Error::Divergence { .. })
        ));
    }
}
