//! Joins a manifest with one layer's embeddings to produce training examples.

use std::collections::HashMap;
use std::path::Path;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::head::Target;
use crate::metrics::Targets;
use crate::probe::Example;
use crate::store::{read_container, DatasetManifest, ExampleRecord, FrameEmbeddingSequence, LabelSpace, Split, TaskKind};

pub fn target_for(label_space: &LabelSpace, record: &ExampleRecord) -> Target {
    match label_space.task_kind {
        TaskKind::SingleLabelClassification => Target::Class(record.labels[0]),
        TaskKind::MultiLabelDetection => {
            let mut y = Array1::zeros(label_space.num_classes());
            for &l in &record.labels {
                y[l] = 1.0;
            }
            Target::Multi(y)
        }
    }
}

/// Evaluation targets of one split, in manifest order.
pub fn split_targets(manifest: &DatasetManifest, split: Split) -> Targets {
    let records: Vec<&ExampleRecord> = manifest.records_in(split).collect();
    match manifest.label_space.task_kind {
        TaskKind::SingleLabelClassification => Targets::Classes(records.iter().map(|r| r.labels[0]).collect()),
        TaskKind::MultiLabelDetection => {
            let c = manifest.label_space.num_classes();
            let mut y = ndarray::Array2::zeros((records.len(), c));
            for (i, r) in records.iter().enumerate() {
                for &l in &r.labels {
                    y[[i, l]] = 1u8;
                }
            }
            Targets::Binary(y)
        }
    }
}

/// All sequences of one layer, indexed by example id.
#[derive(Debug, Clone)]
pub struct LayerEmbeddings {
    pub layer: u32,
    pub dim: usize,
    by_id: HashMap<String, FrameEmbeddingSequence>,
}

impl LayerEmbeddings {
    pub fn from_sequences(layer: u32, sequences: Vec<FrameEmbeddingSequence>) -> Result<Self> {
        let dim = sequences.first().map_or(0, |s| s.dim());
        let mut by_id = HashMap::with_capacity(sequences.len());
        for seq in sequences {
            if seq.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: seq.dim(),
                });
            }
            if let Some(prev) = by_id.insert(seq.example_id.clone(), seq) {
                return Err(Error::Validation(format!(
                    "example {:?} appears twice in layer {layer}",
                    prev.example_id
                )));
            }
        }
        Ok(Self { layer, dim, by_id })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let seqs = read_container(path)?;
        let layer = crate::store::layer_from_path(path).unwrap_or(0);
        Self::from_sequences(layer, seqs)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FrameEmbeddingSequence> {
        self.by_id.get(id)
    }

    /// Every manifest record must have embeddings here.
    pub fn check_covers(&self, manifest: &DatasetManifest) -> Result<()> {
        let missing: Vec<&str> = manifest
            .records
            .iter()
            .filter(|r| !self.by_id.contains_key(&r.example_id))
            .map(|r| r.example_id.as_str())
            .take(5)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "layer {} lacks embeddings for {} (first missing ids: {})",
                self.layer,
                manifest
                    .records
                    .iter()
                    .filter(|r| !self.by_id.contains_key(&r.example_id))
                    .count(),
                missing.join(", ")
            )))
        }
    }

    /// Examples of `split`, in manifest order.
    pub fn examples<'a>(&'a self, manifest: &DatasetManifest, split: Split) -> Result<Vec<Example<'a>>> {
        manifest
            .records_in(split)
            .map(|r| {
                let seq = self.by_id.get(&r.example_id).ok_or_else(|| {
                    Error::Validation(format!("layer {} lacks embeddings for {:?}", self.layer, r.example_id))
                })?;
                Ok(Example {
                    frames: seq.frames.view(),
                    target: target_for(&manifest.label_space, r),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn manifest(kind: TaskKind) -> DatasetManifest {
        let space = LabelSpace {
            task_kind: kind,
            label_names: vec!["a".into(), "b".into(), "c".into()],
        };
        let rec = |id: &str, labels: Vec<usize>, split| ExampleRecord {
            example_id: id.into(),
            labels,
            split,
            duration_s: 1.0,
        };
        let multi = kind == TaskKind::MultiLabelDetection;
        DatasetManifest::new(
            "t",
            space,
            vec![
                rec("x", vec![2], Split::Train),
                rec("y", if multi { vec![0, 1] } else { vec![1] }, Split::Test),
                rec("z", if multi { vec![] } else { vec![0] }, Split::Train),
            ],
        )
        .unwrap()
    }

    fn layer(ids: &[&str]) -> LayerEmbeddings {
        let seqs = ids
            .iter()
            .enumerate()
            .map(|(i, id)| FrameEmbeddingSequence::new(*id, 4, Array2::from_elem((2, 3), i as f32), 20.0).unwrap())
            .collect();
        LayerEmbeddings::from_sequences(4, seqs).unwrap()
    }

    #[test]
    fn examples_follow_manifest_order() {
        let m = manifest(TaskKind::SingleLabelClassification);
        let emb = layer(&["z", "y", "x"]);
        emb.check_covers(&m).unwrap();
        let train = emb.examples(&m, Split::Train).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(train[0].target, Target::Class(2));
        assert_eq!(train[0].frames[[0, 0]], 2.0);
        assert_eq!(train[1].frames[[0, 0]], 0.0);
        assert_eq!(split_targets(&m, Split::Test), Targets::Classes(vec![1]));
    }

    #[test]
    fn multi_label_targets_are_indicator_vectors() {
        let m = manifest(TaskKind::MultiLabelDetection);
        let emb = layer(&["x", "y", "z"]);
        let test = emb.examples(&m, Split::Test).unwrap();
        assert_eq!(test[0].target, Target::Multi(Array1::from(vec![1.0, 1.0, 0.0])));
        let Targets::Binary(y) = split_targets(&m, Split::Train) else { panic!() };
        assert_eq!(y, ndarray::arr2(&[[0u8, 0, 1], [0, 0, 0]]));
    }

    #[test]
    fn missing_and_duplicate_ids_rejected() {
        let m = manifest(TaskKind::SingleLabelClassification);
        let emb = layer(&["x", "y"]);
        assert!(matches!(emb.check_covers(&m), Err(Error::Validation(_))));
        assert!(emb.examples(&m, Split::Train).is_err());
        let dup = vec![
            FrameEmbeddingSequence::new("x", 0, Array2::zeros((1, 2)), 20.0).unwrap(),
            FrameEmbeddingSequence::new("x", 0, Array2::zeros((1, 2)), 20.0).unwrap(),
        ];
        assert!(LayerEmbeddings::from_sequences(0, dup).is_err());
    }
}
