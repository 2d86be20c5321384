//! Seeded synthetic embedding datasets used as fixtures.
//!
//! * `Separable`: every frame is its class mean plus unit Gaussian noise;
//!   class `c` has mean `separation * e_c`.
//! * `Needle`: frames are unit Gaussian noise except one random "needle"
//!   frame per example, whose dimension 0 holds a large marker and whose
//!   dimension 1 holds `+separation` (class 1) or `-separation` (class 0).
//! * `Multilabel`: each label is active with probability 0.4; an active
//!   label `c` adds `separation` to dimension `c` over a random run of
//!   frames.
//!
//! Layers are ordered from weakest to strongest signal: layer `i` of `L`
//! scales the separation by `(i + 1) / L`. Records are split 6:2:2 by index.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{write_container, DatasetManifest, ExampleRecord, FrameEmbeddingSequence, LabelSpace, Split, TaskKind};

pub const FRAME_STRIDE_MS: f64 = 20.0;
pub const NEEDLE_MARKER: f32 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Separable,
    Needle,
    Multilabel,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separable" => Ok(SynthKind::Separable),
            "needle" => Ok(SynthKind::Needle),
            "multilabel" => Ok(SynthKind::Multilabel),
            other => Err(Error::InvalidArgument(format!("unknown synthetic dataset kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub kind: SynthKind,
    pub examples: usize,
    pub dim: usize,
    pub frames: usize,
    pub classes: usize,
    pub separation: f64,
    pub layers: Vec<u32>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn separable(seed: u64) -> Self {
        Self {
            kind: SynthKind::Separable,
            examples: 200,
            dim: 8,
            frames: 10,
            classes: 2,
            separation: 3.0,
            layers: vec![0, 1],
            seed,
        }
    }

    pub fn needle(seed: u64) -> Self {
        Self {
            kind: SynthKind::Needle,
            examples: 1000,
            dim: 8,
            frames: 50,
            classes: 2,
            separation: 2.0,
            layers: vec![0],
            seed,
        }
    }

    pub fn multilabel(seed: u64) -> Self {
        Self {
            kind: SynthKind::Multilabel,
            examples: 200,
            dim: 8,
            frames: 20,
            classes: 3,
            separation: 3.0,
            layers: vec![0, 1],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.examples < 10 || self.dim == 0 || self.frames == 0 || self.layers.is_empty() {
            return Err(Error::InvalidArgument(
                "synthetic data needs >= 10 examples, positive dim and frames, and a layer".into(),
            ));
        }
        if self.kind != SynthKind::Multilabel && self.classes < 2 {
            return Err(Error::InvalidArgument("classification needs at least 2 classes".into()));
        }
        let needed = match self.kind {
            SynthKind::Needle => 2,
            _ => self.classes,
        };
        if self.dim < needed {
            return Err(Error::InvalidArgument(format!("dim must be at least {needed}")));
        }
        if self.kind == SynthKind::Needle && self.classes != 2 {
            return Err(Error::InvalidArgument("the needle dataset is binary".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    /// One sequence list per entry of `SynthConfig::layers`.
    pub layers: Vec<Vec<FrameEmbeddingSequence>>,
}

fn split_of(i: usize) -> Split {
    match i % 10 {
        0..=5 => Split::Train,
        6 | 7 => Split::Dev,
        _ => Split::Test,
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (d, t_len, c) = (config.dim, config.frames, config.classes);
    let task_kind = match config.kind {
        SynthKind::Multilabel => TaskKind::MultiLabelDetection,
        _ => TaskKind::SingleLabelClassification,
    };
    let label_space = LabelSpace {
        task_kind,
        label_names: (0..c).map(|k| format!("class{k}")).collect(),
    };
    let n_layers = config.layers.len();
    let mut records = Vec::with_capacity(config.examples);
    let mut layers: Vec<Vec<FrameEmbeddingSequence>> = vec![Vec::with_capacity(config.examples); n_layers];
    for i in 0..config.examples {
        let id = format!("ex{i:05}");
        let (labels, needle, runs) = match config.kind {
            SynthKind::Separable => (vec![i % c], 0, Vec::new()),
            SynthKind::Needle => (vec![i % 2], rng.gen_range(0..t_len), Vec::new()),
            SynthKind::Multilabel => {
                let mut labels = Vec::new();
                let mut runs = Vec::new();
                for k in 0..c {
                    if rng.gen_bool(0.4) {
                        let len = rng.gen_range(1..=t_len);
                        let start = rng.gen_range(0..=t_len - len);
                        labels.push(k);
                        runs.push((k, start, start + len));
                    }
                }
                (labels, 0, runs)
            }
        };
        let noise: Vec<Array2<f32>> = (0..n_layers)
            .map(|_| Array2::from_shape_simple_fn((t_len, d), || rng.sample::<f32, _>(StandardNormal)))
            .collect();
        for (li, (&layer, mut frames)) in config.layers.iter().zip(noise).enumerate() {
            let strength = (config.separation * (li + 1) as f64 / n_layers as f64) as f32;
            match config.kind {
                SynthKind::Separable => {
                    frames.column_mut(labels[0]).mapv_inplace(|v| v + strength);
                }
                SynthKind::Needle => {
                    frames[[needle, 0]] = NEEDLE_MARKER;
                    frames[[needle, 1]] = if labels[0] == 1 { strength } else { -strength };
                }
                SynthKind::Multilabel => {
                    for &(k, a, b) in &runs {
                        for t in a..b {
                            frames[[t, k]] += strength;
                        }
                    }
                }
            }
            layers[li].push(FrameEmbeddingSequence::new(id.clone(), layer, frames, FRAME_STRIDE_MS)?);
        }
        records.push(ExampleRecord {
            example_id: id,
            labels,
            split: split_of(i),
            duration_s: t_len as f64 * FRAME_STRIDE_MS / 1000.0,
        });
    }
    let name = match config.kind {
        SynthKind::Separable => "synthetic-separable",
        SynthKind::Needle => "synthetic-needle",
        SynthKind::Multilabel => "synthetic-multilabel",
    };
    Ok(SynthDataset {
        manifest: DatasetManifest::new(name, label_space, records)?,
        layers,
    })
}

#[derive(Debug, Clone)]
pub struct WrittenDataset {
    pub manifest: PathBuf,
    pub containers: Vec<PathBuf>,
}

impl SynthDataset {
    /// Writes `manifest.jsonl` (plus its header) and `layerNN.prbe` files.
    pub fn write(&self, dir: &Path) -> Result<WrittenDataset> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io_at(dir, e))?;
        let manifest = dir.join("manifest.jsonl");
        self.manifest.write(&manifest)?;
        let mut containers = Vec::with_capacity(self.layers.len());
        for seqs in &self.layers {
            let layer = seqs.first().map_or(0, |s| s.layer);
            let path = dir.join(format!("layer{layer:02}.prbe"));
            write_container(seqs, &path)?;
            containers.push(path);
        }
        Ok(WrittenDataset { manifest, containers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{load_manifest, read_container};

    #[test]
    fn generation_is_seeded() {
        let a = generate(&SynthConfig::separable(7)).unwrap();
        let b = generate(&SynthConfig::separable(7)).unwrap();
        let c = generate(&SynthConfig::separable(8)).unwrap();
        assert_eq!(a.layers, b.layers);
        assert_ne!(a.layers, c.layers);
        assert_eq!(a.manifest.split_counts().ratio(), "6:2:2");
    }

    #[test]
    fn needle_frame_carries_marker_and_sign() {
        let ds = generate(&SynthConfig::needle(1)).unwrap();
        for (seq, rec) in ds.layers[0].iter().zip(&ds.manifest.records) {
            let hits: Vec<usize> = (0..50).filter(|&t| seq.frames[[t, 0]] == NEEDLE_MARKER).collect();
            assert_eq!(hits.len(), 1);
            let v = seq.frames[[hits[0], 1]];
            assert_eq!(v, if rec.labels[0] == 1 { 2.0 } else { -2.0 });
        }
    }

    #[test]
    fn separable_class_means() {
        let ds = generate(&SynthConfig::separable(2)).unwrap();
        let top = &ds.layers[1];
        let mut sums = [[0.0f64; 8]; 2];
        let mut counts = [0usize; 2];
        for (seq, rec) in top.iter().zip(&ds.manifest.records) {
            let c = rec.labels[0];
            counts[c] += 10;
            for row in seq.frames.rows() {
                for k in 0..8 {
                    sums[c][k] += row[k] as f64;
                }
            }
        }
        for c in 0..2 {
            for k in 0..8 {
                let mean = sums[c][k] / counts[c] as f64;
                let expect = if k == c { 3.0 } else { 0.0 };
                assert!((mean - expect).abs() < 0.15, "class {c} dim {k}: {mean}");
            }
        }
    }

    #[test]
    fn multilabel_records_are_valid() {
        let ds = generate(&SynthConfig::multilabel(3)).unwrap();
        assert_eq!(ds.manifest.label_space.task_kind, TaskKind::MultiLabelDetection);
        assert!(ds.manifest.records.iter().any(|r| r.labels.len() >= 2));
        assert!(ds.manifest.records.iter().any(|r| r.labels.is_empty()));
    }

    #[test]
    fn writes_readable_files() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate(&SynthConfig::separable(0)).unwrap();
        let out = ds.write(dir.path()).unwrap();
        assert_eq!(load_manifest(&out.manifest).unwrap(), ds.manifest);
        for (path, seqs) in out.containers.iter().zip(&ds.layers) {
            assert_eq!(&read_container(path).unwrap(), seqs);
        }
        assert!(out.containers[1].ends_with("layer01.prbe"));
    }
}
