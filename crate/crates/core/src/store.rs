//! On-disk storage for per-layer frame embeddings and dataset manifests.
//!
//! A `.prbe` container holds the frame-embedding sequences of one encoder
//! layer for every example of a dataset. All integers and floats are
//! little-endian:
//!
//! ```text
//! magic        4 bytes   "PRBE"
//! version      u32       1
//! dim          u32       embedding width d (0 only when count == 0)
//! stride_us    u32       frame stride in microseconds
//! count        u32       number of sequences
//! count times:
//!   id_len     u32
//!   id         id_len bytes of UTF-8
//!   frames     u32       T
//!   payload    T * d f32
//! ```
//!
//! The layer index is not stored in the payload; it is carried by the file
//! name (`..._layer<N>.prbe`).
//!
//! Manifests are line-delimited JSON, one record per line, with the label
//! space in a sibling `<stem>.header.json` file.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PRBE";
pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_FRAME_STRIDE_MS: f64 = 20.0;

const HEADER_LEN: u64 = 20;

/// One example's `T x d` frame embeddings for a single encoder layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEmbeddingSequence {
    pub example_id: String,
    pub layer: u32,
    pub frames: Array2<f32>,
    pub frame_stride_ms: f64,
}

impl FrameEmbeddingSequence {
    pub fn new(
        example_id: impl Into<String>,
        layer: u32,
        frames: Array2<f32>,
        frame_stride_ms: f64,
    ) -> Result<Self> {
        let seq = Self {
            example_id: example_id.into(),
            layer,
            frames,
            frame_stride_ms,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frames() == 0 {
            return Err(Error::DegenerateInput(format!(
                "sequence {:?} has no frames",
                self.example_id
            )));
        }
        if self.dim() == 0 {
            return Err(Error::DegenerateInput(format!(
                "sequence {:?} has zero-width frames",
                self.example_id
            )));
        }
        if !(self.frame_stride_ms.is_finite() && self.frame_stride_ms > 0.0) {
            return Err(Error::Validation(format!(
                "sequence {:?} has non-positive frame stride {}",
                self.example_id, self.frame_stride_ms
            )));
        }
        if self.frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "sequence {:?} contains non-finite values",
                self.example_id
            )));
        }
        Ok(())
    }
}

/// Header fields of a container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u32,
    pub dim: u32,
    pub frame_stride_us: u32,
    pub count: u32,
}

/// Extracts the layer index from a file name containing `layer<N>`.
pub fn layer_from_path(path: &Path) -> Option<u32> {
    let name = path.file_stem()?.to_str()?;
    let idx = name.rfind("layer")?;
    let digits: String = name[idx + 5..]
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok()
}

fn stride_to_us(stride_ms: f64) -> Result<u32> {
    let us = (stride_ms * 1000.0).round();
    if !(us >= 1.0 && us <= u32::MAX as f64) {
        return Err(Error::Validation(format!(
            "frame stride {stride_ms} ms is not representable in microseconds"
        )));
    }
    Ok(us as u32)
}

/// Writes `sequences` to a `.prbe` container at `path`.
pub fn write_container(sequences: &[FrameEmbeddingSequence], path: &Path) -> Result<()> {
    let (dim, stride_us) = match sequences.first() {
        Some(first) => (first.dim(), stride_to_us(first.frame_stride_ms)?),
        None => (0, stride_to_us(DEFAULT_FRAME_STRIDE_MS)?),
    };
    let layer = sequences.first().map(|s| s.layer);
    for seq in sequences {
        seq.validate()?;
        if seq.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: seq.dim(),
            });
        }
        if Some(seq.layer) != layer {
            return Err(Error::Validation(format!(
                "sequence {:?} belongs to layer {} but the container holds layer {}",
                seq.example_id,
                seq.layer,
                layer.unwrap_or_default()
            )));
        }
        if stride_to_us(seq.frame_stride_ms)? != stride_us {
            return Err(Error::Validation(format!(
                "sequence {:?} has a different frame stride",
                seq.example_id
            )));
        }
    }
    if let (Some(layer), Some(named)) = (layer, layer_from_path(path)) {
        if layer != named {
            return Err(Error::Validation(format!(
                "file name says layer {named} but sequences are layer {layer}"
            )));
        }
    }
    let count = u32::try_from(sequences.len())
        .map_err(|_| Error::InvalidArgument("too many sequences".into()))?;

    let file = File::create(path).map_err(|e| Error::io_at(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(dim as u32).to_le_bytes())?;
    out.write_all(&stride_us.to_le_bytes())?;
    out.write_all(&count.to_le_bytes())?;
    for seq in sequences {
        let id = seq.example_id.as_bytes();
        out.write_all(&(id.len() as u32).to_le_bytes())?;
        out.write_all(id)?;
        out.write_all(&(seq.num_frames() as u32).to_le_bytes())?;
        for v in seq.frames.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Streaming reader over a container. Yields sequences in file order.
pub struct ContainerReader<R> {
    inner: R,
    header: ContainerHeader,
    layer: u32,
    remaining_bytes: u64,
    yielded: u32,
    failed: bool,
}

impl ContainerReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io_at(path, e))?;
        let len = file.metadata().map_err(|e| Error::io_at(path, e))?.len();
        let layer = layer_from_path(path).unwrap_or(0);
        Self::new(BufReader::new(file), len, layer)
    }
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| truncated(e, what))?;
    Ok(u32::from_le_bytes(buf))
}

fn truncated(e: std::io::Error, what: &str) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Corruption(format!("file truncated while reading {what}"))
    } else {
        Error::Io(e)
    }
}

impl<R: Read> ContainerReader<R> {
    /// `total_len` is the full byte length of the source, used to reject
    /// headers that promise more payload than exists before allocating.
    pub fn new(mut inner: R, total_len: u64, layer: u32) -> Result<Self> {
        let mut magic = [0u8; 4];
        inner.read_exact(&mut magic).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format("file too short to hold a container header".into())
            } else {
                Error::Io(e)
            }
        })?;
        if magic != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected \"PRBE\"",
                String::from_utf8_lossy(&magic)
            )));
        }
        let version = read_u32(&mut inner, "version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let dim = read_u32(&mut inner, "dim")?;
        let frame_stride_us = read_u32(&mut inner, "frame stride")?;
        let count = read_u32(&mut inner, "count")?;
        if frame_stride_us == 0 {
            return Err(Error::Corruption("frame stride is zero".into()));
        }
        if dim == 0 && count > 0 {
            return Err(Error::Corruption("dim is zero in a nonempty container".into()));
        }
        let remaining_bytes = total_len.checked_sub(HEADER_LEN).ok_or_else(|| {
            Error::Corruption("declared length shorter than header".into())
        })?;
        Ok(Self {
            inner,
            header: ContainerHeader {
                version,
                dim,
                frame_stride_us,
                count,
            },
            layer,
            remaining_bytes,
            yielded: 0,
            failed: false,
        })
    }

    pub fn header(&self) -> ContainerHeader {
        self.header
    }

    fn take(&mut self, n: u64, what: &str) -> Result<()> {
        if n > self.remaining_bytes {
            return Err(Error::Corruption(format!(
                "{what} needs {n} bytes but only {} remain",
                self.remaining_bytes
            )));
        }
        self.remaining_bytes -= n;
        Ok(())
    }

    fn read_one(&mut self) -> Result<FrameEmbeddingSequence> {
        self.take(4, "id length")?;
        let id_len = read_u32(&mut self.inner, "id length")? as u64;
        self.take(id_len, "example id")?;
        let mut id = vec![0u8; id_len as usize];
        self.inner
            .read_exact(&mut id)
            .map_err(|e| truncated(e, "example id"))?;
        let example_id = String::from_utf8(id)
            .map_err(|_| Error::Corruption("example id is not valid UTF-8".into()))?;
        self.take(4, "frame count")?;
        let frames = read_u32(&mut self.inner, "frame count")? as usize;
        if frames == 0 {
            return Err(Error::Corruption(format!(
                "sequence {example_id:?} has zero frames"
            )));
        }
        let dim = self.header.dim as usize;
        let n_values = frames
            .checked_mul(dim)
            .ok_or_else(|| Error::Corruption("frame count overflows".into()))?;
        self.take(n_values as u64 * 4, "frame payload")?;
        let mut raw = vec![0u8; n_values * 4];
        self.inner
            .read_exact(&mut raw)
            .map_err(|e| truncated(e, "frame payload"))?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let frames = Array2::from_shape_vec((frames, dim), values)
            .expect("payload length matches shape");
        let seq = FrameEmbeddingSequence {
            example_id,
            layer: self.layer,
            frames,
            frame_stride_ms: self.header.frame_stride_us as f64 / 1000.0,
        };
        seq.validate().map_err(|e| Error::Corruption(e.to_string()))?;
        Ok(seq)
    }

    /// Fails if bytes remain after the last declared sequence.
    pub fn finish(self) -> Result<()> {
        if self.remaining_bytes != 0 {
            return Err(Error::Corruption(format!(
                "{} trailing bytes after the last sequence",
                self.remaining_bytes
            )));
        }
        Ok(())
    }
}

impl<R: Read> Iterator for ContainerReader<R> {
    type Item = Result<FrameEmbeddingSequence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.yielded >= self.header.count {
            return None;
        }
        let item = self.read_one();
        match item {
            Ok(_) => self.yielded += 1,
            Err(_) => self.failed = true,
        }
        Some(item)
    }
}

/// A fully loaded container.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: ContainerHeader,
    pub sequences: Vec<FrameEmbeddingSequence>,
}

impl Container {
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = ContainerReader::open(path)?;
        let header = reader.header();
        let sequences = reader.by_ref().collect::<Result<Vec<_>>>()?;
        reader.finish()?;
        Ok(Self { header, sequences })
    }
}

/// Reads every sequence of the container at `path`.
pub fn read_container(path: &Path) -> Result<Vec<FrameEmbeddingSequence>> {
    Ok(Container::load(path)?.sequences)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SingleLabelClassification,
    MultiLabelDetection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    pub task_kind: TaskKind,
    pub label_names: Vec<String>,
}

impl LabelSpace {
    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        match self.task_kind {
            TaskKind::SingleLabelClassification if self.num_classes() < 2 => Err(
                Error::Validation("classification needs at least 2 labels".into()),
            ),
            TaskKind::MultiLabelDetection if self.num_classes() < 1 => {
                Err(Error::Validation("detection needs at least 1 label".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    #[serde(rename = "id")]
    pub example_id: String,
    pub labels: Vec<usize>,
    pub split: Split,
    pub duration_s: f64,
}

/// Sidecar header stored next to a manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_name: Option<String>,
    pub task_kind: TaskKind,
    pub label_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }

    /// Split proportions scaled to a total of 10, e.g. `"6:2:2"`.
    pub fn ratio(&self) -> String {
        let total = self.total().max(1) as f64;
        let fmt = |n: usize| {
            let v = (n as f64 * 100.0 / total).round() / 10.0;
            if v.fract() == 0.0 {
                format!("{}", v as u64)
            } else {
                format!("{v:.1}")
            }
        };
        format!("{}:{}:{}", fmt(self.train), fmt(self.dev), fmt(self.test))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub dataset_name: String,
    pub label_space: LabelSpace,
    pub records: Vec<ExampleRecord>,
}

/// Path of the label-space header belonging to a manifest.
pub fn header_path(manifest: &Path) -> PathBuf {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    manifest.with_file_name(format!("{stem}.header.json"))
}

impl DatasetManifest {
    pub fn new(
        dataset_name: impl Into<String>,
        label_space: LabelSpace,
        records: Vec<ExampleRecord>,
    ) -> Result<Self> {
        let m = Self {
            dataset_name: dataset_name.into(),
            label_space,
            records,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.label_space.validate()?;
        if self.records.is_empty() {
            return Err(Error::Validation("manifest has no records".into()));
        }
        let c = self.label_space.num_classes();
        let mut seen = HashSet::with_capacity(self.records.len());
        for rec in &self.records {
            if !seen.insert(rec.example_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate example id {:?}",
                    rec.example_id
                )));
            }
            if let Some(&bad) = rec.labels.iter().find(|&&l| l >= c) {
                return Err(Error::Validation(format!(
                    "record {:?} has label {bad} but the label space has {c} classes",
                    rec.example_id
                )));
            }
            let mut sorted = rec.labels.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != rec.labels.len() {
                return Err(Error::Validation(format!(
                    "record {:?} repeats a label",
                    rec.example_id
                )));
            }
            if self.label_space.task_kind == TaskKind::SingleLabelClassification
                && rec.labels.len() != 1
            {
                return Err(Error::Validation(format!(
                    "record {:?} has {} labels in a single-label task",
                    rec.example_id,
                    rec.labels.len()
                )));
            }
            if !(rec.duration_s.is_finite() && rec.duration_s > 0.0) {
                return Err(Error::Validation(format!(
                    "record {:?} has non-positive duration",
                    rec.example_id
                )));
            }
        }
        Ok(())
    }

    pub fn split_counts(&self) -> SplitCounts {
        let mut counts = SplitCounts::default();
        for rec in &self.records {
            match rec.split {
                Split::Train => counts.train += 1,
                Split::Dev => counts.dev += 1,
                Split::Test => counts.test += 1,
            }
        }
        counts
    }

    /// Fails unless train, dev and test each hold at least one record.
    pub fn require_splits(&self) -> Result<()> {
        let c = self.split_counts();
        for (name, n) in [("train", c.train), ("dev", c.dev), ("test", c.test)] {
            if n == 0 {
                return Err(Error::Validation(format!("{name} split is empty")));
            }
        }
        Ok(())
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = &ExampleRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let header = ManifestHeader {
            dataset_name: Some(self.dataset_name.clone()),
            task_kind: self.label_space.task_kind,
            label_names: self.label_space.label_names.clone(),
        };
        let hpath = header_path(path);
        let json = serde_json::to_string_pretty(&header).expect("header serializes");
        std::fs::write(&hpath, json + "\n").map_err(|e| Error::io_at(&hpath, e))?;

        let file = File::create(path).map_err(|e| Error::io_at(path, e))?;
        let mut out = BufWriter::new(file);
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Loads and validates a manifest and its sibling header.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let hpath = header_path(path);
    let htext = std::fs::read_to_string(&hpath).map_err(|e| Error::io_at(&hpath, e))?;
    let header: ManifestHeader = serde_json::from_str(&htext)
        .map_err(|e| Error::Validation(format!("{}: {e}", hpath.display())))?;

    let file = File::open(path).map_err(|e| Error::io_at(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let rec: ExampleRecord = serde_json::from_str(trimmed).map_err(|e| {
            Error::Validation(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        records.push(rec);
    }
    let dataset_name = header.dataset_name.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    DatasetManifest::new(
        dataset_name,
        LabelSpace {
            task_kind: header.task_kind,
            label_names: header.label_names,
        },
        records,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn seq(id: &str, frames: Array2<f32>) -> FrameEmbeddingSequence {
        FrameEmbeddingSequence::new(id, 3, frames, 20.0).unwrap()
    }

    #[test]
    fn roundtrip_single_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy_layer3.prbe");
        let s = vec![seq("a", array![[1.0, -2.5], [0.0, 3.25], [7.0, 1e-7]])];
        write_container(&s, &path).unwrap();
        assert_eq!(read_container(&path).unwrap(), s);
    }

    #[test]
    fn empty_container_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.prbe");
        write_container(&[], &path).unwrap();
        let c = Container::load(&path).unwrap();
        assert_eq!(c.header.count, 0);
        assert!(c.sequences.is_empty());
        assert_eq!(std::fs::metadata(&path).unwrap().len(), HEADER_LEN);
    }

    #[test]
    fn mixed_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = vec![seq("a", array![[1.0, 2.0]]), seq("b", array![[1.0, 2.0, 3.0]])];
        let err = write_container(&s, &dir.path().join("x.prbe")).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 3
            }
        ));
    }

    #[test]
    fn filename_layer_must_agree() {
        let dir = tempfile::tempdir().unwrap();
        let s = vec![seq("a", array![[1.0, 2.0]])];
        let err = write_container(&s, &dir.path().join("x_layer4.prbe")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.prbe");
        write_container(&[seq("a", array![[1.0]])], &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_container(&path), Err(Error::Format(_))));
    }

    #[test]
    fn unknown_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.prbe");
        write_container(&[seq("a", array![[1.0]])], &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_container(&path),
            Err(Error::Version { found: 7, .. })
        ));
    }

    #[test]
    fn truncation_and_trailing_bytes_are_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.prbe");
        write_container(&[seq("a", array![[1.0, 2.0], [3.0, 4.0]])], &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_container(&path), Err(Error::Corruption(_))));

        let mut longer = bytes.clone();
        longer.push(0);
        std::fs::write(&path, longer).unwrap();
        assert!(matches!(read_container(&path), Err(Error::Corruption(_))));
    }

    #[test]
    fn layer_parsed_from_name() {
        assert_eq!(layer_from_path(Path::new("d/bats_hubert_layer10.prbe")), Some(10));
        assert_eq!(layer_from_path(Path::new("d/plain.prbe")), None);
    }

    #[test]
    fn split_ratio_reporting() {
        let c = SplitCounts {
            train: 6,
            dev: 2,
            test: 2,
        };
        assert_eq!(c.ratio(), "6:2:2");
        let c = SplitCounts {
            train: 600,
            dev: 200,
            test: 200,
        };
        assert_eq!(c.ratio(), "6:2:2");
    }

    fn write_lines(dir: &Path, kind: &str, lines: &[&str]) -> PathBuf {
        let path = dir.join("ds.jsonl");
        std::fs::write(
            dir.join("ds.header.json"),
            format!(r#"{{"task_kind": "{kind}", "label_names": ["a", "b", "c"]}}"#),
        )
        .unwrap();
        std::fs::write(&path, lines.join("\n")).unwrap();
        path
    }

    #[test]
    fn manifest_ten_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = Vec::new();
        for i in 0..10 {
            let split = match i {
                0..=5 => "train",
                6 | 7 => "dev",
                _ => "test",
            };
            lines.push(format!(
                r#"{{"id": "ex{i}", "labels": [{}], "split": "{split}", "duration_s": 1.5}}"#,
                i % 3
            ));
        }
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let path = write_lines(dir.path(), "single_label_classification", &refs);
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.records.len(), 10);
        assert_eq!(m.split_counts().ratio(), "6:2:2");
        assert_eq!(m.dataset_name, "ds");
        // idempotent
        assert_eq!(load_manifest(&path).unwrap(), m);
    }

    #[test]
    fn manifest_validation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let two = r#"{"id": "a", "labels": [0, 1], "split": "train", "duration_s": 1}"#;
        let path = write_lines(dir.path(), "single_label_classification", &[two]);
        assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));

        // fine for detection
        let path = write_lines(dir.path(), "multi_label_detection", &[two]);
        assert!(load_manifest(&path).is_ok());

        let path = write_lines(dir.path(), "multi_label_detection", &[]);
        assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));

        let dup = r#"{"id": "a", "labels": [0], "split": "train", "duration_s": 1}"#;
        let path = write_lines(dir.path(), "single_label_classification", &[dup, dup]);
        assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));

        let oob = r#"{"id": "a", "labels": [3], "split": "train", "duration_s": 1}"#;
        let path = write_lines(dir.path(), "single_label_classification", &[oob]);
        assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));
    }
}
