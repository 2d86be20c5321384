//! Probing toolkit for frozen speech-encoder representations.
//!
//! Per-layer frame embeddings are read from `.prbe` containers, pooled over
//! time (plain mean or learned attention), and fed to trainable heads:
//! linear probes, echo state networks with a ridge readout, and
//! bidirectional LSTMs. The [`metrics`] module scores them with accuracy or
//! macro mAP, and [`audio`] provides the DSP used for ablations (resampling,
//! rate-based pitch shifting, SNR-calibrated noise mixing, sliding-window
//! segmentation).

pub mod audio;
pub mod dataset;
pub mod error;
pub mod head;
pub mod metrics;
pub mod pooling;
pub mod probe;
pub mod recurrent;
pub mod sidecar;
pub mod store;
pub mod synth;

pub use audio::AudioBuffer;
pub use dataset::LayerEmbeddings;
pub use error::{Error, Result};
pub use head::{HeadKind, Scorer, SequenceHead, Target};
pub use metrics::{PredictionBatch, SweepResult, Targets};
pub use pooling::{AttentionPoolParams, Pooling, PooledVector};
pub use probe::{LinearProbeParams, ProbeHead, TrainConfig, TrainedProbe};
pub use recurrent::{BiLstmConfig, EsnConfig, EsnModel, LstmParams};
pub use sidecar::SavedHead;
pub use store::{
    DatasetManifest, ExampleRecord, FrameEmbeddingSequence, LabelSpace, Split, TaskKind,
};
