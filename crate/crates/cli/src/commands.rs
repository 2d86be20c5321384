//! File-level audio operations behind the `augment` and `segment`
//! subcommands.

use std::path::{Path, PathBuf};

use frameprobe::audio::{
    load_wav, mix_at_snr, pitch_shift_rate, resample, save_wav, sliding_windows, AnnotationTrack, NoiseBank,
    WindowingConfig,
};
use frameprobe::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    Noise { snr_db: f64 },
    Pitch { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentRecord {
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_source: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_gain: Option<f64>,
    /// Scale applied to bring the mixture's peak back to 1, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_scale: Option<f64>,
}

/// `.wav` files directly inside `input`, sorted, or `input` itself.
pub fn wav_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| Error::io_at(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!("no .wav files in {}", input.display())));
    }
    Ok(files)
}

/// Resamples every input to `rate`, applies the augmentation and writes the
/// result under the same file name in `out_dir`. Noise segments are drawn
/// from `noise_dir` with a generator seeded by `seed`, one draw per file
/// in sorted order. A `augment_log.jsonl` records what was done.
pub fn augment(
    input: &Path,
    out_dir: &Path,
    augmentation: Augmentation,
    noise_dir: Option<&Path>,
    rate: u32,
    seed: u64,
) -> Result<Vec<AugmentRecord>> {
    let files = wav_inputs(input)?;
    let bank = match augmentation {
        Augmentation::Noise { .. } => Some(NoiseBank::load(
            noise_dir.ok_or_else(|| Error::InvalidArgument("noise augmentation needs --noise-dir".into()))?,
            rate,
        )?),
        Augmentation::Pitch { factor } => {
            if !(factor > 0.0 && factor <= 1.0) {
                return Err(Error::InvalidArgument(format!("pitch factor must lie in (0, 1], got {factor}")));
            }
            None
        }
    };
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io_at(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::with_capacity(files.len());
    for path in files {
        let audio = resample(&load_wav(&path)?, rate)?;
        let output = out_dir.join(path.file_name().expect("file path"));
        let record = match (augmentation, &bank) {
            (Augmentation::Noise { snr_db }, Some(bank)) => {
                let (source, noise) = bank.sample_with_source(audio.len(), &mut rng);
                let mixed = mix_at_snr(&audio, &noise, snr_db, true)?;
                save_wav(&mixed.buffer, &output)?;
                AugmentRecord {
                    input: path,
                    output,
                    noise_source: Some(source.to_path_buf()),
                    noise_gain: Some(mixed.gain),
                    peak_scale: mixed.normalization,
                }
            }
            (Augmentation::Pitch { factor }, _) => {
                let mut shifted = pitch_shift_rate(&audio, factor)?;
                let peak = shifted.samples.iter().fold(0.0f32, |m, v| m.max(v.abs()));
                let peak_scale = (peak > 1.0).then(|| 1.0 / peak as f64);
                if let Some(s) = peak_scale {
                    shifted.samples.iter_mut().for_each(|v| *v *= s as f32);
                }
                save_wav(&shifted, &output)?;
                AugmentRecord {
                    input: path,
                    output,
                    noise_source: None,
                    noise_gain: None,
                    peak_scale,
                }
            }
            _ => unreachable!("noise bank loaded for noise augmentation"),
        };
        log.push(record);
    }
    write_jsonl(&log, &out_dir.join("augment_log.jsonl"))?;
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentRecord {
    pub id: String,
    pub start_s: f64,
    pub labels: Vec<usize>,
}

/// Cuts a long recording into labeled windows, written as
/// `<stem>_<index>.wav` plus `segments.jsonl`.
pub fn segment(wav: &Path, annotations: &Path, config: &WindowingConfig, out_dir: &Path) -> Result<Vec<SegmentRecord>> {
    let audio = load_wav(wav)?;
    let track = AnnotationTrack::load(annotations, audio.duration_s())?;
    let windows = sliding_windows(&audio, &track, config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io_at(out_dir, e))?;
    let stem = wav.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut records = Vec::with_capacity(windows.len());
    for (k, w) in windows.iter().enumerate() {
        let id = format!("{stem}_{k:04}");
        save_wav(&w.audio, &out_dir.join(format!("{id}.wav")))?;
        records.push(SegmentRecord {
            id,
            start_s: w.start_s,
            labels: w.labels.clone(),
        });
    }
    write_jsonl(&records, &out_dir.join("segments.jsonl"))?;
    Ok(records)
}

fn write_jsonl<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("serializable"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
}
