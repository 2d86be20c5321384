use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

fn map_header_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::Corruption(format!("{}: truncated RIFF header", path.display()))
        }
        hound::Error::IoError(io) => Error::io_at(path, io),
        hound::Error::Unsupported => {
            Error::Unsupported(format!("{}: unsupported WAV codec", path.display()))
        }
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// The header parsed, so a failed sample read means the data chunk is
/// shorter than the header claims.
fn map_sample_error(path: &Path, e: hound::Error) -> Error {
    Error::Corruption(format!("{}: data chunk ended early ({e})", path.display()))
}

/// Reads PCM16 or 32-bit float WAV, averaging channels to mono. PCM16
/// samples are decoded as `s / 32768`.
pub fn load_wav(path: &Path) -> Result<AudioBuffer> {
    let reader = WavReader::open(path).map_err(|e| map_header_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format(format!("{}: zero channels", path.display())));
    }
    let expected = reader.len() as usize;
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_sample_error(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_sample_error(path, e))?,
        (fmt, bits) => {
            return Err(Error::Unsupported(format!(
                "{}: {bits}-bit {fmt:?} samples (expected 16-bit PCM or 32-bit float)",
                path.display()
            )))
        }
    };
    if interleaved.len() != expected || !expected.is_multiple_of(channels) {
        return Err(Error::Corruption(format!(
            "{}: data chunk holds {} of {expected} samples",
            path.display(),
            interleaved.len()
        )));
    }
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| (frame.iter().map(|&v| v as f64).sum::<f64>() / channels as f64) as f32)
            .collect()
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Writes 16-bit PCM, the inverse of [`load_wav`] within one LSB.
pub fn save_wav(buffer: &AudioBuffer, path: &Path) -> Result<()> {
    save_wav_as(buffer, path, WavEncoding::Pcm16)
}

pub fn save_wav_as(buffer: &AudioBuffer, path: &Path, encoding: WavEncoding) -> Result<()> {
    buffer.validate()?;
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate_hz,
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => SampleFormat::Int,
            WavEncoding::Float32 => SampleFormat::Float,
        },
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io_at(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    };
    let mut writer = WavWriter::create(path, spec).map_err(wrap)?;
    for &s in &buffer.samples {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q).map_err(wrap)?;
            }
            WavEncoding::Float32 => writer.write_sample(s).map_err(wrap)?,
        }
    }
    writer.finalize().map_err(wrap)
}
