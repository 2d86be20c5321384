use std::path::{Path, PathBuf};

use rand::Rng;

use super::{load_wav, resample, AudioBuffer};
use crate::error::{Error, Result};

pub fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
}

/// `10 log10(P_signal / P_noise)`.
pub fn snr_db(signal: &[f32], noise: &[f32]) -> f64 {
    20.0 * (rms(signal) / rms(noise)).log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutput {
    pub buffer: AudioBuffer,
    /// Gain applied to the noise.
    pub gain: f64,
    /// Factor the mixture was multiplied by to bring its peak to 1, if
    /// normalization was requested and needed.
    pub normalization: Option<f64>,
}

/// Noise cycled or cut to exactly `len` samples.
fn fit_length(noise: &[f32], len: usize) -> Vec<f32> {
    noise.iter().copied().cycle().take(len).collect()
}

/// Adds `noise` scaled so that the signal-to-noise ratio of the mixture is
/// `snr_db`. The gain is computed on the noise after it has been tiled or
/// trimmed to the signal's length.
pub fn mix_at_snr(
    signal: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
    peak_normalize: bool,
) -> Result<MixOutput> {
    if signal.sample_rate_hz != noise.sample_rate_hz {
        return Err(Error::InvalidArgument(format!(
            "signal at {} Hz but noise at {} Hz",
            signal.sample_rate_hz, noise.sample_rate_hz
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("SNR must be finite, got {snr_db}")));
    }
    let noise = fit_length(&noise.samples, signal.len());
    let (rs, rn) = (rms(&signal.samples), rms(&noise));
    if rs == 0.0 {
        return Err(Error::DegenerateInput("signal has zero RMS".into()));
    }
    if rn == 0.0 {
        return Err(Error::DegenerateInput("noise has zero RMS".into()));
    }
    let gain = rs / (rn * 10f64.powf(snr_db / 20.0));
    let mut mixed: Vec<f64> = signal
        .samples
        .iter()
        .zip(&noise)
        .map(|(&s, &n)| s as f64 + gain * n as f64)
        .collect();
    let mut normalization = None;
    if peak_normalize {
        let peak = mixed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 1.0 {
            let scale = 1.0 / peak;
            mixed.iter_mut().for_each(|v| *v *= scale);
            normalization = Some(scale);
        }
    }
    Ok(MixOutput {
        buffer: AudioBuffer::new(mixed.into_iter().map(|v| v as f32).collect(), signal.sample_rate_hz)?,
        gain,
        normalization,
    })
}

/// A directory of WAV noise recordings, all brought to one sample rate.
#[derive(Debug, Clone)]
pub struct NoiseBank {
    pub sources: Vec<(PathBuf, AudioBuffer)>,
    pub sample_rate_hz: u32,
}

impl NoiseBank {
    pub fn load(dir: &Path, sample_rate_hz: u32) -> Result<Self> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io_at(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Validation(format!("no .wav files in {}", dir.display())));
        }
        let sources = paths
            .into_iter()
            .map(|p| {
                let buf = resample(&load_wav(&p)?, sample_rate_hz)?;
                Ok((p, buf))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            sources,
            sample_rate_hz,
        })
    }

    /// A noise segment of `len` samples: a uniformly chosen file, starting
    /// at a uniformly chosen offset, wrapping around if the file is short.
    pub fn sample<R: Rng>(&self, len: usize, rng: &mut R) -> AudioBuffer {
        self.sample_with_source(len, rng).1
    }

    /// Like [`NoiseBank::sample`], also naming the file the segment came from.
    pub fn sample_with_source<R: Rng>(&self, len: usize, rng: &mut R) -> (&Path, AudioBuffer) {
        let (path, src) = &self.sources[rng.gen_range(0..self.sources.len())];
        let start = rng.gen_range(0..src.len());
        let buf = AudioBuffer {
            samples: src.samples.iter().copied().cycle().skip(start).take(len).collect(),
            sample_rate_hz: self.sample_rate_hz,
        };
        (path, buf)
    }
}
