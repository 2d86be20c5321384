//! Audio ingestion and the DSP used by the ablations.

mod mix;
mod resample;
mod wav;
mod window;

pub use mix::{mix_at_snr, rms, snr_db, MixOutput, NoiseBank};
pub use resample::{bessel_i0, pitch_shift_rate, resample, resample_with, ResampleConfig};
pub use wav::{load_wav, save_wav, save_wav_as, WavEncoding};
pub use window::{sliding_windows, AnnotatedEvent, AnnotationTrack, LabeledWindow, WindowingConfig};

use crate::error::{Error, Result};

/// Mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self> {
        let buf = Self {
            samples,
            sample_rate_hz,
        };
        buf.validate()?;
        Ok(buf)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if self.samples.is_empty() {
            return Err(Error::DegenerateInput("audio buffer is empty".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Sine tone, mostly for tests and fixtures.
    pub fn tone(freq_hz: f64, amplitude: f64, duration_s: f64, sample_rate_hz: u32) -> Self {
        let n = (duration_s * sample_rate_hz as f64).round() as usize;
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate_hz as f64;
        Self {
            samples: (0..n).map(|i| (amplitude * (w * i as f64).sin()) as f32).collect(),
            sample_rate_hz,
        }
    }
}
