//! Kaiser-windowed sinc interpolation, with a polyphase coefficient table
//! whenever output positions fall on a rational grid.

use super::AudioBuffer;
use crate::error::{Error, Result};

const MAX_PHASES: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    /// Kernel half-length, counted in samples of the lower of the two rates.
    pub taps_per_side: usize,
    pub kaiser_beta: f64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            taps_per_side: 64,
            kaiser_beta: 8.6,
        }
    }
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

struct Kernel {
    /// Cutoff as a fraction of the input Nyquist frequency.
    cutoff: f64,
    half_width: f64,
    reach: i64,
    beta: f64,
    i0_beta: f64,
}

impl Kernel {
    fn new(cutoff: f64, config: &ResampleConfig) -> Self {
        let half_width = config.taps_per_side as f64 / cutoff;
        Self {
            cutoff,
            half_width,
            reach: half_width.ceil() as i64,
            beta: config.kaiser_beta,
            i0_beta: bessel_i0(config.kaiser_beta),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let r = t / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let x = std::f64::consts::PI * self.cutoff * t;
        let sinc = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
        let window = bessel_i0(self.beta * (1.0 - r * r).sqrt()) / self.i0_beta;
        self.cutoff * sinc * window
    }

    /// Coefficients for input indices `base - reach + 1 ..= base + reach`
    /// when the read position is `base + frac`.
    fn taps(&self, frac: f64, out: &mut Vec<f64>) {
        out.clear();
        for j in (1 - self.reach)..=self.reach {
            out.push(self.eval(frac - j as f64));
        }
    }

    fn apply(&self, input: &[f32], base: i64, coeffs: &[f64]) -> f32 {
        let start = base - self.reach + 1;
        let mut acc = 0.0;
        for (j, &c) in coeffs.iter().enumerate() {
            let k = start + j as i64;
            if k >= 0 && (k as usize) < input.len() {
                acc += c * input[k as usize] as f64;
            }
        }
        acc as f32
    }
}

/// Output sample `n` reads the input at position `n * num / den`.
fn interpolate_rational(input: &[f32], num: u64, den: u64, out_len: usize, kernel: &Kernel) -> Vec<f32> {
    let mut scratch = Vec::new();
    let table: Option<Vec<Vec<f64>>> = (den <= MAX_PHASES).then(|| {
        (0..den)
            .map(|p| {
                kernel.taps(p as f64 / den as f64, &mut scratch);
                scratch.clone()
            })
            .collect()
    });
    (0..out_len as u64)
        .map(|n| {
            let pos = n * num;
            let (base, phase) = ((pos / den) as i64, pos % den);
            match &table {
                Some(t) => kernel.apply(input, base, &t[phase as usize]),
                None => {
                    kernel.taps(phase as f64 / den as f64, &mut scratch);
                    kernel.apply(input, base, &scratch)
                }
            }
        })
        .collect()
}

fn interpolate_real(input: &[f32], step: f64, out_len: usize, kernel: &Kernel) -> Vec<f32> {
    let mut scratch = Vec::new();
    (0..out_len)
        .map(|n| {
            let pos = n as f64 * step;
            let base = pos.floor();
            kernel.taps(pos - base, &mut scratch);
            kernel.apply(input, base as i64, &scratch)
        })
        .collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `x == num / den` exactly enough to use the polyphase table.
fn as_ratio(x: f64) -> Option<(u64, u64)> {
    (1..=MAX_PHASES).find_map(|den| {
        let num = (x * den as f64).round();
        ((x * den as f64 - num).abs() < 1e-9 && num >= 1.0).then_some((num as u64, den))
    })
}

pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    resample_with(buffer, target_rate, &ResampleConfig::default())
}

/// Band-limited sample-rate conversion with the anti-alias cutoff at the
/// lower of the two Nyquist frequencies.
pub fn resample_with(buffer: &AudioBuffer, target_rate: u32, config: &ResampleConfig) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be at least 1 Hz".into()));
    }
    if config.taps_per_side == 0 {
        return Err(Error::InvalidArgument("taps_per_side must be positive".into()));
    }
    let source = buffer.sample_rate_hz;
    if source == target_rate {
        return Ok(buffer.clone());
    }
    let g = gcd(source as u64, target_rate as u64);
    let (num, den) = (source as u64 / g, target_rate as u64 / g);
    let out_len = ((buffer.len() as u64 * den).div_ceil(num)) as usize;
    let cutoff = (target_rate as f64 / source as f64).min(1.0);
    let kernel = Kernel::new(cutoff, config);
    Ok(AudioBuffer {
        samples: interpolate_rational(&buffer.samples, num, den, out_len, &kernel),
        sample_rate_hz: target_rate,
    })
}

/// Rate-change pitch shift: output sample `n` is the band-limited
/// interpolation of the input at position `n * factor`, so every frequency
/// scales by `factor` and the duration by `1 / factor`. The sample rate is
/// unchanged.
pub fn pitch_shift_rate(buffer: &AudioBuffer, factor: f64) -> Result<AudioBuffer> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pitch factor must lie in (0, 1], got {factor}"
        )));
    }
    let out_len = (buffer.len() as f64 / factor).ceil() as usize;
    let kernel = Kernel::new(1.0, &ResampleConfig::default());
    let samples = match as_ratio(factor) {
        Some((num, den)) => interpolate_rational(&buffer.samples, num, den, out_len, &kernel),
        None => interpolate_real(&buffer.samples, factor, out_len, &kernel),
    };
    Ok(AudioBuffer {
        samples,
        sample_rate_hz: buffer.sample_rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn spectrum(samples: &[f32]) -> Vec<f64> {
        let mut data: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s as f64, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(data.len()).process(&mut data);
        data[..samples.len() / 2].iter().map(|c| c.norm()).collect()
    }

    fn peak_hz(samples: &[f32], rate: u32) -> (f64, f64) {
        let mag = spectrum(samples);
        let (bin, _) = mag
            .iter()
            .enumerate()
            .skip(1)
            .fold((0, 0.0), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
        let bin_hz = rate as f64 / samples.len() as f64;
        (bin as f64 * bin_hz, bin_hz)
    }

    fn power(x: &[f32]) -> f64 {
        x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn bessel_matches_known_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        // I0(x) = (1/pi) * integral over [0, pi] of exp(x cos t), midpoint rule
        for x in [0.5, 1.0, 3.0, 8.6, 12.0] {
            let n = 20_000;
            let h = std::f64::consts::PI / n as f64;
            let integral: f64 = (0..n).map(|k| (x * ((k as f64 + 0.5) * h).cos()).exp()).sum::<f64>() * h;
            let oracle = integral / std::f64::consts::PI;
            assert!((bessel_i0(x) - oracle).abs() / oracle < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn same_rate_is_identity() {
        let buf = AudioBuffer::tone(440.0, 0.5, 0.1, 16_000);
        assert_eq!(resample(&buf, 16_000).unwrap(), buf);
        assert!(resample(&buf, 0).is_err());
    }

    #[test]
    fn output_length_follows_rate_ratio() {
        let buf = AudioBuffer::new(vec![0.1; 1001], 32_000).unwrap();
        assert_eq!(resample(&buf, 16_000).unwrap().len(), 501);
        assert_eq!(resample(&buf, 44_100).unwrap().len(), 1380);
    }

    #[test]
    fn downsampled_tone_keeps_amplitude_and_frequency() {
        let buf = AudioBuffer::tone(1000.0, 0.5, 1.0, 32_000);
        let out = resample(&buf, 16_000).unwrap();
        let interior = &out.samples[200..out.len() - 200];
        let amp = (2.0 * power(interior)).sqrt();
        assert!((amp - 0.5).abs() / 0.5 < 0.01, "amplitude {amp}");
        let (f, bin) = peak_hz(&out.samples, 16_000);
        assert!((f - 1000.0).abs() <= bin);
    }

    #[test]
    fn tone_above_new_nyquist_is_removed() {
        let buf = AudioBuffer::tone(10_000.0, 0.5, 1.0, 32_000);
        let out = resample(&buf, 16_000).unwrap();
        let ratio_db = 10.0 * (power(&out.samples) / power(&buf.samples)).log10();
        assert!(ratio_db < -40.0, "residual {ratio_db} dB");
    }

    #[test]
    fn upsample_roundtrip_of_band_limited_signal() {
        let rate = 16_000;
        let n = 16_000;
        let parts = [(310.0, 0.3, 0.2), (1770.0, 0.2, 1.1), (4020.0, 0.15, 2.5), (6300.0, 0.1, 0.7)];
        let samples: Vec<f32> = (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                parts
                    .iter()
                    .map(|(f, a, ph)| a * (2.0 * std::f64::consts::PI * f * t + ph).sin())
                    .sum::<f64>() as f32
            })
            .collect();
        let buf = AudioBuffer::new(samples, rate).unwrap();
        let up = resample(&buf, 32_000).unwrap();
        let back = resample(&up, 16_000).unwrap();
        assert_eq!(back.len(), buf.len());
        let lo = 256;
        let hi = n as usize - 256;
        let err: Vec<f32> = (lo..hi).map(|i| back.samples[i] - buf.samples[i]).collect();
        let ratio_db = 10.0 * (power(&err) / power(&buf.samples[lo..hi])).log10();
        assert!(ratio_db < -40.0, "roundtrip error {ratio_db} dB");
    }

    #[test]
    fn polyphase_table_matches_direct_kernel() {
        let buf = AudioBuffer::tone(700.0, 0.4, 0.05, 16_000);
        let kernel = Kernel::new(1.0, &ResampleConfig::default());
        let a = interpolate_rational(&buf.samples, 3, 7, 300, &kernel);
        let b = interpolate_real(&buf.samples, 3.0 / 7.0, 300, &kernel);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn unit_factor_is_identity() {
        let buf = AudioBuffer::tone(523.0, 0.7, 0.2, 16_000);
        let out = pitch_shift_rate(&buf, 1.0).unwrap();
        assert_eq!(out.len(), buf.len());
        for (a, b) in out.samples.iter().zip(&buf.samples) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn invalid_factors_rejected() {
        let buf = AudioBuffer::tone(523.0, 0.7, 0.01, 16_000);
        for f in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(pitch_shift_rate(&buf, f).is_err());
        }
    }

    #[test]
    fn tone_moves_to_scaled_frequency() {
        let buf = AudioBuffer::tone(1000.0, 0.5, 1.0, 16_000);
        for (factor, expect) in [(0.125, 125.0), (0.25, 250.0), (0.5, 500.0)] {
            let out = pitch_shift_rate(&buf, factor).unwrap();
            assert_eq!(out.len(), (16_000.0 / factor) as usize);
            let (f, bin) = peak_hz(&out.samples, 16_000);
            assert!((f - expect).abs() <= bin, "factor {factor}: peak {f}");
        }
    }

    #[test]
    fn irrational_factor_uses_direct_path() {
        let buf = AudioBuffer::tone(1000.0, 0.5, 0.5, 16_000);
        let factor = 1.0 / std::f64::consts::E;
        let out = pitch_shift_rate(&buf, factor).unwrap();
        assert_eq!(out.len(), (8000.0 / factor).ceil() as usize);
        let (f, bin) = peak_hz(&out.samples, 16_000);
        assert!((f - 1000.0 * factor).abs() <= bin);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn pitch_shift_scales_tone_peak(
            factor in prop::sample::select(vec![0.125, 0.25, 0.5, 0.75, 1.0]),
            frac in 0.05f64..0.9,
        ) {
            let freq = frac * factor * 8000.0;
            let buf = AudioBuffer::tone(freq, 0.5, 0.25, 16_000);
            let out = pitch_shift_rate(&buf, factor).unwrap();
            let (f, bin) = peak_hz(&out.samples, 16_000);
            prop_assert!((f - freq * factor).abs() <= bin, "freq {} factor {} peak {}", freq, factor, f);
        }
    }
}
