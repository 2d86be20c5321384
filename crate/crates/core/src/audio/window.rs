use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedEvent {
    pub start_s: f64,
    pub end_s: f64,
    pub label: usize,
}

impl AnnotatedEvent {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTrack {
    pub events: Vec<AnnotatedEvent>,
    pub duration_s: f64,
}

impl AnnotationTrack {
    pub fn new(events: Vec<AnnotatedEvent>, duration_s: f64) -> Result<Self> {
        let track = Self { events, duration_s };
        track.validate()?;
        Ok(track)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Validation(format!(
                "recording duration must be positive, got {}",
                self.duration_s
            )));
        }
        for (i, e) in self.events.iter().enumerate() {
            if !(0.0 <= e.start_s && e.start_s < e.end_s && e.end_s <= self.duration_s) {
                return Err(Error::Validation(format!(
                    "event {i} spans [{}, {}) outside [0, {}]",
                    e.start_s, e.end_s, self.duration_s
                )));
            }
        }
        Ok(())
    }

    /// One `start, end, label` record per line. Fields may be separated by
    /// commas, tabs or spaces; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, duration_s: f64) -> Result<Self> {
        let mut events = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let bad = || Error::Format(format!("annotation line {}: expected `start, end, label`", n + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            events.push(AnnotatedEvent {
                start_s: fields[0].parse().map_err(|_| bad())?,
                end_s: fields[1].parse().map_err(|_| bad())?,
                label: fields[2].parse().map_err(|_| bad())?,
            });
        }
        Self::new(events, duration_s)
    }

    pub fn load(path: &Path, duration_s: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::parse(&text, duration_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowingConfig {
    pub window_s: f64,
    pub hop_s: f64,
    #[serde(default = "default_overlap")]
    pub min_overlap_fraction: f64,
}

fn default_overlap() -> f64 {
    0.5
}

impl WindowingConfig {
    pub fn new(window_s: f64, hop_s: f64) -> Self {
        Self {
            window_s,
            hop_s,
            min_overlap_fraction: default_overlap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_s > 0.0 && self.hop_s > 0.0) {
            return Err(Error::InvalidArgument("window and hop must be positive".into()));
        }
        if self.hop_s > self.window_s {
            return Err(Error::InvalidArgument(format!(
                "hop {} s exceeds window {} s",
                self.hop_s, self.window_s
            )));
        }
        if !(self.min_overlap_fraction > 0.0 && self.min_overlap_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "min_overlap_fraction must lie in (0, 1], got {}",
                self.min_overlap_fraction
            )));
        }
        Ok(())
    }

    /// Labels for the window `[start_s, start_s + window_s)`: an event counts
    /// when its overlap with the window is at least `min_overlap_fraction`
    /// of the shorter of the two.
    pub fn labels_for(&self, start_s: f64, events: &[AnnotatedEvent]) -> Vec<usize> {
        let end_s = start_s + self.window_s;
        let mut labels: Vec<usize> = events
            .iter()
            .filter(|e| {
                let overlap = e.end_s.min(end_s) - e.start_s.max(start_s);
                let need = self.min_overlap_fraction * e.duration_s().min(self.window_s);
                overlap > 0.0 && overlap >= need - 1e-9
            })
            .map(|e| e.label)
            .collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub start_s: f64,
    pub audio: AudioBuffer,
    pub labels: Vec<usize>,
}

/// Cuts windows at offsets `0, hop, 2 hop, ...` until one reaches the end
/// of the recording; that last window is zero-padded to full length.
pub fn sliding_windows(
    buffer: &AudioBuffer,
    annotations: &AnnotationTrack,
    config: &WindowingConfig,
) -> Result<Vec<LabeledWindow>> {
    config.validate()?;
    annotations.validate()?;
    let rate = buffer.sample_rate_hz as f64;
    let win = (config.window_s * rate).round() as usize;
    let hop = (config.hop_s * rate).round() as usize;
    if win == 0 || hop == 0 {
        return Err(Error::InvalidArgument("window or hop shorter than one sample".into()));
    }
    if win > buffer.len() {
        return Err(Error::InvalidArgument(format!(
            "window {} s longer than recording {} s",
            config.window_s,
            buffer.duration_s()
        )));
    }
    let mut out = Vec::new();
    let mut offset = 0usize;
    loop {
        let end = (offset + win).min(buffer.len());
        let mut samples = buffer.samples[offset..end].to_vec();
        samples.resize(win, 0.0);
        let start_s = offset as f64 / rate;
        out.push(LabeledWindow {
            start_s,
            audio: AudioBuffer {
                samples,
                sample_rate_hz: buffer.sample_rate_hz,
            },
            labels: config.labels_for(start_s, &annotations.events),
        });
        if offset + win >= buffer.len() {
            break;
        }
        offset += hop;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(start_s: f64, end_s: f64, label: usize) -> AnnotatedEvent {
        AnnotatedEvent { start_s, end_s, label }
    }

    #[test]
    fn event_inside_window_is_labeled() {
        let cfg = WindowingConfig::new(2.0, 1.0);
        assert_eq!(cfg.labels_for(0.0, &[ev(0.5, 1.0, 3)]), vec![3]);
    }

    #[test]
    fn disjoint_event_is_not_labeled() {
        let cfg = WindowingConfig::new(2.0, 1.0);
        assert!(cfg.labels_for(0.0, &[ev(2.5, 3.0, 3)]).is_empty());
        assert!(cfg.labels_for(0.0, &[ev(2.0, 3.0, 3)]).is_empty());
    }

    #[test]
    fn partial_overlap_against_shorter_span() {
        let cfg = WindowingConfig::new(2.0, 1.0);
        // 1 s event, 0.4 s inside the window: 0.4 < 0.5 * min(1, 2)
        assert!(cfg.labels_for(0.0, &[ev(1.6, 2.6, 1)]).is_empty());
        // 0.5 s inside meets the threshold exactly
        assert_eq!(cfg.labels_for(0.0, &[ev(1.5, 2.5, 1)]), vec![1]);
        let strict = WindowingConfig { min_overlap_fraction: 0.9, ..cfg };
        assert!(strict.labels_for(0.0, &[ev(1.5, 2.5, 1)]).is_empty());
    }

    #[test]
    fn long_event_judged_against_window() {
        let cfg = WindowingConfig::new(1.0, 1.0);
        // 10 s event covering 0.6 s of a 1 s window
        assert_eq!(cfg.labels_for(0.0, &[ev(0.4, 10.4, 2)]), vec![2]);
        assert!(cfg.labels_for(0.0, &[ev(0.6, 10.6, 2)]).is_empty());
    }

    #[test]
    fn multiple_labels_sorted_and_deduplicated() {
        let cfg = WindowingConfig::new(2.0, 1.0);
        let events = [ev(0.1, 0.5, 4), ev(0.6, 0.9, 1), ev(1.0, 1.4, 4)];
        assert_eq!(cfg.labels_for(0.0, &events), vec![1, 4]);
    }

    #[test]
    fn windows_cover_recording_with_padded_tail() {
        let buf = AudioBuffer::new((0..25).map(|i| i as f32 / 100.0).collect(), 10).unwrap();
        let track = AnnotationTrack::new(vec![ev(1.9, 2.4, 0)], 2.5).unwrap();
        let cfg = WindowingConfig::new(1.0, 0.75);
        let w = sliding_windows(&buf, &track, &cfg).unwrap();
        let starts: Vec<f64> = w.iter().map(|x| x.start_s).collect();
        assert_eq!(starts, vec![0.0, 0.8, 1.6]);
        let last = &w[2];
        assert_eq!(last.audio.len(), 10);
        assert_eq!(&last.audio.samples[..9], &buf.samples[16..25]);
        assert_eq!(last.audio.samples[9], 0.0);
        assert_eq!(last.labels, vec![0]);
        assert!(w[0].labels.is_empty());
    }

    #[test]
    fn rejects_bad_configs() {
        let buf = AudioBuffer::new(vec![0.0; 10], 10).unwrap();
        let track = AnnotationTrack::new(vec![], 1.0).unwrap();
        assert!(sliding_windows(&buf, &track, &WindowingConfig::new(2.0, 1.0)).is_err());
        assert!(sliding_windows(&buf, &track, &WindowingConfig::new(0.5, 0.6)).is_err());
        assert!(AnnotationTrack::new(vec![ev(0.5, 0.4, 0)], 1.0).is_err());
        assert!(AnnotationTrack::new(vec![ev(0.5, 1.4, 0)], 1.0).is_err());
    }

    #[test]
    fn parses_annotation_records() {
        let text = "# start end label\n0.5, 1.25, 2\n\n3\t4.0\t0  # trailing\n";
        let t = AnnotationTrack::parse(text, 5.0).unwrap();
        assert_eq!(t.events, vec![ev(0.5, 1.25, 2), ev(3.0, 4.0, 0)]);
        assert!(matches!(AnnotationTrack::parse("1,2", 5.0), Err(Error::Format(_))));
        assert!(matches!(AnnotationTrack::parse("1,2,x", 5.0), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn windows_cover_whole_recording(
            len in 20usize..400,
            win in 1usize..20,
            hop_frac in 0.05f64..1.0,
        ) {
            let rate = 10;
            let hop = ((win as f64 * hop_frac).round() as usize).max(1);
            let buf = AudioBuffer::new(vec![0.1; len], rate).unwrap();
            let track = AnnotationTrack::new(vec![], buf.duration_s()).unwrap();
            let cfg = WindowingConfig::new(win as f64 / rate as f64, hop as f64 / rate as f64);
            let ws = sliding_windows(&buf, &track, &cfg).unwrap();
            let mut covered = vec![false; len];
            for (k, w) in ws.iter().enumerate() {
                let off = (w.start_s * rate as f64).round() as usize;
                prop_assert_eq!(off, k * hop);
                prop_assert_eq!(w.audio.len(), win);
                for c in covered.iter_mut().skip(off).take(win) {
                    *c = true;
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
            // no window starts after the recording has already been covered
            let last = ws.last().unwrap();
            prop_assert!(((last.start_s * rate as f64).round() as usize) < len);
            if ws.len() > 1 {
                let prev = &ws[ws.len() - 2];
                prop_assert!(((prev.start_s * rate as f64).round() as usize) + win < len);
            }
        }
    }
}
