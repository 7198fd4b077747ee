//! Temporal action localization on per-frame probability series.
//!
//! Frame `t` covers `[t / fps, (t + 1) / fps)`; every segment end is exclusive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{predict, temporal_average};
use crate::io::{sort_segments, ProbabilitySeries, Segment};

pub const DEFAULT_MIN_DURATION_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationConfig {
    pub prob_threshold: f64,
    /// Frame-by-frame segments must be strictly longer than this.
    pub min_duration_s: f64,
    pub window_s: f64,
    pub stride_s: f64,
    pub merge_overlaps: bool,
    /// Non-qualifying frames tolerated inside one frame-by-frame run.
    pub gap_frames: usize,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        LocalizationConfig {
            prob_threshold: 0.5,
            min_duration_s: DEFAULT_MIN_DURATION_S,
            window_s: 1.0,
            stride_s: 1.0,
            merge_overlaps: false,
            gap_frames: 0,
        }
    }
}

impl LocalizationConfig {
    fn validate_frames(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.prob_threshold) {
            return Err(Error::InvalidParameter(format!(
                "probability threshold must lie in [0, 1], got {}",
                self.prob_threshold
            )));
        }
        if !(self.min_duration_s.is_finite() && self.min_duration_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "minimum duration must be nonnegative, got {}",
                self.min_duration_s
            )));
        }
        Ok(())
    }

    fn validate_window(&self) -> Result<()> {
        if !(self.stride_s.is_finite() && self.stride_s > 0.0 && self.window_s >= self.stride_s) {
            return Err(Error::InvalidParameter(format!(
                "need window >= stride > 0, got window {} and stride {}",
                self.window_s, self.stride_s
            )));
        }
        Ok(())
    }
}

/// Groups frames agreeing with the video-level prediction into segments.
pub fn localize_frame_by_frame(series: &ProbabilitySeries, cfg: &LocalizationConfig) -> Result<Vec<Segment>> {
    cfg.validate_frames()?;
    let global = predict(&temporal_average(series)?);
    let class = global.index;
    let fps = series.fps();
    let probs = series.probs();
    let qualifies = |t: usize| probs[t][class] >= cfg.prob_threshold;

    let mut segments = Vec::new();
    let mut t = 0;
    while t < probs.len() {
        if !qualifies(t) {
            t += 1;
            continue;
        }
        let start = t;
        let mut last = t;
        let mut probe = t + 1;
        while probe < probs.len() && probe - last <= cfg.gap_frames + 1 {
            if qualifies(probe) {
                last = probe;
            }
            probe += 1;
        }
        let end = last + 1;
        let duration = (end - start) as f64 / fps;
        if duration > cfg.min_duration_s {
            let score = probs[start..end].iter().map(|row| row[class]).sum::<f64>()
                / (end - start) as f64;
            segments.push(Segment {
                video_id: series.video_id().to_owned(),
                class_label: global.label.clone(),
                start_s: start as f64 / fps,
                end_s: end as f64 / fps,
                score: score.clamp(0.0, 1.0),
            });
        }
        t = end;
    }
    Ok(segments)
}

/// Window and stride converted to whole frames.
pub fn window_frames(series: &ProbabilitySeries, cfg: &LocalizationConfig) -> Result<(usize, usize)> {
    cfg.validate_window()?;
    let fps = series.fps();
    let window = (cfg.window_s * fps).round() as usize;
    let stride = (cfg.stride_s * fps).round() as usize;
    if window == 0 || stride == 0 {
        return Err(Error::InvalidParameter(format!(
            "window {} s / stride {} s is shorter than one frame at {fps} fps",
            cfg.window_s, cfg.stride_s
        )));
    }
    if window > series.n_frames() {
        return Err(Error::InvalidParameter(format!(
            "window of {window} frames is longer than the {}-frame video",
            series.n_frames()
        )));
    }
    Ok((window, stride))
}

/// Classifies each window on its own and reports the whole window.
///
/// Windows start every `stride` frames; the first window reaching the end of
/// the video is clipped there and is the last one evaluated.
pub fn localize_sliding_window(series: &ProbabilitySeries, cfg: &LocalizationConfig) -> Result<Vec<Segment>> {
    let (window, stride) = window_frames(series, cfg)?;
    let n = series.n_frames();
    let fps = series.fps();
    let mut segments = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + window).min(n);
        let pred = predict(&temporal_average(&series.slice(start, end)?)?);
        segments.push(Segment {
            video_id: series.video_id().to_owned(),
            class_label: pred.label,
            start_s: start as f64 / fps,
            end_s: end as f64 / fps,
            score: pred.probability.clamp(0.0, 1.0),
        });
        if end == n {
            break;
        }
        start += stride;
    }
    if cfg.merge_overlaps {
        merge_segments(&segments)
    } else {
        Ok(segments)
    }
}

/// Merges overlapping or touching same-class segments of one video; merged
/// scores are the maximum of their parts.
pub fn merge_segments(segments: &[Segment]) -> Result<Vec<Segment>> {
    let Some(first) = segments.first() else {
        return Ok(Vec::new());
    };
    if let Some(other) = segments.iter().find(|s| s.video_id != first.video_id) {
        return Err(Error::Validation(format!(
            "cannot merge segments of videos `{}` and `{}`",
            first.video_id, other.video_id
        )));
    }
    let mut sorted = segments.to_vec();
    sorted.sort_by(|a, b| {
        a.class_label
            .cmp(&b.class_label)
            .then(a.start_s.total_cmp(&b.start_s))
            .then(a.end_s.total_cmp(&b.end_s))
    });
    let mut merged: Vec<Segment> = Vec::with_capacity(sorted.len());
    for seg in sorted {
        match merged.last_mut() {
            Some(cur) if cur.class_label == seg.class_label && seg.start_s <= cur.end_s => {
                cur.end_s = cur.end_s.max(seg.end_s);
                cur.score = cur.score.max(seg.score);
            }
            _ => merged.push(seg),
        }
    }
    sort_segments(&mut merged);
    Ok(merged)
}
