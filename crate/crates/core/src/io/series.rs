//! Per-frame class probabilities and video-level probability tables.
//!
//! Series CSV:
//!
//! ```text
//! #fps=30
//! frame_index,archery,diving
//! 0,0.9,0.1
//! 1,0.8,0.2
//! ```
//!
//! Rows are validated and never renormalized.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Maximum deviation of a probability row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySeries {
    video_id: String,
    fps: f64,
    class_names: Vec<String>,
    probs: Vec<Vec<f64>>,
}

pub(crate) fn check_probability_row(row: &[f64]) -> std::result::Result<(), String> {
    if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
        return Err(format!("probability {v} outside [0, 1]"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(format!("probabilities sum to {sum}, expected 1"));
    }
    Ok(())
}

impl ProbabilitySeries {
    pub fn new(
        video_id: impl Into<String>,
        fps: f64,
        class_names: Vec<String>,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Validation(format!("fps must be positive, got {fps}")));
        }
        if class_names.is_empty() {
            return Err(Error::Validation("series needs at least one class".into()));
        }
        if probs.is_empty() {
            return Err(Error::Empty("probability series has no frames".into()));
        }
        for (t, row) in probs.iter().enumerate() {
            if row.len() != class_names.len() {
                return Err(Error::DimensionMismatch(format!(
                    "frame {t} has {} probabilities for {} classes",
                    row.len(),
                    class_names.len()
                )));
            }
            check_probability_row(row).map_err(|m| Error::Validation(format!("frame {t}: {m}")))?;
        }
        Ok(ProbabilitySeries {
            video_id: video_id.into(),
            fps,
            class_names,
            probs,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn n_frames(&self) -> usize {
        self.probs.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.probs.len() as f64 / self.fps
    }

    /// Frames `start..end` as a new series with the same video id and rate.
    pub fn slice(&self, start: usize, end: usize) -> Result<ProbabilitySeries> {
        if start >= end || end > self.probs.len() {
            return Err(Error::InvalidParameter(format!(
                "frame range {start}..{end} invalid for {} frames",
                self.probs.len()
            )));
        }
        Ok(ProbabilitySeries {
            video_id: self.video_id.clone(),
            fps: self.fps,
            class_names: self.class_names.clone(),
            probs: self.probs[start..end].to_vec(),
        })
    }
}

pub fn parse_probability_series(video_id: &str, text: &str) -> Result<ProbabilitySeries> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let (_, fps_line) = lines
        .next()
        .ok_or_else(|| Error::Empty("probability file is empty".into()))?;
    let fps = fps_line
        .trim()
        .strip_prefix("#fps=")
        .ok_or_else(|| Error::parse(1, "first line must be `#fps=<value>`"))?
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::parse(1, format!("bad fps: {e}")))?;

    let (hdr_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing header line"))?;
    let mut cols = header.split(',').map(str::trim);
    if cols.next() != Some("frame_index") {
        return Err(Error::parse(hdr_no + 1, "header must start with `frame_index`"));
    }
    let class_names: Vec<String> = cols.map(str::to_owned).collect();
    if class_names.is_empty() || class_names.iter().any(String::is_empty) {
        return Err(Error::parse(hdr_no + 1, "header needs at least one class name"));
    }

    let mut probs = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let mut fields = line.split(',').map(str::trim);
        let frame: usize = fields
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad frame_index: {e}")))?;
        if frame != probs.len() {
            return Err(Error::parse(
                line_no,
                format!("expected frame_index {}, found {frame}", probs.len()),
            ));
        }
        let row = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::parse(line_no, format!("bad probability `{f}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != class_names.len() {
            return Err(Error::parse(
                line_no,
                format!(
                    "ragged row: {} probabilities for {} classes",
                    row.len(),
                    class_names.len()
                ),
            ));
        }
        check_probability_row(&row).map_err(|m| Error::parse(line_no, m))?;
        probs.push(row);
    }
    ProbabilitySeries::new(video_id, fps, class_names, probs)
}

/// Writes values in shortest round-trip form so a re-parse is exact.
pub fn write_probability_series(series: &ProbabilitySeries) -> String {
    let mut out = format!("#fps={}\nframe_index,{}\n", series.fps, series.class_names.join(","));
    for (t, row) in series.probs.iter().enumerate() {
        write!(out, "{t}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Video-level class probabilities, one row per video.
///
/// CSV header: `video_id,<class_0>,...,<class_{C-1}>`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoProbabilities {
    pub class_names: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

pub fn parse_video_probabilities(text: &str) -> Result<VideoProbabilities> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if header.get(0) != Some("video_id") || header.len() < 2 {
        return Err(Error::parse(1, "header must be `video_id,<class>,...`"));
    }
    let class_names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line_no = i + 2;
        let rec = rec.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let video = rec[0].to_owned();
        let probs = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::parse(line_no, format!("bad probability `{f}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        check_probability_row(&probs).map_err(|m| Error::parse(line_no, m))?;
        rows.push((video, probs));
    }
    Ok(VideoProbabilities { class_names, rows })
}

pub fn write_video_probabilities(table: &VideoProbabilities) -> String {
    let mut out = format!("video_id,{}\n", table.class_names.join(","));
    for (video, probs) in &table.rows {
        out.push_str(video);
        for v in probs {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
