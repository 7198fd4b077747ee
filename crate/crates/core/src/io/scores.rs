//! Small keyed CSV tables: ground-truth labels, external confidences and
//! per-sample relevance.

use std::fmt::Write as _;

use crate::error::{Error, Result};

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(
            1,
            format!("header must be `{}`", expected.join(",")),
        ));
    }
    Ok(())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v = field
        .parse::<f64>()
        .map_err(|e| Error::parse(line, format!("bad number `{field}`: {e}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite number `{field}`")));
    }
    Ok(v)
}

/// `video_id,class` pairs. A video may appear on several lines (multi-label).
pub fn parse_labels(text: &str) -> Result<Vec<(String, String)>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &["video_id", "class"])?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Error::parse(i + 2, e.to_string()))?;
            Ok((rec[0].to_owned(), rec[1].to_owned()))
        })
        .collect()
}

pub fn write_labels(labels: &[(String, String)]) -> String {
    let mut out = String::from("video_id,class\n");
    for (v, c) in labels {
        writeln!(out, "{v},{c}").unwrap();
    }
    out
}

/// `id,score` pairs, e.g. classifier confidences for supervised filtering.
pub fn parse_id_scores(text: &str) -> Result<Vec<(String, f64)>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &["id", "score"])?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Error::parse(i + 2, e.to_string()))?;
            Ok((rec[0].to_owned(), parse_f64(&rec[1], i + 2)?))
        })
        .collect()
}

pub fn write_id_scores(scores: &[(String, f64)]) -> String {
    let mut out = String::from("id,score\n");
    for (id, s) in scores {
        writeln!(out, "{id},{s}").unwrap();
    }
    out
}

/// One row of a relevance file written by the filtering stage.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceRow {
    pub id: String,
    pub class_label: String,
    /// Score within the sample's class graph; sums to 1 per class.
    pub relevance: f64,
    /// `relevance` times the class size, so 1.0 is the class average.
    pub relative: f64,
    pub kept: bool,
}

pub const RELEVANCE_HEADER: &str = "id,class,relevance,relative_relevance,kept";

pub fn parse_relevance(text: &str) -> Result<Vec<RelevanceRow>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &RELEVANCE_HEADER.split(',').collect::<Vec<_>>())?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
            let kept = match &rec[4] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::parse(line, format!("bad kept flag `{other}`"))),
            };
            Ok(RelevanceRow {
                id: rec[0].to_owned(),
                class_label: rec[1].to_owned(),
                relevance: parse_f64(&rec[2], line)?,
                relative: parse_f64(&rec[3], line)?,
                kept,
            })
        })
        .collect()
}

/// Scores are written in shortest round-trip form so ranking survives a reload.
pub fn write_relevance(rows: &[RelevanceRow]) -> String {
    let mut out = format!("{RELEVANCE_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.id,
            r.class_label,
            r.relevance,
            r.relative,
            u8::from(r.kept)
        )
        .unwrap();
    }
    out
}

/// One video-level decision: `video_id,predicted,score,tie`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub video_id: String,
    pub predicted: String,
    pub score: f64,
    pub tie: bool,
}

pub const PREDICTION_HEADER: &str = "video_id,predicted,score,tie";

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRow>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &PREDICTION_HEADER.split(',').collect::<Vec<_>>())?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
            let tie = match &rec[3] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::parse(line, format!("bad tie flag `{other}`"))),
            };
            Ok(PredictionRow {
                video_id: rec[0].to_owned(),
                predicted: rec[1].to_owned(),
                score: parse_f64(&rec[2], line)?,
                tie,
            })
        })
        .collect()
}

pub fn write_predictions(rows: &[PredictionRow]) -> String {
    let mut out = format!("{PREDICTION_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.video_id, r.predicted, r.score, u8::from(r.tie)).unwrap();
    }
    out
}
