//! Temporal segments and their CSV form.
//!
//! ```text
//! video_id,class,start_s,end_s,score
//! video_test_0000004,CricketBowling,0.333333,1.366667,0.812500
//! ```

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const SEGMENT_HEADER: &str = "video_id,class,start_s,end_s,score";

/// A half-open time interval `[start_s, end_s)` labelled with a class.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub video_id: String,
    pub class_label: String,
    pub start_s: f64,
    pub end_s: f64,
    pub score: f64,
}

impl Segment {
    pub fn new(
        video_id: impl Into<String>,
        class_label: impl Into<String>,
        start_s: f64,
        end_s: f64,
        score: f64,
    ) -> Result<Self> {
        let seg = Segment {
            video_id: video_id.into(),
            class_label: class_label.into(),
            start_s,
            end_s,
            score,
        };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_s.is_finite() && self.end_s.is_finite()) {
            return Err(Error::Validation("segment bounds must be finite".into()));
        }
        if !(0.0 <= self.start_s && self.start_s < self.end_s) {
            return Err(Error::Validation(format!(
                "segment [{}, {}) violates 0 <= start < end",
                self.start_s, self.end_s
            )));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Validation(format!(
                "segment score {} outside [0, 1]",
                self.score
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Total order used for every emitted segment list.
    pub fn canonical_cmp(&self, other: &Segment) -> Ordering {
        self.video_id
            .cmp(&other.video_id)
            .then(self.start_s.total_cmp(&other.start_s))
            .then_with(|| self.class_label.cmp(&other.class_label))
            .then(self.end_s.total_cmp(&other.end_s))
            .then(other.score.total_cmp(&self.score))
    }
}

pub fn sort_segments(segments: &mut [Segment]) {
    segments.sort_by(Segment::canonical_cmp);
}

pub fn parse_segments(text: &str) -> Result<Vec<Segment>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    let expected: Vec<&str> = SEGMENT_HEADER.split(',').collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(1, format!("header must be `{SEGMENT_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line_no = i + 2;
        let rec = rec.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|e| Error::parse(line_no, format!("bad number `{}`: {e}", &rec[k])))
        };
        let seg = Segment {
            video_id: rec[0].to_owned(),
            class_label: rec[1].to_owned(),
            start_s: num(2)?,
            end_s: num(3)?,
            score: num(4)?,
        };
        seg.validate()
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        out.push(seg);
    }
    Ok(out)
}

/// Sorted by (video_id, start_s), six decimal places.
pub fn write_segments(segments: &[Segment]) -> String {
    let mut sorted = segments.to_vec();
    sort_segments(&mut sorted);
    let mut out = String::with_capacity(64 * (sorted.len() + 1));
    out.push_str(SEGMENT_HEADER);
    out.push('\n');
    for s in &sorted {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            s.video_id,
            s.class_label,
            s.start_s + 0.0,
            s.end_s + 0.0,
            s.score + 0.0
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_header_only() {
        assert_eq!(write_segments(&[]), format!("{SEGMENT_HEADER}\n"));
        assert!(parse_segments(&write_segments(&[])).unwrap().is_empty());
    }

    #[test]
    fn emitted_sorted() {
        let a = Segment::new("v1", "x", 5.0, 6.0, 0.5).unwrap();
        let b = Segment::new("v1", "x", 1.0, 2.0, 0.25).unwrap();
        let c = Segment::new("v0", "y", 9.0, 10.0, 1.0).unwrap();
        let text = write_segments(&[a, b, c]);
        assert_eq!(
            text,
            "video_id,class,start_s,end_s,score\n\
             v0,y,9.000000,10.000000,1.000000\n\
             v1,x,1.000000,2.000000,0.250000\n\
             v1,x,5.000000,6.000000,0.500000\n"
        );
    }

    #[test]
    fn invalid_segments() {
        assert!(Segment::new("v", "c", 2.0, 2.0, 0.5).is_err());
        assert!(Segment::new("v", "c", -1.0, 2.0, 0.5).is_err());
        assert!(Segment::new("v", "c", 0.0, 2.0, 1.5).is_err());
        assert!(parse_segments("video_id,class,start_s,end_s,score\nv,c,3,1,0.5\n").is_err());
        assert!(parse_segments("video,class,start,end,score\n").is_err());
    }
}
