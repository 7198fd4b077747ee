//! Line-delimited JSON sample manifests.
//!
//! Each non-blank line holds one [`SampleRecord`]:
//!
//! ```text
//! {"id":"img-0001","class":"archery","source":"flickr","feature_row":0}
//! {"id":"yt-0042","class":"archery","source":"youtube_frame","feature_row":1,"video_id":"v17","frame_index":120,"timestamp_s":4.0}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Web provider a sample was retrieved from.
///
/// The declaration order is the canonical source order used when assembling
/// mixed training sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    GoogleImage,
    Flickr,
    YoutubeFrame,
    GifFrame,
    Other,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::GoogleImage,
        Source::Flickr,
        Source::YoutubeFrame,
        Source::GifFrame,
        Source::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::GoogleImage => "google_image",
            Source::Flickr => "flickr",
            Source::YoutubeFrame => "youtube_frame",
            Source::GifFrame => "gif_frame",
            Source::Other => "other",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown source `{s}`")))
    }
}

/// One web sample: an image, a video frame or a GIF frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    #[serde(rename = "class")]
    pub class_label: String,
    pub source: Source,
    pub feature_row: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_s: Option<f64>,
}

impl SampleRecord {
    pub fn new(
        id: impl Into<String>,
        class_label: impl Into<String>,
        source: Source,
        feature_row: usize,
    ) -> Self {
        SampleRecord {
            id: id.into(),
            class_label: class_label.into(),
            source,
            feature_row,
            video_id: None,
            frame_index: None,
            timestamp_s: None,
        }
    }

    pub fn with_frame(mut self, video_id: impl Into<String>, frame_index: u64) -> Self {
        self.video_id = Some(video_id.into());
        self.frame_index = Some(frame_index);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Validation("empty sample id".into()));
        }
        if self.video_id.is_some() != self.frame_index.is_some() {
            return Err(Error::Validation(format!(
                "sample `{}`: video_id and frame_index must be given together",
                self.id
            )));
        }
        if let Some(t) = self.timestamp_s {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Validation(format!(
                    "sample `{}`: timestamp_s must be a nonnegative number, got {t}",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// An ordered collection of samples with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    records: Vec<SampleRecord>,
}

impl SampleSet {
    pub fn new(records: Vec<SampleRecord>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            rec.validate()?;
            if let Some(first) = seen.insert(rec.id.as_str(), i) {
                return Err(Error::Validation(format!(
                    "duplicate id `{}` at positions {first} and {i}",
                    rec.id
                )));
            }
        }
        Ok(SampleSet { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SampleRecord> {
        self.records.iter()
    }

    pub fn into_records(self) -> Vec<SampleRecord> {
        self.records
    }

    /// Indices of each class, classes in lexicographic order, indices in input order.
    pub fn class_indices(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, rec) in self.records.iter().enumerate() {
            out.entry(rec.class_label.as_str()).or_default().push(i);
        }
        out
    }

    /// Sub-set of the records at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Checks that every `feature_row` addresses a row of a matrix with `n_rows` rows.
    pub fn check_feature_rows(&self, n_rows: usize) -> Result<()> {
        match self.records.iter().find(|r| r.feature_row >= n_rows) {
            Some(rec) => Err(Error::Validation(format!(
                "sample `{}` references feature row {} but the matrix has {n_rows} rows",
                rec.id, rec.feature_row
            ))),
            None => Ok(()),
        }
    }
}

impl<'a> IntoIterator for &'a SampleSet {
    type Item = &'a SampleRecord;
    type IntoIter = std::slice::Iter<'a, SampleRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

pub fn parse_manifest(text: &str) -> Result<SampleSet> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        rec.validate()
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        if let Some(first) = seen.insert(rec.id.clone(), line_no) {
            return Err(Error::parse(
                line_no,
                format!("duplicate id `{}` (first seen on line {first})", rec.id),
            ));
        }
        records.push(rec);
    }
    Ok(SampleSet { records })
}

pub fn write_manifest(set: &SampleSet) -> String {
    let mut out = String::new();
    for rec in set {
        // Serializing a plain struct of strings and numbers cannot fail.
        out.push_str(&serde_json::to_string(rec).expect("sample record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let set = parse_manifest(
            r#"{"id":"a","class":"archery","source":"flickr","feature_row":0}"#,
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.records()[0].source, Source::Flickr);
        assert_eq!(set.records()[0].class_label, "archery");
    }

    #[test]
    fn empty_file() {
        assert!(parse_manifest("").unwrap().is_empty());
        assert!(parse_manifest("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_reports_second_line() {
        let text = concat!(
            r#"{"id":"a","class":"x","source":"flickr","feature_row":0}"#,
            "\n",
            r#"{"id":"b","class":"x","source":"flickr","feature_row":1}"#,
            "\n",
            r#"{"id":"a","class":"x","source":"flickr","feature_row":2}"#,
            "\n"
        );
        match parse_manifest(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_number() {
        let text = "{\"id\":\"a\",\"class\":\"x\",\"source\":\"flickr\",\"feature_row\":0}\n{oops";
        assert!(matches!(parse_manifest(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn frame_index_requires_video() {
        let text = r#"{"id":"a","class":"x","source":"youtube_frame","feature_row":0,"frame_index":3}"#;
        assert!(parse_manifest(text).is_err());
        let text = r#"{"id":"a","class":"x","source":"youtube_frame","feature_row":0,"video_id":"v"}"#;
        assert!(parse_manifest(text).is_err());
    }

    #[test]
    fn unknown_source_rejected() {
        let text = r#"{"id":"a","class":"x","source":"bing","feature_row":0}"#;
        assert!(parse_manifest(text).is_err());
    }

    #[test]
    fn write_then_parse() {
        let set = SampleSet::new(vec![
            SampleRecord::new("b", "x", Source::GifFrame, 1).with_frame("g1", 0),
            SampleRecord {
                timestamp_s: Some(0.1 + 0.2),
                ..SampleRecord::new("a", "y", Source::YoutubeFrame, 0).with_frame("v1", 3)
            },
        ])
        .unwrap();
        let text = write_manifest(&set);
        assert_eq!(parse_manifest(&text).unwrap(), set);
    }
}
