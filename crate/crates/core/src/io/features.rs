//! Feature matrices.
//!
//! Binary layout (all little endian):
//!
//! ```text
//! b"WFEA" | n: u32 | d: u32 | n*d f32 values, row-major
//! ```
//!
//! Anything not starting with the magic is read as CSV text: one row per
//! line, comma separated, blank lines and `#` comments ignored.

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"WFEA";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f32>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Validation(format!(
                "feature matrix must be at least 1x1, got {n}x{d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "{n}x{d} feature matrix needs {} values, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite feature value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(FeatureMatrix { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} columns, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    /// New matrix built from the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<FeatureMatrix> {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            if r >= self.n {
                return Err(Error::Validation(format!(
                    "feature row {r} out of range for {} rows",
                    self.n
                )));
            }
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix::new(rows.len(), self.d, values)
    }
}

pub fn parse_feature_matrix(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.starts_with(FEATURE_MAGIC) {
        parse_binary(bytes)
    } else {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::Format("missing WFEA magic and not valid UTF-8 text".into()))?;
        parse_feature_csv(text)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "feature header needs {HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("feature dimensions {n}x{d} overflow")))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "size mismatch: {n}x{d} needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(n, d, values)
}

pub fn parse_feature_csv(text: &str) -> Result<FeatureMatrix> {
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f32>().map_err(|e| {
                    Error::parse(i + 1, format!("bad feature value `{}`: {e}", field.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    FeatureMatrix::from_rows(&rows)
}

pub fn write_feature_matrix(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.values.len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(m.n as u32).to_le_bytes());
    out.extend_from_slice(&(m.d as u32).to_le_bytes());
    for v in &m.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_feature_csv(m: &FeatureMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.n {
        let row: Vec<String> = m.row(i).iter().map(f32::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(n: u32, d: u32) -> Vec<u8> {
        let mut b = FEATURE_MAGIC.to_vec();
        b.extend_from_slice(&n.to_le_bytes());
        b.extend_from_slice(&d.to_le_bytes());
        b
    }

    #[test]
    fn two_by_three() {
        let mut bytes = header(2, 3);
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes.len(), 12 + 24);
        let m = parse_feature_matrix(&bytes).unwrap();
        assert_eq!((m.n(), m.d()), (2, 3));
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = header(2, 3);
        bytes.extend_from_slice(&[0u8; 20]);
        assert!(matches!(parse_feature_matrix(&bytes), Err(Error::Format(m)) if m.contains("size mismatch")));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = b"WFEB".to_vec();
        bytes.extend_from_slice(&[0xff; 8]);
        assert!(parse_feature_matrix(&bytes).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let mut bytes = header(1, 1);
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(parse_feature_matrix(&bytes), Err(Error::Validation(_))));
        assert!(parse_feature_csv("1.0,inf\n").is_err());
    }

    #[test]
    fn csv_fallback() {
        let m = parse_feature_matrix(b"# two points\n0,0\n3,4\n").unwrap();
        assert_eq!((m.n(), m.d()), (2, 2));
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert!(parse_feature_csv("1,2\n3\n").is_err());
        assert!(parse_feature_csv("").is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let m = FeatureMatrix::new(2, 2, vec![0.1, -2.5e-7, 3.0, 1e30]).unwrap();
        assert_eq!(parse_feature_csv(&write_feature_csv(&m)).unwrap(), m);
    }
}
