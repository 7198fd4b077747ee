//! Dense n-dimensional tensors for flow planes and convolution weights.
//!
//! On disk: `b"WTEN" | rank: u32 | dims: rank x u32 | f32 values`, little
//! endian, row-major. In memory values are kept as `f64`; every `f32` read
//! from disk survives a write unchanged.

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"WTEN";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.is_empty() || expected != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

pub fn parse_tensor(bytes: &[u8]) -> Result<Tensor> {
    if !bytes.starts_with(TENSOR_MAGIC) {
        return Err(Error::Format("missing WTEN magic".into()));
    }
    let read_u32 = |at: usize| -> Result<usize> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
            .ok_or_else(|| Error::Format("tensor header truncated".into()))
    };
    let rank = read_u32(4)?;
    if rank == 0 {
        return Err(Error::Format("tensor rank must be at least 1".into()));
    }
    let shape = (0..rank)
        .map(|k| read_u32(8 + 4 * k))
        .collect::<Result<Vec<_>>>()?;
    let payload = &bytes[8 + 4 * rank..];
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("tensor shape {shape:?} overflows")))?;
    if payload.len() != count * 4 {
        return Err(Error::Format(format!(
            "size mismatch: shape {shape:?} needs {} payload bytes, found {}",
            count * 4,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect::<Vec<_>>();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite tensor value".into()));
    }
    Tensor::new(shape, data)
}

/// Serializes as float32; values that are not exactly representable are rounded.
pub fn write_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.rank() + 4 * t.data.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &d in &t.shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in &t.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_rank4() {
        let data: Vec<f64> = (0..2 * 3 * 2 * 2).map(|i| i as f64 * 0.25 - 1.0).collect();
        let t = Tensor::new(vec![2, 3, 2, 2], data).unwrap();
        let bytes = write_tensor(&t);
        assert_eq!(bytes.len(), 4 + 4 + 16 + 24 * 4);
        assert_eq!(parse_tensor(&bytes).unwrap(), t);
    }

    #[test]
    fn truncated() {
        let t = Tensor::zeros(vec![3, 3]);
        let bytes = write_tensor(&t);
        assert!(parse_tensor(&bytes[..bytes.len() - 4]).is_err());
        assert!(parse_tensor(&bytes[..10]).is_err());
        assert!(parse_tensor(b"WFEA").is_err());
    }

    #[test]
    fn shape_mismatch() {
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }
}
