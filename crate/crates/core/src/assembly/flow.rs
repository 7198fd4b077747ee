//! Optical-flow input stacks and first-layer weight inflation for a flow
//! network initialized from RGB weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Tensor;

/// One optical-flow field: horizontal and vertical displacement planes,
/// row-major `height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        let len = width * height;
        if len == 0 || dx.len() != len || dy.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} flow field needs {len} values per plane, got {} and {}",
                dx.len(),
                dy.len()
            )));
        }
        Ok(FlowField { width, height, dx, dy })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowLayout {
    /// `[x1, y1, x2, y2, ...]`
    #[default]
    Interleaved,
    /// `[x1, ..., xD, y1, ..., yD]`
    Grouped,
}

/// A `width x height x 2D` network input.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVolume {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub layout: FlowLayout,
    pub channels: Vec<Vec<f64>>,
}

impl FlowVolume {
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Shape `[2D, height, width]`.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(
            vec![self.channels.len(), self.height, self.width],
            self.channels.concat(),
        )
        .expect("volume channels are consistent")
    }
}

pub fn assemble_flow_stack(flows: &[FlowField], layout: FlowLayout) -> Result<FlowVolume> {
    let first = flows
        .first()
        .ok_or_else(|| Error::Empty("flow stack needs at least one field".into()))?;
    let (width, height) = (first.width, first.height);
    for (k, f) in flows.iter().enumerate() {
        if (f.width, f.height) != (width, height)
            || f.dx.len() != width * height
            || f.dy.len() != width * height
        {
            return Err(Error::DimensionMismatch(format!(
                "flow field {k} is {}x{}, expected {width}x{height}",
                f.width, f.height
            )));
        }
    }
    let channels = match layout {
        FlowLayout::Interleaved => flows
            .iter()
            .flat_map(|f| [f.dx.clone(), f.dy.clone()])
            .collect(),
        FlowLayout::Grouped => flows
            .iter()
            .map(|f| f.dx.clone())
            .chain(flows.iter().map(|f| f.dy.clone()))
            .collect(),
    };
    Ok(FlowVolume {
        width,
        height,
        depth: flows.len(),
        layout,
        channels,
    })
}

/// Reads `D` fields from a `[D, 2, height, width]` tensor (x plane first).
pub fn flow_fields_from_tensor(t: &Tensor) -> Result<Vec<FlowField>> {
    let &[depth, two, height, width] = t.shape() else {
        return Err(Error::DimensionMismatch(format!(
            "flow tensor must have shape [D, 2, h, w], got {:?}",
            t.shape()
        )));
    };
    if two != 2 {
        return Err(Error::DimensionMismatch(format!(
            "flow tensor axis 1 must be 2, got {two}"
        )));
    }
    let plane = width * height;
    (0..depth)
        .map(|k| {
            let base = k * 2 * plane;
            FlowField::new(
                width,
                height,
                t.data()[base..base + plane].to_vec(),
                t.data()[base + plane..base + 2 * plane].to_vec(),
            )
        })
        .collect()
}

/// Turns `K x 3 x s x s` RGB filters into `K x 2D x s x s` flow filters by
/// replicating the per-position channel mean.
pub fn inflate_channel_weights(weights: &Tensor, depth: usize) -> Result<Tensor> {
    let &[k, c, kh, kw] = weights.shape() else {
        return Err(Error::DimensionMismatch(format!(
            "weights must be rank 4, got shape {:?}",
            weights.shape()
        )));
    };
    if c != 3 {
        return Err(Error::DimensionMismatch(format!(
            "weights must have 3 input channels, got {c}"
        )));
    }
    if depth == 0 {
        return Err(Error::InvalidParameter("stack depth must be positive".into()));
    }
    let out_c = 2 * depth;
    let plane = kh * kw;
    let src = weights.data();
    let mut out = Vec::with_capacity(k * out_c * plane);
    for filter in 0..k {
        let base = filter * 3 * plane;
        let mean: Vec<f64> = (0..plane)
            .map(|p| (src[base + p] + src[base + plane + p] + src[base + 2 * plane + p]) / 3.0)
            .collect();
        for _ in 0..out_c {
            out.extend_from_slice(&mean);
        }
    }
    Tensor::new(vec![k, out_c, kh, kw], out)
}
