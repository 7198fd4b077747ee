//! Video-level class probabilities: temporal averaging and two-stream fusion.

use crate::error::{Error, Result};
use crate::io::series::{check_probability_row, ProbabilitySeries};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    p: Vec<f64>,
    class_names: Vec<String>,
}

impl ProbabilityVector {
    pub fn new(p: Vec<f64>, class_names: Vec<String>) -> Result<Self> {
        if p.is_empty() || p.len() != class_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} classes",
                p.len(),
                class_names.len()
            )));
        }
        check_probability_row(&p).map_err(Error::Validation)?;
        Ok(ProbabilityVector { p, class_names })
    }

    /// Classes named `0`, `1`, ... for anonymous vectors.
    pub fn unnamed(p: Vec<f64>) -> Result<Self> {
        let names = (0..p.len()).map(|i| i.to_string()).collect();
        Self::new(p, names)
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.p
    }
}

/// Column means over frames.
pub fn temporal_average(series: &ProbabilitySeries) -> Result<ProbabilityVector> {
    let rows = series.probs();
    if rows.is_empty() {
        return Err(Error::Empty("probability series has no frames".into()));
    }
    let mut sum = vec![0.0; series.n_classes()];
    for row in rows {
        for (acc, v) in sum.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let t = rows.len() as f64;
    let mean = sum.into_iter().map(|s| s / t).collect();
    ProbabilityVector::new(mean, series.class_names().to_vec())
}

fn check_compatible(a: &ProbabilityVector, b: &ProbabilityVector) -> Result<()> {
    if a.class_names != b.class_names {
        return Err(Error::DimensionMismatch(
            "probability vectors have different class lists".into(),
        ));
    }
    Ok(())
}

pub fn fuse_average(a: &ProbabilityVector, b: &ProbabilityVector) -> Result<ProbabilityVector> {
    check_compatible(a, b)?;
    let p = a.p.iter().zip(&b.p).map(|(x, y)| (x + y) / 2.0).collect();
    ProbabilityVector::new(p, a.class_names.clone())
}

/// Elementwise product, renormalized to sum to one.
pub fn fuse_product(a: &ProbabilityVector, b: &ProbabilityVector) -> Result<ProbabilityVector> {
    check_compatible(a, b)?;
    let prod: Vec<f64> = a.p.iter().zip(&b.p).map(|(x, y)| x * y).collect();
    renormalize(prod, a.class_names.clone())
}

fn renormalize(values: Vec<f64>, class_names: Vec<String>) -> Result<ProbabilityVector> {
    let total: f64 = values.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateFusion(
            "streams assign no common probability mass".into(),
        ));
    }
    ProbabilityVector::new(values.into_iter().map(|v| v / total).collect(), class_names)
}

/// RGB combined by product with the average of two flow streams (stack depths 1 and 10).
pub fn fuse_three(
    rgb: &ProbabilityVector,
    flow_d1: &ProbabilityVector,
    flow_d10: &ProbabilityVector,
) -> Result<ProbabilityVector> {
    fuse_product(rgb, &fuse_average(flow_d1, flow_d10)?)
}

/// Arithmetic mean of any number of streams.
pub fn fuse_average_all(streams: &[ProbabilityVector]) -> Result<ProbabilityVector> {
    let first = streams
        .first()
        .ok_or_else(|| Error::Empty("no streams to fuse".into()))?;
    let mut sum = vec![0.0; first.len()];
    for s in streams {
        check_compatible(first, s)?;
        for (acc, v) in sum.iter_mut().zip(&s.p) {
            *acc += v;
        }
    }
    let k = streams.len() as f64;
    ProbabilityVector::new(
        sum.into_iter().map(|v| v / k).collect(),
        first.class_names.clone(),
    )
}

/// Renormalized elementwise product of any number of streams.
pub fn fuse_product_all(streams: &[ProbabilityVector]) -> Result<ProbabilityVector> {
    let first = streams
        .first()
        .ok_or_else(|| Error::Empty("no streams to fuse".into()))?;
    let mut prod = vec![1.0; first.len()];
    for s in streams {
        check_compatible(first, s)?;
        for (acc, v) in prod.iter_mut().zip(&s.p) {
            *acc *= v;
        }
    }
    renormalize(prod, first.class_names.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub index: usize,
    pub label: String,
    pub probability: f64,
    /// Another class shares the maximal probability; the lowest index won.
    pub tie: bool,
}

pub fn predict(p: &ProbabilityVector) -> Prediction {
    let (index, &best) = p
        .p
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &f64)>, (i, v)| match acc {
            Some((_, b)) if *v <= *b => acc,
            _ => Some((i, v)),
        })
        .expect("probability vectors are nonempty");
    let tie = p.p.iter().filter(|&&v| v == best).count() > 1;
    Prediction {
        index,
        label: p.class_names[index].clone(),
        probability: best,
        tie,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(p: &[f64]) -> ProbabilityVector {
        ProbabilityVector::unnamed(p.to_vec()).unwrap()
    }

    #[test]
    fn average_cases() {
        let a = pv(&[0.2, 0.3, 0.5]);
        assert_eq!(fuse_average(&a, &a).unwrap(), a);
        assert_eq!(fuse_average(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(fuse_average(&pv(&[0.5, 0.5]), &pv(&[0.9, 0.1])).unwrap().probs(), &[0.7, 0.3]);
    }

    #[test]
    fn product_cases() {
        let a = pv(&[0.2, 0.3, 0.5]);
        let uniform = pv(&[1.0 / 3.0; 3]);
        let fused = fuse_product(&a, &uniform).unwrap();
        for (x, y) in fused.probs().iter().zip(a.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(fuse_product(&pv(&[0.5, 0.5]), &pv(&[0.9, 0.1])).unwrap().probs(), &[0.9, 0.1]);
        let hot = pv(&[0.0, 1.0, 0.0]);
        assert_eq!(fuse_product(&hot, &hot).unwrap().probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn product_degenerate() {
        assert!(matches!(
            fuse_product(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])),
            Err(Error::DegenerateFusion(_))
        ));
    }

    #[test]
    fn class_mismatch() {
        let a = ProbabilityVector::new(vec![1.0], vec!["x".into()]).unwrap();
        let b = ProbabilityVector::new(vec![1.0], vec!["y".into()]).unwrap();
        assert!(fuse_average(&a, &b).is_err());
        assert!(fuse_product(&a, &pv(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn three_stream() {
        let u = pv(&[0.25; 4]);
        assert_eq!(fuse_three(&u, &u, &u).unwrap(), u);
        let flow = pv(&[0.1, 0.6, 0.3]);
        let uniform = pv(&[1.0 / 3.0; 3]);
        let out = fuse_three(&uniform, &flow, &flow).unwrap();
        for (x, y) in out.probs().iter().zip(flow.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn many_stream_helpers() {
        let a = pv(&[0.5, 0.5]);
        let b = pv(&[0.9, 0.1]);
        assert_eq!(fuse_average_all(&[a.clone(), b.clone()]).unwrap(), fuse_average(&a, &b).unwrap());
        assert_eq!(fuse_product_all(&[a.clone(), b.clone()]).unwrap(), fuse_product(&a, &b).unwrap());
        assert!(fuse_average_all(&[]).is_err());
    }

    #[test]
    fn temporal_average_cases() {
        let names = vec!["a".to_string(), "b".to_string()];
        let one = ProbabilitySeries::new("v", 30.0, names.clone(), vec![vec![0.3, 0.7]]).unwrap();
        assert_eq!(temporal_average(&one).unwrap().probs(), &[0.3, 0.7]);
        let two =
            ProbabilitySeries::new("v", 30.0, names, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(temporal_average(&two).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn predictions() {
        let p = predict(&pv(&[0.9, 0.1]));
        assert_eq!((p.index, p.tie), (0, false));
        assert_eq!(p.label, "0");
        let p = predict(&pv(&[1.0 / 3.0; 3]));
        assert_eq!((p.index, p.tie), (0, true));
        let p = predict(&pv(&[0.2, 0.4, 0.4]));
        assert_eq!((p.index, p.tie), (1, true));
    }
}
