//! Evaluation metrics: classification accuracy, filtering precision/recall,
//! temporal IoU, detection AP/mAP and untrimmed-classification mAP.

mod ap;
mod detection;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::{rank_by_score, FilterPolicy, FilterResult};

pub use ap::{classification_map, interpolated_ap, average_precision_ranked, RankedItem};
pub use detection::{detection_ap, detection_map, temporal_iou, MapTable, TABLE8_THRESHOLDS};

/// Fraction of `(predicted, truth)` pairs that agree.
pub fn accuracy<P: AsRef<str>, T: AsRef<str>>(pairs: &[(P, T)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("accuracy needs at least one prediction".into()));
    }
    let correct = pairs
        .iter()
        .filter(|(p, t)| p.as_ref() == t.as_ref())
        .count();
    Ok(correct as f64 / pairs.len() as f64)
}

/// One operating point of a filter against known inliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    /// Threshold, k or removed fraction, depending on the sweep.
    pub parameter: f64,
    pub kept: usize,
    pub precision: f64,
    pub recall: f64,
    /// Nothing was kept; precision is reported as 1.0 by convention.
    pub empty_kept: bool,
}

impl PrPoint {
    pub fn f1(&self) -> f64 {
        if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        }
    }
}

fn count_inliers(mask: &[bool]) -> Result<usize> {
    let n = mask.iter().filter(|&&m| m).count();
    if n == 0 {
        return Err(Error::Validation("inlier mask marks no inliers".into()));
    }
    Ok(n)
}

fn point(parameter: f64, kept: usize, kept_inliers: usize, inliers: usize) -> PrPoint {
    PrPoint {
        parameter,
        kept,
        precision: if kept == 0 {
            1.0
        } else {
            kept_inliers as f64 / kept as f64
        },
        recall: kept_inliers as f64 / inliers as f64,
        empty_kept: kept == 0,
    }
}

pub fn filtering_pr(result: &FilterResult, mask: &[bool]) -> Result<PrPoint> {
    if mask.len() != result.n() {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries for {} samples",
            mask.len(),
            result.n()
        )));
    }
    let inliers = count_inliers(mask)?;
    let kept_inliers = result.kept.iter().filter(|&&i| mask[i]).count();
    let parameter = match result.policy {
        FilterPolicy::TopK(k) => k as f64,
        FilterPolicy::Threshold(t) => t,
    };
    Ok(point(parameter, result.kept.len(), kept_inliers, inliers))
}

/// Filter settings to evaluate along a precision/recall curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Keep scores `>= t`.
    Thresholds(Vec<f64>),
    /// Keep the `k` best scores (`k = 0` keeps nothing).
    TopK(Vec<usize>),
    /// Drop the worst `round(f * n)` scores.
    RemoveFraction(Vec<f64>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::Thresholds(v) | Sweep::RemoveFraction(v) => v.len(),
            Sweep::TopK(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluates every sweep setting against the inlier mask, in sweep order.
pub fn pr_curve(scores: &[f64], mask: &[bool], sweep: &Sweep) -> Result<Vec<PrPoint>> {
    if sweep.is_empty() {
        return Err(Error::Empty("sweep has no settings".into()));
    }
    if mask.len() != scores.len() {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries for {} scores",
            mask.len(),
            scores.len()
        )));
    }
    let inliers = count_inliers(mask)?;
    let n = scores.len();
    let ranked = rank_by_score(scores);
    // prefix[k] = inliers among the k best
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    for &i in &ranked {
        prefix.push(prefix.last().unwrap() + usize::from(mask[i]));
    }
    let top_k = |parameter: f64, k: usize| -> Result<PrPoint> {
        if k > n {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds {n} samples")));
        }
        Ok(point(parameter, k, prefix[k], inliers))
    };
    match sweep {
        Sweep::Thresholds(ts) => Ok(ts
            .iter()
            .map(|&t| {
                let kept = scores.iter().filter(|&&s| s >= t).count();
                let kept_inliers = scores
                    .iter()
                    .zip(mask)
                    .filter(|(&s, &m)| m && s >= t)
                    .count();
                point(t, kept, kept_inliers, inliers)
            })
            .collect()),
        Sweep::TopK(ks) => ks.iter().map(|&k| top_k(k as f64, k)).collect(),
        Sweep::RemoveFraction(fs) => fs
            .iter()
            .map(|&f| {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::InvalidParameter(format!(
                        "removed fraction must lie in [0, 1], got {f}"
                    )));
                }
                let removed = (f * n as f64).round() as usize;
                top_k(f, n - removed)
            })
            .collect(),
    }
}
