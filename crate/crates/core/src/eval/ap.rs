use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Average precision of a ranked hit list, using the monotone precision
/// envelope over every recall step:
///
/// `AP = (1 / n_positive) * sum over hit ranks k of max_{j >= k} precision(j)`.
///
/// `hits[k]` says whether the item at rank `k` is a true positive.
/// `n_positive` may exceed the number of hits (missed positives).
pub fn interpolated_ap(hits: &[bool], n_positive: usize) -> f64 {
    if n_positive == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (k, &hit) in hits.iter().enumerate() {
        tp += usize::from(hit);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let total: f64 = hits
        .iter()
        .zip(&precision)
        .filter(|(&hit, _)| hit)
        .fold(0.0, |acc, (_, &p)| acc + p);
    total / n_positive as f64
}

/// A scored item for ranking-based AP.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub id: String,
    pub score: f64,
    pub positive: bool,
}

/// AP of items ranked by descending score; equal scores are ordered by id.
pub fn average_precision_ranked(items: &[RankedItem]) -> Result<f64> {
    let n_positive = items.iter().filter(|i| i.positive).count();
    if n_positive == 0 {
        return Err(Error::Validation("ranking has no positive items".into()));
    }
    let mut order: Vec<&RankedItem> = items.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    let hits: Vec<bool> = order.iter().map(|i| i.positive).collect();
    Ok(interpolated_ap(&hits, n_positive))
}

/// Mean over classes of per-class AP across videos.
pub fn classification_map(per_class: &BTreeMap<String, Vec<RankedItem>>) -> Result<(f64, BTreeMap<String, f64>)> {
    if per_class.is_empty() {
        return Err(Error::Empty("no classes to evaluate".into()));
    }
    let mut aps = BTreeMap::new();
    for (class, items) in per_class {
        let ap = average_precision_ranked(items)
            .map_err(|_| Error::Validation(format!("class `{class}` has no positive video")))?;
        aps.insert(class.clone(), ap);
    }
    let mean = aps.values().sum::<f64>() / aps.len() as f64;
    Ok((mean, aps))
}
