use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::eval::ap::interpolated_ap;
use crate::io::{MetricTable, Segment};

/// Overlap ratios reported for temporal localization.
pub const TABLE8_THRESHOLDS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Intersection over union of two time intervals; 0 when disjoint.
pub fn temporal_iou(a: &Segment, b: &Segment) -> f64 {
    let inter = (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(0.0);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.duration() + b.duration() - inter;
    inter / union
}

fn canonical(segments: &[Segment]) -> Vec<&Segment> {
    let mut v: Vec<&Segment> = segments.iter().collect();
    v.sort_by(|a, b| a.canonical_cmp(b));
    v
}

/// Ranks detections by descending score and greedily matches each to the
/// unmatched ground-truth segment (same video and class) with the highest
/// IoU at or above `iou_threshold`. Returns the hit list in rank order.
pub(crate) fn match_detections(detections: &[Segment], truth: &[Segment], iou_threshold: f64) -> Vec<bool> {
    let truth = canonical(truth);
    let mut ranked = canonical(detections);
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut taken = vec![false; truth.len()];
    ranked
        .iter()
        .map(|det| {
            let mut best: Option<(usize, f64)> = None;
            for (j, gt) in truth.iter().enumerate() {
                if taken[j] || gt.video_id != det.video_id || gt.class_label != det.class_label {
                    continue;
                }
                let iou = temporal_iou(det, gt);
                if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                    best = Some((j, iou));
                }
            }
            if let Some((j, _)) = best {
                taken[j] = true;
                true
            } else {
                false
            }
        })
        .collect()
}

/// AP of `detections` against `truth` for a single class.
pub fn detection_ap(detections: &[Segment], truth: &[Segment], iou_threshold: f64) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Empty("no ground-truth segments for this class".into()));
    }
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::InvalidParameter(format!(
            "IoU threshold must lie in [0, 1], got {iou_threshold}"
        )));
    }
    let hits = match_detections(detections, truth, iou_threshold);
    Ok(interpolated_ap(&hits, truth.len()))
}

/// Per-class AP and class-mean AP at each IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTable {
    pub thresholds: Vec<f64>,
    pub per_class: BTreeMap<String, Vec<f64>>,
    pub mean: Vec<f64>,
}

impl MapTable {
    pub fn columns(&self) -> Vec<String> {
        self.thresholds.iter().map(|t| format!("{t}")).collect()
    }

    /// One row per class followed by the mean row labelled `row_name`.
    pub fn to_metric_table(&self, row_name: &str) -> MetricTable {
        let mut t = MetricTable::new("method", self.columns());
        for (class, aps) in &self.per_class {
            t.push_row(format!("{row_name}/{class}"), aps.clone());
        }
        t.push_row(row_name, self.mean.clone());
        t
    }
}

/// Classes are taken from the ground truth; detections of other classes are ignored.
pub fn detection_map(detections: &[Segment], truth: &[Segment], thresholds: &[f64]) -> Result<MapTable> {
    if truth.is_empty() {
        return Err(Error::Empty("no ground-truth segments".into()));
    }
    if thresholds.is_empty() {
        return Err(Error::Empty("no IoU thresholds".into()));
    }
    let mut truth_by_class: BTreeMap<&str, Vec<Segment>> = BTreeMap::new();
    for t in truth {
        truth_by_class.entry(&t.class_label).or_default().push(t.clone());
    }
    let mut per_class = BTreeMap::new();
    for (class, gts) in &truth_by_class {
        let dets: Vec<Segment> = detections
            .iter()
            .filter(|d| d.class_label == *class)
            .cloned()
            .collect();
        let aps = thresholds
            .iter()
            .map(|&thr| detection_ap(&dets, gts, thr))
            .collect::<Result<Vec<_>>>()?;
        per_class.insert((*class).to_owned(), aps);
    }
    let n_classes = per_class.len() as f64;
    let mean = (0..thresholds.len())
        .map(|k| per_class.values().map(|aps: &Vec<f64>| aps[k]).sum::<f64>() / n_classes)
        .collect();
    Ok(MapTable {
        thresholds: thresholds.to_vec(),
        per_class,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(video: &str, class: &str, s: f64, e: f64, score: f64) -> Segment {
        Segment::new(video, class, s, e, score).unwrap()
    }

    #[test]
    fn iou_cases() {
        let a = seg("v", "c", 10.0, 20.0, 1.0);
        assert_eq!(temporal_iou(&a, &a), 1.0);
        let b = seg("v", "c", 15.0, 25.0, 1.0);
        assert!((temporal_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        let c = seg("v", "c", 20.0, 30.0, 1.0);
        assert_eq!(temporal_iou(&a, &c), 0.0);
        assert_eq!(temporal_iou(&a, &seg("v", "c", 40.0, 50.0, 1.0)), 0.0);
    }

    #[test]
    fn ap_basic() {
        let gt = [seg("v", "c", 0.0, 10.0, 1.0)];
        assert_eq!(detection_ap(&gt, &gt, 0.5).unwrap(), 1.0);
        assert_eq!(detection_ap(&[], &gt, 0.5).unwrap(), 0.0);
        assert!(detection_ap(&gt, &[], 0.5).is_err());
    }

    #[test]
    fn duplicates_are_false_positives() {
        let gt = [seg("v", "c", 0.0, 10.0, 1.0)];
        let dets = [seg("v", "c", 0.0, 10.0, 0.9), seg("v", "c", 0.0, 10.0, 0.95)];
        assert_eq!(match_detections(&dets, &gt, 0.5), vec![true, false]);
    }

    #[test]
    fn other_video_or_class_never_matches() {
        let gt = [seg("v", "c", 0.0, 10.0, 1.0)];
        let dets = [seg("w", "c", 0.0, 10.0, 0.9), seg("v", "d", 0.0, 10.0, 0.8)];
        assert_eq!(match_detections(&dets, &gt, 0.1), vec![false, false]);
    }

    #[test]
    fn tp_fp_tp_fixture() {
        let gt = [seg("v", "c", 0.0, 10.0, 1.0), seg("v", "c", 20.0, 30.0, 1.0)];
        let dets = [
            seg("v", "c", 0.0, 10.0, 0.9),
            seg("v", "c", 40.0, 50.0, 0.8),
            seg("v", "c", 21.0, 30.0, 0.7),
        ];
        let ap = detection_ap(&dets, &gt, 0.5).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn map_table() {
        let gt = [seg("v", "a", 0.0, 10.0, 1.0), seg("v", "b", 20.0, 30.0, 1.0)];
        let t = detection_map(&gt, &gt, &TABLE8_THRESHOLDS).unwrap();
        assert_eq!(t.mean, vec![1.0; 5]);
        let extra = [seg("v", "z", 0.0, 1.0, 0.5)];
        let t = detection_map(&extra, &gt, &[0.5]).unwrap();
        assert_eq!(t.per_class.len(), 2);
        assert_eq!(t.mean, vec![0.0]);
        let rendered = crate::io::write_report(&t.to_metric_table("fbf"));
        assert!(rendered.starts_with("method,0.5\nfbf/a,0.000000\n"), "{rendered}");
    }
}
