//! Synthetic filtering benchmarks.
//!
//! A clean class is drawn from one Gaussian cluster and corrupted with
//! samples from a second, shifted cluster at increasing noise levels. The
//! random-walk filter is then scored against the known inlier mask.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{inject_noise, NoiseBench};
use crate::error::{Error, Result};
use crate::eval::{pr_curve, PrPoint, Sweep};
use crate::io::{FeatureMatrix, SampleRecord, SampleSet, Source};
use crate::walk::{relevance_for_features, select_policy, FilterConfig, FilterPolicy, ScoreSource};

pub const INLIER_CLASS: &str = "target";
pub const DISTRACTOR_CLASS: &str = "distractor";

/// Noise levels added to the clean class.
pub const NOISE_LEVELS: [f64; 8] = [0.01, 0.02, 0.03, 0.04, 0.05, 0.10, 0.15, 0.20];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub n_inliers: usize,
    pub n_outlier_pool: usize,
    pub dim: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            n_inliers: 200,
            n_outlier_pool: 100,
            dim: 64,
            separation: 10.0,
            sigma: 0.5,
            seed: 0,
        }
    }
}

/// Inliers around the origin, the outlier pool around `separation * e1`.
///
/// Rows `0..n_inliers` are inliers (class [`INLIER_CLASS`]); the remaining
/// rows form the pool (class [`DISTRACTOR_CLASS`]).
pub fn generate_clusters(params: &ClusterParams) -> Result<(FeatureMatrix, SampleSet, SampleSet)> {
    if params.dim < 1 {
        return Err(Error::InvalidParameter("feature dimension must be at least 1".into()));
    }
    if params.n_inliers == 0 {
        return Err(Error::InvalidParameter("need at least one inlier".into()));
    }
    if !(params.sigma.is_finite() && params.sigma > 0.0) || !(params.separation.is_finite() && params.separation >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need sigma > 0 and separation >= 0, got {} and {}",
            params.sigma, params.separation
        )));
    }
    let normal = Normal::new(0.0, params.sigma).expect("sigma checked");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n_inliers + params.n_outlier_pool;
    let mut values = Vec::with_capacity(n * params.dim);
    for i in 0..n {
        let shift = if i < params.n_inliers { 0.0 } else { params.separation };
        for k in 0..params.dim {
            let center = if k == 0 { shift } else { 0.0 };
            values.push((center + normal.sample(&mut rng)) as f32);
        }
    }
    let features = FeatureMatrix::new(n, params.dim, values)?;
    let inliers = SampleSet::new(
        (0..params.n_inliers)
            .map(|i| SampleRecord::new(format!("in-{i:05}"), INLIER_CLASS, Source::GoogleImage, i))
            .collect(),
    )?;
    let pool = SampleSet::new(
        (0..params.n_outlier_pool)
            .map(|i| {
                SampleRecord::new(
                    format!("out-{i:05}"),
                    DISTRACTOR_CLASS,
                    Source::Flickr,
                    params.n_inliers + i,
                )
            })
            .collect(),
    )?;
    Ok((features, inliers, pool))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepConfig {
    pub clusters: ClusterParams,
    pub levels: Vec<f64>,
    pub filter: FilterConfig,
    /// Applied to relative relevance (`n * r`, so 1.0 is the average sample).
    pub sweep: Sweep,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        NoiseSweepConfig {
            clusters: ClusterParams::default(),
            levels: NOISE_LEVELS.to_vec(),
            filter: FilterConfig::default(),
            sweep: default_removal_sweep(),
        }
    }
}

/// Removed fractions 0%, 1%, ..., 30%.
pub fn default_removal_sweep() -> Sweep {
    Sweep::RemoveFraction((0..=30).map(|p| p as f64 / 100.0).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: f64,
    pub n_clean: usize,
    pub n_injected: usize,
    /// Relative relevance of every benchmark sample, clean ones first.
    pub relative_relevance: Vec<f64>,
    pub inlier_mask: Vec<bool>,
    pub points: Vec<PrPoint>,
    /// Top-k with k equal to the number of clean samples.
    pub matched: PrPoint,
}

impl LevelResult {
    /// Highest recall among points with perfect precision and something kept.
    pub fn best_recall_at_full_precision(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.precision == 1.0 && !p.empty_kept)
            .map(|p| p.recall)
            .max_by(f64::total_cmp)
    }

    pub fn best_f1(&self) -> f64 {
        self.points.iter().map(PrPoint::f1).fold(0.0, f64::max)
    }
}

fn level_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1))
}

/// Builds the corrupted set for one level and scores the filter on it.
pub fn run_level(
    features: &FeatureMatrix,
    clean: &SampleSet,
    pool: &SampleSet,
    level: f64,
    seed: u64,
    filter: &FilterConfig,
    sweep: &Sweep,
) -> Result<LevelResult> {
    let NoiseBench {
        samples,
        inlier_mask,
        ..
    } = inject_noise(clean, pool, level, seed)?;
    let rows: Vec<usize> = samples.iter().map(|r| r.feature_row).collect();
    let sub = features.select_rows(&rows)?;
    let rel = relevance_for_features(&sub, filter)?;
    let n = rel.r.len() as f64;
    let relative: Vec<f64> = rel.r.iter().map(|v| v * n).collect();
    let points = pr_curve(&relative, &inlier_mask, sweep)?;
    let matched = pr_curve(&relative, &inlier_mask, &Sweep::TopK(vec![clean.len()]))?[0];
    Ok(LevelResult {
        level,
        n_clean: clean.len(),
        n_injected: samples.len() - clean.len(),
        relative_relevance: relative,
        inlier_mask,
        points,
        matched,
    })
}

/// Runs every noise level independently (in parallel); results follow `cfg.levels`.
pub fn run_noise_sweep(cfg: &NoiseSweepConfig) -> Result<Vec<LevelResult>> {
    let (features, clean, pool) = generate_clusters(&cfg.clusters)?;
    cfg.levels
        .par_iter()
        .enumerate()
        .map(|(i, &level)| {
            run_level(
                &features,
                &clean,
                &pool,
                level,
                level_seed(cfg.clusters.seed, i),
                &cfg.filter,
                &cfg.sweep,
            )
        })
        .collect()
}

pub const SUMMARY_HEADER: &str =
    "noise_level,n_clean,n_injected,best_recall_at_precision_1,matched_precision,matched_recall,best_f1";

pub fn write_sweep_summary(results: &[LevelResult]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in results {
        let best = r
            .best_recall_at_full_precision()
            .map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
        writeln!(
            out,
            "{:.2},{},{},{},{:.6},{:.6},{:.6}",
            r.level, r.n_clean, r.n_injected, best, r.matched.precision, r.matched.recall, r.best_f1()
        )
        .unwrap();
    }
    out
}

/// Kept-set comparison of independent and supervised filtering for one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub class_label: String,
    pub n: usize,
    pub kept_independent: usize,
    pub kept_supervised: usize,
    pub intersection: usize,
    pub jaccard: f64,
    /// Expected Jaccard index of two random subsets of the same sizes.
    pub chance_jaccard: f64,
}

fn jaccard(a: usize, b: usize, inter: f64) -> f64 {
    let union = a as f64 + b as f64 - inter;
    if union == 0.0 {
        1.0
    } else {
        inter / union
    }
}

/// Filters every class twice, once on random-walk relevance and once on
/// external classifier confidences, and compares the kept sets.
pub fn run_filter_bias_demo(
    samples: &SampleSet,
    relevance: &[f64],
    confidences: &[f64],
    independent: FilterPolicy,
    supervised: FilterPolicy,
) -> Result<Vec<BiasRow>> {
    for (name, v) in [("relevance", relevance), ("confidence", confidences)] {
        if v.len() != samples.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} {name} scores for {} samples",
                v.len(),
                samples.len()
            )));
        }
    }
    samples
        .class_indices()
        .into_iter()
        .map(|(class, members)| {
            let pick = |scores: &[f64], policy, from| -> Result<Vec<bool>> {
                let local: Vec<f64> = members.iter().map(|&i| scores[i]).collect();
                Ok(select_policy(&local, policy, from)
                    .map_err(|e| Error::InvalidParameter(format!("class `{class}`: {e}")))?
                    .kept_mask())
            };
            let a = pick(relevance, independent, ScoreSource::RandomWalk)?;
            let b = pick(confidences, supervised, ScoreSource::Classifier)?;
            let n = members.len();
            let ka = a.iter().filter(|&&x| x).count();
            let kb = b.iter().filter(|&&x| x).count();
            let inter = a.iter().zip(&b).filter(|(&x, &y)| x && y).count();
            let expected = ka as f64 * kb as f64 / n as f64;
            Ok(BiasRow {
                class_label: class.to_owned(),
                n,
                kept_independent: ka,
                kept_supervised: kb,
                intersection: inter,
                jaccard: jaccard(ka, kb, inter as f64),
                chance_jaccard: jaccard(ka, kb, expected),
            })
        })
        .collect()
}

pub const BIAS_HEADER: &str =
    "class,n,kept_independent,kept_supervised,intersection,jaccard,chance_jaccard";

pub fn write_bias_report(rows: &[BiasRow]) -> String {
    let mut out = format!("{BIAS_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            r.class_label,
            r.n,
            r.kept_independent,
            r.kept_supervised,
            r.intersection,
            r.jaccard,
            r.chance_jaccard
        )
        .unwrap();
    }
    out
}
