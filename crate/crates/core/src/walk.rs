//! Random-walk relevance and the filtering policies built on it.
//!
//! Relevance is the fixed point of a random walk with uniform restart:
//!
//! ```text
//! r_k(j) = beta * sum_i r_{k-1}(i) * p[i][j] + (1 - beta) / n,    r_0 = 1/n
//! ```
//!
//! Samples that sit far from the bulk of their class receive little
//! incoming mass and rank last.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pairwise_distances_limited, transition_matrix, TransitionMatrix, DEFAULT_MAX_NODES};
use crate::io::{FeatureMatrix, SampleSet};

pub const DEFAULT_BETA: f64 = 0.99;
pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            beta: DEFAULT_BETA,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceVector {
    pub r: Vec<f64>,
    pub iterations_used: usize,
    pub residual_l1: f64,
}

impl RelevanceVector {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn relevance_scores(p: &TransitionMatrix, cfg: &WalkConfig) -> Result<RelevanceVector> {
    cfg.validate()?;
    p.check_row_stochastic()?;
    let n = p.n();
    let restart = (1.0 - cfg.beta) / n as f64;
    // Column j of P is row j of the transpose; each output entry is reduced
    // in index order so results do not depend on the thread count.
    let pt = p.transposed();
    let mut r = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for k in 1..=cfg.max_iter {
        next.par_iter_mut().enumerate().for_each(|(j, out)| {
            let col = &pt[j * n..(j + 1) * n];
            let flow: f64 = col.iter().zip(&r).map(|(pij, ri)| pij * ri).sum();
            *out = cfg.beta * flow + restart;
        });
        debug_assert!(
            (next.iter().sum::<f64>() - 1.0).abs() < 1e-9,
            "relevance mass drifted"
        );
        residual = l1_distance(&next, &r);
        std::mem::swap(&mut r, &mut next);
        if residual < cfg.tol {
            return Ok(RelevanceVector {
                r,
                iterations_used: k,
                residual_l1: residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

/// How a filter turns scores into a kept set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPolicy {
    /// Keep the `k` highest scores; ties go to the smaller index.
    TopK(usize),
    /// Keep every score `>= tau`.
    Threshold(f64),
}

/// Where the filtered scores came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    RandomWalk,
    Classifier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// Ascending indices.
    pub kept: Vec<usize>,
    /// Ascending indices.
    pub removed: Vec<usize>,
    pub policy: FilterPolicy,
    pub scores_from: ScoreSource,
}

impl FilterResult {
    pub fn n(&self) -> usize {
        self.kept.len() + self.removed.len()
    }

    pub fn kept_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        for &i in &self.kept {
            mask[i] = true;
        }
        mask
    }
}

/// Indices ordered by descending score, ascending index on ties.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Applies `policy` to raw scores.
pub fn select_policy(scores: &[f64], policy: FilterPolicy, scores_from: ScoreSource) -> Result<FilterResult> {
    let n = scores.len();
    let mut keep = vec![false; n];
    match policy {
        FilterPolicy::TopK(k) => {
            if k == 0 || k > n {
                return Err(Error::InvalidParameter(format!(
                    "top-k needs 1 <= k <= {n}, got {k}"
                )));
            }
            for &i in &rank_by_score(scores)[..k] {
                keep[i] = true;
            }
        }
        FilterPolicy::Threshold(tau) => {
            for (flag, &s) in keep.iter_mut().zip(scores) {
                *flag = s >= tau;
            }
        }
    }
    let (kept, removed): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| keep[i]);
    Ok(FilterResult {
        kept,
        removed,
        policy,
        scores_from,
    })
}

pub fn filter_top_k(r: &RelevanceVector, k: usize) -> Result<FilterResult> {
    select_policy(&r.r, FilterPolicy::TopK(k), ScoreSource::RandomWalk)
}

pub fn filter_threshold(r: &RelevanceVector, tau: f64) -> FilterResult {
    select_policy(&r.r, FilterPolicy::Threshold(tau), ScoreSource::RandomWalk)
        .expect("threshold selection is infallible")
}

/// Filtering on confidences from an external classifier, with the same
/// selection rules as the relevance-based filters.
pub fn supervised_filter(
    confidences: &[f64],
    expected_len: usize,
    policy: FilterPolicy,
) -> Result<FilterResult> {
    if confidences.len() != expected_len {
        return Err(Error::DimensionMismatch(format!(
            "{} confidences for {expected_len} samples",
            confidences.len()
        )));
    }
    if confidences.iter().any(|c| !c.is_finite()) {
        return Err(Error::Validation("confidences must be finite".into()));
    }
    select_policy(confidences, policy, ScoreSource::Classifier)
}

/// Graph construction and walk parameters for filtering a labelled set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub gamma: f64,
    pub self_loops: bool,
    pub max_nodes: usize,
    pub walk: WalkConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            gamma: DEFAULT_GAMMA,
            self_loops: false,
            max_nodes: DEFAULT_MAX_NODES,
            walk: WalkConfig::default(),
        }
    }
}

/// Relevance of every sample of a set together with one class-wise kept set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFilterOutcome {
    /// Per-sample relevance within its class graph, aligned with the input set.
    pub relevance: Vec<f64>,
    /// Size of each sample's class; `relevance * class_size` averages to 1.
    pub class_size: Vec<usize>,
    pub kept: Vec<bool>,
    /// Per class: (class, iterations, final residual).
    pub diagnostics: Vec<(String, usize, f64)>,
}

/// Relevance of a single graph given its feature rows.
pub fn relevance_for_features(features: &FeatureMatrix, cfg: &FilterConfig) -> Result<RelevanceVector> {
    let dist = pairwise_distances_limited(features, cfg.max_nodes)?;
    let p = transition_matrix(&dist, cfg.gamma, cfg.self_loops)?;
    relevance_scores(&p, &cfg.walk)
}

/// Runs the random walk independently for every class of `samples` and
/// applies `policy` within each class. Thresholds compare relative relevance
/// (score times class size, so 1.0 is the class average), which keeps one
/// threshold meaningful across classes of different sizes.
pub fn filter_by_class(
    samples: &SampleSet,
    features: &FeatureMatrix,
    cfg: &FilterConfig,
    policy: FilterPolicy,
) -> Result<ClassFilterOutcome> {
    samples.check_feature_rows(features.n())?;
    let n = samples.len();
    let mut out = ClassFilterOutcome {
        relevance: vec![0.0; n],
        class_size: vec![0; n],
        kept: vec![false; n],
        diagnostics: Vec::new(),
    };
    let classes: BTreeMap<&str, Vec<usize>> = samples.class_indices();
    for (class, members) in classes {
        let rows: Vec<usize> = members
            .iter()
            .map(|&i| samples.records()[i].feature_row)
            .collect();
        let sub = features.select_rows(&rows)?;
        let rel = relevance_for_features(&sub, cfg).map_err(|e| match e {
            Error::GraphDegenerate(m) => Error::GraphDegenerate(format!("class `{class}`: {m}")),
            Error::InvalidParameter(m) => Error::InvalidParameter(format!("class `{class}`: {m}")),
            other => other,
        })?;
        let scale = members.len() as f64;
        let relative: Vec<f64> = rel.r.iter().map(|v| v * scale).collect();
        let result = select_policy(&relative, policy, ScoreSource::RandomWalk)
            .map_err(|e| Error::InvalidParameter(format!("class `{class}`: {e}")))?;
        for (local, &global) in members.iter().enumerate() {
            out.relevance[global] = rel.r[local];
            out.class_size[global] = members.len();
        }
        for &local in &result.kept {
            out.kept[members[local]] = true;
        }
        out.diagnostics
            .push((class.to_owned(), rel.iterations_used, rel.residual_l1));
    }
    Ok(out)
}
