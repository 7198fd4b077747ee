//! Fully connected similarity graph over feature vectors and its
//! row-stochastic transition matrix.
//!
//! Edge weights decay exponentially with Euclidean distance:
//!
//! ```text
//! p[i][j] = exp(-gamma * d(i, j)) / sum_m exp(-gamma * d(i, m))
//! ```
//!
//! The sum runs over `m != i` unless self loops are enabled.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::FeatureMatrix;

/// Default upper bound on graph size for dense construction.
pub const DEFAULT_MAX_NODES: usize = 20_000;

/// Tolerance on transition matrix row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps a row-major `n x n` matrix after checking it is a valid distance table.
    pub fn new(n: usize, dist: Vec<f64>) -> Result<Self> {
        if dist.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{n}x{n} distance matrix needs {} entries, got {}",
                n * n,
                dist.len()
            )));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::Validation(format!("dist[{i}][{i}] must be 0")));
            }
            for j in 0..n {
                let v = dist[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "dist[{i}][{j}] = {v} is not a finite nonnegative number"
                    )));
                }
                if v != dist[j * n + i] {
                    return Err(Error::Validation(format!("dist[{i}][{j}] != dist[{j}][{i}]")));
                }
            }
        }
        Ok(DistanceMatrix { n, dist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }
}

fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = x as f64 - y as f64;
            diff * diff
        })
        .sum::<f64>()
        .sqrt()
}

pub fn pairwise_distances(features: &FeatureMatrix) -> Result<DistanceMatrix> {
    pairwise_distances_limited(features, DEFAULT_MAX_NODES)
}

/// Each unordered pair is computed once and mirrored, so the result is
/// exactly symmetric.
pub fn pairwise_distances_limited(features: &FeatureMatrix, max_nodes: usize) -> Result<DistanceMatrix> {
    let n = features.n();
    if n < 2 {
        return Err(Error::GraphDegenerate(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    if n > max_nodes {
        return Err(Error::GraphTooLarge { n, limit: max_nodes });
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = features.row(i);
            (i + 1..n).map(|j| euclidean(a, features.row(j))).collect()
        })
        .collect();
    let mut dist = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, dist })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    p: Vec<f64>,
    gamma: Option<f64>,
    self_loops: bool,
}

impl TransitionMatrix {
    /// Wraps an arbitrary row-major matrix, checking nonnegativity and row sums.
    pub fn from_dense(n: usize, p: Vec<f64>) -> Result<Self> {
        if n == 0 || p.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{n}x{n} transition matrix needs {} entries, got {}",
                n * n,
                p.len()
            )));
        }
        let tm = TransitionMatrix {
            n,
            p,
            gamma: None,
            self_loops: true,
        };
        tm.check_row_stochastic()?;
        Ok(tm)
    }

    pub fn check_row_stochastic(&self) -> Result<()> {
        for i in 0..self.n {
            let row = self.row(i);
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Validation(format!(
                    "transition matrix row {i} has invalid entry {v}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::NotRowStochastic { row: i, sum });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    /// Kernel bandwidth the matrix was built with, if it came from distances.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn self_loops(&self) -> bool {
        self.self_loops
    }

    /// Row-major transpose, used for column-wise propagation.
    pub fn transposed(&self) -> Vec<f64> {
        let n = self.n;
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = self.p[i * n + j];
            }
        }
        t
    }
}

pub fn transition_matrix(dist: &DistanceMatrix, gamma: f64, self_loops: bool) -> Result<TransitionMatrix> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let n = dist.n();
    if n == 1 && !self_loops {
        return Err(Error::GraphDegenerate(
            "a single node without self loops has no outgoing transitions".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| softmax_row(dist.row(i), i, gamma, self_loops))
        .collect();
    Ok(TransitionMatrix {
        n,
        p: rows.concat(),
        gamma: Some(gamma),
        self_loops,
    })
}

/// `exp(-gamma * d)` normalized over the row, shifted by the largest exponent.
fn softmax_row(d: &[f64], i: usize, gamma: f64, self_loops: bool) -> Vec<f64> {
    let included = |j: usize| self_loops || j != i;
    let max_logit = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| included(j))
        .map(|(_, &v)| -gamma * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut row: Vec<f64> = d
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            if included(j) {
                (-gamma * v - max_logit).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = row.iter().sum();
    for v in &mut row {
        *v /= total;
    }
    row
}
