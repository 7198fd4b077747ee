use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use webly_core::graph::{pairwise_distances, transition_matrix, DistanceMatrix, TransitionMatrix};
use webly_core::io::FeatureMatrix;
use webly_core::walk::{
    filter_threshold, filter_top_k, relevance_scores, RelevanceVector, WalkConfig,
};

fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let values = (0..n * d).map(|_| rng.random_range(-3.0f32..3.0)).collect();
    FeatureMatrix::new(n, d, values).unwrap()
}

fn random_distances(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DistanceMatrix {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.random_range(0.0..scale);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DistanceMatrix::new(n, d).unwrap()
}

fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> TransitionMatrix {
    let mut p = Vec::with_capacity(n * n);
    for _ in 0..n {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = row.iter().sum();
        p.extend(row.into_iter().map(|v| v / s));
    }
    TransitionMatrix::from_dense(n, p).unwrap()
}

/// r = (1 - beta) (I - beta P^T)^{-1} v with v uniform.
fn linear_solve_relevance(p: &TransitionMatrix, beta: f64) -> Vec<f64> {
    let n = p.n();
    let pt = DMatrix::from_fn(n, n, |i, j| p.get(j, i));
    let a = DMatrix::identity(n, n) - pt * beta;
    let v = DVector::from_element(n, (1.0 - beta) / n as f64);
    a.lu().solve(&v).expect("I - beta P^T is invertible").iter().copied().collect()
}

/// Direct evaluation of the exponential kernel without max subtraction.
fn direct_transition(dist: &DistanceMatrix, gamma: f64, self_loops: bool) -> Vec<f64> {
    let n = dist.n();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let denom: f64 = (0..n)
            .filter(|&m| self_loops || m != i)
            .map(|m| (-gamma * dist.get(i, m)).exp())
            .sum();
        for j in 0..n {
            if self_loops || j != i {
                p[i * n + j] = (-gamma * dist.get(i, j)).exp() / denom;
            }
        }
    }
    p
}

#[test]
fn distances_match_naive_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_features(&mut rng, 5, 8);
    let d = pairwise_distances(&f).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let mut acc = 0.0f64;
            for k in 0..8 {
                let diff = f.row(i)[k] as f64 - f.row(j)[k] as f64;
                acc += diff * diff;
            }
            assert!((d.get(i, j) - acc.sqrt()).abs() < 1e-12);
            assert_eq!(d.get(i, j), d.get(j, i));
        }
    }
}

#[test]
fn transition_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dist = random_distances(&mut rng, 4, 50.0);
    for self_loops in [false, true] {
        let p = transition_matrix(&dist, 0.01, self_loops).unwrap();
        let direct = direct_transition(&dist, 0.01, self_loops);
        for i in 0..4 {
            for j in 0..4 {
                assert!((p.get(i, j) - direct[i * 4 + j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn self_loop_policy_changes_ranking_weights() {
    // With self loops every node keeps mass on itself; relevance stays a
    // distribution but differs from the loop-free variant.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let dist = random_distances(&mut rng, 6, 200.0);
    let cfg = WalkConfig::default();
    let without = relevance_scores(&transition_matrix(&dist, 0.01, false).unwrap(), &cfg).unwrap();
    let with = relevance_scores(&transition_matrix(&dist, 0.01, true).unwrap(), &cfg).unwrap();
    assert!((with.r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(without.r.iter().zip(&with.r).any(|(a, b)| (a - b).abs() > 1e-6));
}

#[test]
fn relevance_matches_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..30 {
        let n = 2 + trial % 20;
        let p = random_stochastic(&mut rng, n);
        let beta = [0.5, 0.85, 0.99][trial % 3];
        let cfg = WalkConfig { beta, ..WalkConfig::default() };
        let r = relevance_scores(&p, &cfg).unwrap();
        let oracle = linear_solve_relevance(&p, beta);
        let err: f64 = r.r.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum();
        assert!(err < 1e-8, "trial {trial}: L1 error {err}");
    }
}

#[test]
fn far_point_has_lowest_relevance() {
    // A tight cluster plus one point 100x farther away than the cluster diameter.
    let mut rows: Vec<Vec<f32>> = (0..12)
        .map(|i| vec![(i % 4) as f32 * 0.1, (i / 4) as f32 * 0.1])
        .collect();
    rows.push(vec![100.0, 100.0]);
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    let p = transition_matrix(&pairwise_distances(&f).unwrap(), 0.01, false).unwrap();
    let r = relevance_scores(&p, &WalkConfig::default()).unwrap();
    let far = r.r[12];
    assert!(r.r[..12].iter().all(|&v| v > far));

    // A threshold between the two score bands removes exactly the far point.
    let cluster_min = r.r[..12].iter().copied().fold(f64::INFINITY, f64::min);
    let filtered = filter_threshold(&r, (far + cluster_min) / 2.0);
    assert_eq!(filtered.removed, vec![12]);
}

fn stochastic_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..12).prop_flat_map(|n| (Just(n), prop::collection::vec(0.01f64..1.0, n * n)))
}

fn normalize_rows(n: usize, raw: &[f64]) -> TransitionMatrix {
    let mut p = raw.to_vec();
    for i in 0..n {
        let s: f64 = p[i * n..(i + 1) * n].iter().sum();
        for v in &mut p[i * n..(i + 1) * n] {
            *v /= s;
        }
    }
    TransitionMatrix::from_dense(n, p).unwrap()
}

fn distance_strategy() -> impl Strategy<Value = DistanceMatrix> {
    (2usize..10)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(0.0f64..1000.0, n * (n - 1) / 2)))
        .prop_map(|(n, upper)| {
            let mut d = vec![0.0; n * n];
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    d[i * n + j] = upper[k];
                    d[j * n + i] = upper[k];
                    k += 1;
                }
            }
            DistanceMatrix::new(n, d).unwrap()
        })
}

proptest! {
    #[test]
    fn rows_are_stochastic(dist in distance_strategy(), gamma in 0.001f64..5.0, loops: bool) {
        let p = transition_matrix(&dist, gamma, loops).unwrap();
        for i in 0..dist.n() {
            let s: f64 = p.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
            prop_assert!(p.row(i).iter().all(|&v| v >= 0.0 && v.is_finite()));
            if !loops {
                prop_assert_eq!(p.get(i, i), 0.0);
            }
        }
    }

    #[test]
    fn shift_invariance(dist in distance_strategy(), c in 0.1f64..100.0) {
        let n = dist.n();
        let shifted: Vec<f64> = (0..n * n)
            .map(|k| if k / n == k % n { 0.0 } else { dist.get(k / n, k % n) + c })
            .collect();
        let shifted = DistanceMatrix::new(n, shifted).unwrap();
        let a = transition_matrix(&dist, 0.01, false).unwrap();
        let b = transition_matrix(&shifted, 0.01, false).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((a.get(i, j) - b.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn closer_means_likelier(dist in distance_strategy(), gamma in 0.001f64..1.0) {
        let p = transition_matrix(&dist, gamma, false).unwrap();
        let n = dist.n();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                for k in (0..n).filter(|&k| k != i) {
                    if dist.get(i, j) < dist.get(i, k) {
                        prop_assert!(p.get(i, j) >= p.get(i, k));
                        if gamma * (dist.get(i, k) - dist.get(i, j)) > 1e-9 && p.get(i, j) > f64::MIN_POSITIVE {
                            prop_assert!(p.get(i, j) > p.get(i, k));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_equivariance(dist in distance_strategy(), seed: u64) {
        let n = dist.n();
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let permuted = DistanceMatrix::new(
            n,
            (0..n * n).map(|k| dist.get(perm[k / n], perm[k % n])).collect(),
        ).unwrap();
        let p = transition_matrix(&dist, 0.05, false).unwrap();
        let q = transition_matrix(&permuted, 0.05, false).unwrap();
        for a in 0..n {
            for b in 0..n {
                prop_assert!((q.get(a, b) - p.get(perm[a], perm[b])).abs() < 1e-12);
            }
        }
        // peaked kernels mix slowly; give the power iteration room
        let cfg = WalkConfig { max_iter: 20_000, ..WalkConfig::default() };
        let rp = relevance_scores(&p, &cfg).unwrap();
        let rq = relevance_scores(&q, &cfg).unwrap();
        for (a, &pa) in perm.iter().enumerate() {
            prop_assert!((rq.r[a] - rp.r[pa]).abs() < 1e-10);
        }
    }

    #[test]
    fn relevance_invariants((n, raw) in stochastic_strategy(), beta in 0.0f64..0.99) {
        let p = normalize_rows(n, &raw);
        let cfg = WalkConfig { beta, ..WalkConfig::default() };
        let r = relevance_scores(&p, &cfg).unwrap();
        prop_assert!((r.r.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(r.r.iter().all(|&v| v >= 0.0));
        // fixed-point residual
        let mut step = vec![(1.0 - beta) / n as f64; n];
        for (j, out) in step.iter_mut().enumerate() {
            for i in 0..n {
                *out += beta * r.r[i] * p.get(i, j);
            }
        }
        let res: f64 = step.iter().zip(&r.r).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(res <= 10.0 * cfg.tol);
    }

    #[test]
    fn top_k_and_threshold_agree(scores in prop::collection::hash_set(0u32..1_000_000, 1..40), k_frac in 0.0f64..1.0) {
        let r: Vec<f64> = scores.into_iter().map(|s| s as f64 / 1e6).collect();
        let n = r.len();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let rv = RelevanceVector { r: r.clone(), iterations_used: 0, residual_l1: 0.0 };
        let top = filter_top_k(&rv, k).unwrap();
        prop_assert_eq!(top.kept.len(), k);
        let mut sorted = r.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let thr = filter_threshold(&rv, sorted[k - 1]);
        prop_assert_eq!(&top.kept, &thr.kept);
        let mut all: Vec<usize> = top.kept.iter().chain(&top.removed).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }
}
