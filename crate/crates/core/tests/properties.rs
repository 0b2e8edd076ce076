//! Randomized cross-module properties: ingestion round-trips, scale
//! invariances, decomposition agreement between independent routes, and
//! partition stability under node relabeling.

use std::collections::BTreeMap;

use disim::graph::{parse_edge_list, to_edge_list_text, GraphKind, LoadOptions, LoadedGraph, SparseGraph};
use disim::kmeans::kmeans;
use disim::laplacian::{build_laplacian, default_tau};
use disim::linalg::principal_angles;
use disim::model::{build_four_param, population_objects, sample_adjacency, BlockModel, Planted};
use disim::pipeline::{disim as run_disim, DisimOptions};
use disim::spectral::{dense_svd_oracle, truncated_svd_with};
use ndarray::Array2;
use proptest::prelude::*;

/// Sparse directed graph with explicit weights; every node is touched by at
/// least one edge so label-based serialization cannot drop anyone.
fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (4usize..16).prop_flat_map(|n| {
        let edges = proptest::collection::vec(
            (0..n, 0..n, 0.5f64..3.0),
            n..4 * n,
        );
        (Just(n), edges).prop_map(|(n, mut es)| {
            for v in 0..n {
                es.push((v, (v + 1) % n, 1.0));
            }
            (n, es)
        })
    })
}

fn to_graph(n: usize, edges: &[(usize, usize, f64)]) -> SparseGraph {
    SparseGraph::from_triplets(GraphKind::Directed, n, n, edges).unwrap()
}

/// Edge multiset keyed by endpoint labels, duplicate weights summed.
fn labeled_edges(g: &LoadedGraph) -> BTreeMap<(String, String), f64> {
    let mut m = BTreeMap::new();
    for (i, j, v) in g.graph.edges() {
        *m.entry((g.row_labels[i].clone(), g.col_labels[j].clone()))
            .or_insert(0.0) += v;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_list_round_trips((n, edges) in graph_strategy()) {
        let labels: Vec<String> = (0..n).map(|i| format!("node{i}")).collect();
        let lg = LoadedGraph {
            graph: to_graph(n, &edges),
            row_labels: labels.clone(),
            col_labels: labels,
        };
        let text = to_edge_list_text(&lg);
        let opts = LoadOptions { weighted: true, ..LoadOptions::default() };
        let back = parse_edge_list(&text, "round-trip", &opts).unwrap();
        let a = labeled_edges(&lg);
        let b = labeled_edges(&back);
        prop_assert_eq!(a.len(), b.len());
        for (k, v) in &a {
            let w = b.get(k).copied().unwrap_or(f64::NAN);
            prop_assert!((v - w).abs() < 1e-9, "edge {:?}: {} vs {}", k, v, w);
        }
    }

    #[test]
    fn laplacian_ignores_weight_scale((n, edges) in graph_strategy(), c in 0.25f64..4.0) {
        let g = to_graph(n, &edges);
        let scaled: Vec<(usize, usize, f64)> =
            edges.iter().map(|&(i, j, v)| (i, j, c * v)).collect();
        let gs = to_graph(n, &scaled);
        // Fixed zero regularizer and the degree-proportional default both
        // cancel a global weight rescaling.
        for tau in [Some(0.0), None] {
            let l = build_laplacian(&g, tau).unwrap();
            let ls = build_laplacian(&gs, tau).unwrap();
            let d = l.to_dense();
            let ds = ls.to_dense();
            for (x, y) in d.iter().zip(ds.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_svd_agrees_with_dense_oracle((n, edges) in graph_strategy(), k in 1usize..4) {
        let g = to_graph(n, &edges);
        let l = build_laplacian(&g, Some(0.5)).unwrap();
        let trunc = truncated_svd_with(&l.matrix, k, 1e-10, 500, 7, 6).unwrap();
        let oracle = dense_svd_oracle(&l.to_dense()).unwrap();
        for i in 0..k {
            prop_assert!(
                (trunc.sigma[i] - oracle.sigma[i]).abs() < 1e-8,
                "sigma {} mismatch: {} vs {}", i, trunc.sigma[i], oracle.sigma[i]
            );
        }
        // Subspaces are only comparable across a spectral gap.
        let gap = oracle.sigma[k - 1] - oracle.sigma.get(k).copied().unwrap_or(0.0);
        if gap > 1e-6 && trunc.sigma[k - 1] > 1e-8 {
            let angles = principal_angles(
                &trunc.left,
                &oracle.left.slice(ndarray::s![.., ..k]).to_owned(),
            ).unwrap();
            for a in angles {
                prop_assert!(a < 1e-6, "left angle {a} with gap {gap}");
            }
        }
    }

    #[test]
    fn kmeans_objective_is_consistent_and_restart_monotone(
        pts in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 6..14),
        k in 2usize..4,
        seed in 0u64..1000,
    ) {
        let n = pts.len();
        let d = pts[0].len();
        let points = Array2::from_shape_fn((n, d), |(i, j)| pts[i][j]);
        let fit = kmeans(&points, k, 8, 100, seed).unwrap();

        // The reported objective is exactly the cost of the reported
        // labeling under its own mean centroids.
        let mut obj = 0.0;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| fit.labels[i] == c).collect();
            if members.is_empty() { continue; }
            let mut mean = vec![0.0; d];
            for &i in &members {
                for j in 0..d { mean[j] += points[(i, j)]; }
            }
            for v in &mut mean { *v /= members.len() as f64; }
            for &i in &members {
                for j in 0..d {
                    let diff = points[(i, j)] - mean[j];
                    obj += diff * diff;
                }
            }
        }
        prop_assert!((fit.objective - obj).abs() < 1e-9, "{} vs {}", fit.objective, obj);

        // More restarts explore a superset of initializations, so the best
        // objective can only improve.
        let single = kmeans(&points, k, 1, 100, seed).unwrap();
        prop_assert!(fit.objective <= single.objective + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn partitions_commute_with_node_relabeling(
        s in 8usize..14,
        sample_seed in 0u64..1_000_000,
        perm_seed in 0u64..1_000_000,
    ) {
        // Strong separation so both runs land on the planted partition and
        // the comparison is about equivariance, not k-means luck.
        let m = build_four_param(2, s, 0.7, 0.05, 5, Planted::Identical).unwrap();
        let g = sample_adjacency(&m, sample_seed).unwrap();
        let n = 2 * s;

        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);

        let permuted: Vec<(usize, usize, f64)> = g
            .edges()
            .map(|(i, j, v)| (perm[i], perm[j], v))
            .collect();
        let gp = SparseGraph::from_triplets(GraphKind::Directed, n, n, &permuted).unwrap();

        let opts = DisimOptions::default();
        let a = run_disim(&g, 2, 2, &opts).unwrap();
        let b = run_disim(&gp, 2, 2, &opts).unwrap();

        for i in 0..n {
            for j in (i + 1)..n {
                let same_a = a.row_labels[i] == a.row_labels[j];
                let same_b = b.row_labels[perm[i]] == b.row_labels[perm[j]];
                prop_assert_eq!(same_a, same_b, "rows {} {} disagree", i, j);
            }
        }
    }

    #[test]
    fn model_json_round_trip_preserves_probabilities(
        b_scale in 0.05f64..0.3,
        tau in 0.0f64..2.0,
        label_seed in 0u64..1_000_000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(label_seed);
        let k = 2 + (label_seed % 2) as usize;
        let n = 4 * k;
        let b = Array2::from_shape_fn((k, k), |_| b_scale * rng.random::<f64>());
        let mut y: Vec<usize> = (0..n).map(|i| i % k).collect();
        let z = y.clone();
        use rand::seq::SliceRandom;
        y.shuffle(&mut rng);
        let theta: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
        let m = BlockModel::new(
            GraphKind::Directed,
            b,
            y,
            z,
            theta.clone(),
            theta,
            tau,
        ).unwrap();
        let js = serde_json::to_string(&m).unwrap();
        let back: BlockModel = serde_json::from_str(&js).unwrap();
        prop_assert_eq!(back.y(), m.y());
        prop_assert_eq!(back.z(), m.z());
        prop_assert_eq!(back.tau(), m.tau());
        for i in 0..n {
            for j in 0..n {
                let p0 = m.edge_probability(i, j);
                let p1 = back.edge_probability(i, j);
                prop_assert!((p0 - p1).abs() < 1e-12, "({i},{j}): {p0} vs {p1}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_binary(seed in 0u64..1_000_000) {
        let m = build_four_param(2, 10, 0.4, 0.1, 9, Planted::Random).unwrap();
        let g1 = sample_adjacency(&m, seed).unwrap();
        let g2 = sample_adjacency(&m, seed).unwrap();
        let e1: Vec<_> = g1.edges().collect();
        let e2: Vec<_> = g2.edges().collect();
        prop_assert_eq!(e1.len(), e2.len());
        for (a, b) in e1.iter().zip(e2.iter()) {
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.2, 1.0);
            prop_assert!(m.edge_probability(a.0, a.1) > 0.0);
        }
    }
}

/// The automatic regularizer of a sampled graph concentrates on the average
/// expected degree of the model that produced it.
#[test]
fn default_tau_tracks_expected_degree() {
    let m = build_four_param(3, 40, 0.3, 0.05, 31, Planted::Identical).unwrap();
    let po = population_objects(&m).unwrap();
    let n = m.n_rows() as f64;
    let expected: f64 = po.script_a.sum() / n;
    let trials = 20;
    let mean: f64 = (0..trials)
        .map(|t| default_tau(&sample_adjacency(&m, 500 + t).unwrap()))
        .sum::<f64>()
        / trials as f64;
    // Bernoulli degree sums: variance below the mean, so 5 standard errors
    // is a generous envelope.
    let se = (expected / n).sqrt() / (trials as f64).sqrt();
    assert!(
        (mean - expected).abs() < 5.0 * se.max(0.05),
        "mean {mean} vs expected {expected}"
    );
}

/// Two-sided recovery survives the whole pipeline at moderate noise.
#[test]
fn sampled_graphs_recover_planted_blocks() {
    let m = build_four_param(3, 25, 0.5, 0.05, 77, Planted::Identical).unwrap();
    let po = population_objects(&m).unwrap();
    let g = sample_adjacency(&m, 12345).unwrap();
    let cc = run_disim(&g, 3, 3, &DisimOptions::default()).unwrap();
    let rep = disim::eval::misclustered(&cc, &m, &po).unwrap();
    assert_eq!(rep.m_y_count, 0, "rows misclustered: {}", rep.m_y_count);
    assert_eq!(rep.m_z_count, 0, "cols misclustered: {}", rep.m_z_count);
}
