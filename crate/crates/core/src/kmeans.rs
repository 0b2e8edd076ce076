//! Seeded k-means++ with restarts and deterministic tie-breaking.
//!
//! Each restart draws its randomness from an independent stream of the same
//! seeded generator, runs greedy D²-weighted seeding, then Lloyd iterations
//! until the assignment stabilizes. The best run is chosen by (objective,
//! restart index), so results do not depend on scheduling. Ties in every
//! nearest-centroid decision go to the lowest index.

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Outcome of a clustering run.
#[derive(Clone, Debug)]
pub struct KMeansResult {
    /// Cluster index in [0, k) per point; each point's nearest centroid.
    pub labels: Vec<usize>,
    /// k × d centroid matrix.
    pub centroids: Array2<f64>,
    /// Σ_i min_g ‖x_i − c_g‖², evaluated at the returned labels/centroids.
    pub objective: f64,
    /// Number of independent restarts performed.
    pub restarts_run: usize,
    /// Clusters left with no members (possible only with degenerate
    /// duplicate inputs; normally empty).
    pub empty_clusters: Vec<usize>,
}

fn dist2(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Nearest centroid per point (lowest index on ties) plus the squared
/// distance achieved.
fn assign(points: &Array2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let n = points.nrows();
    let k = centroids.nrows();
    let mut labels = vec![0usize; n];
    let mut best = vec![f64::INFINITY; n];
    for i in 0..n {
        for g in 0..k {
            let d = dist2(points.row(i), centroids.row(g));
            if d < best[i] {
                best[i] = d;
                labels[i] = g;
            }
        }
    }
    (labels, best)
}

fn seed_plus_plus(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mut centroids = Array2::zeros((k, d));
    let mut chosen = vec![false; n];

    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    chosen[first] = true;
    let mut mind2: Vec<f64> = (0..n)
        .map(|i| dist2(points.row(i), centroids.row(0)))
        .collect();

    for c in 1..k {
        let total: f64 = mind2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in mind2.iter().enumerate() {
                acc += w;
                if acc > u {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining mass is zero (duplicate points): take the lowest
            // index not already used as a centroid.
            chosen.iter().position(|&c| !c).unwrap_or(0)
        };
        chosen[pick] = true;
        centroids.row_mut(c).assign(&points.row(pick));
        for i in 0..n {
            let d = dist2(points.row(i), centroids.row(c));
            if d < mind2[i] {
                mind2[i] = d;
            }
        }
    }
    centroids
}

struct RunOutcome {
    labels: Vec<usize>,
    centroids: Array2<f64>,
    objective: f64,
}

fn lloyd(points: &Array2<f64>, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> RunOutcome {
    let n = points.nrows();
    let d = points.ncols();
    let mut centroids = seed_plus_plus(points, k, rng);
    let (mut labels, mut d2) = assign(points, &centroids);
    let mut prev_obj: f64 = d2.iter().sum();

    for _ in 0..max_iter {
        // Means of the current classes.
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &g) in labels.iter().enumerate() {
            counts[g] += 1;
            let mut row = sums.row_mut(g);
            row += &points.row(i);
        }
        let mut reused = vec![false; n];
        for g in 0..k {
            if counts[g] > 0 {
                let inv = 1.0 / counts[g] as f64;
                for c in 0..d {
                    centroids[(g, c)] = sums[(g, c)] * inv;
                }
            } else {
                // Reseed an emptied cluster at the point farthest from its
                // current centroid, each point used at most once per pass.
                let mut far = None;
                let mut far_d = f64::NEG_INFINITY;
                for i in 0..n {
                    if !reused[i] && d2[i] > far_d {
                        far_d = d2[i];
                        far = Some(i);
                    }
                }
                if let Some(i) = far {
                    reused[i] = true;
                    centroids.row_mut(g).assign(&points.row(i));
                }
            }
        }

        let (new_labels, new_d2) = assign(points, &centroids);
        let new_obj: f64 = new_d2.iter().sum();
        // Lloyd updates never increase the objective; reseeding an empty
        // cluster only adds a closer option.
        debug_assert!(
            new_obj <= prev_obj + 1e-9 * prev_obj.max(1.0),
            "objective rose from {prev_obj} to {new_obj}"
        );
        let stable = new_labels == labels;
        labels = new_labels;
        d2 = new_d2;
        prev_obj = new_obj;
        if stable {
            break;
        }
    }

    RunOutcome {
        labels,
        centroids,
        objective: prev_obj,
    }
}

/// Clusters the rows of `points` into `k` groups, returning the best of
/// `restarts` independent seeded runs. Deterministic for a fixed seed.
pub fn kmeans(
    points: &Array2<f64>,
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let n = points.nrows();
    let d = points.ncols();
    if k == 0 || restarts == 0 || max_iter == 0 {
        return Err(Error::InvalidArgument(
            "k, restarts, and max_iter must be positive".into(),
        ));
    }
    if d == 0 {
        return Err(Error::InvalidArgument(
            "points must have at least one coordinate".into(),
        ));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "points contain non-finite coordinates".into(),
        ));
    }

    let mut best: Option<RunOutcome> = None;
    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let run = lloyd(points, k, max_iter, &mut rng);
        // Lexicographic (objective, restart index): strict improvement only.
        let better = match &best {
            None => true,
            Some(b) => run.objective < b.objective,
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");

    let mut seen = vec![false; k];
    for &g in &best.labels {
        seen[g] = true;
    }
    let empty_clusters: Vec<usize> = (0..k).filter(|&g| !seen[g]).collect();

    Ok(KMeansResult {
        labels: best.labels,
        centroids: best.centroids,
        objective: best.objective,
        restarts_run: restarts,
        empty_clusters,
    })
}
