//! Scoring estimated co-clusterings against known population structure.
//!
//! Misclustering is measured geometrically: the observed k-means centroid of
//! each node is compared, after an orthogonal alignment of the estimated and
//! population singular frames, against every block's population centroid.
//! The module also evaluates the closed-form error bounds the population
//! quantities imply, and Monte-Carlo checks that sampled Laplacians
//! concentrate around their population counterpart at the predicted rate.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::build_laplacian;
use crate::linalg::{jacobi_svd, spectral_norm_dense};
use crate::mix_seed;
use crate::model::{population_objects, sample_adjacency, BlockModel, PopulationObjects};
use crate::pipeline::CoClustering;

/// Misclustering counts for both sides, the alignment rotations used, and
/// relabel-agnostic agreement metrics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MisclusterReport {
    pub m_y_count: usize,
    pub m_z_count: usize,
    pub m_y_rate: f64,
    pub m_z_rate: f64,
    /// Orthogonal alignment of the estimated left frame onto the population
    /// frame; `rotation_r` is the right-side analogue.
    pub rotation_l: Array2<f64>,
    pub rotation_r: Array2<f64>,
    /// Best-relabeling fraction of nodes whose estimated cluster matches the
    /// planted one (unassigned nodes never match).
    pub accuracy_y: f64,
    pub accuracy_z: f64,
    /// Adjusted agreement between estimated and planted partitions over the
    /// assigned nodes (1 identical, ~0 at chance).
    pub ari_y: f64,
    pub ari_z: f64,
}

/// Multiplicative constants for the misclustering bounds. The defaults trace
/// the proof pathways at approximation slack α = 1; the proofs never fix the
/// filtered-variant constant `c2`, so it defaults to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl BoundConstants {
    /// Proof-traced constants for a (1+α)-approximate k-means step:
    /// c0 = 3072(2+α)², c1 = 6144(2+α)².
    pub fn from_alpha(alpha: f64) -> Self {
        let a = (2.0 + alpha) * (2.0 + alpha);
        BoundConstants {
            c0: 3072.0 * a,
            c1: 6144.0 * a,
            c2: 1.0,
        }
    }
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants::from_alpha(1.0)
    }
}

/// The theoretical misclustering-rate and concentration bounds evaluated on
/// one population, with the inputs they were computed from echoed back.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    /// Sending-side misclustering-rate bound with `constants.c0` applied.
    pub rhs_y: f64,
    /// Receiving-side bound with `constants.c1` applied; carries an extra
    /// column-separation factor.
    pub rhs_z: f64,
    /// The same right sides with the unknown constant set to one, for
    /// scaling studies that should not trust any particular constant.
    pub rhs_y_unit: f64,
    pub rhs_z_unit: f64,
    /// High-probability bound on the spectral deviation of the sampled
    /// Laplacian from the population one.
    pub laplacian_dev_bound: f64,
    /// High-probability bound on the Frobenius deviation of the aligned
    /// singular frames (same value for both sides).
    pub subspace_bound: f64,
    /// Whether δ + τ clears the minimum-degree threshold the bounds assume.
    pub degree_condition: bool,
    pub constants: BoundConstants,
    pub k: usize,
    pub lambda_k: f64,
    pub m_y: f64,
    pub m_z: f64,
    pub gamma_z: f64,
    pub delta: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}

/// Result of [`concentration_check`]: how often sampled Laplacians violated
/// the theoretical deviation bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub exceedance_rate: f64,
    pub trials: usize,
    /// The deviation bound being tested.
    pub bound: f64,
    /// False when δ + τ misses the degree threshold; the rate is still
    /// computed but the theory promises nothing.
    pub degree_condition: bool,
    pub deviations: Vec<f64>,
    pub epsilon: f64,
}

/// The orthogonal matrix R minimizing ‖X − S·R‖_F over rotations, for two
/// matrices with orthonormal columns: R = W·Qᵀ where SᵀX = W·Σ·Qᵀ.
pub fn procrustes(x: &Array2<f64>, script_x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.dim() != script_x.dim() {
        return Err(Error::InvalidArgument(format!(
            "alignment needs matching shapes, got {:?} and {:?}",
            x.dim(),
            script_x.dim()
        )));
    }
    let m = script_x.t().dot(x);
    let svd = jacobi_svd(&m)?;
    Ok(svd.u.dot(&svd.v.t()))
}

fn dist2(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One side's misclustered count: nodes whose observed centroid is strictly
/// closer to a different block's aligned population centroid than to their
/// own block's, plus every unassigned node.
fn count_misclustered(
    labels: &[Option<usize>],
    planted: &[usize],
    observed_centroids: &Array2<f64>,
    rotated_pop: &Array2<f64>,
) -> usize {
    let mut count = 0;
    for (i, lab) in labels.iter().enumerate() {
        let Some(l) = lab else {
            count += 1;
            continue;
        };
        let c = observed_centroids.row(*l);
        let own = dist2(c, rotated_pop.row(planted[i]));
        let beaten = (0..rotated_pop.nrows())
            .any(|j| j != planted[i] && own > dist2(c, rotated_pop.row(j)));
        if beaten {
            count += 1;
        }
    }
    count
}

fn permutations(k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(perm: &mut Vec<usize>, used: &mut Vec<bool>, k: usize, f: &mut impl FnMut(&[usize])) {
        if perm.len() == k {
            f(perm);
            return;
        }
        for v in 0..k {
            if !used[v] {
                used[v] = true;
                perm.push(v);
                rec(perm, used, k, f);
                perm.pop();
                used[v] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], k, f);
}

/// Fraction of nodes whose estimated label matches the planted one under the
/// best relabeling. Exhaustive over relabelings up to 8 clusters, greedy
/// beyond that; unassigned nodes count against the score.
fn best_relabel_accuracy(est: &[Option<usize>], truth: &[usize]) -> f64 {
    let k_t = truth.iter().max().map_or(0, |m| m + 1);
    let k_e = est.iter().flatten().max().map_or(0, |m| m + 1);
    let k = k_t.max(k_e).max(1);
    let mut conf = vec![vec![0usize; k]; k];
    for (e, &t) in est.iter().zip(truth) {
        if let Some(e) = e {
            conf[*e][t] += 1;
        }
    }
    let mut best = 0usize;
    if k <= 8 {
        permutations(k, &mut |p| {
            let s: usize = (0..k).map(|e| conf[e][p[e]]).sum();
            best = best.max(s);
        });
    } else {
        let mut cells: Vec<(usize, usize, usize)> = (0..k)
            .flat_map(|e| (0..k).map(move |t| (e, t)))
            .map(|(e, t)| (conf[e][t], e, t))
            .collect();
        cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_e = vec![false; k];
        let mut used_t = vec![false; k];
        for (c, e, t) in cells {
            if !used_e[e] && !used_t[t] {
                used_e[e] = true;
                used_t[t] = true;
                best += c;
            }
        }
    }
    best as f64 / est.len() as f64
}

fn comb2(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted agreement between two partitions over the nodes assigned in the
/// estimate. 1 for identical partitions, about 0 at chance.
fn adjusted_rand(est: &[Option<usize>], truth: &[usize]) -> f64 {
    let pairs: Vec<(usize, usize)> = est
        .iter()
        .zip(truth)
        .filter_map(|(e, &t)| e.map(|e| (e, t)))
        .collect();
    let n = pairs.len();
    if n < 2 {
        return 1.0;
    }
    let k_e = pairs.iter().map(|p| p.0).max().unwrap() + 1;
    let k_t = pairs.iter().map(|p| p.1).max().unwrap() + 1;
    let mut conf = vec![vec![0usize; k_t]; k_e];
    for (e, t) in &pairs {
        conf[*e][*t] += 1;
    }
    let sum_cells: f64 = conf.iter().flatten().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = conf.iter().map(|r| comb2(r.iter().sum())).sum();
    let sum_cols: f64 = (0..k_t)
        .map(|t| comb2(conf.iter().map(|r| r[t]).sum()))
        .sum();
    let total = comb2(n);
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (sum_cells - expected) / (max - expected)
}

/// Scores a clustering against the model that generated its graph. Requires
/// a projected clustering whose embedding width matches the population's.
/// Unassigned nodes always count as misclustered.
pub fn misclustered(
    cc: &CoClustering,
    m: &BlockModel,
    po: &PopulationObjects,
) -> Result<MisclusterReport> {
    if !cc.variant.projected {
        return Err(Error::InvalidArgument(
            "misclustering is defined for projected clusterings".into(),
        ));
    }
    if cc.variant.k != po.k {
        return Err(Error::InvalidArgument(format!(
            "embedding width {} does not match population width {}",
            cc.variant.k, po.k
        )));
    }
    let n_r = m.n_rows();
    let n_c = m.n_cols();
    if cc.row_labels.len() != n_r || cc.col_labels.len() != n_c {
        return Err(Error::InvalidArgument(
            "clustering and model have different node counts".into(),
        ));
    }
    let rotation_l = procrustes(&cc.embedding.left, &po.script_xl)?;
    let rotation_r = procrustes(&cc.embedding.right, &po.script_xr)?;
    let pop_y = po.centroids_y.dot(&rotation_l);
    let pop_z = po.centroids_z.dot(&rotation_r);
    let m_y_count = count_misclustered(&cc.row_labels, m.y(), &cc.row_centroids, &pop_y);
    let m_z_count = count_misclustered(&cc.col_labels, m.z(), &cc.col_centroids, &pop_z);
    Ok(MisclusterReport {
        m_y_count,
        m_z_count,
        m_y_rate: m_y_count as f64 / n_r as f64,
        m_z_rate: m_z_count as f64 / n_c as f64,
        rotation_l,
        rotation_r,
        accuracy_y: best_relabel_accuracy(&cc.row_labels, m.y()),
        accuracy_z: best_relabel_accuracy(&cc.col_labels, m.z()),
        ari_y: adjusted_rand(&cc.row_labels, m.y()),
        ari_z: adjusted_rand(&cc.col_labels, m.z()),
    })
}

/// Evaluates the closed-form error bounds on one population. The minimum
/// degree condition is reported, never enforced: callers get the numbers
/// either way, flagged.
pub fn theorem_bounds(
    po: &PopulationObjects,
    epsilon: f64,
    constants: BoundConstants,
) -> Result<BoundReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let n_r = po.script_xl.nrows();
    let n_c = po.script_xr.nrows();
    let n_total = (n_r + n_c) as f64;
    let k = po.k;
    let lambda_k = *po.sigma.last().expect("population spectrum is nonempty");
    let (m_y, m_z) = po.min_leverage();
    let gamma_z = po.gamma_z();
    let dt = po.delta + po.tau;
    let log_term = (4.0 * n_total / epsilon).ln();

    let rhs_y_unit = k as f64 * log_term / (n_r as f64 * lambda_k * lambda_k * m_y * m_y * dt);
    let rhs_z_unit = k as f64 * log_term
        / (n_c as f64 * lambda_k * lambda_k * m_z * m_z * gamma_z * gamma_z * dt);
    let laplacian_dev_bound = 4.0 * (3.0 * log_term / dt).sqrt();
    let subspace_bound = 8.0 * 6.0f64.sqrt() / lambda_k * (k as f64 * log_term / dt).sqrt();
    let degree_condition = dt > 3.0 * n_total.ln() + 3.0 * (4.0 / epsilon).ln();

    Ok(BoundReport {
        rhs_y: constants.c0 * rhs_y_unit,
        rhs_z: constants.c1 * rhs_z_unit,
        rhs_y_unit,
        rhs_z_unit,
        laplacian_dev_bound,
        subspace_bound,
        degree_condition,
        constants,
        k,
        lambda_k,
        m_y,
        m_z,
        gamma_z,
        delta: po.delta,
        tau: po.tau,
        epsilon,
        n_rows: n_r,
        n_cols: n_c,
    })
}

/// Misclustering-rate bound for the leverage-filtered variant that clusters
/// only nodes with embedding row norm above η·√(K/N): c2·ln((N_r+N_c)/ε) /
/// (η²(δ+τ)). The constant is not pinned by any proof; pass your own.
pub fn leverage_bound(
    po: &PopulationObjects,
    eta: f64,
    epsilon: f64,
    c2: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "leverage threshold must be positive and finite, got {eta}"
        )));
    }
    let n_total = (po.script_xl.nrows() + po.script_xr.nrows()) as f64;
    Ok(c2 * (n_total / epsilon).ln() / (eta * eta * (po.delta + po.tau)))
}

/// Samples `trials` graphs from the model and reports how often the spectral
/// norm of L − 𝓛 exceeds the theoretical deviation bound; the theory
/// predicts an exceedance rate at most ε when the degree condition holds.
/// Trials run concurrently on derived seeds, so the result is independent of
/// scheduling.
pub fn concentration_check(
    m: &BlockModel,
    trials: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let po = population_objects(m)?;
    let n_total = (m.n_rows() + m.n_cols()) as f64;
    let dt = po.delta + m.tau();
    let bound = 4.0 * (3.0 * (4.0 * n_total / epsilon).ln() / dt).sqrt();
    let degree_condition = dt > 3.0 * n_total.ln() + 3.0 * (4.0 / epsilon).ln();

    let deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let g = sample_adjacency(m, mix_seed(seed, t as u64))?;
            let lap = build_laplacian(&g, Some(m.tau()))?;
            let mut dev = lap.to_dense();
            dev -= &po.script_l;
            spectral_norm_dense(&dev, 1e-6, 10_000, mix_seed(seed, 0xF00 + t as u64))
        })
        .collect::<Result<Vec<f64>>>()?;
    let exceed = deviations.iter().filter(|&&d| d > bound).count();
    Ok(ConcentrationReport {
        exceedance_rate: exceed as f64 / trials as f64,
        trials,
        bound,
        degree_condition,
        deviations,
        epsilon,
    })
}
