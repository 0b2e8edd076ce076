//! End-to-end co-clustering: Laplacian, embedding, k-means, diagnostics.
//!
//! [`disim`] runs the full estimation pipeline on a sparse graph and returns
//! separate sending and receiving partitions together with the raw embedding
//! and a record of every resolved option. [`movement_scores`] measures how
//! differently each node sends and receives, and [`block_connectivity`]
//! summarizes edge density between estimated (or planted) clusters.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphKind, SparseGraph};
use crate::kmeans::kmeans;
use crate::laplacian::build_laplacian;
use crate::mix_seed;
use crate::spectral::{truncated_svd_with, Embedding};

/// Embedding rows with norm below this are treated as zero: they carry no
/// spectral information and are excluded from clustering.
pub const EMBEDDING_ZERO_TOL: f64 = 1e-12;

const SALT_SVD: u64 = 0x5D;
const SALT_ROWS: u64 = 0xA11;
const SALT_COLS: u64 = 0xB22;
const SALT_STACK: u64 = 0xC33;

/// Tuning knobs for [`disim`]. `Default` gives the standard variant:
/// automatic regularization, row-normalized embeddings, separate k-means per
/// side, no leverage filter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisimOptions {
    /// Regularizer; `None` resolves to the average-degree default.
    pub tau: Option<f64>,
    /// Row-normalize embedding rows before clustering.
    pub project: bool,
    /// Cluster both sides jointly in one k-means on the stacked normalized
    /// embeddings; requires equal cluster counts on the two sides.
    pub stacked: bool,
    /// Leverage threshold η: nodes whose embedding row norm is not strictly
    /// above η·√(K/N) stay unassigned. `None` disables the filter.
    pub leverage_eta: Option<f64>,
    /// k-means++ restarts.
    pub restarts: usize,
    /// Master seed; every random stage derives its own stream from it.
    pub seed: u64,
    pub svd_tol: f64,
    pub svd_max_iter: usize,
    pub svd_oversampling: usize,
    pub kmeans_max_iter: usize,
}

impl Default for DisimOptions {
    fn default() -> Self {
        DisimOptions {
            tau: None,
            project: true,
            stacked: false,
            leverage_eta: None,
            restarts: 10,
            seed: 0,
            svd_tol: 1e-10,
            svd_max_iter: 300,
            svd_oversampling: 10,
            kmeans_max_iter: 100,
        }
    }
}

/// The options a clustering was actually produced with, after resolving
/// defaults. Attached to every result so output files are self-describing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub projected: bool,
    pub stacked: bool,
    pub leverage_eta: Option<f64>,
    /// Resolved regularizer value.
    pub tau: f64,
    /// Embedding width: min of the two cluster counts.
    pub k: usize,
    pub seed: u64,
}

/// Result of [`disim`]: per-node cluster labels for both sides (`None` means
/// unassigned), the k-means centroids, the raw unnormalized embedding, and
/// the resolved variant.
#[derive(Clone, Debug)]
pub struct CoClustering {
    pub kind: GraphKind,
    pub row_labels: Vec<Option<usize>>,
    pub col_labels: Vec<Option<usize>>,
    /// k_rows × K centroid matrix in the space clustering ran in.
    pub row_centroids: Array2<f64>,
    pub col_centroids: Array2<f64>,
    /// Raw singular embedding, before any row normalization.
    pub embedding: Embedding,
    pub variant: VariantRecord,
}

impl CoClustering {
    /// Row norms of the unnormalized left embedding: sending-side leverage.
    pub fn row_leverages(&self) -> Vec<f64> {
        row_norms(&self.embedding.left)
    }

    /// Receiving-side leverage.
    pub fn col_leverages(&self) -> Vec<f64> {
        row_norms(&self.embedding.right)
    }
}

/// Per-node asymmetry diagnostics; see [`movement_scores`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MovementReport {
    pub scores: Vec<f64>,
    pub k: usize,
}

/// How [`block_connectivity`] aggregates the edges between two clusters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectivityMode {
    /// Fraction of ordered (row node, column node) pairs with an edge.
    Proportion,
    /// Total edge weight divided by the number of ordered pairs.
    MeanWeight,
}

/// Cluster-pair edge summary. Entries are NaN where a pair of clusters has
/// no node pairs at all (some cluster has no assigned members).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockConnectivity {
    pub matrix: Array2<f64>,
    /// Ordered node-pair counts behind each entry.
    pub pairs: Array2<usize>,
    pub mode: ConnectivityMode,
}

fn row_norms(a: &Array2<f64>) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect()
}

fn normalize_rows(a: &mut Array2<f64>) {
    for mut row in a.rows_mut() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm >= EMBEDDING_ZERO_TOL {
            row.mapv_inplace(|x| x / norm);
        }
    }
}

fn nearest_centroid(row: ArrayView1<f64>, centroids: &Array2<f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for t in 0..centroids.nrows() {
        let d: f64 = row
            .iter()
            .zip(centroids.row(t))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = t;
        }
    }
    best
}

/// Which nodes may be clustered on one side, given that side's embedding row
/// norms. With a leverage threshold the cut is strict; without one, only
/// numerically zero rows are excluded.
fn included_mask(norms: &[f64], eta: Option<f64>, k: usize, n: usize) -> Vec<bool> {
    match eta {
        Some(eta) => {
            let thresh = eta * (k as f64 / n as f64).sqrt();
            norms.iter().map(|&v| v > thresh).collect()
        }
        None => norms.iter().map(|&v| v >= EMBEDDING_ZERO_TOL).collect(),
    }
}

fn gather_rows(x: &Array2<f64>, included: &[bool]) -> Array2<f64> {
    let idx: Vec<usize> = (0..x.nrows()).filter(|&i| included[i]).collect();
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}

fn scatter_labels(included: &[bool], labels: &[usize]) -> Vec<Option<usize>> {
    let mut out = vec![None; included.len()];
    let mut next = 0;
    for (i, &inc) in included.iter().enumerate() {
        if inc {
            out[i] = Some(labels[next]);
            next += 1;
        }
    }
    out
}

/// Whether a node has any incident edge on the relevant side, which decides
/// if an excluded zero row may be backfilled by its nearest centroid.
fn has_edges(kind: GraphKind, out_deg: &[f64], in_deg: &[f64], i: usize, row_side: bool) -> bool {
    match kind {
        GraphKind::Directed => out_deg[i] + in_deg[i] > 0.0,
        GraphKind::Bipartite => {
            if row_side {
                out_deg[i] > 0.0
            } else {
                in_deg[i] > 0.0
            }
        }
    }
}

/// Spectral co-clustering of a directed or bipartite graph into `k_rows`
/// sending clusters and `k_cols` receiving clusters.
///
/// Builds the regularized Laplacian, embeds both sides with its top
/// min(k_rows, k_cols) singular vector pairs, optionally row-normalizes, and
/// clusters each side with seeded k-means++. Nodes with numerically zero
/// embedding rows are kept out of k-means; afterwards they are assigned to
/// the nearest centroid if they have any incident edge and left unassigned
/// otherwise. An explicit leverage threshold replaces that rule: filtered
/// nodes stay unassigned.
pub fn disim(
    g: &SparseGraph,
    k_rows: usize,
    k_cols: usize,
    opts: &DisimOptions,
) -> Result<CoClustering> {
    let n_r = g.n_rows();
    let n_c = g.n_cols();
    if k_rows == 0 || k_cols == 0 {
        return Err(Error::InvalidArgument(
            "cluster counts must be positive".into(),
        ));
    }
    if k_rows > n_r || k_cols > n_c {
        return Err(Error::InvalidArgument(format!(
            "cluster counts ({k_rows}, {k_cols}) exceed graph side sizes ({n_r}, {n_c})"
        )));
    }
    if opts.stacked && k_rows != k_cols {
        return Err(Error::InvalidArgument(format!(
            "stacked clustering needs equal cluster counts, got {k_rows} and {k_cols}"
        )));
    }
    if let Some(eta) = opts.leverage_eta {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "leverage threshold must be finite and nonnegative, got {eta}"
            )));
        }
    }
    let k = k_rows.min(k_cols);
    if k > n_r.min(n_c) {
        return Err(Error::InvalidArgument(format!(
            "embedding width {k} exceeds min graph dimension {}",
            n_r.min(n_c)
        )));
    }

    let lap = build_laplacian(g, opts.tau)?;
    let tau = lap.tau;
    let embedding = truncated_svd_with(
        &lap.matrix,
        k,
        opts.svd_tol,
        opts.svd_max_iter,
        mix_seed(opts.seed, SALT_SVD),
        opts.svd_oversampling,
    )?;

    let row_norm = row_norms(&embedding.left);
    let col_norm = row_norms(&embedding.right);
    let row_inc = included_mask(&row_norm, opts.leverage_eta, k, n_r);
    let col_inc = included_mask(&col_norm, opts.leverage_eta, k, n_c);

    // Stacked clustering only makes sense on a common scale, so it always
    // normalizes first.
    let project = opts.project || opts.stacked;
    let mut xl = embedding.left.clone();
    let mut xr = embedding.right.clone();
    if project {
        normalize_rows(&mut xl);
        normalize_rows(&mut xr);
    }

    let (mut row_labels, mut col_labels, row_centroids, col_centroids);
    if opts.stacked {
        let top = gather_rows(&xl, &row_inc);
        let bottom = gather_rows(&xr, &col_inc);
        let n_top = top.nrows();
        let total = n_top + bottom.nrows();
        if total < k_rows {
            return Err(Error::InvalidArgument(format!(
                "{total} assigned nodes across both sides < {k_rows} clusters"
            )));
        }
        let mut stackmat = Array2::zeros((total, k));
        for r in 0..n_top {
            stackmat.row_mut(r).assign(&top.row(r));
        }
        for r in 0..bottom.nrows() {
            stackmat.row_mut(n_top + r).assign(&bottom.row(r));
        }
        let km = kmeans(
            &stackmat,
            k_rows,
            opts.restarts,
            opts.kmeans_max_iter,
            mix_seed(opts.seed, SALT_STACK),
        )?;
        row_labels = scatter_labels(&row_inc, &km.labels[..n_top]);
        col_labels = scatter_labels(&col_inc, &km.labels[n_top..]);
        row_centroids = km.centroids.clone();
        col_centroids = km.centroids;
    } else {
        let top = gather_rows(&xl, &row_inc);
        if top.nrows() < k_rows {
            return Err(Error::InvalidArgument(format!(
                "{} assigned sending nodes < {k_rows} clusters",
                top.nrows()
            )));
        }
        let km_rows = kmeans(
            &top,
            k_rows,
            opts.restarts,
            opts.kmeans_max_iter,
            mix_seed(opts.seed, SALT_ROWS),
        )?;
        let bottom = gather_rows(&xr, &col_inc);
        if bottom.nrows() < k_cols {
            return Err(Error::InvalidArgument(format!(
                "{} assigned receiving nodes < {k_cols} clusters",
                bottom.nrows()
            )));
        }
        let km_cols = kmeans(
            &bottom,
            k_cols,
            opts.restarts,
            opts.kmeans_max_iter,
            mix_seed(opts.seed, SALT_COLS),
        )?;
        row_labels = scatter_labels(&row_inc, &km_rows.labels);
        col_labels = scatter_labels(&col_inc, &km_cols.labels);
        row_centroids = km_rows.centroids;
        col_centroids = km_cols.centroids;
    }

    // Zero rows never joined k-means; without an explicit filter they are
    // adopted by the nearest centroid when the node has any edge at all.
    if opts.leverage_eta.is_none() {
        let out_deg = g.out_degrees();
        let in_deg = g.in_degrees();
        for i in 0..n_r {
            if row_labels[i].is_none() && has_edges(g.kind(), &out_deg, &in_deg, i, true) {
                row_labels[i] = Some(nearest_centroid(xl.row(i), &row_centroids));
            }
        }
        for j in 0..n_c {
            if col_labels[j].is_none() && has_edges(g.kind(), &out_deg, &in_deg, j, false) {
                col_labels[j] = Some(nearest_centroid(xr.row(j), &col_centroids));
            }
        }
    }

    Ok(CoClustering {
        kind: g.kind(),
        row_labels,
        col_labels,
        row_centroids,
        col_centroids,
        embedding,
        variant: VariantRecord {
            projected: project,
            stacked: opts.stacked,
            leverage_eta: opts.leverage_eta,
            tau,
            k,
            seed: opts.seed,
        },
    })
}

/// Per-node distance between the left and right embedding rows, truncated to
/// the leading `k` coordinates: zero for nodes that send and receive
/// identically, large for nodes that bridge different parts of the graph.
/// Defined only when both sides index the same node set.
pub fn movement_scores(e: &Embedding, k: usize) -> Result<MovementReport> {
    if e.left.nrows() != e.right.nrows() {
        return Err(Error::InvalidArgument(format!(
            "movement needs a shared node set; sides have {} and {} nodes",
            e.left.nrows(),
            e.right.nrows()
        )));
    }
    if k == 0 || k > e.k() {
        return Err(Error::InvalidArgument(format!(
            "movement width {k} outside [1, {}]",
            e.k()
        )));
    }
    let scores = (0..e.left.nrows())
        .map(|i| {
            (0..k)
                .map(|c| {
                    let d = e.left[(i, c)] - e.right[(i, c)];
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(MovementReport { scores, k })
}

/// Edge density between every ordered pair of (sending cluster, receiving
/// cluster). Unassigned nodes are ignored on both axes. Pair counts include
/// all ordered node pairs with the given labels, so diagonal proportions are
/// comparable to off-diagonal ones.
pub fn block_connectivity(
    g: &SparseGraph,
    row_labels: &[Option<usize>],
    col_labels: &[Option<usize>],
    mode: ConnectivityMode,
) -> Result<BlockConnectivity> {
    if row_labels.len() != g.n_rows() || col_labels.len() != g.n_cols() {
        return Err(Error::InvalidArgument(format!(
            "label lengths ({}, {}) do not match graph sides ({}, {})",
            row_labels.len(),
            col_labels.len(),
            g.n_rows(),
            g.n_cols()
        )));
    }
    let k_r = match row_labels.iter().flatten().max() {
        Some(&m) => m + 1,
        None => {
            return Err(Error::InvalidArgument(
                "no assigned sending nodes".into(),
            ))
        }
    };
    let k_c = match col_labels.iter().flatten().max() {
        Some(&m) => m + 1,
        None => {
            return Err(Error::InvalidArgument(
                "no assigned receiving nodes".into(),
            ))
        }
    };
    let mut row_count = vec![0usize; k_r];
    for l in row_labels.iter().flatten() {
        row_count[*l] += 1;
    }
    let mut col_count = vec![0usize; k_c];
    for l in col_labels.iter().flatten() {
        col_count[*l] += 1;
    }
    let mut pairs = Array2::zeros((k_r, k_c));
    for s in 0..k_r {
        for t in 0..k_c {
            pairs[(s, t)] = row_count[s] * col_count[t];
        }
    }
    let mut hits = Array2::<f64>::zeros((k_r, k_c));
    for (i, j, w) in g.edges() {
        if let (Some(s), Some(t)) = (row_labels[i], col_labels[j]) {
            match mode {
                ConnectivityMode::Proportion => hits[(s, t)] += 1.0,
                ConnectivityMode::MeanWeight => hits[(s, t)] += w,
            }
        }
    }
    let matrix = Array2::from_shape_fn((k_r, k_c), |(s, t)| {
        if pairs[(s, t)] == 0 {
            f64::NAN
        } else {
            hits[(s, t)] / pairs[(s, t)] as f64
        }
    });
    Ok(BlockConnectivity { matrix, pairs, mode })
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_label(l: Option<usize>) -> String {
    match l {
        Some(v) => v.to_string(),
        None => "unassigned".to_string(),
    }
}

/// Renders a clustering as CSV, one line per node. Directed graphs produce
/// one line per node with both labels and the movement score; bipartite
/// graphs list sending nodes first and receiving nodes after, leaving the
/// fields of the other side empty.
pub fn clustering_csv(
    cc: &CoClustering,
    row_names: &[String],
    col_names: &[String],
) -> Result<String> {
    let n_r = cc.row_labels.len();
    let n_c = cc.col_labels.len();
    if row_names.len() != n_r || col_names.len() != n_c {
        return Err(Error::InvalidArgument(
            "name lists do not match clustering sizes".into(),
        ));
    }
    let row_lev = cc.row_leverages();
    let col_lev = cc.col_leverages();
    let mut out = String::from("label,row_cluster,col_cluster,movement_score,row_leverage,col_leverage\n");
    match cc.kind {
        GraphKind::Directed => {
            let movement = movement_scores(&cc.embedding, cc.variant.k)?;
            for i in 0..n_r {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    csv_field(&row_names[i]),
                    csv_label(cc.row_labels[i]),
                    csv_label(cc.col_labels[i]),
                    movement.scores[i],
                    row_lev[i],
                    col_lev[i]
                ));
            }
        }
        GraphKind::Bipartite => {
            for i in 0..n_r {
                out.push_str(&format!(
                    "{},{},,,{},\n",
                    csv_field(&row_names[i]),
                    csv_label(cc.row_labels[i]),
                    row_lev[i]
                ));
            }
            for j in 0..n_c {
                out.push_str(&format!(
                    "{},,{},,,{}\n",
                    csv_field(&col_names[j]),
                    csv_label(cc.col_labels[j]),
                    col_lev[j]
                ));
            }
        }
    }
    Ok(out)
}

/// Renders a clustering as a self-describing JSON document: the resolved
/// variant, the singular values, and per-node records (cluster `null` when
/// unassigned; movement only for directed graphs).
pub fn clustering_json(
    cc: &CoClustering,
    row_names: &[String],
    col_names: &[String],
) -> Result<String> {
    let n_r = cc.row_labels.len();
    let n_c = cc.col_labels.len();
    if row_names.len() != n_r || col_names.len() != n_c {
        return Err(Error::InvalidArgument(
            "name lists do not match clustering sizes".into(),
        ));
    }
    let row_lev = cc.row_leverages();
    let col_lev = cc.col_leverages();
    let movement = match cc.kind {
        GraphKind::Directed => Some(movement_scores(&cc.embedding, cc.variant.k)?),
        GraphKind::Bipartite => None,
    };
    let rows: Vec<serde_json::Value> = (0..n_r)
        .map(|i| {
            serde_json::json!({
                "label": row_names[i],
                "cluster": cc.row_labels[i],
                "leverage": row_lev[i],
                "movement": movement.as_ref().map(|m| m.scores[i]),
            })
        })
        .collect();
    let cols: Vec<serde_json::Value> = (0..n_c)
        .map(|j| {
            serde_json::json!({
                "label": col_names[j],
                "cluster": cc.col_labels[j],
                "leverage": col_lev[j],
                "movement": movement.as_ref().map(|m| m.scores[j]),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "kind": cc.kind,
        "variant": cc.variant,
        "sigma": cc.embedding.sigma,
        "rows": rows,
        "cols": cols,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseGraph;
    use crate::model::{build_four_param, population_objects, sample_adjacency, Planted};
    use approx::assert_abs_diff_eq;

    fn two_cliques() -> SparseGraph {
        let mut t = Vec::new();
        for a in 0..10usize {
            for b in 0..10usize {
                if a != b {
                    t.push((a, b, 1.0));
                    t.push((a + 10, b + 10, 1.0));
                }
            }
        }
        SparseGraph::from_triplets(GraphKind::Directed, 20, 20, &t).unwrap()
    }

    fn assigned(labels: &[Option<usize>]) -> Vec<usize> {
        labels.iter().map(|l| l.unwrap()) .collect()
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        assert_eq!(a.len(), b.len());
        for i in 0..a.len() {
            for j in 0..a.len() {
                if (a[i] == a[j]) != (b[i] == b[j]) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn two_cliques_recover_groups() {
        let g = two_cliques();
        let cc = disim(&g, 2, 2, &DisimOptions::default()).unwrap();
        let expect: Vec<usize> = (0..20).map(|i| i / 10).collect();
        assert!(same_partition(&assigned(&cc.row_labels), &expect));
        assert!(same_partition(&assigned(&cc.col_labels), &expect));
    }

    #[test]
    fn population_laplacian_recovers_planted_blocks() {
        let m = build_four_param(3, 10, 0.5, 0.1, 4, Planted::Random).unwrap();
        let po = population_objects(&m).unwrap();
        let mut t = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                let v = po.script_l[(i, j)];
                if v > 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        let g = SparseGraph::from_triplets(GraphKind::Directed, 30, 30, &t).unwrap();
        let opts = DisimOptions {
            tau: Some(0.0),
            ..DisimOptions::default()
        };
        let cc = disim(&g, 3, 3, &opts).unwrap();
        assert!(same_partition(&assigned(&cc.row_labels), m.y()));
        assert!(same_partition(&assigned(&cc.col_labels), m.z()));
    }

    #[test]
    fn bottleneck_node_gets_split_labels() {
        // Two dense groups; the last node sends into group one and receives
        // from group two, so its two labels land in different groups.
        let mut t = Vec::new();
        for a in 0..8usize {
            for b in 0..8usize {
                if a != b {
                    t.push((a, b, 1.0));
                    t.push((a + 8, b + 8, 1.0));
                }
            }
        }
        for b in 0..8usize {
            t.push((16, b, 1.0));
        }
        for a in 8..16usize {
            t.push((a, 16, 1.0));
        }
        let g = SparseGraph::from_triplets(GraphKind::Directed, 17, 17, &t).unwrap();
        let cc = disim(&g, 2, 2, &DisimOptions::default()).unwrap();
        let rl = assigned(&cc.row_labels);
        let cl = assigned(&cc.col_labels);
        for a in 0..8 {
            assert_eq!(rl[a], rl[0]);
            assert_eq!(cl[a], cl[0]);
            assert_eq!(rl[a + 8], rl[8]);
            assert_eq!(cl[a + 8], cl[8]);
        }
        assert_ne!(rl[0], rl[8]);
        assert_ne!(cl[0], cl[8]);
        assert_eq!(rl[16], rl[0], "sends like group one");
        assert_eq!(cl[16], cl[8], "receives like group two");
    }

    #[test]
    fn identical_sides_move_nowhere() {
        let x = ndarray::array![[0.6, 0.8], [1.0, 0.0], [0.0, 1.0]];
        let e = Embedding {
            left: x.clone(),
            right: x,
            sigma: vec![1.0, 0.5],
        };
        let m = movement_scores(&e, 2).unwrap();
        assert!(m.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn orthogonal_rows_move_sqrt_two() {
        let e = Embedding {
            left: ndarray::array![[1.0, 0.0]],
            right: ndarray::array![[0.0, 1.0]],
            sigma: vec![1.0, 0.9],
        };
        let m = movement_scores(&e, 2).unwrap();
        assert_abs_diff_eq!(m.scores[0], 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn movement_rejects_mismatched_sides_and_width() {
        let e = Embedding {
            left: Array2::zeros((2, 1)),
            right: Array2::zeros((3, 1)),
            sigma: vec![1.0],
        };
        assert!(movement_scores(&e, 1).is_err());
        let sq = Embedding {
            left: Array2::zeros((2, 1)),
            right: Array2::zeros((2, 1)),
            sigma: vec![1.0],
        };
        assert!(movement_scores(&sq, 2).is_err());
        assert!(movement_scores(&sq, 0).is_err());
    }

    #[test]
    fn symmetric_positive_graph_has_negligible_movement() {
        // Symmetric weights with a dominant diagonal keep the operator
        // positive definite, so both singular sides coincide.
        let n = 6usize;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    t.push((i, j, 6.0 + 0.3 * i as f64));
                } else {
                    let w = 0.2 + 0.1 * ((i * j) % 3) as f64;
                    if i < j {
                        t.push((i, j, w));
                        t.push((j, i, w));
                    }
                }
            }
        }
        let g = SparseGraph::from_triplets(GraphKind::Directed, n, n, &t).unwrap();
        let lap = build_laplacian(&g, Some(0.0)).unwrap();
        let e = truncated_svd_with(&lap.matrix, 3, 1e-12, 500, 7, 10).unwrap();
        let m = movement_scores(&e, 3).unwrap();
        assert!(
            m.scores.iter().all(|&s| s < 1e-6),
            "scores {:?}",
            m.scores
        );
    }

    #[test]
    fn movement_ignores_clustering_options() {
        let g = two_cliques();
        let a = disim(&g, 2, 2, &DisimOptions::default()).unwrap();
        let b = disim(
            &g,
            2,
            2,
            &DisimOptions {
                leverage_eta: Some(0.5),
                restarts: 3,
                ..DisimOptions::default()
            },
        )
        .unwrap();
        let ma = movement_scores(&a.embedding, 2).unwrap();
        let mb = movement_scores(&b.embedding, 2).unwrap();
        assert_eq!(ma.scores, mb.scores);
    }

    #[test]
    fn stacked_mode_shares_centroids() {
        let g = two_cliques();
        let opts = DisimOptions {
            stacked: true,
            ..DisimOptions::default()
        };
        let cc = disim(&g, 2, 2, &opts).unwrap();
        assert_eq!(cc.row_centroids, cc.col_centroids);
        assert!(cc.variant.stacked);
        assert!(cc.variant.projected);
        // Symmetric structure: each node sends and receives in one group.
        for i in 0..20 {
            assert_eq!(cc.row_labels[i], cc.col_labels[i]);
        }
        let bad = DisimOptions {
            stacked: true,
            ..DisimOptions::default()
        };
        assert!(disim(&g, 2, 3, &bad).is_err());
    }

    #[test]
    fn variant_records_resolved_options() {
        let g = two_cliques();
        let opts = DisimOptions {
            project: false,
            seed: 9,
            ..DisimOptions::default()
        };
        let cc = disim(&g, 2, 2, &opts).unwrap();
        assert!(!cc.variant.projected);
        assert!(!cc.variant.stacked);
        assert_eq!(cc.variant.leverage_eta, None);
        assert_eq!(cc.variant.k, 2);
        assert_eq!(cc.variant.seed, 9);
        // 20 nodes, 9 out-edges each.
        assert_abs_diff_eq!(cc.variant.tau, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_rows_follow_edge_rule() {
        // Node 20 receives one edge but sends none; node 21 is isolated.
        let mut t = Vec::new();
        for a in 0..10usize {
            for b in 0..10usize {
                if a != b {
                    t.push((a, b, 1.0));
                    t.push((a + 10, b + 10, 1.0));
                }
            }
        }
        t.push((0, 20, 1.0));
        let g = SparseGraph::from_triplets(GraphKind::Directed, 22, 22, &t).unwrap();
        let cc = disim(&g, 2, 2, &DisimOptions::default()).unwrap();
        assert!(cc.row_labels[20].is_some(), "has an edge, gets backfilled");
        assert!(cc.col_labels[20].is_some());
        assert!(cc.row_labels[21].is_none(), "isolated stays unassigned");
        assert!(cc.col_labels[21].is_none());

        let filtered = disim(
            &g,
            2,
            2,
            &DisimOptions {
                leverage_eta: Some(0.0),
                ..DisimOptions::default()
            },
        )
        .unwrap();
        // η = 0: strictly positive leverage is enough, zero rows never join.
        assert!(filtered.row_labels[20].is_none());
        assert!(filtered.row_labels[21].is_none());
        for i in 0..20 {
            assert!(filtered.row_labels[i].is_some());
            assert!(filtered.col_labels[i].is_some());
        }
    }

    #[test]
    fn same_seed_same_result() {
        let g = two_cliques();
        let opts = DisimOptions {
            seed: 42,
            ..DisimOptions::default()
        };
        let a = disim(&g, 2, 2, &opts).unwrap();
        let b = disim(&g, 2, 2, &opts).unwrap();
        assert_eq!(a.row_labels, b.row_labels);
        assert_eq!(a.col_labels, b.col_labels);
        assert_eq!(a.row_centroids, b.row_centroids);
        assert_eq!(a.embedding.sigma, b.embedding.sigma);
    }

    #[test]
    fn connectivity_matches_planted_rates() {
        let m = build_four_param(3, 50, 0.3, 0.05, 6, Planted::Identical).unwrap();
        let g = sample_adjacency(&m, 31).unwrap();
        let labels: Vec<Option<usize>> = m.y().iter().map(|&l| Some(l)).collect();
        let bc = block_connectivity(&g, &labels, &labels, ConnectivityMode::Proportion).unwrap();
        for s in 0..3 {
            for t in 0..3 {
                assert_eq!(bc.pairs[(s, t)], 2500);
                let p: f64 = if s == t { 0.35 } else { 0.05 };
                let se = (p * (1.0 - p) / 2500.0).sqrt();
                assert!(
                    (bc.matrix[(s, t)] - p).abs() <= 3.0 * se,
                    "block ({s},{t}): {} vs {p} ± {se}",
                    bc.matrix[(s, t)]
                );
            }
        }
    }

    #[test]
    fn connectivity_handles_empty_blocks_and_unassigned() {
        let t = vec![(0usize, 1usize, 2.0), (1, 0, 4.0)];
        let g = SparseGraph::from_triplets(GraphKind::Directed, 2, 2, &t).unwrap();
        // Row block 1 has no members.
        let rows = vec![Some(0), Some(2)];
        let cols = vec![Some(0), Some(1)];
        let bc = block_connectivity(&g, &rows, &cols, ConnectivityMode::Proportion).unwrap();
        assert_eq!(bc.pairs[(1, 0)], 0);
        assert!(bc.matrix[(1, 0)].is_nan());
        assert!(bc.matrix[(1, 1)].is_nan());
        assert_eq!(bc.pairs[(0, 1)], 1);
        assert_abs_diff_eq!(bc.matrix[(0, 1)], 1.0, epsilon = 1e-15);

        // Unassigned nodes drop out of numerator and denominator.
        let rows2 = vec![Some(0), None];
        let cols2 = vec![Some(0), Some(0)];
        let bc2 = block_connectivity(&g, &rows2, &cols2, ConnectivityMode::MeanWeight).unwrap();
        assert_eq!(bc2.pairs[(0, 0)], 2);
        // Only node 0's outgoing edge (weight 2) counts.
        assert_abs_diff_eq!(bc2.matrix[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn csv_and_json_round_out_the_result() {
        let mut t = Vec::new();
        for a in 0..10usize {
            for b in 0..10usize {
                if a != b {
                    t.push((a, b, 1.0));
                    t.push((a + 10, b + 10, 1.0));
                }
            }
        }
        let g = SparseGraph::from_triplets(GraphKind::Directed, 21, 21, &t).unwrap();
        let cc = disim(&g, 2, 2, &DisimOptions::default()).unwrap();
        let names: Vec<String> = (0..20)
            .map(|i| format!("n{i}"))
            .chain(["iso,lated".to_string()])
            .collect();
        let csv = clustering_csv(&cc, &names, &names).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "label,row_cluster,col_cluster,movement_score,row_leverage,col_leverage"
        );
        assert_eq!(csv.lines().count(), 22);
        let last = csv.lines().last().unwrap();
        assert!(last.starts_with("\"iso,lated\",unassigned,unassigned,"));

        let json = clustering_json(&cc, &names, &names).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["kind"], "directed");
        assert_eq!(doc["variant"]["k"], 2);
        assert_eq!(doc["rows"].as_array().unwrap().len(), 21);
        assert!(doc["rows"][20]["cluster"].is_null());
        assert!(doc["rows"][0]["cluster"].is_number());
        assert_eq!(doc["sigma"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn bipartite_outputs_split_sides() {
        let t = vec![
            (0usize, 0usize, 1.0),
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 2, 1.0),
            (2, 0, 1.0),
        ];
        let g = SparseGraph::from_triplets(GraphKind::Bipartite, 3, 3, &t).unwrap();
        let cc = disim(&g, 2, 2, &DisimOptions::default()).unwrap();
        let rn: Vec<String> = (0..3).map(|i| format!("r{i}")).collect();
        let cn: Vec<String> = (0..3).map(|j| format!("c{j}")).collect();
        let csv = clustering_csv(&cc, &rn, &cn).unwrap();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().nth(1).unwrap().starts_with("r0,"));
        assert!(csv.lines().nth(4).unwrap().starts_with("c0,,"));
        let json = clustering_json(&cc, &rn, &cn).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(doc["rows"][0]["movement"].is_null());
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = two_cliques();
        assert!(disim(&g, 0, 2, &DisimOptions::default()).is_err());
        assert!(disim(&g, 2, 21, &DisimOptions::default()).is_err());
        let neg = DisimOptions {
            leverage_eta: Some(-0.1),
            ..DisimOptions::default()
        };
        assert!(disim(&g, 2, 2, &neg).is_err());
    }
}
