//! Co-blockmodel samplers and their exact population quantities.
//!
//! A [`BlockModel`] specifies independent Bernoulli edges
//! P(A_ij = 1) = θᵢ·θⱼ·B[y(i), z(j)], with separate sending and receiving
//! partitions. Degree parameters are renormalized at construction so each
//! block's θ sums to one, with B rescaled to leave every edge probability
//! unchanged; this makes the closed-form population formulas below exact.
//! [`population_objects`] materializes the expected adjacency, its
//! regularized Laplacian, and the block-level factorization whose singular
//! structure the estimation pipeline is trying to recover, so estimators can
//! be scored against ground truth.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphKind, SparseGraph};
use crate::linalg::jacobi_svd;
use crate::mix_seed;

/// Largest side length for which dense population objects are built.
pub const POPULATION_CAP: usize = 5000;

/// Relation between the sending and receiving partitions of a synthetic
/// equal-block model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planted {
    /// Independent uniformly random balanced partitions for the two sides.
    Random,
    /// The same contiguous partition on both sides.
    Identical,
}

/// Serialization form of a block model: plain arrays plus seed lineage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: GraphKind,
    pub b: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub theta_y: Vec<f64>,
    pub theta_z: Vec<f64>,
    pub tau: f64,
    pub seed: Option<u64>,
}

/// A degree-corrected stochastic co-blockmodel.
///
/// Stored in identifiable form: per block, the θ values sum to one, and B
/// absorbs the complementary scale. Edge probabilities equal those of the
/// parameters originally passed in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct BlockModel {
    kind: GraphKind,
    b: Array2<f64>,
    y: Vec<usize>,
    z: Vec<usize>,
    theta_y: Vec<f64>,
    theta_z: Vec<f64>,
    tau: f64,
    seed: Option<u64>,
}

impl BlockModel {
    /// Builds a model from raw parameters. Degree parameters are positive
    /// reals in any scale; they are renormalized per block (B rescaled to
    /// compensate). Every block must be nonempty, and every resulting edge
    /// probability must lie in [0, 1] — overflow is an error, never clipped.
    pub fn new(
        kind: GraphKind,
        b: Array2<f64>,
        y: Vec<usize>,
        z: Vec<usize>,
        theta_y: Vec<f64>,
        theta_z: Vec<f64>,
        tau: f64,
    ) -> Result<Self> {
        let n_r = y.len();
        let n_c = z.len();
        let k_y = b.nrows();
        let k_z = b.ncols();
        if n_r == 0 || n_c == 0 || k_y == 0 || k_z == 0 {
            return Err(Error::InvalidArgument(
                "model requires nonempty node and block sets".into(),
            ));
        }
        if kind == GraphKind::Directed && n_r != n_c {
            return Err(Error::InvalidArgument(format!(
                "directed model requires equal side sizes, got {n_r} and {n_c}"
            )));
        }
        if theta_y.len() != n_r || theta_z.len() != n_c {
            return Err(Error::InvalidArgument(
                "degree parameter lengths must match membership lengths".into(),
            ));
        }
        if b.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidArgument(
                "connectivity matrix entries must be finite and nonnegative".into(),
            ));
        }
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "regularizer must be finite and nonnegative, got {tau}"
            )));
        }
        for (side, labels, k) in [("sending", &y, k_y), ("receiving", &z, k_z)] {
            let mut seen = vec![false; k];
            for &g in labels.iter() {
                if g >= k {
                    return Err(Error::InvalidArgument(format!(
                        "{side} label {g} outside [0, {k})"
                    )));
                }
                seen[g] = true;
            }
            if let Some(missing) = seen.iter().position(|&s| !s) {
                return Err(Error::InvalidArgument(format!(
                    "{side} block {missing} has no members"
                )));
            }
        }
        for (side, theta) in [("sending", &theta_y), ("receiving", &theta_z)] {
            if theta.iter().any(|&t| !t.is_finite() || t <= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{side} degree parameters must be positive"
                )));
            }
        }

        // Identifiability: per-block θ sums become 1; B absorbs the scale so
        // θᵢθⱼB[y,z] is untouched.
        let mut sum_y = vec![0.0f64; k_y];
        for (i, &g) in y.iter().enumerate() {
            sum_y[g] += theta_y[i];
        }
        let mut sum_z = vec![0.0f64; k_z];
        for (j, &g) in z.iter().enumerate() {
            sum_z[g] += theta_z[j];
        }
        let theta_y: Vec<f64> = y.iter().zip(&theta_y).map(|(&g, &t)| t / sum_y[g]).collect();
        let theta_z: Vec<f64> = z.iter().zip(&theta_z).map(|(&g, &t)| t / sum_z[g]).collect();
        let mut b = b;
        for s in 0..k_y {
            for t in 0..k_z {
                b[(s, t)] *= sum_y[s] * sum_z[t];
            }
        }

        let mut max_y = vec![0.0f64; k_y];
        for (i, &g) in y.iter().enumerate() {
            max_y[g] = max_y[g].max(theta_y[i]);
        }
        let mut max_z = vec![0.0f64; k_z];
        for (j, &g) in z.iter().enumerate() {
            max_z[g] = max_z[g].max(theta_z[j]);
        }
        for s in 0..k_y {
            for t in 0..k_z {
                let p = max_y[s] * max_z[t] * b[(s, t)];
                if p > 1.0 + 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "edge probability {p:.6} > 1 for block pair ({s}, {t})"
                    )));
                }
            }
        }

        Ok(BlockModel {
            kind,
            b,
            y,
            z,
            theta_y,
            theta_z,
            tau,
            seed: None,
        })
    }

    /// A model without degree correction: every node in a block contributes
    /// equally, so block-pair edge probabilities are exactly the entries of
    /// `b` (which must therefore lie in [0, 1]).
    pub fn plain(
        kind: GraphKind,
        b: Array2<f64>,
        y: Vec<usize>,
        z: Vec<usize>,
        tau: f64,
    ) -> Result<Self> {
        let ty = vec![1.0; y.len()];
        let tz = vec![1.0; z.len()];
        BlockModel::new(kind, b, y, z, ty, tz, tau)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.z.len()
    }

    pub fn k_y(&self) -> usize {
        self.b.nrows()
    }

    pub fn k_z(&self) -> usize {
        self.b.ncols()
    }

    /// Rescaled connectivity matrix (identifiable form).
    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn z(&self) -> &[usize] {
        &self.z
    }

    pub fn theta_y(&self) -> &[f64] {
        &self.theta_y
    }

    pub fn theta_z(&self) -> &[f64] {
        &self.theta_z
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Same model with a different regularizer.
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "regularizer must be finite and nonnegative, got {tau}"
            )));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        self.theta_y[i] * self.theta_z[j] * self.b[(self.y[i], self.z[j])]
    }
}

impl TryFrom<ModelSpec> for BlockModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        let k_y = spec.b.len();
        let k_z = spec.b.first().map_or(0, Vec::len);
        if spec.b.iter().any(|row| row.len() != k_z) {
            return Err(Error::InvalidArgument(
                "connectivity matrix rows have unequal lengths".into(),
            ));
        }
        let mut b = Array2::zeros((k_y, k_z.max(1)));
        for (s, row) in spec.b.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                b[(s, t)] = v;
            }
        }
        let model = BlockModel::new(
            spec.kind, b, spec.y, spec.z, spec.theta_y, spec.theta_z, spec.tau,
        )?;
        Ok(match spec.seed {
            Some(s) => model.with_seed(s),
            None => model,
        })
    }
}

impl From<BlockModel> for ModelSpec {
    fn from(m: BlockModel) -> Self {
        let b = (0..m.b.nrows())
            .map(|s| m.b.row(s).to_vec())
            .collect();
        ModelSpec {
            kind: m.kind,
            b,
            y: m.y,
            z: m.z,
            theta_y: m.theta_y,
            theta_z: m.theta_z,
            tau: m.tau,
            seed: m.seed,
        }
    }
}

/// Connectivity matrix of the equal-block family: p on the diagonal plus r
/// everywhere, i.e. within-block rate p + r and between-block rate r.
pub fn four_param_matrix(k: usize, p: f64, r: f64) -> Array2<f64> {
    Array2::from_shape_fn((k, k), |(s, t)| if s == t { p + r } else { r })
}

fn check_four_param(k: usize, s: usize, p: f64, r: f64) -> Result<()> {
    if k == 0 || s == 0 {
        return Err(Error::InvalidArgument(
            "block count and block size must be positive".into(),
        ));
    }
    if !(p > 0.0 && p < 1.0) || !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rates must lie in (0, 1), got p = {p}, r = {r}"
        )));
    }
    if p + r > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "within-block rate p + r = {} exceeds 1",
            p + r
        )));
    }
    Ok(())
}

fn four_param_labels(
    k: usize,
    s: usize,
    seed: u64,
    planted: Planted,
) -> (Vec<usize>, Vec<usize>) {
    let base: Vec<usize> = (0..k * s).map(|i| i / s).collect();
    match planted {
        Planted::Identical => (base.clone(), base),
        Planted::Random => {
            let mut y = base.clone();
            let mut z = base;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0);
            y.shuffle(&mut rng);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            z.shuffle(&mut rng);
            (y, z)
        }
    }
}

/// Equal-block directed model on K blocks of size s: within-block rate
/// p + r, between-block rate r, no degree correction.
pub fn build_four_param(
    k: usize,
    s: usize,
    p: f64,
    r: f64,
    seed: u64,
    planted: Planted,
) -> Result<BlockModel> {
    check_four_param(k, s, p, r)?;
    let (y, z) = four_param_labels(k, s, seed, planted);
    let b = four_param_matrix(k, p, r);
    Ok(BlockModel::plain(GraphKind::Directed, b, y, z, 0.0)?.with_seed(seed))
}

/// Degree-corrected variant of [`build_four_param`]: one degree parameter is
/// drawn per node (see [`sample_degree_params`]) and applied to both its
/// sending and receiving propensity.
pub fn build_four_param_dc(
    k: usize,
    s: usize,
    p: f64,
    r: f64,
    seed: u64,
    planted: Planted,
) -> Result<BlockModel> {
    check_four_param(k, s, p, r)?;
    let (y, z) = four_param_labels(k, s, seed, planted);
    let b = four_param_matrix(k, p, r);
    let theta = sample_degree_params(k * s, mix_seed(seed, 0xDC));
    Ok(
        BlockModel::new(GraphKind::Directed, b, y, z, theta.clone(), theta, 0.0)?
            .with_seed(seed),
    )
}

/// Solves the equal-block rates (p, r) that hit a target expected degree and
/// a target K-th singular value `lambda_k` of the unregularized population
/// Laplacian: λ_K = 1/(K·(r/p) + 1) and degree = s·p + K·s·r.
pub fn four_param_rates(
    k: usize,
    s: usize,
    degree: f64,
    lambda_k: f64,
) -> Result<(f64, f64)> {
    if k == 0 || s == 0 {
        return Err(Error::InvalidArgument(
            "block count and block size must be positive".into(),
        ));
    }
    if !(lambda_k > 0.0 && lambda_k < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target gap must lie in (0, 1), got {lambda_k}"
        )));
    }
    if !(degree > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target degree must be positive, got {degree}"
        )));
    }
    let rho = (1.0 / lambda_k - 1.0) / k as f64;
    let n = (k * s) as f64;
    let p = degree / (s as f64 + n * rho);
    let r = rho * p;
    check_four_param(k, s, p, r)?;
    Ok((p, r))
}

/// I.i.d. heavy-tailed degree parameters: √(E + 0.169) for E standard
/// exponential, scaled so the mean is approximately one. Raw draws; the
/// per-block identifiability normalization happens inside [`BlockModel`].
pub fn sample_degree_params(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut rng);
            (e + 0.169).sqrt()
        })
        .collect()
}

/// Draws one unweighted graph from the model: each cell (i, j) is an
/// independent Bernoulli with the model's edge probability. The randomness
/// for cell (i, j) is a pure function of (seed, i, j) — row i reads stream i
/// of a counter-based generator at position j — so the draw is independent
/// of traversal order.
pub fn sample_adjacency(m: &BlockModel, seed: u64) -> Result<SparseGraph> {
    let n_r = m.n_rows();
    let n_c = m.n_cols();
    let mut triplets = Vec::new();
    for i in 0..n_r {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let ty = m.theta_y[i];
        let brow = m.b.row(m.y[i]);
        for j in 0..n_c {
            let u: f64 = rng.random();
            let p = ty * m.theta_z[j] * brow[m.z[j]];
            if u < p {
                triplets.push((i, j, 1.0));
            }
        }
    }
    SparseGraph::from_triplets(m.kind, n_r, n_c, &triplets)
}

/// Exact population quantities of a block model: the expected adjacency, its
/// regularized Laplacian, the block-level core factorization, the population
/// singular subspaces, and the separation scalars the error theory uses.
#[derive(Clone, Debug)]
pub struct PopulationObjects {
    /// Expected adjacency Θ_y·Y·B·Zᵀ·Θ_z, N_r × N_c.
    pub script_a: Array2<f64>,
    /// Regularized population Laplacian of `script_a` at the model's τ.
    pub script_l: Array2<f64>,
    /// Degree-balanced connectivity: O_B^{-1/2}·B·P_B^{-1/2}.
    pub b_l: Array2<f64>,
    /// Block core: diag(D_y)^{1/2}·B_L·diag(D_z)^{1/2}; shares its nonzero
    /// singular values with `script_l`.
    pub h: Array2<f64>,
    /// Row sums of B.
    pub o_b: Vec<f64>,
    /// Column sums of B.
    pub p_b: Vec<f64>,
    /// Regularization-shrunk degree parameters θᵢ·Oᵢ/(Oᵢ + τ), sending side.
    pub theta_y_tau: Vec<f64>,
    /// Receiving-side analogue.
    pub theta_z_tau: Vec<f64>,
    /// Top singular values of the population Laplacian, length `k`.
    pub sigma: Vec<f64>,
    /// Population left singular vectors, N_r × k; block-wise scaled rows of U.
    pub script_xl: Array2<f64>,
    /// Population right singular vectors, N_c × k.
    pub script_xr: Array2<f64>,
    /// Left singular vectors of H, k_y × k.
    pub u: Array2<f64>,
    /// Right singular vectors of H, k_z × k.
    pub v: Array2<f64>,
    /// Row-normalized U: the population sending-cluster centroids.
    pub centroids_y: Array2<f64>,
    /// Row-normalized V: the population receiving-cluster centroids.
    pub centroids_z: Array2<f64>,
    /// Minimum expected degree over both sides.
    pub delta: f64,
    /// Spread of the V row lengths: max‖V_i‖ / min‖V_j‖.
    pub kappa: f64,
    /// Effective embedding width: numerical rank of H (min(k_y, k_z) when
    /// the connectivity matrix has full rank).
    pub k: usize,
    /// True when H is rank deficient or k_y > k_z, i.e. the separation
    /// theory's full-rank assumption fails and `k` was reduced.
    pub rank_warning: bool,
    /// Regularizer the objects were built with (the model's τ).
    pub tau: f64,
}

/// Builds [`PopulationObjects`] for a model. Dense output; refuses models
/// larger than [`POPULATION_CAP`] per side.
pub fn population_objects(m: &BlockModel) -> Result<PopulationObjects> {
    let n_r = m.n_rows();
    let n_c = m.n_cols();
    if n_r > POPULATION_CAP || n_c > POPULATION_CAP {
        return Err(Error::SizeCap(format!(
            "population objects are dense; {n_r}x{n_c} exceeds the {POPULATION_CAP} cap"
        )));
    }
    let k_y = m.k_y();
    let k_z = m.k_z();
    let tau = m.tau;

    let mut script_a = Array2::zeros((n_r, n_c));
    for i in 0..n_r {
        for j in 0..n_c {
            script_a[(i, j)] = m.edge_probability(i, j);
        }
    }
    let o: Vec<f64> = (0..n_r).map(|i| script_a.row(i).sum()).collect();
    let p: Vec<f64> = (0..n_c).map(|j| script_a.column(j).sum()).collect();
    let delta = o
        .iter()
        .chain(p.iter())
        .cloned()
        .fold(f64::INFINITY, f64::min);

    let mut script_l = Array2::zeros((n_r, n_c));
    for i in 0..n_r {
        for j in 0..n_c {
            let a = script_a[(i, j)];
            if a != 0.0 {
                script_l[(i, j)] = a / ((o[i] + tau) * (p[j] + tau)).sqrt();
            }
        }
    }

    let theta_y_tau: Vec<f64> = (0..n_r)
        .map(|i| {
            if o[i] == 0.0 {
                0.0
            } else {
                m.theta_y[i] * o[i] / (o[i] + tau)
            }
        })
        .collect();
    let theta_z_tau: Vec<f64> = (0..n_c)
        .map(|j| {
            if p[j] == 0.0 {
                0.0
            } else {
                m.theta_z[j] * p[j] / (p[j] + tau)
            }
        })
        .collect();

    let o_b: Vec<f64> = (0..k_y).map(|s| m.b.row(s).sum()).collect();
    let p_b: Vec<f64> = (0..k_z).map(|t| m.b.column(t).sum()).collect();
    let mut b_l = Array2::zeros((k_y, k_z));
    for s in 0..k_y {
        for t in 0..k_z {
            let v = m.b[(s, t)];
            if v != 0.0 {
                b_l[(s, t)] = v / (o_b[s] * p_b[t]).sqrt();
            }
        }
    }

    let mut d_y = vec![0.0f64; k_y];
    for (i, &g) in m.y.iter().enumerate() {
        d_y[g] += theta_y_tau[i];
    }
    let mut d_z = vec![0.0f64; k_z];
    for (j, &g) in m.z.iter().enumerate() {
        d_z[g] += theta_z_tau[j];
    }
    let mut h = Array2::zeros((k_y, k_z));
    for s in 0..k_y {
        for t in 0..k_z {
            h[(s, t)] = d_y[s].sqrt() * b_l[(s, t)] * d_z[t].sqrt();
        }
    }

    let hsvd = jacobi_svd(&h)?;
    let sigma1 = hsvd.sigma.first().copied().unwrap_or(0.0);
    if sigma1 <= 0.0 {
        return Err(Error::InvalidArgument(
            "population operator is identically zero; no embedding exists".into(),
        ));
    }
    let k_full = k_y.min(k_z);
    let k = hsvd
        .sigma
        .iter()
        .take(k_full)
        .filter(|&&s| s > sigma1 * 1e-10)
        .count();
    let rank_warning = k < k_full || k_y > k_z;

    let u = hsvd.u.slice(ndarray::s![.., ..k]).to_owned();
    let v = hsvd.v.slice(ndarray::s![.., ..k]).to_owned();
    let sigma = hsvd.sigma[..k].to_vec();

    let mut script_xl = Array2::zeros((n_r, k));
    for (i, &g) in m.y.iter().enumerate() {
        if d_y[g] > 0.0 {
            let w = (theta_y_tau[i] / d_y[g]).sqrt();
            for c in 0..k {
                script_xl[(i, c)] = w * u[(g, c)];
            }
        }
    }
    let mut script_xr = Array2::zeros((n_c, k));
    for (j, &g) in m.z.iter().enumerate() {
        if d_z[g] > 0.0 {
            let w = (theta_z_tau[j] / d_z[g]).sqrt();
            for c in 0..k {
                script_xr[(j, c)] = w * v[(g, c)];
            }
        }
    }

    let centroids_y = normalized_rows(&u);
    let centroids_z = normalized_rows(&v);

    let vnorms: Vec<f64> = (0..k_z)
        .map(|t| v.row(t).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let vmax = vnorms.iter().cloned().fold(0.0f64, f64::max);
    let vmin = vnorms.iter().cloned().fold(f64::INFINITY, f64::min);
    let kappa = if vmin > 0.0 { vmax / vmin } else { f64::INFINITY };

    Ok(PopulationObjects {
        script_a,
        script_l,
        b_l,
        h,
        o_b,
        p_b,
        theta_y_tau,
        theta_z_tau,
        sigma,
        script_xl,
        script_xr,
        u,
        v,
        centroids_y,
        centroids_z,
        delta,
        kappa,
        k,
        rank_warning,
        tau,
    })
}

fn normalized_rows(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    for mut row in out.rows_mut() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
    out
}

impl PopulationObjects {
    /// Minimum pairwise distance between columns of H: the separation that
    /// controls how hard the receiving partition is to estimate. +∞ when
    /// only one column block exists.
    pub fn gamma_z(&self) -> f64 {
        let k_z = self.h.ncols();
        if k_z < 2 {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for i in 0..k_z {
            for j in i + 1..k_z {
                let d: f64 = (0..self.h.nrows())
                    .map(|s| {
                        let diff = self.h[(s, i)] - self.h[(s, j)];
                        diff * diff
                    })
                    .sum::<f64>()
                    .sqrt();
                best = best.min(d);
            }
        }
        best
    }

    /// Column-separation variant that additionally penalizes uneven V row
    /// lengths: gamma_z + (1 − κ). Since κ ≥ 1 this is never larger than
    /// [`Self::gamma_z`], and it can be negative for badly spread rows.
    pub fn gamma_z_penalized(&self) -> f64 {
        self.gamma_z() + (1.0 - self.kappa)
    }

    /// Minimum row lengths of the population singular vector matrices:
    /// (min over sending rows, min over receiving rows).
    pub fn min_leverage(&self) -> (f64, f64) {
        let m_y = (0..self.script_xl.nrows())
            .map(|i| {
                self.script_xl
                    .row(i)
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let m_z = (0..self.script_xr.nrows())
            .map(|j| {
                self.script_xr
                    .row(j)
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        (m_y, m_z)
    }
}
