//! Degree-regularized graph Laplacian for directed and bipartite graphs.
//!
//! The operator is L = (O + τI)^{-1/2} · A · (P + τI)^{-1/2}, where O and P
//! are the diagonal weighted out- and in-degree matrices. The regularizer τ
//! damps the influence of low-degree nodes; τ = 0 recovers the plain
//! degree-normalized adjacency. This is not the classical diagonal-minus-
//! adjacency Laplacian; it is the rescaled adjacency whose singular value
//! decomposition drives the clustering pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphKind, SparseGraph, SparseMatrix};

/// The rescaled adjacency operator together with the quantities that built it.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    /// Rescaled adjacency; shares the sparsity pattern of the graph.
    pub matrix: SparseMatrix,
    /// Regularizer actually used (resolved from the default when unset).
    pub tau: f64,
    /// Weighted out-degrees of the source graph.
    pub out_deg: Vec<f64>,
    /// Weighted in-degrees of the source graph.
    pub in_deg: Vec<f64>,
}

/// How the regularizer is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "policy", content = "value")]
pub enum TauPolicy {
    /// Average degree of the graph.
    Auto,
    /// A fixed nonnegative value.
    Fixed(f64),
}

impl TauPolicy {
    pub fn resolve(self, g: &SparseGraph) -> Result<f64> {
        match self {
            TauPolicy::Auto => Ok(default_tau(g)),
            TauPolicy::Fixed(t) => {
                if !t.is_finite() || t < 0.0 {
                    Err(Error::InvalidArgument(format!(
                        "regularizer must be finite and nonnegative, got {t}"
                    )))
                } else {
                    Ok(t)
                }
            }
        }
    }
}

impl std::fmt::Display for TauPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TauPolicy::Auto => write!(f, "auto"),
            TauPolicy::Fixed(t) => write!(f, "{t}"),
        }
    }
}

impl std::str::FromStr for TauPolicy {
    type Err = Error;

    /// "auto" or a nonnegative number.
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TauPolicy::Auto);
        }
        let t: f64 = s.parse().map_err(|_| {
            Error::InvalidArgument(format!(
                "regularizer must be 'auto' or a number, got '{s}'"
            ))
        })?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "regularizer must be finite and nonnegative, got {t}"
            )));
        }
        Ok(TauPolicy::Fixed(t))
    }
}

/// Default regularizer: the average degree. For a directed graph on n nodes
/// this is (total weight)/n; for a bipartite graph the node counts on the two
/// sides may differ, so their geometric mean replaces n. An empty graph gets 0.
pub fn default_tau(g: &SparseGraph) -> f64 {
    let w = g.total_weight();
    if w == 0.0 {
        return 0.0;
    }
    match g.kind() {
        GraphKind::Directed => w / g.n_rows() as f64,
        GraphKind::Bipartite => w / ((g.n_rows() as f64) * (g.n_cols() as f64)).sqrt(),
    }
}

/// Builds the regularized Laplacian. `tau = None` resolves to [`default_tau`].
///
/// Every produced entry is finite for any nonnegative τ: entries exist only
/// where A_ij > 0, which forces both the out-degree of i and the in-degree of
/// j to be positive.
pub fn build_laplacian(g: &SparseGraph, tau: Option<f64>) -> Result<Laplacian> {
    let tau = match tau {
        None => default_tau(g),
        Some(t) => TauPolicy::Fixed(t).resolve(g)?,
    };
    let out_deg = g.out_degrees();
    let in_deg = g.in_degrees();
    let matrix = g
        .matrix()
        .map_values(|i, j, v| v / ((out_deg[i] + tau) * (in_deg[j] + tau)).sqrt());
    debug_assert!(matrix.iter().all(|(_, _, v)| v.is_finite()));
    Ok(Laplacian {
        matrix,
        tau,
        out_deg,
        in_deg,
    })
}

impl Laplacian {
    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn to_dense(&self) -> ndarray::Array2<f64> {
        self.matrix.to_dense()
    }
}
