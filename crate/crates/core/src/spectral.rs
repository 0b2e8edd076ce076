//! Truncated singular value decomposition of sparse matrices, a dense
//! reference oracle, and the symmetrization device that relates the two.
//!
//! The iterative solver is randomized block subspace iteration on the
//! symmetrized operator [[0, M], [Mᵀ, 0]]: a seeded Gaussian block is
//! alternately multiplied through M and Mᵀ with re-orthonormalization of each
//! half, and Rayleigh-Ritz estimates are monitored until both the singular
//! value estimates and the triplet residuals settle below tolerance. The
//! oracle is an independent dense one-sided Jacobi solver; the two share no
//! numerical code so they can cross-check each other.

use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::linalg::{jacobi_svd, l2_norm, qr_rows};

/// Extra subspace width carried beyond the requested rank.
pub const DEFAULT_OVERSAMPLING: usize = 10;

/// Default cap on the min dimension accepted by [`dense_svd_oracle`].
pub const ORACLE_CAP: usize = 500;

/// Top-K singular triplets of a matrix: M ≈ left · diag(sigma) · rightᵀ.
#[derive(Clone, Debug)]
pub struct Embedding {
    /// Left singular vectors as orthonormal columns, N_r × K.
    pub left: Array2<f64>,
    /// Right singular vectors as orthonormal columns, N_c × K.
    pub right: Array2<f64>,
    /// Singular values, nonincreasing and nonnegative.
    pub sigma: Vec<f64>,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }
}

/// Deterministic sign fix: in each left column the entry of largest absolute
/// value (lowest index on ties) is made positive, negating the paired right
/// column to compensate.
pub(crate) fn apply_sign_convention(left: &mut Array2<f64>, right: &mut Array2<f64>) {
    for c in 0..left.ncols() {
        let mut arg = 0usize;
        let mut best = f64::NEG_INFINITY;
        for (i, &x) in left.column(c).iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                arg = i;
            }
        }
        if left[(arg, c)] < 0.0 {
            left.column_mut(c).mapv_inplace(|x| -x);
            right.column_mut(c).mapv_inplace(|x| -x);
        }
    }
}

/// Top-k singular triplets of a sparse matrix by seeded randomized subspace
/// iteration with the default oversampling width.
///
/// Deterministic for a fixed seed. On success every triplet satisfies
/// ‖M·v_i − σ_i·u_i‖₂ ≤ tol·max(1, σ₁).
pub fn truncated_svd(
    m: &SparseMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<Embedding> {
    truncated_svd_with(m, k, tol, max_iter, seed, DEFAULT_OVERSAMPLING)
}

/// [`truncated_svd`] with an explicit oversampling width. Wider subspaces
/// converge in fewer sweeps on spectra with a heavy bulk near the target
/// rank, at proportional cost per sweep.
pub fn truncated_svd_with(
    m: &SparseMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
    oversampling: usize,
) -> Result<Embedding> {
    let n_rows = m.n_rows();
    let n_cols = m.n_cols();
    let min_dim = n_rows.min(n_cols);
    if k == 0 || k > min_dim {
        return Err(Error::InvalidArgument(format!(
            "rank {k} out of range for a {n_rows}x{n_cols} matrix"
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }
    let w = (k + oversampling.max(1)).min(min_dim);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array2::zeros((w, n_cols));
    for r in 0..w {
        for c in 0..n_cols {
            v[(r, c)] = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        }
    }
    qr_rows(&mut v);
    let mut y = m.mul_rowblock(&v);

    let mut prev = vec![f64::INFINITY; k];
    let mut best_worst = f64::INFINITY;
    let mut best_residuals = vec![f64::INFINITY; k];
    let mut last_thresh = tol;

    for _sweep in 1..=max_iter {
        let mut u = y;
        qr_rows(&mut u);
        let mut vnew = m.t_mul_rowblock(&u);
        qr_rows(&mut vnew);
        v = vnew;
        y = m.mul_rowblock(&v);

        // Rayleigh-Ritz on the current pair of orthonormal half-blocks.
        let s_small = u.dot(&y.t());
        let ssvd = jacobi_svd(&s_small)?;
        let sigma1 = ssvd.sigma[0];
        let thresh = tol * sigma1.max(1.0);
        last_thresh = thresh;
        let movement = (0..k)
            .map(|i| (ssvd.sigma[i] - prev[i]).abs())
            .fold(0.0f64, f64::max);

        let wl_k = ssvd.u.slice(s![.., ..k]);
        let wr_k = ssvd.v.slice(s![.., ..k]);
        let left_rows = wl_k.t().dot(&u);
        let right_rows = wr_k.t().dot(&v);
        // M·v_i is a rotation of the rows of y = M·V, so residuals cost no
        // extra sparse product.
        let mv_rows = wr_k.t().dot(&y);
        let mut residuals = Vec::with_capacity(k);
        for i in 0..k {
            let mut acc = 0.0;
            for t in 0..n_rows {
                let d = mv_rows[(i, t)] - ssvd.sigma[i] * left_rows[(i, t)];
                acc += d * d;
            }
            residuals.push(acc.sqrt());
        }
        let worst = residuals.iter().cloned().fold(0.0f64, f64::max);
        if worst < best_worst {
            best_worst = worst;
            best_residuals = residuals;
        }

        if movement <= thresh && worst <= thresh {
            let mut left = left_rows.t().as_standard_layout().to_owned();
            let mut right = right_rows.t().as_standard_layout().to_owned();
            apply_sign_convention(&mut left, &mut right);
            return Ok(Embedding {
                left,
                right,
                sigma: ssvd.sigma[..k].to_vec(),
            });
        }
        prev = ssvd.sigma[..k].to_vec();
    }

    Err(Error::NonConvergence {
        sweeps: max_iter,
        worst_residual: best_worst,
        required: last_thresh,
        residuals: best_residuals,
    })
}

/// Full SVD of a dense matrix by an unconditionally stable direct method,
/// with the same sign convention as the iterative solver. Refuses matrices
/// whose min dimension exceeds the default cap.
pub fn dense_svd_oracle(m: &Array2<f64>) -> Result<Embedding> {
    dense_svd_oracle_with_cap(m, ORACLE_CAP)
}

/// [`dense_svd_oracle`] with an explicit min-dimension cap.
pub fn dense_svd_oracle_with_cap(m: &Array2<f64>, cap: usize) -> Result<Embedding> {
    let min_dim = m.nrows().min(m.ncols());
    if min_dim > cap {
        return Err(Error::SizeCap(format!(
            "dense oracle capped at min dimension {cap}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = jacobi_svd(m)?;
    let mut left = svd.u;
    let mut right = svd.v;
    apply_sign_convention(&mut left, &mut right);
    Ok(Embedding {
        left,
        right,
        sigma: svd.sigma,
    })
}

/// Embeds a rectangular matrix into the symmetric block matrix
/// [[0, M], [Mᵀ, 0]] on the union of row and column index spaces. Its
/// eigenvalues come in ± pairs of the singular values of M, with eigenvectors
/// (u, v)/√2 for the positive branch.
pub fn symmetrize(m: &SparseMatrix) -> SparseMatrix {
    let n_rows = m.n_rows();
    let n = n_rows + m.n_cols();
    let mut triplets = Vec::with_capacity(2 * m.nnz());
    for (i, j, v) in m.iter() {
        triplets.push((i, n_rows + j, v));
        triplets.push((n_rows + j, i, v));
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("block embedding of a valid matrix")
}

/// Residual ‖M·v_i − σ_i·u_i‖₂ for each triplet of an embedding, against a
/// given sparse matrix.
pub fn triplet_residuals(m: &SparseMatrix, e: &Embedding) -> Vec<f64> {
    let k = e.k();
    let mut out = Vec::with_capacity(k);
    let mut y = vec![0.0f64; m.n_rows()];
    for i in 0..k {
        let vi: Vec<f64> = e.right.column(i).iter().cloned().collect();
        m.matvec(&vi, &mut y);
        for (t, yt) in y.iter_mut().enumerate() {
            *yt -= e.sigma[i] * e.left[(t, i)];
        }
        out.push(l2_norm(&y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{jacobi_eigh, principal_angles};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn sparse_identity(n: usize) -> SparseMatrix {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn random_sparse(n: usize, d: usize, nnz: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<_> = (0..nnz)
            .map(|_| {
                (
                    rng.random_range(0..n),
                    rng.random_range(0..d),
                    rng.random_range(-2.0..2.0),
                )
            })
            .collect();
        SparseMatrix::from_triplets(n, d, &t).unwrap()
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let e = truncated_svd(&sparse_identity(3), 2, 1e-8, 300, 0).unwrap();
        assert_abs_diff_eq!(e.sigma[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(e.sigma[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn diagonal_matrix_recovers_axes() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 3.0), (1, 1, 2.0), (2, 2, 1.0)],
        )
        .unwrap();
        let e = truncated_svd(&m, 2, 1e-10, 300, 1).unwrap();
        assert_abs_diff_eq!(e.sigma[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.sigma[1], 2.0, epsilon = 1e-9);
        // Sign convention turns the ±axis vectors into +e1, +e2.
        assert_abs_diff_eq!(e.left[(0, 0)], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(e.left[(1, 1)], 1.0, epsilon = 1e-8);
        assert!(e.left[(1, 0)].abs() < 1e-8 && e.left[(2, 0)].abs() < 1e-8);
    }

    #[test]
    fn truncated_matches_dense_oracle() {
        let m = random_sparse(20, 15, 80, 42);
        let e = truncated_svd(&m, 5, 1e-10, 300, 7).unwrap();
        let oracle = dense_svd_oracle(&m.to_dense()).unwrap();
        // The comparison is only meaningful when the subspace is identifiable.
        assert!(
            oracle.sigma[4] - oracle.sigma[5] > 1e-6,
            "fixture lost its spectral gap"
        );
        for i in 0..5 {
            assert_abs_diff_eq!(e.sigma[i], oracle.sigma[i], epsilon = 1e-8);
        }
        let la = principal_angles(&e.left, &oracle.left.slice(s![.., ..5]).to_owned()).unwrap();
        let ra = principal_angles(&e.right, &oracle.right.slice(s![.., ..5]).to_owned()).unwrap();
        for a in la.iter().chain(ra.iter()) {
            assert!(*a < 1e-6, "principal angle {a} too large");
        }
    }

    #[test]
    fn orthonormal_and_residual_contract() {
        let m = random_sparse(25, 18, 120, 3);
        let e = truncated_svd(&m, 4, 1e-9, 300, 11).unwrap();
        let lg = e.left.t().dot(&e.left);
        let rg = e.right.t().dot(&e.right);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(lg[(i, j)], expect, epsilon = 1e-8);
                assert_abs_diff_eq!(rg[(i, j)], expect, epsilon = 1e-8);
            }
        }
        for i in 1..4 {
            assert!(e.sigma[i - 1] >= e.sigma[i]);
        }
        let resid = triplet_residuals(&m, &e);
        let thresh = 1e-9 * e.sigma[0].max(1.0);
        for r in resid {
            assert!(r <= thresh * 1.01, "residual {r} above {thresh}");
        }
    }

    #[test]
    fn fixed_seed_is_bit_reproducible() {
        let m = random_sparse(30, 22, 150, 9);
        let a = truncated_svd(&m, 3, 1e-8, 300, 123).unwrap();
        let b = truncated_svd(&m, 3, 1e-8, 300, 123).unwrap();
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(
            a.left.as_slice().unwrap(),
            b.left.as_slice().unwrap()
        );
        assert_eq!(
            a.right.as_slice().unwrap(),
            b.right.as_slice().unwrap()
        );
    }

    #[test]
    fn rank_out_of_range_rejected() {
        let m = sparse_identity(3);
        assert!(truncated_svd(&m, 0, 1e-8, 100, 0).is_err());
        assert!(truncated_svd(&m, 4, 1e-8, 100, 0).is_err());
    }

    #[test]
    fn nonconvergence_reports_residuals() {
        let m = random_sparse(30, 30, 200, 5);
        let err = truncated_svd(&m, 3, 1e-14, 1, 2).unwrap_err();
        match err {
            Error::NonConvergence {
                sweeps, residuals, ..
            } => {
                assert_eq!(sweeps, 1);
                assert_eq!(residuals.len(), 3);
                assert!(residuals.iter().all(|r| r.is_finite()));
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn wider_subspace_matches_default() {
        let m = random_sparse(40, 30, 250, 21);
        let a = truncated_svd(&m, 3, 1e-9, 300, 4).unwrap();
        let b = truncated_svd_with(&m, 3, 1e-9, 300, 4, 25).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(a.sigma[i], b.sigma[i], epsilon = 1e-7);
        }
    }

    #[test]
    fn oracle_one_by_one_sign_rule() {
        let e = dense_svd_oracle(&array![[-2.0]]).unwrap();
        assert_abs_diff_eq!(e.sigma[0], 2.0);
        assert_abs_diff_eq!(e.left[(0, 0)], 1.0);
        assert_abs_diff_eq!(e.right[(0, 0)], -1.0);
    }

    #[test]
    fn oracle_transpose_has_same_spectrum() {
        let m = random_sparse(8, 5, 25, 33).to_dense();
        let a = dense_svd_oracle(&m).unwrap();
        let b = dense_svd_oracle(&m.t().to_owned()).unwrap();
        for (x, y) in a.sigma.iter().zip(&b.sigma) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    // In-test determinant by Gaussian elimination, independent of the SVD code.
    fn det(m: &Array2<f64>) -> f64 {
        let n = m.nrows();
        let mut a = m.clone();
        let mut sign = 1.0;
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a[(r, col)].abs() > a[(pivot, col)].abs() {
                    pivot = r;
                }
            }
            if a[(pivot, col)] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for c in 0..n {
                    let tmp = a[(col, c)];
                    a[(col, c)] = a[(pivot, c)];
                    a[(pivot, c)] = tmp;
                }
                sign = -sign;
            }
            for r in col + 1..n {
                let f = a[(r, col)] / a[(col, col)];
                for c in col..n {
                    a[(r, c)] -= f * a[(col, c)];
                }
            }
        }
        (0..n).map(|i| a[(i, i)]).product::<f64>() * sign
    }

    #[test]
    fn oracle_psd_spectrum_matches_closed_form() {
        // Symmetric circulant with first row [5, 2, 1, 1, 2]: its spectrum is
        // 5 + 4cos(2πj/5) + 2cos(4πj/5), i.e. {11, 3+φ (x2), 4−φ (x2)} for
        // the golden ratio φ. All positive, so singular values = eigenvalues.
        let c = [5.0, 2.0, 1.0, 1.0, 2.0];
        let m = Array2::from_shape_fn((5, 5), |(i, j)| c[(j + 5 - i) % 5]);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let expected = [11.0, 3.0 + phi, 3.0 + phi, 4.0 - phi, 4.0 - phi];
        let e = dense_svd_oracle(&m).unwrap();
        for (got, want) in e.sigma.iter().zip(expected) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-10);
        }
        // Each singular value is a root of det(C − λI).
        for &sigma in &e.sigma {
            let shifted = Array2::from_shape_fn((5, 5), |(i, j)| {
                m[(i, j)] - if i == j { sigma } else { 0.0 }
            });
            assert!(det(&shifted).abs() < 1e-6, "det residual at {sigma}");
        }
    }

    #[test]
    fn symmetrize_one_by_one() {
        let m = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
        let sym = symmetrize(&m);
        let d = sym.to_dense();
        assert_eq!(d, array![[0.0, 1.0], [1.0, 0.0]]);
        let (vals, _) = jacobi_eigh(&d).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetrize_zero_matrix() {
        let m = SparseMatrix::from_triplets(2, 3, &[]).unwrap();
        let sym = symmetrize(&m);
        assert_eq!(sym.n_rows(), 5);
        assert_eq!(sym.nnz(), 0);
    }

    #[test]
    fn symmetrize_spectrum_is_plus_minus_singular_values() {
        let m = random_sparse(4, 3, 9, 77);
        let sym = symmetrize(&m);
        let (vals, vecs) = jacobi_eigh(&sym.to_dense()).unwrap();
        let svd = dense_svd_oracle(&m.to_dense()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(vals[i], svd.sigma[i], epsilon = 1e-10);
            assert_abs_diff_eq!(vals[6 - i], -svd.sigma[i], epsilon = 1e-10);
        }
        // Positive-branch eigenvectors split as (u, v)/√2 when identifiable.
        for i in 0..3 {
            if svd.sigma[i] < 1e-8 {
                continue;
            }
            let gap_ok = (i == 0 || svd.sigma[i - 1] - svd.sigma[i] > 1e-6)
                && (svd.sigma[i] - svd.sigma.get(i + 1).copied().unwrap_or(0.0) > 1e-6);
            if !gap_ok {
                continue;
            }
            let top: Vec<f64> = (0..4).map(|r| vecs[(r, i)]).collect();
            let norm_top = l2_norm(&top);
            assert_abs_diff_eq!(norm_top, 1.0 / 2.0f64.sqrt(), epsilon = 1e-8);
            let dot_u: f64 = (0..4).map(|r| top[r] * svd.left[(r, i)]).sum();
            assert_abs_diff_eq!(dot_u.abs() * 2.0f64.sqrt(), 1.0, epsilon = 1e-8);
        }
    }
}
