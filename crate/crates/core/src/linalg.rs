//! Dense numerical kernels: Householder orthonormalization of row blocks,
//! one-sided Jacobi SVD, a cyclic Jacobi symmetric eigensolver, principal
//! angles, and a power-iteration spectral norm.
//!
//! Everything here is deterministic for fixed inputs (and fixed seed where a
//! seed is taken). The Jacobi routines are direct dense solvers used as
//! reference oracles and for small matrices; they deliberately share no code
//! with the sparse iterative solver they cross-check.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest min-dimension accepted by the dense Jacobi solvers.
pub const JACOBI_CAP: usize = 500;

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;
// Squared-norm floor, relative to the largest column, below which a column
// is frozen as numerically null. Rotating such columns only churns roundoff
// noise, and once their norms underflow the tolerance test the cyclic sweep
// never settles.
const JACOBI_DEFLATION2: f64 = 1e-36;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormalizes the rows of `block` in place via Householder reflections
/// (QR of the transpose), returning the upper-triangular factor `R` such that
/// the original block equals `Rᵀ · Q`. The returned rows are exactly
/// orthonormal even when the input is rank deficient; directions lost to rank
/// deficiency are completed deterministically.
pub fn qr_rows(block: &mut Array2<f64>) -> Array2<f64> {
    let w = block.nrows();
    let n = block.ncols();
    assert!(w >= 1 && w <= n, "need 1 <= rows <= cols, got {w}x{n}");

    let mut r = Array2::zeros((w, w));
    let mut betas = vec![0.0f64; w];

    for k in 0..w {
        let alpha = {
            let row = block.row(k);
            let tail = &row.as_slice().expect("row-major block")[k..];
            l2_norm(tail)
        };
        if alpha == 0.0 {
            betas[k] = 0.0;
            continue;
        }
        let head = block[(k, k)];
        let sign = if head >= 0.0 { 1.0 } else { -1.0 };
        r[(k, k)] = -sign * alpha;
        block[(k, k)] = head + sign * alpha;
        let unorm2 = {
            let row = block.row(k);
            let tail = &row.as_slice().expect("row-major block")[k..];
            dot(tail, tail)
        };
        betas[k] = 2.0 / unorm2;

        for j in k + 1..w {
            let (uk, rowj) = {
                let (top, bottom) = block.view_mut().split_at(ndarray::Axis(0), k + 1);
                let uk = top.row(k).to_owned();
                (uk, bottom)
            };
            let uk = uk.as_slice().expect("row-major block");
            let mut rowj = rowj;
            let rj = rowj.row_mut(j - k - 1);
            let rj = rj.into_slice().expect("row-major block");
            let proj = dot(&uk[k..], &rj[k..]) * betas[k];
            for t in k..n {
                rj[t] -= proj * uk[t];
            }
        }
        for j in k + 1..w {
            r[(k, j)] = block[(j, k)];
        }
    }

    // Rebuild Q rows by applying the stored reflections, in reverse, to the
    // first w basis vectors.
    let mut q = Array2::zeros((w, n));
    for j in 0..w {
        q[(j, j)] = 1.0;
    }
    for k in (0..w).rev() {
        if betas[k] == 0.0 {
            continue;
        }
        let uk = block.row(k).to_owned();
        let uk = uk.as_slice().expect("row-major block");
        for j in 0..w {
            let qj = q.row_mut(j);
            let qj = qj.into_slice().expect("row-major block");
            let proj = dot(&uk[k..], &qj[k..]) * betas[k];
            for t in k..n {
                qj[t] -= proj * uk[t];
            }
        }
    }
    block.assign(&q);
    r
}

/// Orthonormal basis for the column span of `a`, as columns.
pub fn orthonormal_columns(a: &Array2<f64>) -> Array2<f64> {
    let mut block = a.t().as_standard_layout().to_owned();
    qr_rows(&mut block);
    block.t().as_standard_layout().to_owned()
}

/// Full economy SVD of a dense matrix.
#[derive(Clone, Debug)]
pub struct DenseSvd {
    /// Left singular vectors as columns, n × min(n, d).
    pub u: Array2<f64>,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors as columns, d × min(n, d).
    pub v: Array2<f64>,
}

/// Economy SVD by one-sided Jacobi rotations. Exact to machine precision on
/// well-scaled input; intended as the reference oracle for the iterative
/// solver and as the solver for small dense matrices. The min dimension is
/// capped at [`JACOBI_CAP`].
pub fn jacobi_svd(a: &Array2<f64>) -> Result<DenseSvd> {
    let (n, d) = a.dim();
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("empty matrix has no SVD".into()));
    }
    if n.min(d) > JACOBI_CAP {
        return Err(Error::SizeCap(format!(
            "dense SVD of a {n}x{d} matrix exceeds the min-dimension cap {JACOBI_CAP}"
        )));
    }
    if n < d {
        let t = jacobi_svd(&a.t().as_standard_layout().to_owned())?;
        return Ok(DenseSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }

    // Tall case. Work on Aᵀ so each column of A is a contiguous row.
    let mut w = a.t().as_standard_layout().to_owned();
    let mut vrows = Array2::eye(d);

    // Uniformly rescale badly scaled input so squared column norms stay
    // clear of the underflow range; singular values are scaled back on exit.
    let max_abs = w.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let scale = if max_abs > 0.0 && !(1e-100..=1e100).contains(&max_abs) {
        max_abs
    } else {
        1.0
    };
    if scale != 1.0 {
        w.mapv_inplace(|x| x / scale);
    }

    let mut converged = false;
    let mut worst = 0.0f64;
    let mut max2 = 0.0f64;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        worst = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                let (alpha, beta, gamma) = {
                    let rp = w.row(p);
                    let rp = rp.as_slice().expect("row-major block");
                    let rq = w.row(q);
                    let rq = rq.as_slice().expect("row-major block");
                    (dot(rp, rp), dot(rq, rq), dot(rp, rq))
                };
                max2 = max2.max(alpha).max(beta);
                if alpha <= max2 * JACOBI_DEFLATION2 || beta <= max2 * JACOBI_DEFLATION2 {
                    continue;
                }
                let rel = gamma * gamma / (alpha * beta);
                if !(gamma * gamma > JACOBI_TOL * JACOBI_TOL * alpha * beta) {
                    continue;
                }
                worst = worst.max(rel.sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, p, q, c, s);
                rotate_rows(&mut vrows, p, q, c, s);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            sweeps: MAX_SWEEPS,
            worst_residual: worst,
            required: JACOBI_TOL,
            residuals: vec![],
        });
    }

    let mut order: Vec<usize> = (0..d).collect();
    let norms: Vec<f64> = (0..d)
        .map(|j| l2_norm(w.row(j).as_slice().expect("row-major block")))
        .collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap()
            .then(i.cmp(&j))
    });

    let sigma_max = norms[order[0]];
    let zero_tol = sigma_max * 1e-13;
    let mut u = Array2::zeros((n, d));
    let mut v = Array2::zeros((d, d));
    let mut sigma = Vec::with_capacity(d);
    let mut null_slots = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        sigma.push(norms[j] * scale);
        for i in 0..d {
            v[(i, slot)] = vrows[(j, i)];
        }
        if norms[j] > zero_tol {
            let wr = w.row(j);
            let wr = wr.as_slice().expect("row-major block");
            for i in 0..n {
                u[(i, slot)] = wr[i] / norms[j];
            }
        } else {
            null_slots.push(slot);
        }
    }
    // Complete null-space left vectors to an orthonormal set by
    // Gram-Schmidt over the standard basis, deterministically.
    if !null_slots.is_empty() {
        let mut next_basis = 0usize;
        for &slot in &null_slots {
            loop {
                assert!(next_basis < n, "ran out of basis vectors completing U");
                let mut cand = vec![0.0f64; n];
                cand[next_basis] = 1.0;
                next_basis += 1;
                for s2 in 0..d {
                    if null_slots.contains(&s2) && s2 >= slot {
                        continue;
                    }
                    let proj: f64 = (0..n).map(|i| u[(i, s2)] * cand[i]).sum();
                    for (i, c) in cand.iter_mut().enumerate() {
                        *c -= proj * u[(i, s2)];
                    }
                }
                let norm = l2_norm(&cand);
                if norm > 0.5 {
                    for (i, c) in cand.iter().enumerate() {
                        u[(i, slot)] = c / norm;
                    }
                    break;
                }
            }
        }
    }

    Ok(DenseSvd { u, sigma, v })
}

fn rotate_rows(m: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (top, bottom) = m.view_mut().split_at(ndarray::Axis(0), hi);
    let mut top = top;
    let rp = top.row_mut(lo);
    let rp = rp.into_slice().expect("row-major block");
    let mut bottom = bottom;
    let rq = bottom.row_mut(0);
    let rq = rq.into_slice().expect("row-major block");
    for (a, b) in rp.iter_mut().zip(rq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic two-sided Jacobi.
/// Returns signed eigenvalues in descending order with eigenvectors as the
/// corresponding columns. Dimension capped at [`JACOBI_CAP`].
pub fn jacobi_eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let (n, m) = a.dim();
    if n != m || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "symmetric eigensolver requires a nonempty square matrix, got {n}x{m}"
        )));
    }
    if n > JACOBI_CAP {
        return Err(Error::SizeCap(format!(
            "dense eigensolver capped at {JACOBI_CAP}, got {n}"
        )));
    }
    let asym = a
        .iter()
        .zip(a.t().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let scale = a.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(1.0);
    if asym > 1e-9 * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (max asymmetry {asym:.3e})"
        )));
    }

    let mut msub = a.clone();
    // Exact symmetrization so the invariant m[(p,q)] == m[(q,p)] holds bitwise.
    for p in 0..n {
        for q in p + 1..n {
            let avg = 0.5 * (msub[(p, q)] + msub[(q, p)]);
            msub[(p, q)] = avg;
            msub[(q, p)] = avg;
        }
    }
    let mut vecs = Array2::eye(n);
    let thresh = JACOBI_TOL * scale;

    let mut converged = n == 1;
    let mut worst = 0.0f64;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        worst = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let apq = msub[(p, q)];
                if apq.abs() <= thresh {
                    continue;
                }
                worst = worst.max(apq.abs());
                rotated = true;
                let app = msub[(p, p)];
                let aqq = msub[(q, q)];
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                msub[(p, p)] = app - t * apq;
                msub[(q, q)] = aqq + t * apq;
                msub[(p, q)] = 0.0;
                msub[(q, p)] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = msub[(i, p)];
                    let aiq = msub[(i, q)];
                    msub[(i, p)] = c * aip - s * aiq;
                    msub[(p, i)] = msub[(i, p)];
                    msub[(i, q)] = s * aip + c * aiq;
                    msub[(q, i)] = msub[(i, q)];
                }
                for i in 0..n {
                    let vip = vecs[(i, p)];
                    let viq = vecs[(i, q)];
                    vecs[(i, p)] = c * vip - s * viq;
                    vecs[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            sweeps: MAX_SWEEPS,
            worst_residual: worst,
            required: thresh,
            residuals: vec![],
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| msub[(i, i)]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (slot, &j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, slot)] = vecs[(i, j)];
        }
    }
    Ok((values, vectors))
}

/// Principal angles (radians, ascending) between the column spans of two
/// matrices over the same ambient space.
pub fn principal_angles(x1: &Array2<f64>, x2: &Array2<f64>) -> Result<Vec<f64>> {
    if x1.nrows() != x2.nrows() {
        return Err(Error::InvalidArgument(format!(
            "subspaces live in different ambient dimensions: {} vs {}",
            x1.nrows(),
            x2.nrows()
        )));
    }
    let q1 = orthonormal_columns(x1);
    let q2 = orthonormal_columns(x2);
    let m = q1.t().dot(&q2);
    let svd = jacobi_svd(&m)?;
    Ok(svd
        .sigma
        .iter()
        .map(|&s| s.min(1.0).acos())
        .collect())
}

/// Largest singular value of a dense matrix by alternating power iteration
/// on the Gram operator, from a seeded random start.
pub fn spectral_norm_dense(
    d: &Array2<f64>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let (_n, m) = d.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Array1<f64> = Array1::from_iter(
        (0..m).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)),
    );
    let xnorm = x.dot(&x).sqrt();
    if xnorm == 0.0 {
        return Ok(0.0);
    }
    x.mapv_inplace(|v| v / xnorm);

    let mut prev = 0.0f64;
    for _ in 0..max_iter {
        let y = d.dot(&x);
        let sigma = y.dot(&y).sqrt();
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let z = d.t().dot(&y);
        let znorm = z.dot(&z).sqrt();
        if znorm == 0.0 {
            return Ok(sigma);
        }
        x = z / znorm;
        if (sigma - prev).abs() <= tol * sigma.max(1.0) {
            return Ok(sigma);
        }
        prev = sigma;
    }
    Err(Error::NonConvergence {
        sweeps: max_iter,
        worst_residual: prev,
        required: tol,
        residuals: vec![],
    })
}
