//! Truncated SVD by block subspace iteration on `MᵀM` with Rayleigh-Ritz
//! extraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::matrix::{dot, norm2, Matrix};
use crate::scalar::Scalar;

pub const MAX_SWEEPS: usize = 10_000;

/// Residual target per triplet, relative to `max(1, σ₁)`; loosened for `f32`.
fn residual_tol<T: Scalar>() -> f64 {
    (T::epsilon().as_f64() * 1e3).max(1e-10)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvdError {
    #[error("requested {k} singular triplets from a {rows}x{cols} matrix")]
    InvalidRank { k: usize, rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("subspace iteration did not converge after {sweeps} sweeps (worst residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
}

/// One singular triplet: `M v = σ u`, `Mᵀ u = σ v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriplet<T> {
    pub u: Vec<T>,
    pub sigma: T,
    pub v: Vec<T>,
}

/// Leading `k` singular triplets of `m`, sorted by non-increasing σ.
///
/// Each `u` is sign-normalized so that its largest-magnitude entry is
/// positive (first such entry on exact ties). Deterministic for a given seed.
pub fn truncated_svd<T: Scalar>(
    m: &Matrix<T>,
    k: usize,
    seed: u64,
) -> Result<Vec<SvdTriplet<T>>, SvdError> {
    let (rows, cols) = m.shape();
    if k == 0 || k > rows.min(cols) {
        return Err(SvdError::InvalidRank { k, rows, cols });
    }
    if !m.is_finite() {
        return Err(SvdError::NonFinite);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = cols.min(k + k.max(5));
    let mut basis = Matrix::from_fn(cols, block, |_, _| T::lit(rng.gen::<f64>() - 0.5));
    orthonormalize_columns(&mut basis, &mut rng);

    let mut worst = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        if sweep > 0 {
            // One power step: basis <- MᵀM basis.
            let image = m.matmul(&basis);
            basis = m.t_matmul(&image);
            orthonormalize_columns(&mut basis, &mut rng);
        }

        // Rayleigh-Ritz on span(basis).
        let image = m.matmul(&basis);
        let gram = image.t_matmul(&image);
        let (values, vectors) = symmetric_eigen(&gram);
        basis = basis.matmul(&vectors);

        let triplets = extract_triplets(m, &basis, &values, k);
        let scale = triplets[0].sigma.as_f64().max(1.0);
        worst = triplets
            .iter()
            .map(|t| triplet_residual(m, t) / scale)
            .fold(0.0, f64::max);
        if worst <= residual_tol::<T>() {
            return Ok(triplets);
        }
    }
    Err(SvdError::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual: worst,
    })
}

/// `max(‖M v − σ u‖, ‖Mᵀ u − σ v‖)`.
pub fn triplet_residual<T: Scalar>(m: &Matrix<T>, t: &SvdTriplet<T>) -> f64 {
    let (rows, cols) = m.shape();
    let mut fwd = 0.0;
    for i in 0..rows {
        let r = dot(m.row(i), &t.v) - t.sigma * t.u[i];
        fwd += r.as_f64().powi(2);
    }
    let mut back = vec![T::zero(); cols];
    for i in 0..rows {
        let ui = t.u[i];
        for (b, &x) in back.iter_mut().zip(m.row(i)) {
            *b += x * ui;
        }
    }
    let bwd: f64 = back
        .iter()
        .zip(&t.v)
        .map(|(&b, &v)| (b - t.sigma * v).as_f64().powi(2))
        .sum();
    fwd.sqrt().max(bwd.sqrt())
}

fn extract_triplets<T: Scalar>(
    m: &Matrix<T>,
    basis: &Matrix<T>,
    values: &[T],
    k: usize,
) -> Vec<SvdTriplet<T>> {
    let sigma_max = values[0].max(T::zero()).sqrt();
    let null_floor = T::lit((T::epsilon().as_f64() * 100.0).max(1e-13)) * sigma_max.max(T::one());
    let mut out: Vec<SvdTriplet<T>> = Vec::with_capacity(k);
    for i in 0..k {
        let v = basis.col(i);
        let mv: Vec<T> = (0..m.rows()).map(|r| dot(m.row(r), &v)).collect();
        let sigma = norm2(&mv);
        let u = if sigma > null_floor {
            mv.iter().map(|&x| x / sigma).collect()
        } else {
            complement_vector(m.rows(), out.iter().map(|t| t.u.as_slice()), i)
        };
        let sigma = if sigma > null_floor { sigma } else { T::zero() };
        let mut t = SvdTriplet { u, sigma, v };
        sign_normalize(&mut t);
        out.push(t);
    }
    // Ritz values come out sorted; σ recomputed from ‖Mv‖ can differ in the
    // last bits, so enforce the ordering contract explicitly.
    out.sort_by(|a, b| b.sigma.partial_cmp(&a.sigma).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Unit vector orthogonal to `existing`, built deterministically from basis vectors.
fn complement_vector<'a, T: Scalar + 'a>(
    n: usize,
    existing: impl Iterator<Item = &'a [T]> + Clone,
    start: usize,
) -> Vec<T> {
    for offset in 0..n {
        let mut e = vec![T::zero(); n];
        e[(start + offset) % n] = T::one();
        for q in existing.clone() {
            let c = dot(&e, q);
            for (x, &y) in e.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
        let nrm = norm2(&e);
        if nrm > T::lit(1e-6) {
            return e.into_iter().map(|x| x / nrm).collect();
        }
    }
    let mut e = vec![T::zero(); n];
    e[0] = T::one();
    e
}

fn sign_normalize<T: Scalar>(t: &mut SvdTriplet<T>) {
    let mut best = 0;
    for (i, x) in t.u.iter().enumerate() {
        if x.abs() > t.u[best].abs() {
            best = i;
        }
    }
    if t.u[best] < T::zero() {
        t.u.iter_mut().for_each(|x| *x = -*x);
        t.v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Modified Gram-Schmidt, two passes. Columns that vanish are replaced by
/// fresh random directions.
pub(crate) fn orthonormalize_columns<T: Scalar>(m: &mut Matrix<T>, rng: &mut impl Rng) {
    let (n, b) = m.shape();
    let mut cols: Vec<Vec<T>> = (0..b).map(|j| m.col(j)).collect();
    for j in 0..b {
        let mut attempts = 0;
        loop {
            let original = norm2(&cols[j]);
            for _ in 0..2 {
                for p in 0..j {
                    let c = dot(&cols[j], &cols[p]);
                    let (head, tail) = cols.split_at_mut(j);
                    for (x, &y) in tail[0].iter_mut().zip(&head[p]) {
                        *x -= c * y;
                    }
                }
            }
            let nrm = norm2(&cols[j]);
            if nrm > T::lit(1e-10) * original.max(T::min_positive_value()) && nrm > T::zero() {
                cols[j].iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            attempts += 1;
            assert!(attempts < 64, "cannot complete orthonormal basis");
            cols[j] = (0..n).map(|_| T::lit(rng.gen::<f64>() - 0.5)).collect();
        }
    }
    for (j, c) in cols.iter().enumerate() {
        m.set_col(j, c);
    }
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix.
/// Returns eigenvalues in non-increasing order and eigenvectors as columns.
pub(crate) fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = a.rows();
    let mut a = a.clone();
    // Symmetrize away rounding noise from the Gram product.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)]) * T::lit(0.5);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let tiny = T::epsilon() * T::epsilon();
    for _ in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += a[(i, i)] * a[(i, i)];
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off <= tiny * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}
