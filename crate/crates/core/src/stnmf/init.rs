use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolveError;
use crate::linalg::{dot, norm2, pos_part, truncated_svd, Matrix};
use crate::scalar::Scalar;

/// Candidates more aligned than this with an accepted column are skipped.
const MAX_COSINE: f64 = 0.9;
/// Singular values below this fraction of σ₁ count as zero.
const RANK_TOL: f64 = 1e-12;
/// Entries below this fraction of a candidate's maximum are zeroed.
const SUPPORT_TOL: f64 = 1e-9;

/// Non-negative SVD initializer.
///
/// Works on the forward part `A = T₊`. Every sign part of every leading
/// singular vector pair is a candidate column, scored by `σ ‖part‖²`; the best
/// candidates that are not nearly parallel to one already taken become the
/// columns of `U0`. Returns `(U0, fallback)` where `fallback` is set when
/// fewer than `k` candidates existed and the rest were filled at random.
pub fn nndsvd_init<T: Scalar>(
    t: &Matrix<T>,
    k: usize,
    seed: u64,
) -> Result<(Matrix<T>, bool), SolveError> {
    let n = t.rows();
    if !t.is_square() {
        return Err(SolveError::DimensionMismatch(format!("T is {:?}", t.shape())));
    }
    if k == 0 || k > n {
        return Err(SolveError::InvalidConfig(format!("k={k} must be in 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(k);

    if t.max_abs() > T::zero() {
        let a = pos_part(t);
        let r = n.min(2 * k);
        let triplets = truncated_svd(&a, r, seed)?;
        let sigma1 = triplets[0].sigma;

        let mut cands: Vec<(T, usize, Vec<T>)> = Vec::new();
        for (idx, tr) in triplets.iter().enumerate() {
            if tr.sigma <= T::lit(RANK_TOL) * sigma1 {
                break;
            }
            for base in [&tr.u, &tr.v] {
                for sign in [T::one(), -T::one()] {
                    if let Some((norm, part)) = sign_part(base, sign) {
                        cands.push((tr.sigma * norm * norm, idx, part));
                    }
                }
            }
        }
        // Stable sort keeps the triplet order on equal scores.
        cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

        for (_, _, c) in cands {
            if cols.len() == k {
                break;
            }
            if cols.iter().all(|d| dot(&c, d) <= T::lit(MAX_COSINE)) {
                cols.push(c);
            }
        }
    }

    let fallback = cols.len() < k;
    while cols.len() < k {
        cols.push(random_unit(n, &mut rng));
    }
    let mut u = Matrix::zeros(n, k);
    for (j, c) in cols.iter().enumerate() {
        u.set_col(j, c);
    }
    Ok((u, fallback))
}

/// Thresholded positive part of `sign · x`, scaled to unit norm.
fn sign_part<T: Scalar>(x: &[T], sign: T) -> Option<(T, Vec<T>)> {
    let mut p: Vec<T> = x.iter().map(|&v| (sign * v).max(T::zero())).collect();
    let peak = p.iter().fold(T::zero(), |m, &v| m.max(v));
    if peak <= T::zero() {
        return None;
    }
    let cut = T::lit(SUPPORT_TOL) * peak;
    for v in p.iter_mut() {
        if *v < cut {
            *v = T::zero();
        }
    }
    let norm = norm2(&p);
    for v in p.iter_mut() {
        *v /= norm;
    }
    Some((norm, p))
}

fn random_unit<T: Scalar>(n: usize, rng: &mut impl Rng) -> Vec<T> {
    // Strictly positive entries so no coordinate starts zero-locked.
    let mut c: Vec<T> = (0..n).map(|_| T::lit(1.0 - rng.gen::<f64>())).collect();
    let norm = norm2(&c);
    for v in c.iter_mut() {
        *v /= norm;
    }
    c
}

/// `U0` with uniform positive entries and unit columns.
pub fn random_init<T: Scalar>(n: usize, k: usize, seed: u64) -> Matrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Matrix::zeros(n, k);
    for j in 0..k {
        let c = random_unit(n, &mut rng);
        u.set_col(j, &c);
    }
    u
}

/// `S0` with `+1` above the diagonal and `−1` below, so no relation starts
/// zero-locked.
pub fn init_s<T: Scalar>(k: usize) -> Result<Matrix<T>, SolveError> {
    if k < 2 {
        return Err(SolveError::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    Ok(Matrix::from_fn(k, k, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => T::one(),
        std::cmp::Ordering::Greater => -T::one(),
        std::cmp::Ordering::Equal => T::zero(),
    }))
}
