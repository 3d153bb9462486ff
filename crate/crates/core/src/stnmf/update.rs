use super::objective::q_and_p;
use super::{FactorPair, SolveError, DENOM_FLOOR};
use crate::linalg::{neg_part, pos_part, Matrix};
use crate::scalar::Scalar;

/// Symmetry class of the relation factor. `Skew` is the directed model;
/// `Symmetric` runs the same updates on an undirected skeleton.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Skew,
    Symmetric,
}

/// One step of the constant-`Λ` scheme: multiplicative `U` update, then the
/// multiplicative `S` update using the new `U`.
pub fn step_fixed<T: Scalar>(
    t: &Matrix<T>,
    f: &FactorPair<T>,
    lambda: &Matrix<T>,
) -> Result<FactorPair<T>, SolveError> {
    step_fixed_with(Structure::Skew, t, f, lambda)
}

/// One step of the adaptive scheme: `U` update, column normalization, then
/// `S = UᵀTU`.
pub fn step_adaptive<T: Scalar>(t: &Matrix<T>, f: &FactorPair<T>) -> Result<FactorPair<T>, SolveError> {
    step_adaptive_with(Structure::Skew, t, f)
}

pub(crate) fn step_fixed_with<T: Scalar>(
    structure: Structure,
    t: &Matrix<T>,
    f: &FactorPair<T>,
    lambda: &Matrix<T>,
) -> Result<FactorPair<T>, SolveError> {
    let (q, p) = q_and_p(t, f);
    let num = pos_part(&q).add(&f.u.matmul(&neg_part(&p)));
    let den = neg_part(&q).add(&f.u.matmul(&pos_part(&p).add(lambda)));
    let u = multiplicative(&f.u, &num, &den);
    check_finite("U", &u)?;

    let g = u.t_matmul(&u);
    let s_num = u.t_matmul(&t.matmul(&u));
    let s_den = g.matmul(&f.s).matmul(&g);
    let eps = T::lit(DENOM_FLOOR);
    let s = mirrored(structure, f.k(), |i, j| {
        let d = s_den[(i, j)];
        let d = if d < T::zero() { -(-d).max(eps) } else { d.max(eps) };
        f.s[(i, j)] * (s_num[(i, j)] / d)
    });
    check_finite("S", &s)?;
    Ok(FactorPair { u, s })
}

pub(crate) fn step_adaptive_with<T: Scalar>(
    structure: Structure,
    t: &Matrix<T>,
    f: &FactorPair<T>,
) -> Result<FactorPair<T>, SolveError> {
    let (q, p) = q_and_p(t, f);
    let qp = pos_part(&q);
    let up_n = f.u.matmul(&neg_part(&p));
    let num = qp.add(&up_n);
    let den = f.u.matmul(&f.u.t_matmul(&qp)).add(&up_n);
    let u = multiplicative(&f.u, &num, &den);
    check_finite("U", &u)?;
    let u = normalize_columns(&u)?;

    let tu = t.matmul(&u);
    let s = mirrored(structure, f.k(), |i, j| {
        (0..u.rows()).map(|r| u[(r, i)] * tu[(r, j)]).sum()
    });
    check_finite("S", &s)?;
    Ok(FactorPair { u, s })
}

/// Divides every column by its Euclidean norm.
pub fn normalize_columns<T: Scalar>(u: &Matrix<T>) -> Result<Matrix<T>, SolveError> {
    let norms = u.col_norms();
    if let Some(column) = norms.iter().position(|&x| x <= T::zero()) {
        return Err(SolveError::DegenerateCollapse { column });
    }
    Ok(Matrix::from_fn(u.rows(), u.cols(), |i, j| u[(i, j)] / norms[j]))
}

/// `X ⊙ num / max(den, ε)`.
fn multiplicative<T: Scalar>(x: &Matrix<T>, num: &Matrix<T>, den: &Matrix<T>) -> Matrix<T> {
    let eps = T::lit(DENOM_FLOOR);
    Matrix::from_fn(x.rows(), x.cols(), |i, j| {
        x[(i, j)] * (num[(i, j)] / den[(i, j)].max(eps))
    })
}

/// Builds a k×k matrix from its upper triangle so the structure is exact.
fn mirrored<T: Scalar>(structure: Structure, k: usize, mut entry: impl FnMut(usize, usize) -> T) -> Matrix<T> {
    let mut s = Matrix::zeros(k, k);
    for i in 0..k {
        if structure == Structure::Symmetric {
            s[(i, i)] = entry(i, i);
        }
        for j in i + 1..k {
            let x = entry(i, j);
            s[(i, j)] = x;
            s[(j, i)] = match structure {
                Structure::Skew => -x,
                Structure::Symmetric => x,
            };
        }
    }
    s
}

fn check_finite<T: Scalar>(factor: &'static str, m: &Matrix<T>) -> Result<(), SolveError> {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !m[(i, j)].is_finite() {
                return Err(SolveError::NonFinite { factor, row: i, col: j });
            }
        }
    }
    Ok(())
}
