use super::{FactorPair, SolveError};
use crate::linalg::{frobenius_sq, neg_part, pos_part, Matrix};
use crate::scalar::Scalar;

fn check_dims<T: Scalar>(t: &Matrix<T>, f: &FactorPair<T>) -> Result<(), SolveError> {
    let n = t.rows();
    let (un, k) = f.u.shape();
    if !t.is_square() || un != n || f.s.shape() != (k, k) {
        return Err(SolveError::DimensionMismatch(format!(
            "T is {:?}, U is {:?}, S is {:?}",
            t.shape(),
            f.u.shape(),
            f.s.shape()
        )));
    }
    Ok(())
}

/// `U S Uᵀ`.
pub fn reconstruct<T: Scalar>(f: &FactorPair<T>) -> Matrix<T> {
    f.u.matmul(&f.s).matmul_t(&f.u)
}

/// `‖T − U S Uᵀ‖²_F`.
pub fn objective_residual<T: Scalar>(t: &Matrix<T>, f: &FactorPair<T>) -> Result<T, SolveError> {
    check_dims(t, f)?;
    Ok(frobenius_sq(&t.sub(&reconstruct(f))))
}

/// `‖T − U S Uᵀ‖²_F + tr(Λ(UᵀU − I))`.
pub fn objective_reg<T: Scalar>(
    t: &Matrix<T>,
    f: &FactorPair<T>,
    lambda: &Matrix<T>,
) -> Result<T, SolveError> {
    check_dims(t, f)?;
    let k = f.k();
    if lambda.shape() != (k, k) {
        return Err(SolveError::DimensionMismatch(format!(
            "Lambda is {:?}, expected {k}x{k}",
            lambda.shape()
        )));
    }
    let gram = f.u.t_matmul(&f.u).sub(&Matrix::identity(k));
    let penalty = lambda.matmul(&gram).trace();
    Ok(frobenius_sq(&t.sub(&reconstruct(f))) + penalty)
}

/// `Q = T U Sᵀ` and `P = Sᵀ UᵀU S`, the two products every update is built from.
pub(crate) fn q_and_p<T: Scalar>(t: &Matrix<T>, f: &FactorPair<T>) -> (Matrix<T>, Matrix<T>) {
    let q = t.matmul(&f.u).matmul_t(&f.s);
    let us = f.u.matmul(&f.s);
    let p = us.t_matmul(&us);
    (q, p)
}

/// KKT-derived regularizer `Λ = UᵀQ − P = UᵀQ₊ + P₋ − UᵀQ₋ − P₊`.
pub fn kkt_lambda<T: Scalar>(t: &Matrix<T>, f: &FactorPair<T>) -> Result<Matrix<T>, SolveError> {
    check_dims(t, f)?;
    let (q, p) = q_and_p(t, f);
    Ok(f.u.t_matmul(&q).sub(&p))
}

/// Objective of the adaptive scheme once `Λ = UᵀQ − P` is substituted,
/// evaluated term by term as
/// `tr(−2UᵀQ₊ − UᵀU P₋ + UᵀU(UᵀQ₊ + P₋ − UᵀQ₋) + 2UᵀQ₋)`.
///
/// The constant `‖T‖²_F` is not included.
pub fn objective_adaptive<T: Scalar>(t: &Matrix<T>, f: &FactorPair<T>) -> Result<T, SolveError> {
    check_dims(t, f)?;
    let (q, p) = q_and_p(t, f);
    let (qp, qn) = (pos_part(&q), neg_part(&q));
    let pn = neg_part(&p);
    let utu = f.u.t_matmul(&f.u);
    let ut_qp = f.u.t_matmul(&qp);
    let ut_qn = f.u.t_matmul(&qn);
    let two = T::lit(2.0);

    let inner = ut_qp.add(&pn).sub(&ut_qn);
    let value = -two * ut_qp.trace() - utu.matmul(&pn).trace()
        + utu.matmul(&inner).trace()
        + two * ut_qn.trace();
    Ok(value)
}
