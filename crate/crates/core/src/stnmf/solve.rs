use log::warn;

use super::init::{init_s, nndsvd_init, random_init};
use super::objective::{kkt_lambda, objective_adaptive, objective_reg, objective_residual, q_and_p};
use super::update::{step_adaptive_with, step_fixed_with, Structure};
use super::{FactorPair, Init, RelationInit, Scheme, SolveError, SolveResult, SolverConfig};
use crate::linalg::{frobenius_sq, neg_part, pos_part, Matrix};
use crate::scalar::Scalar;

/// Number of consecutive small relative changes that count as converged.
const STREAK: usize = 3;

/// Runs the configured scheme on a skew-symmetric `T`.
pub fn solve<T: Scalar>(t: &Matrix<T>, cfg: &SolverConfig) -> Result<SolveResult<T>, SolveError> {
    if t.is_square() && t.skewness_defect() != T::zero() {
        return Err(SolveError::BadStructure("skew-symmetric"));
    }
    solve_structured(Structure::Skew, t, cfg)
}

/// Same iteration for either structure. With `Structure::Symmetric`, `t` must
/// be symmetric and the returned `S` is symmetric rather than skew.
pub fn solve_structured<T: Scalar>(
    structure: Structure,
    t: &Matrix<T>,
    cfg: &SolverConfig,
) -> Result<SolveResult<T>, SolveError> {
    cfg.validate()?;
    let n = t.rows();
    let k = cfg.k;
    if !t.is_square() {
        return Err(SolveError::DimensionMismatch(format!("T is {:?}", t.shape())));
    }
    if !t.is_finite() {
        return Err(SolveError::BadStructure("finite"));
    }
    if structure == Structure::Symmetric && t.asymmetry() != T::zero() {
        return Err(SolveError::BadStructure("symmetric"));
    }
    if k > n {
        return Err(SolveError::InvalidConfig(format!("k={k} exceeds n={n}")));
    }

    let (u0, init_fallback) = match cfg.init {
        Init::Nndsvd => nndsvd_init(t, k, cfg.seed)?,
        Init::UniformRandom => (random_init(n, k, cfg.seed), false),
    };

    if t.max_abs() == T::zero() {
        let factors = FactorPair {
            u: u0,
            s: Matrix::zeros(k, k),
        };
        return Ok(SolveResult {
            factors,
            trajectory: vec![0.0],
            iters: 1,
            converged: true,
            degenerate: true,
            init_fallback,
            residual: 0.0,
        });
    }

    let s0 = match cfg.relation_init {
        RelationInit::Projected => {
            let s = u0.t_matmul(&t.matmul(&u0));
            match structure {
                // Exact structure: mirror the upper triangle.
                Structure::Skew => Matrix::from_fn(k, k, |i, j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => s[(i, j)],
                    std::cmp::Ordering::Greater => -s[(j, i)],
                    std::cmp::Ordering::Equal => T::zero(),
                }),
                Structure::Symmetric => Matrix::from_fn(k, k, |i, j| s[(i.min(j), i.max(j))]),
            }
        }
        RelationInit::Pattern => match structure {
            Structure::Skew => init_s(k)?,
            Structure::Symmetric => {
                Matrix::from_fn(k, k, |i, j| if i == j { T::zero() } else { T::one() })
            }
        },
    };

    let lambda = cfg.lambda::<T>();
    let objective = |f: &FactorPair<T>| -> Result<f64, SolveError> {
        Ok(match cfg.scheme {
            Scheme::Fixed => objective_reg(t, f, &lambda)?.as_f64(),
            Scheme::Adaptive => objective_adaptive(t, f)?.as_f64(),
        })
    };

    let scale = frobenius_sq(t).as_f64();
    let mut f = FactorPair { u: u0, s: s0 };
    let mut trajectory = vec![objective(&f)?];
    let mut streak = 0;
    let mut iters = 0;
    let mut converged = false;
    while iters < cfg.max_iters {
        f = match cfg.scheme {
            Scheme::Fixed => step_fixed_with(structure, t, &f, &lambda)?,
            Scheme::Adaptive => step_adaptive_with(structure, t, &f)?,
        };
        iters += 1;
        let value = objective(&f)?;
        let prev = *trajectory.last().unwrap();
        trajectory.push(value);
        if (value - prev).abs() < cfg.rel_tol * prev.abs().max(scale) {
            streak += 1;
            if streak >= STREAK {
                converged = true;
                break;
            }
        } else {
            streak = 0;
        }
    }

    if converged && cfg.scheme == Scheme::Adaptive {
        check_lambda_condition(t, &f);
    }
    let residual = objective_residual(t, &f)?.as_f64();
    Ok(SolveResult {
        factors: f,
        trajectory,
        iters,
        converged,
        degenerate: false,
        init_fallback,
        residual,
    })
}

/// Logs when `Λ + P₊ ≥ 0` fails at the final iterate.
fn check_lambda_condition<T: Scalar>(t: &Matrix<T>, f: &FactorPair<T>) {
    let Ok(lambda) = kkt_lambda(t, f) else { return };
    let (_, p) = q_and_p(t, f);
    let m = lambda.add(&pos_part(&p));
    let worst = neg_part(&m).max_abs();
    let tol = T::lit(1e-9) * m.max_abs().max(T::one());
    if worst > tol {
        warn!("Lambda + P+ has a negative entry ({}) at convergence", -worst);
    }
}
