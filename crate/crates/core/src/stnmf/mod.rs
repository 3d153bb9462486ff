//! Structured NMF `T ≈ U S Uᵀ` with non-negative `U` and skew-symmetric `S`.

mod harden;
mod init;
pub mod objective;
mod solve;
mod update;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, SvdError};
use crate::scalar::Scalar;

pub use harden::{
    discrete_errors, discrete_residuals, harden, indicator_matrix, relation_matrix, result_json,
    HardenOptions, Relation, SummaryError, Summarization,
};
pub use init::{init_s, nndsvd_init, random_init};
pub use objective::{kkt_lambda, objective_adaptive, objective_reg, objective_residual, reconstruct};
pub use solve::{solve, solve_structured};
pub use update::{normalize_columns, step_adaptive, step_fixed, Structure};

/// Denominator floor of every multiplicative update.
pub const DENOM_FLOOR: f64 = 1e-12;

/// Assignment factor `U` (n×k, non-negative) and relation factor `S` (k×k).
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair<T> {
    pub u: Matrix<T>,
    pub s: Matrix<T>,
}

impl<T: Scalar> FactorPair<T> {
    /// Checks `U ≥ 0`, finiteness, shapes, and exact skew-symmetry of `S`.
    pub fn new(u: Matrix<T>, s: Matrix<T>) -> Result<Self, SolveError> {
        let k = u.cols();
        if s.shape() != (k, k) {
            return Err(SolveError::DimensionMismatch(format!(
                "U is {:?} but S is {:?}",
                u.shape(),
                s.shape()
            )));
        }
        if !u.is_finite() || !s.is_finite() {
            return Err(SolveError::InvalidFactors("non-finite entry".into()));
        }
        if u.min_value() < T::zero() {
            return Err(SolveError::InvalidFactors("U has a negative entry".into()));
        }
        if s.skewness_defect() != T::zero() {
            return Err(SolveError::InvalidFactors("S is not skew-symmetric".into()));
        }
        Ok(Self { u, s })
    }

    pub fn k(&self) -> usize {
        self.u.cols()
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Fixed,
    Adaptive,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Fixed => "fixed",
            Scheme::Adaptive => "adaptive",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixed" => Ok(Scheme::Fixed),
            "adaptive" => Ok(Scheme::Adaptive),
            other => Err(format!("unknown scheme {other:?} (expected fixed or adaptive)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Nndsvd,
    UniformRandom,
}

/// How `S0` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationInit {
    /// `S0 = U0ᵀ T U0`.
    Projected,
    /// `+1` above the diagonal, `−1` below (`init_s`).
    Pattern,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub k: usize,
    pub scheme: Scheme,
    /// Fixed scheme only: `Λ = lambda_scale · 1 1ᵀ`.
    pub lambda_scale: f64,
    /// Overrides `lambda_scale` with a full symmetric non-negative `Λ`.
    pub lambda_matrix: Option<Vec<Vec<f64>>>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub init: Init,
    pub relation_init: RelationInit,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 2,
            scheme: Scheme::Adaptive,
            lambda_scale: 1.0,
            lambda_matrix: None,
            max_iters: 2000,
            rel_tol: 1e-8,
            seed: 0,
            init: Init::Nndsvd,
            relation_init: RelationInit::Projected,
        }
    }
}

impl SolverConfig {
    pub fn new(k: usize, scheme: Scheme) -> Self {
        Self {
            k,
            scheme,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::InvalidConfig(msg));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.lambda_scale >= 0.0 && self.lambda_scale.is_finite()) {
            return bad(format!("lambda_scale must be non-negative, got {}", self.lambda_scale));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if let Some(rows) = &self.lambda_matrix {
            if rows.len() != self.k || rows.iter().any(|r| r.len() != self.k) {
                return bad(format!("lambda_matrix must be {0}x{0}", self.k));
            }
            for i in 0..self.k {
                for j in 0..self.k {
                    let x = rows[i][j];
                    if !(x >= 0.0 && x.is_finite()) || x != rows[j][i] {
                        return bad("lambda_matrix must be symmetric and non-negative".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// `Λ` for the fixed scheme.
    pub fn lambda<T: Scalar>(&self) -> Matrix<T> {
        match &self.lambda_matrix {
            Some(rows) => Matrix::from_fn(self.k, self.k, |i, j| T::lit(rows[i][j])),
            None => Matrix::filled(self.k, self.k, T::lit(self.lambda_scale)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    pub factors: FactorPair<T>,
    /// Objective before the first step followed by one value per step:
    /// `L6` for the fixed scheme, the adaptive objective otherwise.
    pub trajectory: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    /// Input was the zero matrix.
    pub degenerate: bool,
    /// The initializer had to fill columns at random.
    pub init_fallback: bool,
    /// Final `‖T − U S Uᵀ‖²_F`.
    pub residual: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid factors: {0}")]
    InvalidFactors(String),
    #[error("input matrix is not {0}")]
    BadStructure(&'static str),
    #[error("non-finite value in {factor}[{row},{col}]")]
    NonFinite {
        factor: &'static str,
        row: usize,
        col: usize,
    },
    #[error("column {column} of U collapsed to zero")]
    DegenerateCollapse { column: usize },
    #[error(transparent)]
    Svd(#[from] SvdError),
}
