//! Directed graph summarization by structured non-negative matrix
//! factorization `T ≈ U S Uᵀ`, with synthetic benchmarks and baselines.

pub mod baselines;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod stnmf;
pub mod synthetic;

pub use graph::{load_edge_list, parse_edge_list, DirectedGraph, Edge, GraphError};
pub use linalg::Matrix;
pub use scalar::Scalar;
pub use stnmf::{
    harden, solve, FactorPair, HardenOptions, Init, RelationInit, Scheme, SolveError, SolveResult,
    SolverConfig, Summarization,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type FactorPair64 = FactorPair<f64>;
pub type FactorPair32 = FactorPair<f32>;
pub type SolveResult64 = SolveResult<f64>;
pub type SolveResult32 = SolveResult<f32>;
