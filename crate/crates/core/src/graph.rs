//! Simple weighted directed graphs, their adjacency matrices, and the
//! whitespace edge-list format.
//!
//! Format: one edge per line, `src dst [weight]` (weight defaults to 1.0).
//! Lines starting with `#` are comments, except a `# n=<int>` header which
//! fixes the vertex count.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: duplicate edge between {a} and {b}")]
    DuplicatePair { line: usize, a: usize, b: usize },
    #[error("line {line}: weight {weight} must be positive and finite")]
    BadWeight { line: usize, weight: f64 },
    #[error("vertex {vertex} out of range for n={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// A simple directed graph: no self-loops, at most one edge per unordered
/// vertex pair, positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl DirectedGraph {
    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Validates every invariant. Edge line numbers in errors are 1-based
    /// positions in `edges`.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut seen = HashSet::with_capacity(edges.len());
        for (idx, e) in edges.iter().enumerate() {
            let line = idx + 1;
            check_edge(e, line, &mut seen)?;
            for v in [e.src, e.dst] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: v, n });
                }
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// `A_ij` = weight of edge i→j, zero otherwise.
    pub fn to_asymmetric<T: Scalar>(&self) -> Matrix<T> {
        let mut a = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.src, e.dst)] = T::lit(e.weight);
        }
        a
    }

    /// `T = A − Aᵀ`: `T_ij = w`, `T_ji = −w` for each edge i→j.
    pub fn to_skew<T: Scalar>(&self) -> Matrix<T> {
        let mut t = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            let w = T::lit(e.weight);
            t[(e.src, e.dst)] = w;
            t[(e.dst, e.src)] = -w;
        }
        t
    }

    /// Undirected skeleton `W = |T|`.
    pub fn symmetrize<T: Scalar>(&self) -> Matrix<T> {
        let mut w = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            let x = T::lit(e.weight);
            w[(e.src, e.dst)] = x;
            w[(e.dst, e.src)] = x;
        }
        w
    }

    /// Edges sorted by `(src, dst)`.
    pub fn canonical_edges(&self) -> Vec<Edge> {
        let mut edges = self.edges.clone();
        edges.sort_by_key(|e| (e.src, e.dst));
        edges
    }

    /// Canonical text form. Always writes the `# n=` header so isolated
    /// trailing vertices survive a round trip.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# n={}", self.n).unwrap();
        for e in self.canonical_edges() {
            // `{}` on f64 prints the shortest string that round-trips.
            writeln!(out, "{} {} {}", e.src, e.dst, e.weight).unwrap();
        }
        out
    }
}

fn check_edge(e: &Edge, line: usize, seen: &mut HashSet<(usize, usize)>) -> Result<(), GraphError> {
    if e.src == e.dst {
        return Err(GraphError::SelfLoop { line, vertex: e.src });
    }
    if !(e.weight.is_finite() && e.weight > 0.0) {
        return Err(GraphError::BadWeight { line, weight: e.weight });
    }
    let key = (e.src.min(e.dst), e.src.max(e.dst));
    if !seen.insert(key) {
        return Err(GraphError::DuplicatePair { line, a: key.0, b: key.1 });
    }
    Ok(())
}

/// Parses the edge-list format from any buffered reader.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<DirectedGraph, GraphError> {
    let mut header_n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut max_id: Option<usize> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("n=") {
                let n = value.trim().parse::<usize>().map_err(|_| GraphError::Malformed {
                    line: line_no,
                    msg: format!("bad vertex-count header {trimmed:?}"),
                })?;
                header_n = Some(n);
            }
            continue;
        }

        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(GraphError::Malformed {
                line: line_no,
                msg: format!("expected `src dst [weight]`, got {} fields", fields.len()),
            });
        }
        let parse_id = |s: &str| {
            s.parse::<usize>().map_err(|_| GraphError::Malformed {
                line: line_no,
                msg: format!("bad vertex id {s:?}"),
            })
        };
        let src = parse_id(fields[0])?;
        let dst = parse_id(fields[1])?;
        let weight = match fields.get(2) {
            Some(w) => w.parse::<f64>().map_err(|_| GraphError::Malformed {
                line: line_no,
                msg: format!("bad weight {w:?}"),
            })?,
            None => 1.0,
        };
        let edge = Edge { src, dst, weight };
        check_edge(&edge, line_no, &mut seen)?;
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        edges.push(edge);
    }

    let implied = max_id.map_or(0, |m| m + 1);
    let n = match header_n {
        Some(n) if n < implied => {
            return Err(GraphError::VertexOutOfRange { vertex: implied - 1, n })
        }
        Some(n) => n,
        None => implied,
    };
    Ok(DirectedGraph { n, edges })
}

pub fn parse_edge_list(text: &str) -> Result<DirectedGraph, GraphError> {
    load_edge_list(text.as_bytes())
}
