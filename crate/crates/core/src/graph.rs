//! Leader-rooted directed communication graphs, the induced coupling matrix,
//! and the positive diagonal gain certifying its diagonal stability.
//!
//! Node 0 is the exosystem (leader); agents are nodes 1..=N. A positive
//! weight `a_ij` means agent `i` receives information from node `j`.

use crate::numerics::{solve_linear, symmetric_eigen_range, Mat};
use thiserror::Error;

/// Tolerance for positive semidefiniteness verdicts on dense
/// double-precision eigensolves.
pub const TOL_PSD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph has no spanning tree rooted at the exosystem node")]
    NotSpanningTree,
    #[error("gain construction failed: base slack eigenvalue {lambda:.3e} is not positive")]
    ConstructionFailed { lambda: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Weighted adjacency over the exosystem plus N agents.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    weights: Mat,
}

impl DirectedGraph {
    /// Validates the adjacency invariants: square with at least one agent,
    /// zero diagonal, nonnegative weights, and an all-zero leader row (the
    /// exosystem receives from no one).
    pub fn new(weights: Mat) -> Result<DirectedGraph, GraphError> {
        let n = weights.rows();
        if weights.cols() != n {
            return Err(GraphError::DimensionMismatch(format!(
                "adjacency must be square, got {}x{}",
                weights.rows(),
                weights.cols()
            )));
        }
        if n < 1 {
            return Err(GraphError::DimensionMismatch(
                "graph needs at least the exosystem node".into(),
            ));
        }
        for j in 0..n {
            if weights.at(0, j) != 0.0 {
                return Err(GraphError::DimensionMismatch(
                    "leader row must be zero; the exosystem has no incoming edges".into(),
                ));
            }
        }
        for i in 0..n {
            if weights.at(i, i) != 0.0 {
                return Err(GraphError::DimensionMismatch(format!(
                    "self-weight at node {i} must be zero"
                )));
            }
            for j in 0..n {
                let w = weights.at(i, j);
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(GraphError::DimensionMismatch(format!(
                        "weight ({i},{j}) = {w} must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(DirectedGraph { weights })
    }

    /// Builds from `(from, to, weight)` edges over nodes `0..node_count`,
    /// where `from → to` means `to` receives from `from`.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<DirectedGraph, GraphError> {
        let mut w = Mat::zeros(node_count, node_count);
        for (idx, &(from, to, weight)) in edges.iter().enumerate() {
            if from >= node_count || to >= node_count {
                return Err(GraphError::DimensionMismatch(format!(
                    "edge {idx} references node outside 0..{node_count}"
                )));
            }
            w.set(to, from, w.at(to, from) + weight);
        }
        DirectedGraph::new(w)
    }

    /// Total node count N+1 (exosystem included).
    pub fn node_count(&self) -> usize {
        self.weights.rows()
    }

    pub fn agent_count(&self) -> usize {
        self.weights.rows() - 1
    }

    /// Weight with which node `i` listens to node `j`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.at(i, j)
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }
}

/// The N×N matrix with `h_ii = Σ_j a_ij + a_i0` and `h_ij = −a_ij` off the
/// diagonal; nonsingular M-matrix exactly when the graph is leader-rooted.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    h: Mat,
}

impl CouplingMatrix {
    pub fn matrix(&self) -> &Mat {
        &self.h
    }

    pub fn agent_count(&self) -> usize {
        self.h.rows()
    }
}

/// Assembles the coupling matrix from the adjacency; total on valid graphs.
pub fn build_h_matrix(graph: &DirectedGraph) -> CouplingMatrix {
    let n = graph.agent_count();
    let h = Mat::from_fn(n, n, |i, j| {
        let (ni, nj) = (i + 1, j + 1);
        if i == j {
            (0..graph.node_count()).map(|l| graph.weight(ni, l)).sum()
        } else {
            -graph.weight(ni, nj)
        }
    });
    CouplingMatrix { h }
}

/// True iff every agent is reachable from the exosystem node along directed
/// information flow (breadth-first search over positive weights).
pub fn has_spanning_tree_from_root(graph: &DirectedGraph) -> bool {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(j) = queue.pop_front() {
        for i in 1..n {
            if !seen[i] && graph.weight(i, j) > 0.0 {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Positive diagonal gain `K` together with the certified minimum eigenvalue
/// of `HᵀK + KH − 2I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrixK {
    k: Vec<f64>,
    lambda_min_slack: f64,
}

impl GainMatrixK {
    /// Wraps a user-supplied diagonal, verifying positivity and computing the
    /// slack certificate; callers accept it when [`GainMatrixK::is_certified`]
    /// holds.
    pub fn from_diagonal(h: &CouplingMatrix, k: Vec<f64>) -> Result<GainMatrixK, GraphError> {
        if k.iter().any(|&v| !(v > 0.0)) {
            return Err(GraphError::DimensionMismatch(
                "gain diagonal entries must be positive".into(),
            ));
        }
        let slack = verify_k_condition(h, &k)?;
        Ok(GainMatrixK { k, lambda_min_slack: slack })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.k
    }

    /// `k_M`, the largest diagonal gain.
    pub fn k_max(&self) -> f64 {
        self.k.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lambda_min_slack(&self) -> f64 {
        self.lambda_min_slack
    }

    pub fn is_certified(&self) -> bool {
        self.lambda_min_slack >= -TOL_PSD
    }
}

/// Constructs a certified gain: solve `Hp = 1` and `Hᵀq = 1` (elementwise
/// positive for a leader-rooted graph), set `K₀ = diag(q_i/p_i)`, then rescale
/// by `2/λ_m(HᵀK₀ + K₀H)` so the slack against `2I` is nonnegative.
pub fn compute_gain_matrix_k(h: &CouplingMatrix) -> Result<GainMatrixK, GraphError> {
    let n = h.agent_count();
    if n == 0 {
        // Agentless network: nothing to couple, certificate is vacuous.
        return Ok(GainMatrixK { k: Vec::new(), lambda_min_slack: 0.0 });
    }
    let ones = vec![1.0; n];
    let p = solve_linear(h.matrix(), &ones).map_err(|_| GraphError::NotSpanningTree)?;
    let q = solve_linear(&h.matrix().transpose(), &ones)
        .map_err(|_| GraphError::NotSpanningTree)?;
    if p.iter().any(|&v| v <= 0.0) || q.iter().any(|&v| v <= 0.0) {
        return Err(GraphError::NotSpanningTree);
    }
    let k0: Vec<f64> = q.iter().zip(&p).map(|(qi, pi)| qi / pi).collect();
    let base = symmetric_slack(h.matrix(), &k0, 0.0);
    let (lambda0, _) = symmetric_eigen_range(&base, 1e-13 * (1.0 + base.frobenius_norm()))
        .expect("slack matrix is square");
    if lambda0 <= TOL_PSD {
        return Err(GraphError::ConstructionFailed { lambda: lambda0 });
    }
    let k: Vec<f64> = k0.iter().map(|v| 2.0 / lambda0 * v).collect();
    let slack = verify_k_condition(h, &k)?;
    Ok(GainMatrixK { k, lambda_min_slack: slack })
}

/// Minimum eigenvalue of `HᵀK + KH − 2I` for a positive diagonal `k`.
pub fn verify_k_condition(h: &CouplingMatrix, k: &[f64]) -> Result<f64, GraphError> {
    let n = h.agent_count();
    if k.len() != n {
        return Err(GraphError::DimensionMismatch(format!(
            "gain diagonal has {} entries, expected {}",
            k.len(),
            n
        )));
    }
    let slack = symmetric_slack(h.matrix(), k, 2.0);
    let (lo, _) = symmetric_eigen_range(&slack, 1e-13 * (1.0 + slack.frobenius_norm()))
        .expect("slack matrix is square");
    Ok(lo)
}

/// `HᵀK + KH − shift·I` for diagonal `k`.
fn symmetric_slack(h: &Mat, k: &[f64], shift: f64) -> Mat {
    let n = h.rows();
    Mat::from_fn(n, n, |i, j| {
        // (HᵀK)_ij = h_ji k_j ; (KH)_ij = k_i h_ij
        let v = h.at(j, i) * k[j] + k[i] * h.at(i, j);
        if i == j {
            v - shift
        } else {
            v
        }
    })
}
