//! Undirected connected graphs and their averaging matrices.
//!
//! An averaging matrix `W` associated with a graph is non-negative, symmetric,
//! stochastic, and has `w_ij > 0` off the diagonal exactly on the edge set.
//! The mixing quantity `β = max{|λ₂(W)|, |λ_n(W)|}` lies in `(0,1)` for every
//! connected graph on `n ≥ 2` nodes and controls all consensus-error bounds.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::symmetric_eigen_desc;

/// Tolerance on row sums of an averaging matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance under which an eigenvalue counts as zero / non-positive.
pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("graph needs at least one node")]
    EmptyGraph,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge endpoint {endpoint} out of range for {n} nodes")]
    EndpointOutOfRange { endpoint: usize, n: usize },
    #[error("graph is not connected")]
    NotConnected,
    #[error("symmetric eigensolver failed to converge")]
    EigenFailure,
    #[error("matrix is not an averaging matrix: {0}")]
    NotAveraging(String),
    #[error("averaging matrix is not positive definite (lambda_min = {lambda_min:.6e})")]
    NotPositiveDefinite { lambda_min: f64 },
}

/// Undirected connected graph with symmetric neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list and verifies connectivity by
    /// breadth-first traversal (exact, no tolerance).
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::EmptyGraph);
        }
        let mut seen = std::collections::HashSet::new();
        let mut canon = Vec::with_capacity(edges.len());
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            for &e in &[a, b] {
                if e >= n {
                    return Err(TopologyError::EndpointOutOfRange { endpoint: e, n });
                }
            }
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            let (i, j) = (a.min(b), a.max(b));
            if !seen.insert((i, j)) {
                return Err(TopologyError::DuplicateEdge(i, j));
            }
            canon.push((i, j));
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        canon.sort_unstable();
        for list in &mut neighbors {
            list.sort_unstable();
        }

        // BFS from node 0
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        visited[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &neighbors[u] {
                if !visited[v] {
                    visited[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        if count != n {
            return Err(TopologyError::NotConnected);
        }
        Ok(Self {
            n,
            edges: canon,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (i, j) = (a.min(b), a.max(b));
        self.edges.binary_search(&(i, j)).is_ok()
    }

    /// Cycle 0–1–…–(n−1)–0. For `n = 2` this is the single-edge path.
    pub fn ring(n: usize) -> Result<Self, TopologyError> {
        if n < 2 {
            return Graph::new(n, &[]);
        }
        let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Graph::new(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self, TopologyError> {
        let edges: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Graph::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, TopologyError> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::new(n, &edges)
    }

    /// Erdős–Rényi G(n, p) sample. Fails with `NotConnected` when the draw is
    /// disconnected; callers wanting guaranteed connectivity should use
    /// [`Graph::random_connected`].
    pub fn random_gnp(n: usize, p: f64, seed: u64) -> Result<Self, TopologyError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(n, &edges)
    }

    /// Random connected graph: a random spanning tree (random attachment)
    /// plus independent extra edges with probability `p_extra`.
    pub fn random_connected(n: usize, p_extra: f64, seed: u64) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::EmptyGraph);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            edges.push((u, v));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !edges.contains(&(i, j)) && rng.random::<f64>() < p_extra {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(n, &edges)
    }
}

/// Averaging matrix together with its spectral summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    matrix: DMatrix<f64>,
    beta: f64,
    lambda_min: f64,
}

impl Weights {
    /// Metropolis weights: `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges,
    /// diagonal absorbs the remainder. Needs only local degrees.
    pub fn metropolis(g: &Graph) -> Result<Self, TopologyError> {
        let n = g.node_count();
        let mut w = DMatrix::zeros(n, n);
        for &(i, j) in g.edges() {
            let v = 1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        for i in 0..n {
            let off: f64 = g.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
            w[(i, i)] = 1.0 - off;
        }
        Self::from_matrix(w, g)
    }

    /// Lazy Laplacian weights: `W = I − L / (2 · deg_max)`.
    pub fn lazy_laplacian(g: &Graph) -> Result<Self, TopologyError> {
        let n = g.node_count();
        let deg_max = (0..n).map(|i| g.degree(i)).max().unwrap_or(0);
        let mut w = DMatrix::zeros(n, n);
        if deg_max == 0 {
            // single node
            w[(0, 0)] = 1.0;
            return Self::from_matrix(w, g);
        }
        let scale = 1.0 / (2.0 * deg_max as f64);
        for &(i, j) in g.edges() {
            w[(i, j)] = scale;
            w[(j, i)] = scale;
        }
        for i in 0..n {
            w[(i, i)] = 1.0 - g.degree(i) as f64 * scale;
        }
        Self::from_matrix(w, g)
    }

    /// Validates averaging-matrix invariants against `g` and computes the
    /// spectral summary.
    pub fn from_matrix(matrix: DMatrix<f64>, g: &Graph) -> Result<Self, TopologyError> {
        let n = g.node_count();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(TopologyError::NotAveraging(format!(
                "shape {}x{} does not match {} nodes",
                matrix.nrows(),
                matrix.ncols(),
                n
            )));
        }
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let v = matrix[(i, j)];
                if (v - matrix[(j, i)]).abs() > ROW_SUM_TOL {
                    return Err(TopologyError::NotAveraging(format!(
                        "asymmetric at ({i},{j})"
                    )));
                }
                if v < -1e-14 {
                    return Err(TopologyError::NotAveraging(format!(
                        "negative entry {v:.3e} at ({i},{j})"
                    )));
                }
                if i != j {
                    let on_edge = g.has_edge(i, j);
                    if on_edge && v <= 0.0 {
                        return Err(TopologyError::NotAveraging(format!(
                            "zero weight on edge {{{i},{j}}}"
                        )));
                    }
                    if !on_edge && v != 0.0 {
                        return Err(TopologyError::NotAveraging(format!(
                            "nonzero weight {v:.3e} off the edge set at ({i},{j})"
                        )));
                    }
                }
                row_sum += v;
            }
            if (row_sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(TopologyError::NotAveraging(format!(
                    "row {i} sums to {row_sum}"
                )));
            }
        }
        let summary = spectral_summary(&matrix)?;
        Ok(Self {
            matrix,
            beta: summary.beta,
            lambda_min: summary.lambda_min,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn node_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn self_weight(&self, i: usize) -> f64 {
        self.matrix[(i, i)]
    }

    pub fn min_self_weight(&self) -> f64 {
        (0..self.node_count())
            .map(|i| self.self_weight(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn is_positive_definite(&self) -> bool {
        self.lambda_min > EIGEN_TOL
    }

    /// Returns `self` unchanged when `λ_min(W) > 0`; otherwise shifts to
    /// `(I + W)/2`, which keeps symmetry, stochasticity, and off-diagonal
    /// sparsity, and re-verifies positive definiteness.
    pub fn ensure_positive_definite(self) -> Result<Self, TopologyError> {
        if self.is_positive_definite() {
            return Ok(self);
        }
        let n = self.node_count();
        let mut shifted = self.matrix.clone();
        for v in shifted.iter_mut() {
            *v *= 0.5;
        }
        for i in 0..n {
            shifted[(i, i)] += 0.5;
        }
        let summary = spectral_summary(&shifted)?;
        if summary.lambda_min <= EIGEN_TOL {
            return Err(TopologyError::NotPositiveDefinite {
                lambda_min: summary.lambda_min,
            });
        }
        Ok(Self {
            matrix: shifted,
            beta: summary.beta,
            lambda_min: summary.lambda_min,
        })
    }
}

/// Spectral summary of a symmetric matrix with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `max{|λ₂|, |λ_n|}`; defined as 0 for a 1×1 matrix.
    pub beta: f64,
    /// Smallest eigenvalue `λ_n`.
    pub lambda_min: f64,
    /// Extreme eigenpairs `(λ, v)` for λ₁, λ₂ and λ_n (deduplicated by index).
    pub extreme_pairs: Vec<(f64, DVector<f64>)>,
}

/// Eigendecomposition-backed summary of an averaging matrix.
pub fn spectral_summary(w: &DMatrix<f64>) -> Result<SpectralSummary, TopologyError> {
    let n = w.nrows();
    if n == 0 || w.ncols() != n {
        return Err(TopologyError::NotAveraging(format!(
            "shape {}x{} is not square and non-empty",
            w.nrows(),
            w.ncols()
        )));
    }
    let eig = symmetric_eigen_desc(w).ok_or(TopologyError::EigenFailure)?;
    let beta = if n == 1 {
        0.0
    } else {
        eig.values[1].abs().max(eig.values[n - 1].abs())
    };
    let mut idx = vec![0usize];
    if n > 1 {
        idx.push(1);
    }
    if n > 2 {
        idx.push(n - 1);
    }
    let extreme_pairs = idx
        .into_iter()
        .map(|i| (eig.values[i], eig.eigenvector(i)))
        .collect();
    Ok(SpectralSummary {
        beta,
        lambda_min: eig.lambda_min(),
        eigenvalues: eig.values,
        extreme_pairs,
    })
}
