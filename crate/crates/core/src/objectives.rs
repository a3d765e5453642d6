//! Per-node local cost functions with gradients and constants.
//!
//! Every node holds a smooth convex `f_i` with smoothness `L_i`, strong
//! convexity `μ_i` (0 when merely convex), and a lower bound `inf f_i`. Two
//! families are provided: quadratics `½xᵀA_ix + b_iᵀx` and ℓ2-regularized
//! logistic losses partitioned over a dataset so that `Σ_i f_i` reproduces the
//! centralized objective exactly.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::symmetric_eigen_desc;

/// Eigenvalues below this are treated as zero when classifying PSD matrices.
const PSD_TOL: f64 = 1e-10;
/// Gradient tolerance for lazily computed logistic infima.
const LAZY_INF_TOL: f64 = 1e-8;
const LAZY_INF_MAX_ITER: usize = 5_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("node {node}: quadratic is unbounded below (b leaves the range of a singular A)")]
    Unbounded { node: usize },
    #[error("node {node}: empty dataset partition")]
    EmptyPartition { node: usize },
    #[error("label {0} is not in {{-1, +1}}")]
    BadLabel(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has {samples} samples for {nodes} nodes")]
    TooFewSamples { samples: usize, nodes: usize },
    #[error("node {node}: matrix is not symmetric positive semidefinite")]
    NotPsd { node: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("regularization parameter must be positive, got {0}")]
    BadRegularization(f64),
    #[error("eigensolver failed")]
    EigenFailure,
    #[error("gradient descent did not reach tolerance in {0} iterations")]
    MaxIterExceeded(usize),
}

/// Binary classification dataset with labels in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<DVector<f64>>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Vec<DVector<f64>>, labels: Vec<f64>) -> Result<Self, ObjectiveError> {
        if features.is_empty() {
            return Err(ObjectiveError::EmptyDataset);
        }
        if features.len() != labels.len() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        let d = features[0].len();
        for f in &features {
            if f.len() != d {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: d,
                    got: f.len(),
                });
            }
        }
        for &b in &labels {
            if b != 1.0 && b != -1.0 {
                return Err(ObjectiveError::BadLabel(b));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[DVector<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Gaussian features with a planted separator; 5% of labels are flipped
    /// so the task is not perfectly separable.
    pub fn synthetic_logistic(n_samples: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let separator = DVector::from_fn(d, |_, _| standard_normal(&mut rng));
        let mut features = Vec::with_capacity(n_samples);
        let mut labels = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let a = DVector::from_fn(d, |_, _| standard_normal(&mut rng));
            let margin = a.dot(&separator);
            let mut b = if margin >= 0.0 { 1.0 } else { -1.0 };
            if rng.random::<f64>() < 0.05 {
                b = -b;
            }
            features.push(a);
            labels.push(b);
        }
        Self { features, labels }
    }

    /// Shuffled split into `nodes` parts whose sizes differ by at most one.
    /// The same seed always produces the same split.
    pub fn partition(&self, nodes: usize, seed: u64) -> Result<Vec<Dataset>, ObjectiveError> {
        if nodes == 0 || self.len() < nodes {
            return Err(ObjectiveError::TooFewSamples {
                samples: self.len(),
                nodes,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..self.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let base = self.len() / nodes;
        let extra = self.len() % nodes;
        let mut parts = Vec::with_capacity(nodes);
        let mut cursor = 0;
        for i in 0..nodes {
            let size = base + usize::from(i < extra);
            let idx = &order[cursor..cursor + size];
            cursor += size;
            parts.push(Dataset {
                features: idx.iter().map(|&k| self.features[k].clone()).collect(),
                labels: idx.iter().map(|&k| self.labels[k]).collect(),
            });
        }
        Ok(parts)
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on open-interval uniforms
    let u1: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Debug, Clone)]
enum NodeFunction {
    Quadratic {
        a: DMatrix<f64>,
        b: DVector<f64>,
    },
    Logistic {
        data: Dataset,
        inv_n_total: f64,
        reg: f64,
    },
}

/// One node's cost function together with its constants.
#[derive(Debug, Clone)]
pub struct NodeObjective {
    kind: NodeFunction,
    dim: usize,
    smoothness: f64,
    strong_convexity: f64,
    infimum: InfState,
}

#[derive(Debug, Clone)]
enum InfState {
    Known(f64),
    // computed on demand by a single-node solve, shared across clones
    Lazy(Arc<OnceLock<f64>>),
}

impl NodeObjective {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `L_i`
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// `μ_i` (0 when merely convex)
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            NodeFunction::Quadratic { a, b } => 0.5 * (a * x).dot(x) + b.dot(x),
            NodeFunction::Logistic {
                data,
                inv_n_total,
                reg,
            } => {
                let mut loss = 0.0;
                for (a, &b) in data.features().iter().zip(data.labels()) {
                    loss += log1p_exp_neg(b * a.dot(x));
                }
                loss * inv_n_total + 0.5 * reg * x.dot(x)
            }
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            NodeFunction::Quadratic { a, b } => a * x + b,
            NodeFunction::Logistic {
                data,
                inv_n_total,
                reg,
            } => {
                let mut g = DVector::zeros(self.dim);
                for (a, &b) in data.features().iter().zip(data.labels()) {
                    let t = b * a.dot(x);
                    g.axpy(-b * sigmoid(-t), a, 1.0);
                }
                g *= *inv_n_total;
                g.axpy(*reg, x, 1.0);
                g
            }
        }
    }

    /// `inf_x f_i(x)`. Quadratics know it in closed form; logistic nodes
    /// compute it once by a single-node solve and cache the value.
    pub fn infimum(&self) -> Result<f64, ObjectiveError> {
        match &self.infimum {
            InfState::Known(v) => Ok(*v),
            InfState::Lazy(cell) => {
                if let Some(v) = cell.get() {
                    return Ok(*v);
                }
                let step = 1.0 / self.smoothness;
                let x = gradient_descent(
                    |x| self.gradient(x),
                    step,
                    DVector::zeros(self.dim),
                    LAZY_INF_TOL,
                    LAZY_INF_MAX_ITER,
                )?;
                let v = self.value(&x);
                Ok(*cell.get_or_init(|| v))
            }
        }
    }
}

/// `log(1 + exp(−t))` without overflow for large `|t|`.
fn log1p_exp_neg(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(−t))` computed stably.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// The collection of per-node cost functions for one experiment.
#[derive(Debug, Clone)]
pub struct ObjectiveSuite {
    dim: usize,
    nodes: Vec<NodeObjective>,
}

impl ObjectiveSuite {
    /// Quadratic family `f_i(x) = ½xᵀA_ix + b_iᵀx` with `A_i ⪰ 0`.
    ///
    /// `L_i = λ_max(A_i)`, `μ_i = λ_min(A_i)` (clamped at 0), and the infimum
    /// is `½b_iᵀz_i` at the (pseudo-)solution of `A_iz = −b_i`. A singular
    /// `A_i` with `b_i` outside its range has no lower bound.
    pub fn quadratic(
        a_list: Vec<DMatrix<f64>>,
        b_list: Vec<DVector<f64>>,
    ) -> Result<Self, ObjectiveError> {
        if a_list.is_empty() || a_list.len() != b_list.len() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: a_list.len(),
                got: b_list.len(),
            });
        }
        let dim = a_list[0].nrows();
        let mut nodes = Vec::with_capacity(a_list.len());
        for (node, (a, b)) in a_list.into_iter().zip(b_list).enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: dim,
                    got: a.nrows(),
                });
            }
            if b.len() != dim {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: dim,
                    got: b.len(),
                });
            }
            if (&a - a.transpose()).abs().max() > 1e-12 {
                return Err(ObjectiveError::NotPsd { node });
            }
            let eig = symmetric_eigen_desc(&a).ok_or(ObjectiveError::EigenFailure)?;
            if eig.lambda_min() < -PSD_TOL {
                return Err(ObjectiveError::NotPsd { node });
            }
            let smoothness = eig.lambda_max().max(0.0);
            let strong_convexity = eig.lambda_min().max(0.0);

            // pseudo-solve A z = −b; any null-space component of b means the
            // linear term escapes to −∞
            let mut z = DVector::zeros(dim);
            for (i, &lam) in eig.values.iter().enumerate() {
                let v = eig.eigenvector(i);
                let coeff = v.dot(&b);
                if lam <= PSD_TOL {
                    if coeff.abs() > PSD_TOL * (1.0 + b.norm()) {
                        return Err(ObjectiveError::Unbounded { node });
                    }
                } else {
                    z.axpy(-coeff / lam, &v, 1.0);
                }
            }
            let infimum = 0.5 * b.dot(&z);
            nodes.push(NodeObjective {
                kind: NodeFunction::Quadratic { a, b },
                dim,
                smoothness,
                strong_convexity,
                infimum: InfState::Known(infimum),
            });
        }
        Ok(Self { dim, nodes })
    }

    /// Logistic family over a partitioned dataset:
    /// `f_i(x) = (1/N) Σ_{j∈S_i} log(1+exp(−b_j a_jᵀx)) + (λ/2n)‖x‖²`,
    /// so that `Σ_i f_i` is the centralized regularized logistic loss.
    ///
    /// `L_i = λ_max(Σ_j a_ja_jᵀ)/(4N) + λ/n` and `μ_i = λ/n`.
    pub fn logistic(
        partitions: Vec<Dataset>,
        lambda: f64,
        n_total: usize,
    ) -> Result<Self, ObjectiveError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(ObjectiveError::BadRegularization(lambda));
        }
        if partitions.is_empty() {
            return Err(ObjectiveError::EmptyDataset);
        }
        let n_nodes = partitions.len();
        let dim = partitions[0].dim();
        let reg = lambda / n_nodes as f64;
        let inv_n_total = 1.0 / n_total as f64;
        let mut nodes = Vec::with_capacity(n_nodes);
        for (node, data) in partitions.into_iter().enumerate() {
            if data.is_empty() {
                return Err(ObjectiveError::EmptyPartition { node });
            }
            if data.dim() != dim {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: dim,
                    got: data.dim(),
                });
            }
            let mut gram = DMatrix::zeros(dim, dim);
            for a in data.features() {
                gram.ger(1.0, a, a, 1.0);
            }
            let eig = symmetric_eigen_desc(&gram).ok_or(ObjectiveError::EigenFailure)?;
            let smoothness = eig.lambda_max().max(0.0) * inv_n_total / 4.0 + reg;
            nodes.push(NodeObjective {
                kind: NodeFunction::Logistic {
                    data,
                    inv_n_total,
                    reg,
                },
                dim,
                smoothness,
                strong_convexity: reg,
                infimum: InfState::Lazy(Arc::new(OnceLock::new())),
            });
        }
        Ok(Self { dim, nodes })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, i: usize) -> &NodeObjective {
        &self.nodes[i]
    }

    pub fn value(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.nodes[i].value(x)
    }

    pub fn gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        self.nodes[i].gradient(x)
    }

    /// `L = max_i L_i`
    pub fn max_smoothness(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.smoothness)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `L̄ = (1/n) Σ_i L_i`
    pub fn mean_smoothness(&self) -> f64 {
        self.nodes.iter().map(|n| n.smoothness).sum::<f64>() / self.nodes.len() as f64
    }

    pub fn min_strong_convexity(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.strong_convexity)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_strongly_convex(&self) -> bool {
        self.nodes.iter().all(|n| n.strong_convexity > 0.0)
    }

    /// `f(z) = Σ_i f_i(z)` at a common point.
    pub fn total_value(&self, z: &DVector<f64>) -> f64 {
        self.nodes.iter().map(|n| n.value(z)).sum()
    }

    pub fn total_gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for n in &self.nodes {
            g += n.gradient(z);
        }
        g
    }

    /// `Σ_i inf f_i`; triggers lazy per-node solves where needed.
    pub fn total_infimum(&self) -> Result<f64, ObjectiveError> {
        self.nodes.iter().map(|n| n.infimum()).sum()
    }
}

fn gradient_descent(
    grad: impl Fn(&DVector<f64>) -> DVector<f64>,
    step: f64,
    mut x: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>, ObjectiveError> {
    for _ in 0..=max_iter {
        let g = grad(&x);
        if g.norm() <= tol {
            return Ok(x);
        }
        x.axpy(-step, &g, 1.0);
    }
    Err(ObjectiveError::MaxIterExceeded(max_iter))
}

/// Minimizes the sum objective `f = Σ_i f_i` by gradient descent with step
/// `1/ΣL_i` from the origin, stopping at `‖∇f‖ ≤ tol`.
pub fn centralized_solve(
    suite: &ObjectiveSuite,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, f64), ObjectiveError> {
    let total_smoothness: f64 = suite.nodes.iter().map(|n| n.smoothness).sum();
    let x0 = DVector::zeros(suite.dim());
    if total_smoothness <= 0.0 {
        // identically-constant objective
        let f = suite.total_value(&x0);
        return Ok((x0, f));
    }
    let step = 1.0 / total_smoothness;
    let z = gradient_descent(|x| suite.total_gradient(x), step, x0, tol, max_iter)?;
    let f = suite.total_value(&z);
    Ok((z, f))
}
