//! Shared dense symmetric eigensolver plumbing.

use nalgebra::{DMatrix, DVector};

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
///
/// Column `i` of `vectors` is the unit eigenvector paired with `values[i]`.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricEigenDesc {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Runs nalgebra's symmetric eigensolver and sorts the pairs descending.
/// Returns `None` when the solver does not converge (e.g. NaN input).
pub(crate) fn symmetric_eigen_desc(m: &DMatrix<f64>) -> Option<SymmetricEigenDesc> {
    let n = m.nrows();
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), 1e-15, 100_000)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut vectors = DMatrix::zeros(n, n);
    for (out, &src) in order.iter().enumerate() {
        vectors.set_column(out, &eig.eigenvectors.column(src));
    }
    Some(SymmetricEigenDesc { values, vectors })
}

impl SymmetricEigenDesc {
    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Reassembles `V diag(f(λ)) Vᵀ`; used for pseudo-inverses and `W⁻¹ − I`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut out = DMatrix::zeros(n, n);
        for (i, &lam) in self.values.iter().enumerate() {
            let v = self.vectors.column(i);
            let fl = f(lam);
            // out += fl * v vᵀ, keeping exact symmetry by construction
            for r in 0..n {
                for c in 0..n {
                    out[(r, c)] += fl * v[r] * v[c];
                }
            }
        }
        out
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }
}
