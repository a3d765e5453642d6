//! Shared instance generators for the integration tests.
// each test binary uses its own subset of these helpers
#![allow(dead_code)]

use asyncdgd_core::objectives::ObjectiveSuite;
use asyncdgd_core::operators::StackedState;
use asyncdgd_core::topology::{Graph, Weights};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random symmetric PSD matrix with spectrum drawn uniformly in
/// `[spectrum.0, spectrum.1]`.
pub fn random_psd(d: usize, spectrum: (f64, f64), rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let gauss = DMatrix::from_fn(d, d, |_, _| standard_normal(rng));
    let q = gauss.qr().q();
    let eigs = DVector::from_fn(d, |_, _| rng.random_range(spectrum.0..=spectrum.1));
    let a = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    // exact symmetry for the PSD validation
    0.5 * (&a + a.transpose())
}

/// Strongly convex quadratic suite with per-node spectra in `spectrum` and
/// Gaussian linear terms.
pub fn random_quadratic_suite(
    n: usize,
    d: usize,
    spectrum: (f64, f64),
    seed: u64,
) -> ObjectiveSuite {
    let mut rng = rng(seed);
    let a_list = (0..n).map(|_| random_psd(d, spectrum, &mut rng)).collect();
    let b_list = (0..n)
        .map(|_| DVector::from_fn(d, |_, _| standard_normal(&mut rng)))
        .collect();
    ObjectiveSuite::quadratic(a_list, b_list).unwrap()
}

/// Identity quadratics pulling node i toward a random target: μ = L = 1.
pub fn homogeneous_target_suite(n: usize, d: usize, seed: u64) -> ObjectiveSuite {
    let mut rng = rng(seed);
    let a_list = (0..n).map(|_| DMatrix::identity(d, d)).collect();
    let b_list = (0..n)
        .map(|_| DVector::from_fn(d, |_, _| -rng.random_range(-1.0..1.0)))
        .collect();
    ObjectiveSuite::quadratic(a_list, b_list).unwrap()
}

pub fn random_state(n: usize, d: usize, scale: f64, seed: u64) -> StackedState {
    let mut rng = rng(seed);
    StackedState::from_blocks(
        (0..n)
            .map(|_| DVector::from_fn(d, |_, _| scale * standard_normal(&mut rng)))
            .collect(),
    )
    .unwrap()
}

pub fn ring_weights(n: usize) -> (Graph, Weights) {
    let g = Graph::ring(n).unwrap();
    let w = Weights::metropolis(&g).unwrap();
    (g, w)
}

/// Flattens `W ⊗ I_d` for the direct linear-system oracles.
pub fn kron_with_identity(w: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let n = w.nrows();
    let mut out = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            let v = w[(i, j)];
            if v != 0.0 {
                for r in 0..d {
                    out[(i * d + r, j * d + r)] = v;
                }
            }
        }
    }
    out
}

pub fn flatten(x: &StackedState) -> DVector<f64> {
    let n = x.node_count();
    let d = x.dim();
    let mut v = DVector::zeros(n * d);
    for i in 0..n {
        v.rows_mut(i * d, d).copy_from(x.block(i));
    }
    v
}

pub fn unflatten(n: usize, d: usize, v: &DVector<f64>) -> StackedState {
    StackedState::from_blocks((0..n).map(|i| v.rows(i * d, d).into_owned()).collect()).unwrap()
}
