//! Seeded randomness helpers for config-driven instance generation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn chacha(seed: u64) -> ChaCha8Rng {
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

/// Random symmetric matrix with spectrum uniform in `[spectrum.0, spectrum.1]`.
pub fn random_psd(d: usize, spectrum: (f64, f64), rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let gauss = DMatrix::from_fn(d, d, |_, _| standard_normal(rng));
    let q = gauss.qr().q();
    let eigs = DVector::from_fn(d, |_, _| rng.random_range(spectrum.0..=spectrum.1));
    let a = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    0.5 * (&a + a.transpose())
}
