//! Operator-level properties: pseudo-contractivity, fixed-point oracle
//! agreement, optimality-gap bounds, and step-size monotonicity.

mod common;

use asyncdgd_core::objectives::centralized_solve;
use asyncdgd_core::operators::{
    default_step_size, gap_report, lyapunov_oracle, max_step_size, solve_fixed_point,
    AlgorithmKind, AlgorithmSpec, StackedState,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Builds a spec at the practical default step size on a metropolis ring;
/// for DGD-ATC the weights are shifted positive definite first.
fn ring_spec(kind: AlgorithmKind, n: usize, d: usize, seed: u64) -> AlgorithmSpec {
    let (_, w) = common::ring_weights(n);
    let w = match kind {
        AlgorithmKind::Dgd => w,
        AlgorithmKind::DgdAtc => w.ensure_positive_definite().unwrap(),
    };
    let suite = common::random_quadratic_suite(n, d, (0.5, 2.0), seed);
    let alpha = default_step_size(kind, &w, &suite).unwrap();
    AlgorithmSpec::new(kind, alpha, w, suite).unwrap()
}

/// Direct linear-system oracle for quadratic instances:
/// DGD:    (I − W⊗I + α·blockdiag(A)) x = −α b
/// DGD-ATC:(I − W⊗I + α·(W⊗I)·blockdiag(A)) x = −α (W⊗I) b
fn linear_oracle(
    spec: &AlgorithmSpec,
    a_list: &[DMatrix<f64>],
    b_list: &[DVector<f64>],
) -> StackedState {
    let n = spec.node_count();
    let d = spec.dim();
    let wd = common::kron_with_identity(spec.weights().matrix(), d);
    let mut block_a = DMatrix::zeros(n * d, n * d);
    for (i, a) in a_list.iter().enumerate() {
        block_a.view_mut((i * d, i * d), (d, d)).copy_from(a);
    }
    let mut b_flat = DVector::zeros(n * d);
    for (i, b) in b_list.iter().enumerate() {
        b_flat.rows_mut(i * d, d).copy_from(b);
    }
    let alpha = spec.alpha();
    let identity = DMatrix::identity(n * d, n * d);
    let (system, rhs) = match spec.kind() {
        AlgorithmKind::Dgd => (&identity - &wd + alpha * &block_a, -alpha * &b_flat),
        AlgorithmKind::DgdAtc => (
            &identity - &wd + alpha * &wd * &block_a,
            -alpha * (&wd * &b_flat),
        ),
    };
    let solution = system
        .lu()
        .solve(&rhs)
        .expect("nonsingular fixed-point system");
    common::unflatten(n, d, &solution)
}

#[test]
fn pseudo_contraction_sampling() {
    for (instance, kind) in [
        (0u64, AlgorithmKind::Dgd),
        (1, AlgorithmKind::Dgd),
        (2, AlgorithmKind::Dgd),
        (3, AlgorithmKind::DgdAtc),
        (4, AlgorithmKind::DgdAtc),
    ] {
        let spec = ring_spec(kind, 6, 3, 100 + instance);
        let rho = spec.contraction_factor().unwrap();
        assert!(rho > 0.0 && rho < 1.0);
        let x_star =
            solve_fixed_point(&spec, &StackedState::zeros(6, 3), 1e-12, 2_000_000).unwrap();
        for sample in 0..220u64 {
            let x = common::random_state(6, 3, 4.0, 1_000 * instance + sample);
            let lhs = spec.apply(&x).unwrap().block_max_distance(&x_star).unwrap();
            let rhs = rho * x.block_max_distance(&x_star).unwrap() + 1e-9;
            assert!(
                lhs <= rhs,
                "pseudo-contraction violated: {lhs} > {rhs} (kind {kind:?})"
            );
        }
    }
}

#[test]
fn fixed_point_residual_certificate() {
    for kind in [AlgorithmKind::Dgd, AlgorithmKind::DgdAtc] {
        let spec = ring_spec(kind, 5, 2, 55);
        let tol = 1e-10;
        let x = solve_fixed_point(&spec, &StackedState::zeros(5, 2), tol, 2_000_000).unwrap();
        let residual = spec.apply(&x).unwrap().block_max_distance(&x).unwrap();
        assert!(residual <= 10.0 * tol, "residual {residual}");
    }
}

/// solve_fixed_point, lyapunov_oracle, and the direct linear solve agree
/// pairwise to 1e-6 block-max distance on random strongly convex quadratics.
#[test]
fn three_oracles_agree() {
    let mut rng = common::rng(500);
    for case in 0..10u64 {
        let n = rng.random_range(2..=8usize);
        let d = rng.random_range(1..=5usize);
        let kind = if case % 2 == 0 {
            AlgorithmKind::Dgd
        } else {
            AlgorithmKind::DgdAtc
        };
        let (_, w) = common::ring_weights(n.max(2));
        let w = match kind {
            AlgorithmKind::Dgd => w,
            AlgorithmKind::DgdAtc => w.ensure_positive_definite().unwrap(),
        };
        // rebuild the suite matrices here so the linear oracle sees them
        let mut local = common::rng(9_000 + case);
        let a_list: Vec<DMatrix<f64>> = (0..n)
            .map(|_| common::random_psd(d, (0.5, 2.0), &mut local))
            .collect();
        let b_list: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(d, |_, _| common::standard_normal(&mut local)))
            .collect();
        let suite =
            asyncdgd_core::objectives::ObjectiveSuite::quadratic(a_list.clone(), b_list.clone())
                .unwrap();
        let alpha = default_step_size(kind, &w, &suite).unwrap();
        let spec = AlgorithmSpec::new(kind, alpha, w, suite).unwrap();

        let x0 = StackedState::zeros(n, d);
        let fp = solve_fixed_point(&spec, &x0, 1e-11, 5_000_000).unwrap();
        let ly = lyapunov_oracle(&spec, &x0, 1e-9, 5_000_000).unwrap();
        let lin = linear_oracle(&spec, &a_list, &b_list);

        assert!(
            fp.block_max_distance(&ly).unwrap() <= 1e-6,
            "fp vs lyapunov"
        );
        assert!(fp.block_max_distance(&lin).unwrap() <= 1e-6, "fp vs linear");
        assert!(
            ly.block_max_distance(&lin).unwrap() <= 1e-6,
            "lyapunov vs linear"
        );
    }
}

#[test]
fn atc_fixed_point_matches_linear_oracle_tightly() {
    // quadratic ATC instance against the linear-system oracle at 1e-10
    let (_, w) = common::ring_weights(4);
    let w = w.ensure_positive_definite().unwrap();
    let mut local = common::rng(321);
    let a_list: Vec<DMatrix<f64>> = (0..4)
        .map(|_| common::random_psd(3, (0.8, 2.0), &mut local))
        .collect();
    let b_list: Vec<DVector<f64>> = (0..4)
        .map(|_| DVector::from_fn(3, |_, _| common::standard_normal(&mut local)))
        .collect();
    let suite =
        asyncdgd_core::objectives::ObjectiveSuite::quadratic(a_list.clone(), b_list.clone())
            .unwrap();
    let alpha = default_step_size(AlgorithmKind::DgdAtc, &w, &suite).unwrap();
    let spec = AlgorithmSpec::new(AlgorithmKind::DgdAtc, alpha, w, suite).unwrap();
    let fp = solve_fixed_point(&spec, &StackedState::zeros(4, 3), 1e-13, 5_000_000).unwrap();
    let lin = linear_oracle(&spec, &a_list, &b_list);
    assert!(fp.block_max_distance(&lin).unwrap() <= 1e-10);
}

#[test]
fn lyapunov_agreement_across_random_instances() {
    for case in 0..10u64 {
        let kind = if case < 5 {
            AlgorithmKind::Dgd
        } else {
            AlgorithmKind::DgdAtc
        };
        let spec = ring_spec(kind, 4, 3, 700 + case);
        let x0 = StackedState::zeros(4, 3);
        let fp = solve_fixed_point(&spec, &x0, 1e-11, 5_000_000).unwrap();
        let ly = lyapunov_oracle(&spec, &x0, 1e-9, 5_000_000).unwrap();
        assert!(
            fp.block_max_distance(&ly).unwrap() <= 1e-6,
            "case {case} disagreement"
        );
    }
}

/// Measured consensus error and objective gap never exceed their bounds on
/// strongly convex instances (both methods).
#[test]
fn gap_bounds_hold_on_random_instances() {
    for case in 0..8u64 {
        let kind = if case % 2 == 0 {
            AlgorithmKind::Dgd
        } else {
            AlgorithmKind::DgdAtc
        };
        let spec = ring_spec(kind, 5, 3, 40 + case);
        let (z_star, f_star) = centralized_solve(spec.suite(), 1e-11, 5_000_000).unwrap();
        let x_star =
            solve_fixed_point(&spec, &StackedState::zeros(5, 3), 1e-12, 5_000_000).unwrap();
        let report = gap_report(&spec, &x_star, &z_star, f_star).unwrap();
        assert!(
            report.measured_consensus <= report.consensus_bound,
            "consensus: measured {} > bound {} (case {case})",
            report.measured_consensus,
            report.consensus_bound
        );
        assert!(
            report.measured_objective_gap <= report.objective_bound,
            "objective: measured {} > bound {} (case {case})",
            report.measured_objective_gap,
            report.objective_bound
        );
        assert!(report.measured_objective_gap >= -1e-9);
    }
}

/// On homogeneous instances (equal L_i, μ_i, w_ii) the contraction factor is
/// strictly increasing in α on [default, max): the default coincides with
/// the per-node optimum w/L there. Heterogeneous instances can still be
/// decreasing just above the default, so they are not sampled here.
#[test]
fn contraction_factor_monotone_on_homogeneous_instances() {
    for kind in [AlgorithmKind::Dgd, AlgorithmKind::DgdAtc] {
        let (_, w) = common::ring_weights(6);
        let w = match kind {
            AlgorithmKind::Dgd => w,
            AlgorithmKind::DgdAtc => w.ensure_positive_definite().unwrap(),
        };
        let suite = common::homogeneous_target_suite(6, 2, 11);
        let lo = default_step_size(kind, &w, &suite).unwrap();
        let hi = max_step_size(kind, &w, &suite).unwrap();
        let mut prev = None;
        for step in 0..40 {
            let alpha = lo + (hi - lo) * (step as f64 / 40.0) * 0.999;
            let spec = AlgorithmSpec::new(kind, alpha, w.clone(), suite.clone()).unwrap();
            let rho = spec.contraction_factor().unwrap();
            if let Some(p) = prev {
                assert!(rho > p, "rho not increasing at alpha={alpha} ({kind:?})");
            }
            prev = Some(rho);
        }
    }
}
