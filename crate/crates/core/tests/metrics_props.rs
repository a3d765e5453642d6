//! Metric series are invariant under consistent relabeling of the nodes.

mod common;

use asyncdgd_core::engine::run_async;
use asyncdgd_core::metrics::{consensus_error, training_error};
use asyncdgd_core::objectives::{centralized_solve, ObjectiveSuite};
use asyncdgd_core::operators::{AlgorithmKind, AlgorithmSpec, StackedState};
use asyncdgd_core::schedule::{make_schedule, Schedule, ScheduledUpdate};
use asyncdgd_core::topology::{Graph, Weights};
use nalgebra::{DMatrix, DVector};

fn permute_schedule(sched: &Schedule, sigma: &[usize], g_new: &Graph) -> Schedule {
    let steps = sched
        .steps()
        .iter()
        .map(|ups| {
            let mut out: Vec<ScheduledUpdate> = ups
                .iter()
                .map(|u| {
                    let mut staleness: Vec<(usize, usize)> =
                        u.staleness.iter().map(|&(j, s)| (sigma[j], s)).collect();
                    staleness.sort_by_key(|&(j, _)| j);
                    ScheduledUpdate {
                        node: sigma[u.node],
                        staleness,
                    }
                })
                .collect();
            out.sort_by_key(|u| u.node);
            out
        })
        .collect();
    Schedule::from_recorded(g_new, steps).unwrap()
}

#[test]
fn series_invariant_under_node_relabeling() {
    let n = 5;
    let d = 2;
    let sigma: Vec<usize> = vec![2, 0, 4, 1, 3]; // a permutation of 0..5
    let g = Graph::ring(n).unwrap();
    let g_perm = Graph::new(
        n,
        &g.edges()
            .iter()
            .map(|&(a, b)| (sigma[a], sigma[b]))
            .collect::<Vec<_>>(),
    )
    .unwrap();

    let mut rng = common::rng(64);
    let a_list: Vec<DMatrix<f64>> = (0..n)
        .map(|_| common::random_psd(d, (0.5, 2.0), &mut rng))
        .collect();
    let b_list: Vec<DVector<f64>> = (0..n)
        .map(|_| DVector::from_fn(d, |_, _| common::standard_normal(&mut rng)))
        .collect();
    let mut a_perm = a_list.clone();
    let mut b_perm = b_list.clone();
    for i in 0..n {
        a_perm[sigma[i]] = a_list[i].clone();
        b_perm[sigma[i]] = b_list[i].clone();
    }
    let suite = ObjectiveSuite::quadratic(a_list, b_list).unwrap();
    let suite_perm = ObjectiveSuite::quadratic(a_perm, b_perm).unwrap();

    let w = Weights::metropolis(&g).unwrap();
    let w_perm = Weights::metropolis(&g_perm).unwrap();
    let alpha = 0.05;
    let spec = AlgorithmSpec::new(AlgorithmKind::Dgd, alpha, w, suite.clone()).unwrap();
    let spec_perm =
        AlgorithmSpec::new(AlgorithmKind::Dgd, alpha, w_perm, suite_perm.clone()).unwrap();

    let sched = make_schedule(
        asyncdgd_core::schedule::ScheduleMode::Partial { b: 2, d: 1 },
        &g,
        150,
        8,
    )
    .unwrap();
    let sched_perm = permute_schedule(&sched, &sigma, &g_perm);

    let x0 = common::random_state(n, d, 1.0, 99);
    let mut blocks_perm = vec![DVector::zeros(d); n];
    for i in 0..n {
        blocks_perm[sigma[i]] = x0.block(i).clone();
    }
    let x0_perm = StackedState::from_blocks(blocks_perm).unwrap();

    let trace = run_async(&spec, &sched, &x0).unwrap();
    let trace_perm = run_async(&spec_perm, &sched_perm, &x0_perm).unwrap();

    let (_, f_star) = centralized_solve(&suite, 1e-11, 5_000_000).unwrap();
    let te = training_error(&trace, &suite, f_star);
    let te_perm = training_error(&trace_perm, &suite_perm, f_star);
    let ce = consensus_error(&trace);
    let ce_perm = consensus_error(&trace_perm);
    for k in 0..te.len() {
        assert!(
            (te[k] - te_perm[k]).abs() <= 1e-9 * (1.0 + te[k].abs()),
            "training error differs at k={k}: {} vs {}",
            te[k],
            te_perm[k]
        );
        assert!(
            (ce[k] - ce_perm[k]).abs() <= 1e-9 * (1.0 + ce[k].abs()),
            "consensus error differs at k={k}"
        );
    }
}
