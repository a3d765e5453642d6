//! Reported quantities and verdicts computed from traces: training error at
//! the average iterate, consensus error, and the linear-rate envelope check.

use crate::engine::Trace;
use crate::objectives::ObjectiveSuite;
use crate::operators::{AlgorithmSpec, GapReport, OperatorError, StackedState};

/// Relative slack absorbing floating-point accumulation in the envelope
/// comparison; the bound itself is exact in reals.
pub const ENVELOPE_SLACK: f64 = 1e-9;

/// `f(x̄^k) − f⋆` for every recorded state, with `x̄^k = (1/n)Σ_i x_i^k`.
pub fn training_error(trace: &Trace, suite: &ObjectiveSuite, f_star: f64) -> Vec<f64> {
    trace
        .states
        .iter()
        .map(|x| suite.total_value(&x.consensus_mean()) - f_star)
        .collect()
}

/// `max_i ‖x_i^k − x̄^k‖` for every recorded state.
pub fn consensus_error(trace: &Trace) -> Vec<f64> {
    trace
        .states
        .iter()
        .map(|x| {
            let xbar = x.consensus_mean();
            (0..x.node_count())
                .map(|i| (x.block(i) - &xbar).norm())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Verdict of the linear-convergence envelope
/// `‖x^k − x⋆‖∞ᵇ ≤ ρ^{⌊k/(B+D+1)⌋}·‖x⁰ − x⋆‖∞ᵇ`
/// evaluated with the trace's realized `B` and `D`.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub rho_theory: f64,
    pub b: usize,
    pub d: usize,
    pub envelope_violations: usize,
    pub max_violation_ratio: f64,
    pub per_k_distances: Vec<f64>,
}

impl RateReport {
    pub fn window(&self) -> usize {
        self.b + self.d + 1
    }
}

/// Evaluates the envelope at every iteration with relative slack
/// [`ENVELOPE_SLACK`] and counts violations.
pub fn rate_verdict(
    trace: &Trace,
    spec: &AlgorithmSpec,
    x_star: &StackedState,
) -> Result<RateReport, OperatorError> {
    let rho = spec.contraction_factor()?;
    let b = trace.realized_b;
    let d = trace.realized_d;
    let window = b + d + 1;
    let per_k_distances: Vec<f64> = trace
        .states
        .iter()
        .map(|x| x.block_max_distance(x_star))
        .collect::<Result<_, _>>()?;
    let dist0 = per_k_distances[0];
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for (k, &dist) in per_k_distances.iter().enumerate() {
        let envelope = rho.powi((k / window) as i32) * dist0 * (1.0 + ENVELOPE_SLACK);
        if envelope > 0.0 {
            max_ratio = max_ratio.max(dist / envelope);
            if dist > envelope {
                violations += 1;
            }
        } else if dist > 0.0 {
            max_ratio = f64::INFINITY;
            violations += 1;
        }
    }
    Ok(RateReport {
        rho_theory: rho,
        b,
        d,
        envelope_violations: violations,
        max_violation_ratio: max_ratio,
        per_k_distances,
    })
}

/// Plain-text block mirroring the bound-vs-measured tables.
pub fn summary_text(gap: Option<&GapReport>, rate: Option<&RateReport>) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    if let Some(g) = gap {
        let consensus_ok = g.measured_consensus <= g.consensus_bound;
        let objective_ok = g.measured_objective_gap <= g.objective_bound;
        writeln!(out, "fixed-point optimality gap (beta = {:.6})", g.beta).unwrap();
        writeln!(
            out,
            "  consensus error : measured {:.6e} <= bound {:.6e}  [{}]",
            g.measured_consensus,
            g.consensus_bound,
            if consensus_ok { "PASS" } else { "FAIL" }
        )
        .unwrap();
        writeln!(
            out,
            "  objective gap   : measured {:.6e} <= bound {:.6e}  [{}]",
            g.measured_objective_gap,
            g.objective_bound,
            if objective_ok { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    if let Some(r) = rate {
        writeln!(
            out,
            "linear rate envelope (rho = {:.6}, B = {}, D = {})",
            r.rho_theory, r.b, r.d
        )
        .unwrap();
        writeln!(
            out,
            "  violations {} / {} iterations, worst ratio {:.6}  [{}]",
            r.envelope_violations,
            r.per_k_distances.len(),
            r.max_violation_ratio,
            if r.envelope_violations == 0 {
                "PASS"
            } else {
                "FAIL"
            }
        )
        .unwrap();
    }
    out
}
