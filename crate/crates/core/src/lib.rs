//! Asynchronous decentralized gradient methods over undirected graphs.
//!
//! This crate implements DGD (`x⁺ = Wx − α∇F(x)`) and its adapt-then-combine
//! variant DGD-ATC (`x⁺ = W(x − α∇F(x))`) for consensus optimization, both as
//! synchronous fixed-point iterations and as asynchronous iterations driven by
//! explicit delay schedules or by a real message-passing runtime with one
//! worker thread per node.
//!
//! The pieces fit together as follows:
//!
//! - [`topology`]: undirected connected graphs and averaging matrices
//!   (Metropolis or lazy-Laplacian weights) with their spectral summaries.
//! - [`objectives`]: per-node smooth (strongly) convex costs — quadratic and
//!   ℓ2-regularized logistic families — with smoothness/strong-convexity
//!   constants and per-node infima.
//! - [`operators`]: the two update operators, delay-free step-size rules,
//!   contraction factors, fixed-point solvers with an independent Lyapunov
//!   oracle, and fixed-point optimality-gap bounds.
//! - [`schedule`]: activation sets and information-delay maps realizing
//!   synchronous, partially asynchronous (bounded `B`, `D`), and totally
//!   asynchronous executions.
//! - [`engine`]: a deterministic single-threaded simulator producing
//!   replayable [`engine::Trace`]s, plus the threaded live runtime.
//! - [`metrics`]: training error, consensus error, and linear-rate envelope
//!   verdicts computed from traces.

pub mod engine;
mod linalg;
pub mod metrics;
pub mod objectives;
pub mod operators;
pub mod schedule;
pub mod topology;

pub use engine::{replay, run_async, run_live, LiveOptions, LiveTermination, Trace, TraceEvent};
pub use metrics::{consensus_error, rate_verdict, training_error, RateReport};
pub use objectives::{centralized_solve, Dataset, ObjectiveSuite};
pub use operators::{
    gap_report, lyapunov_oracle, solve_fixed_point, AlgorithmKind, AlgorithmSpec, GapReport,
    StackedState,
};
pub use schedule::{make_schedule, Schedule, ScheduleMode};
pub use topology::{spectral_summary, Graph, SpectralSummary, Weights};
