//! Asynchronous execution of the update operators.
//!
//! [`run_async`] realizes the indexed asynchronous iterations under an
//! explicit [`Schedule`]: at iteration `k`, every scheduled node `i` applies
//! its operator block to a stacked argument whose neighbor blocks are taken
//! from the recorded past iterations `s_ij^k`, while its own block is current
//! (`s_ii^k = k`). All other nodes hold their blocks bit-identically.
//!
//! The simulator is strictly single-threaded and deterministic; [`run_live`]
//! drives the same operators from real worker threads exchanging messages
//! through per-edge channels and reconstructs an equivalent [`Trace`].
//! [`replay`] re-executes any trace's event log from its initial state and
//! confirms that every recorded state is reproduced exactly.

mod live;

pub use live::{run_live, ActivationPolicy, LiveOptions, LiveTermination};

use thiserror::Error;

use crate::operators::{AlgorithmKind, AlgorithmSpec, OperatorError, StackedState};
use crate::schedule::{Schedule, ScheduleError, ScheduledUpdate};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("schedule does not match the algorithm spec: {0}")]
    ScheduleSpecMismatch(String),
    #[error("trace is corrupt: {0}")]
    CorruptTrace(String),
    #[error("a worker thread panicked")]
    WorkerPanic,
    #[error("live run hit its duration cap before reaching the target tolerance")]
    Timeout,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// One recorded update: node `node` updated at iteration `k`, reading
/// `x_j^{s}` for every `(j, s)` in `staleness`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub k: usize,
    pub node: usize,
    pub staleness: Vec<(usize, usize)>,
}

impl TraceEvent {
    /// Largest information delay `k − s` used by this update.
    pub fn max_delay(&self) -> usize {
        self.staleness
            .iter()
            .map(|&(_, s)| self.k - s)
            .max()
            .unwrap_or(0)
    }
}

/// Identifying constants of the run that produced a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub kind: AlgorithmKind,
    pub alpha: f64,
    pub n: usize,
    pub dim: usize,
}

/// Full record of an asynchronous run: every global state `x^k`, the event
/// log, and the realized asynchrony constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// `x^0 … x^K`
    pub states: Vec<StackedState>,
    /// updates ordered by iteration, then node id
    pub events: Vec<TraceEvent>,
    /// smallest `B` such that every window of `B+1` iterations contains an
    /// update of every node (trailing truncation ignored)
    pub realized_b: usize,
    /// largest information delay `k − s_ij^k` over all events
    pub realized_d: usize,
    pub meta: TraceMeta,
}

impl Trace {
    /// Number of iterations (states run from `0` to `horizon`).
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    pub fn initial(&self) -> &StackedState {
        &self.states[0]
    }

    pub fn terminal(&self) -> &StackedState {
        self.states.last().expect("non-empty trace")
    }
}

fn realized_constants(n: usize, horizon: usize, events: &[TraceEvent]) -> (usize, usize) {
    let mut first = vec![None; n];
    let mut last = vec![0usize; n];
    let mut max_gap = vec![0usize; n];
    let mut realized_d = 0;
    for e in events {
        realized_d = realized_d.max(e.max_delay());
        match first[e.node] {
            None => first[e.node] = Some(e.k),
            Some(_) => max_gap[e.node] = max_gap[e.node].max(e.k - last[e.node]),
        }
        last[e.node] = e.k;
    }
    let mut realized_b = 0;
    for i in 0..n {
        match first[i] {
            // a silent node makes every window fail; report the horizon
            None => realized_b = realized_b.max(horizon),
            Some(f) => {
                realized_b = realized_b.max(f);
                realized_b = realized_b.max(max_gap[i].saturating_sub(1));
            }
        }
    }
    (realized_b, realized_d)
}

fn check_schedule(spec: &AlgorithmSpec, schedule: &Schedule) -> Result<(), EngineError> {
    if schedule.node_count() != spec.node_count() {
        return Err(EngineError::ScheduleSpecMismatch(format!(
            "{} schedule nodes vs {} spec nodes",
            schedule.node_count(),
            spec.node_count()
        )));
    }
    // staleness columns must cover exactly the weight-matrix support
    let w = spec.weights().matrix();
    for ups in schedule.steps() {
        for u in ups {
            for &(j, _) in &u.staleness {
                if w[(u.node, j)] == 0.0 {
                    return Err(EngineError::ScheduleSpecMismatch(format!(
                        "schedule delays edge ({},{j}) with zero weight",
                        u.node
                    )));
                }
            }
            let support = (0..spec.node_count())
                .filter(|&j| j != u.node && w[(u.node, j)] != 0.0)
                .count();
            if u.staleness.len() != support {
                return Err(EngineError::ScheduleSpecMismatch(format!(
                    "node {} has {} staleness entries for {} neighbors",
                    u.node,
                    u.staleness.len(),
                    support
                )));
            }
        }
    }
    Ok(())
}

fn apply_update(
    spec: &AlgorithmSpec,
    states: &[StackedState],
    k: usize,
    update: &ScheduledUpdate,
) -> Result<nalgebra::DVector<f64>, OperatorError> {
    // assemble the stacked argument: own block current, neighbors delayed
    let mut scratch = states[k].clone();
    for &(j, s) in &update.staleness {
        scratch.set_block(j, states[s].block(j).clone());
    }
    spec.apply_block(update.node, &scratch)
}

/// Runs the asynchronous iteration under an explicit schedule, recording
/// every state. Deterministic: identical inputs give bit-identical traces.
pub fn run_async(
    spec: &AlgorithmSpec,
    schedule: &Schedule,
    x0: &StackedState,
) -> Result<Trace, EngineError> {
    check_schedule(spec, schedule)?;
    if x0.node_count() != spec.node_count() || x0.dim() != spec.dim() {
        return Err(EngineError::ScheduleSpecMismatch(format!(
            "initial state is {}x{}, spec needs {}x{}",
            x0.node_count(),
            x0.dim(),
            spec.node_count(),
            spec.dim()
        )));
    }
    let horizon = schedule.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(x0.clone());
    let mut events = Vec::new();
    for k in 0..horizon {
        let mut next = states[k].clone();
        for update in schedule.step(k) {
            let block = apply_update(spec, &states, k, update)?;
            next.set_block(update.node, block);
            events.push(TraceEvent {
                k,
                node: update.node,
                staleness: update.staleness.clone(),
            });
        }
        states.push(next);
    }
    let (realized_b, realized_d) = realized_constants(spec.node_count(), horizon, &events);
    Ok(Trace {
        states,
        events,
        realized_b,
        realized_d,
        meta: TraceMeta {
            kind: spec.kind(),
            alpha: spec.alpha(),
            n: spec.node_count(),
            dim: spec.dim(),
        },
    })
}

/// Re-executes a trace's event log from `x⁰` and checks that every recorded
/// state is reproduced with exact floating-point equality.
pub fn replay(trace: &Trace, spec: &AlgorithmSpec) -> Result<bool, EngineError> {
    if trace.states.is_empty() {
        return Err(EngineError::CorruptTrace("no states".into()));
    }
    if trace.meta.n != spec.node_count()
        || trace.meta.dim != spec.dim()
        || trace.meta.kind != spec.kind()
        || trace.meta.alpha != spec.alpha()
    {
        return Err(EngineError::CorruptTrace(
            "trace metadata does not match the algorithm spec".into(),
        ));
    }
    let horizon = trace.horizon();
    for e in &trace.events {
        if e.k >= horizon || e.node >= trace.meta.n {
            return Err(EngineError::CorruptTrace(format!(
                "event ({}, {}) out of range",
                e.k, e.node
            )));
        }
        for &(j, s) in &e.staleness {
            if j >= trace.meta.n || s > e.k {
                return Err(EngineError::CorruptTrace(format!(
                    "staleness ({j}, {s}) invalid at k={}",
                    e.k
                )));
            }
        }
    }

    let mut states = Vec::with_capacity(horizon + 1);
    states.push(trace.states[0].clone());
    let mut cursor = 0usize;
    for k in 0..horizon {
        let mut next = states[k].clone();
        while cursor < trace.events.len() && trace.events[cursor].k == k {
            let e = &trace.events[cursor];
            let update = ScheduledUpdate {
                node: e.node,
                staleness: e.staleness.clone(),
            };
            let block = apply_update(spec, &states, k, &update)?;
            next.set_block(e.node, block);
            cursor += 1;
        }
        states.push(next);
        if states[k + 1] != trace.states[k + 1] {
            return Ok(false);
        }
    }
    if cursor != trace.events.len() {
        return Err(EngineError::CorruptTrace(
            "events are not ordered by iteration".into(),
        ));
    }
    Ok(true)
}
