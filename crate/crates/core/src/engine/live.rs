//! Live message-passing runtime: one worker thread per node.
//!
//! Each worker owns its block, keeps receiving neighbor messages into
//! per-edge inbox channels, and once activated (its buffer is non-empty, and
//! initially only after it has heard from every neighbor once) reads the
//! newest message per neighbor, empties the buffer, updates its block with
//! the operator, and broadcasts. DGD nodes exchange raw iterates `x_j`;
//! DGD-ATC nodes exchange the adapted values `y_j = x_j − α∇f_j(x_j)`, each
//! computed once at the sender and never recomputed by receivers.
//!
//! A collector assigns global iteration indices in update order (an atomic
//! counter claimed at update completion, before the broadcast, so the order
//! is consistent with message causality) and reconstructs a [`Trace`] whose
//! staleness indices always satisfy `s_ij^k ≤ k`. [`super::replay`] on the
//! result is the fidelity check that the reconstruction is faithful.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crossbeam::channel::{unbounded, Receiver, RecvTimeoutError, Select, Sender};
use nalgebra::DVector;

use super::{realized_constants, EngineError, Trace, TraceEvent, TraceMeta};
use crate::operators::{AlgorithmKind, AlgorithmSpec, OperatorError, StackedState};

/// When nodes fire. A node activates as soon as its buffer is non-empty;
/// that is the only policy implemented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ActivationPolicy {
    #[default]
    BufferNonEmpty,
}

#[derive(Debug, Clone)]
pub enum LiveTermination {
    /// Run for a fixed wall-clock budget.
    Duration(Duration),
    /// Stop once the reconstructed state is within `tol` of `x_star` in
    /// block-max distance; error with [`EngineError::Timeout`] at `cap`.
    Target {
        x_star: StackedState,
        tol: f64,
        cap: Duration,
    },
}

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub x0: StackedState,
    pub termination: LiveTermination,
    /// Optional artificial latency injected on one undirected edge
    /// (per message, both directions).
    pub link_delay: Option<((usize, usize), Duration)>,
    pub activation: ActivationPolicy,
}

struct NodeMsg {
    seq: u64,
    value: DVector<f64>,
}

struct UpdateEvent {
    order: u64,
    node: usize,
    value: DVector<f64>,
    /// (neighbor, message seq used), ascending neighbor order
    used: Vec<(usize, u64)>,
}

/// A node's endpoints: inbox receivers per in-edge (ascending neighbor
/// order), outbox senders per out-edge, and the event channel.
struct NodeChannels {
    inboxes: Vec<(usize, Receiver<NodeMsg>)>,
    outboxes: Vec<Sender<NodeMsg>>,
    events: Sender<UpdateEvent>,
}

fn worker(
    spec: &AlgorithmSpec,
    node: usize,
    x0_block: DVector<f64>,
    channels: NodeChannels,
    counter: &AtomicU64,
    stop: &AtomicBool,
) {
    let NodeChannels {
        inboxes,
        outboxes,
        events,
    } = channels;
    let n = spec.node_count();
    let d = spec.dim();
    let kind = spec.kind();
    let mut x = x0_block;
    let mut own_y = match kind {
        AlgorithmKind::Dgd => x.clone(),
        AlgorithmKind::DgdAtc => spec.gradient_step(node, &x),
    };
    let mut seq: u64 = 0;
    for tx in &outboxes {
        let _ = tx.send(NodeMsg {
            seq,
            value: own_y.clone(),
        });
    }

    let mut freshest: HashMap<usize, (u64, DVector<f64>)> = HashMap::new();
    let mut select = Select::new();
    for (_, rx) in &inboxes {
        select.recv(rx);
    }

    while !stop.load(Ordering::Relaxed) {
        if inboxes.is_empty() {
            std::thread::sleep(Duration::from_millis(1));
            continue;
        }
        if select.ready_timeout(Duration::from_millis(1)).is_err() {
            continue;
        }
        let mut new_msgs = 0usize;
        for (j, rx) in &inboxes {
            while let Ok(msg) = rx.try_recv() {
                new_msgs += 1;
                let newer = freshest.get(j).is_none_or(|(s, _)| msg.seq > *s);
                if newer {
                    freshest.insert(*j, (msg.seq, msg.value));
                }
            }
        }
        if new_msgs == 0 {
            continue;
        }
        // first activation only after one message from every neighbor
        if freshest.len() < inboxes.len() {
            continue;
        }

        let mut z = StackedState::zeros(n, d);
        let mut used = Vec::with_capacity(inboxes.len());
        for (j, _) in &inboxes {
            let (s, v) = &freshest[j];
            used.push((*j, *s));
            z.set_block(*j, v.clone());
        }
        x = match kind {
            AlgorithmKind::Dgd => {
                z.set_block(node, x.clone());
                spec.apply_block(node, &z).expect("validated dimensions")
            }
            AlgorithmKind::DgdAtc => {
                z.set_block(node, own_y.clone());
                spec.mix(node, &z).expect("validated dimensions")
            }
        };
        if kind == AlgorithmKind::DgdAtc {
            own_y = spec.gradient_step(node, &x);
        }

        let order = counter.fetch_add(1, Ordering::SeqCst);
        let _ = events.send(UpdateEvent {
            order,
            node,
            value: x.clone(),
            used,
        });
        seq += 1;
        let payload = match kind {
            AlgorithmKind::Dgd => x.clone(),
            AlgorithmKind::DgdAtc => own_y.clone(),
        };
        for tx in &outboxes {
            let _ = tx.send(NodeMsg {
                seq,
                value: payload.clone(),
            });
        }
    }
}

// Propagation-delay link model: every message is delivered `lag` after its
// arrival at the link, order preserved, messages in flight concurrently.
// Deadlines are stamped at arrival, so a sender firing faster than 1/lag
// does not stack delays into an unbounded backlog.
fn relay(rx: Receiver<NodeMsg>, tx: Sender<NodeMsg>, lag: Duration, stop: &AtomicBool) {
    let mut queue: std::collections::VecDeque<(Instant, NodeMsg)> = Default::default();
    let mut open = true;
    while open || !queue.is_empty() {
        if stop.load(Ordering::Relaxed) {
            // shutdown: deliver everything without pacing
            while let Some((_, m)) = queue.pop_front() {
                if tx.send(m).is_err() {
                    return;
                }
            }
            match rx.recv() {
                Ok(m) => {
                    if tx.send(m).is_err() {
                        return;
                    }
                }
                Err(_) => return,
            }
            continue;
        }
        let now = Instant::now();
        while queue.front().is_some_and(|(due, _)| *due <= now) {
            let (_, m) = queue.pop_front().expect("checked front");
            if tx.send(m).is_err() {
                return;
            }
        }
        let wait = queue.front().map_or(Duration::from_millis(1), |(due, _)| {
            due.saturating_duration_since(Instant::now())
                .min(Duration::from_millis(1))
        });
        if open {
            match rx.recv_timeout(wait) {
                Ok(m) => queue.push_back((Instant::now() + lag, m)),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => open = false,
            }
        } else {
            std::thread::sleep(wait);
        }
    }
}

/// Runs the buffered message-passing loop with one worker per node and
/// reconstructs an iteration-indexed trace.
pub fn run_live(spec: &AlgorithmSpec, opts: &LiveOptions) -> Result<Trace, EngineError> {
    let n = spec.node_count();
    let d = spec.dim();
    let ActivationPolicy::BufferNonEmpty = opts.activation;
    if opts.x0.node_count() != n || opts.x0.dim() != d {
        return Err(EngineError::Operator(OperatorError::DimensionMismatch(
            format!(
                "initial state {}x{} vs spec {}x{}",
                opts.x0.node_count(),
                opts.x0.dim(),
                n,
                d
            ),
        )));
    }
    let w = spec.weights().matrix();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && w[(i, j)] != 0.0)
                .collect::<Vec<_>>()
        })
        .collect();
    if let Some(((a, b), _)) = opts.link_delay {
        if a >= n || b >= n || w[(a, b)] == 0.0 || a == b {
            return Err(EngineError::ScheduleSpecMismatch(format!(
                "link delay names a non-edge ({a},{b})"
            )));
        }
    }

    let mut outboxes: Vec<Vec<Sender<NodeMsg>>> = (0..n).map(|_| Vec::new()).collect();
    let mut inboxes: Vec<Vec<(usize, Receiver<NodeMsg>)>> = (0..n).map(|_| Vec::new()).collect();
    let mut relays: Vec<(Receiver<NodeMsg>, Sender<NodeMsg>, Duration)> = Vec::new();
    for u in 0..n {
        for &v in &neighbors[u] {
            let (tx, rx) = unbounded();
            let delayed = opts
                .link_delay
                .filter(|((a, b), _)| (u == *a && v == *b) || (u == *b && v == *a));
            match delayed {
                Some((_, lag)) => {
                    let (tx_in, rx_in) = unbounded();
                    relays.push((rx_in, tx, lag));
                    outboxes[u].push(tx_in);
                }
                None => outboxes[u].push(tx),
            }
            inboxes[v].push((u, rx));
        }
    }
    for list in &mut inboxes {
        list.sort_by_key(|(j, _)| *j);
    }

    let (tx_event, rx_event) = unbounded();
    let counter = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let cap = match &opts.termination {
        LiveTermination::Duration(dur) => *dur,
        LiveTermination::Target { cap, x_star, .. } => {
            if x_star.node_count() != n || x_star.dim() != d {
                return Err(EngineError::Operator(OperatorError::DimensionMismatch(
                    format!(
                        "target state {}x{} vs spec {}x{}",
                        x_star.node_count(),
                        x_star.dim(),
                        n,
                        d
                    ),
                )));
            }
            *cap
        }
    };

    let mut processed: Vec<UpdateEvent> = Vec::new();
    let mut reached: Option<usize> = None;
    let mut panicked = false;

    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(n);
        let mut inboxes = inboxes;
        let mut outboxes = outboxes;
        for i in (0..n).rev() {
            let channels = NodeChannels {
                inboxes: inboxes.pop().expect("one inbox set per node"),
                outboxes: outboxes.pop().expect("one outbox set per node"),
                events: tx_event.clone(),
            };
            let x0_block = opts.x0.block(i).clone();
            let counter = &counter;
            let stop = &stop;
            handles.push(scope.spawn(move || worker(spec, i, x0_block, channels, counter, stop)));
        }
        for (rx, tx, lag) in relays {
            let stop = &stop;
            scope.spawn(move || relay(rx, tx, lag, stop));
        }
        drop(tx_event);

        let start = Instant::now();
        let mut buffer: BTreeMap<u64, UpdateEvent> = BTreeMap::new();
        let mut next_order: u64 = 0;
        let mut current = opts.x0.clone();
        loop {
            if start.elapsed() >= cap {
                stop.store(true, Ordering::SeqCst);
            }
            match rx_event.recv_timeout(Duration::from_millis(5)) {
                Ok(ev) => {
                    buffer.insert(ev.order, ev);
                    while let Some(ev) = buffer.remove(&next_order) {
                        current.set_block(ev.node, ev.value.clone());
                        processed.push(ev);
                        next_order += 1;
                        if let LiveTermination::Target { x_star, tol, .. } = &opts.termination {
                            if reached.is_none() {
                                let dist = current
                                    .block_max_distance(x_star)
                                    .expect("validated dimensions");
                                if dist <= *tol {
                                    reached = Some(processed.len());
                                    stop.store(true, Ordering::SeqCst);
                                }
                            }
                        }
                    }
                }
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }
        for h in handles {
            if h.join().is_err() {
                panicked = true;
            }
        }
        if !buffer.is_empty() {
            panicked = true; // a gap in the order sequence cannot happen
        }
    });
    if panicked {
        return Err(EngineError::WorkerPanic);
    }

    // reconstruct iteration-indexed states and staleness maps
    let mut states = Vec::with_capacity(processed.len() + 1);
    states.push(opts.x0.clone());
    let mut update_iters: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut events = Vec::with_capacity(processed.len());
    for (k, ev) in processed.iter().enumerate() {
        let mut staleness = Vec::with_capacity(ev.used.len());
        for &(j, q) in &ev.used {
            let s = if q == 0 {
                0
            } else {
                let iters = &update_iters[j];
                let idx = (q - 1) as usize;
                if idx >= iters.len() {
                    return Err(EngineError::CorruptTrace(format!(
                        "node {k} used a message from {j} with seq {q} before that update"
                    )));
                }
                iters[idx] + 1
            };
            if s > k {
                return Err(EngineError::CorruptTrace(format!(
                    "reconstructed staleness {s} exceeds iteration {k}"
                )));
            }
            staleness.push((j, s));
        }
        let mut next = states[k].clone();
        next.set_block(ev.node, ev.value.clone());
        states.push(next);
        update_iters[ev.node].push(k);
        events.push(TraceEvent {
            k,
            node: ev.node,
            staleness,
        });
    }

    if let LiveTermination::Target { .. } = &opts.termination {
        match reached {
            None => return Err(EngineError::Timeout),
            Some(state_idx) => {
                // keep the prefix up to the first crossing; later in-flight
                // updates may use stale data and momentarily leave the ball
                states.truncate(state_idx + 1);
                events.truncate(state_idx);
            }
        }
    }

    let horizon = states.len() - 1;
    let (realized_b, realized_d) = realized_constants(n, horizon, &events);
    Ok(Trace {
        states,
        events,
        realized_b,
        realized_d,
        meta: TraceMeta {
            kind: spec.kind(),
            alpha: spec.alpha(),
            n,
            dim: d,
        },
    })
}
