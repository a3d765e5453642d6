//! Activation sets `K_i` and information-delay maps `s_ij^k`.
//!
//! A schedule fixes, for every iteration `k` below a horizon, which nodes
//! update and which past iteration index each updating node reads from each
//! neighbor. Three regimes are generated:
//!
//! - `Synchronous`: everyone updates every iteration with fresh data
//!   (`s_ij^k = k`).
//! - `Partial { b, d }`: every window of `b + 1` consecutive iterations
//!   contains an update of every node, and delays never exceed `d`
//!   (`k − d ≤ s_ij^k ≤ k`). `Partial { 0, 0 }` is exactly the synchronous
//!   schedule.
//! - `Total`: update gaps and delays both grow without bound (delay amount
//!   `min(k, ⌈√k⌉)`), while every node keeps updating and stale information
//!   keeps being refreshed — the weakest assumptions under which the methods
//!   still converge.
//!
//! Schedules validate their own invariants before being returned, and can be
//! written to / read from a plain text format (one event per line:
//! `k i s_1 … s_m`, staleness values in ascending neighbor order) that doubles
//! as the replay log for live runs.

use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::topology::Graph;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("window bound B={b} is infeasible for horizon {horizon}")]
    InfeasibleWindow { b: usize, horizon: usize },
    #[error("schedule validation failed: {0}")]
    ValidationFailed(String),
    #[error("malformed schedule text at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Synchronous,
    /// Bounded update interval `b` and bounded information delay `d`.
    Partial {
        b: usize,
        d: usize,
    },
    /// Unbounded delays and update gaps, growing like `⌈√k⌉`.
    Total,
    /// Loaded from a replay log; only the universal invariants are checked.
    Recorded,
}

impl std::fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleMode::Synchronous => write!(f, "synchronous"),
            ScheduleMode::Partial { b, d } => write!(f, "partial(B={b},D={d})"),
            ScheduleMode::Total => write!(f, "total"),
            ScheduleMode::Recorded => write!(f, "recorded"),
        }
    }
}

/// One node's update at some iteration: the staleness entry `(j, s_ij^k)`
/// lists, in ascending neighbor order, which past iterate of each neighbor
/// the node reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledUpdate {
    pub node: usize,
    pub staleness: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    n: usize,
    horizon: usize,
    mode: ScheduleMode,
    seed: u64,
    steps: Vec<Vec<ScheduledUpdate>>,
}

impl Schedule {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Updates performed at iteration `k`.
    pub fn step(&self, k: usize) -> &[ScheduledUpdate] {
        &self.steps[k]
    }

    pub fn steps(&self) -> &[Vec<ScheduledUpdate>] {
        &self.steps
    }

    /// Iterations at which node `i` updates.
    pub fn activations(&self, i: usize) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, ups)| ups.iter().any(|u| u.node == i))
            .map(|(k, _)| k)
            .collect()
    }

    /// Checks every schedule invariant against the graph: staleness entries
    /// cover exactly the neighbor sets, `0 ≤ s_ij^k ≤ k`, and the
    /// mode-specific window/delay/growth conditions.
    pub fn validate(&self, graph: &Graph) -> Result<(), ScheduleError> {
        if graph.node_count() != self.n {
            return Err(ScheduleError::ValidationFailed(format!(
                "graph has {} nodes, schedule {}",
                graph.node_count(),
                self.n
            )));
        }
        if self.horizon == 0 || self.steps.len() != self.horizon {
            return Err(ScheduleError::ValidationFailed(
                "horizon does not match steps".into(),
            ));
        }
        for (k, ups) in self.steps.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for u in ups {
                if u.node >= self.n {
                    return Err(ScheduleError::ValidationFailed(format!(
                        "node {} out of range at k={k}",
                        u.node
                    )));
                }
                if !seen.insert(u.node) {
                    return Err(ScheduleError::ValidationFailed(format!(
                        "node {} updates twice at k={k}",
                        u.node
                    )));
                }
                let expected = graph.neighbors(u.node);
                if u.staleness.len() != expected.len()
                    || u.staleness.iter().zip(expected).any(|(&(j, _), &e)| j != e)
                {
                    return Err(ScheduleError::ValidationFailed(format!(
                        "staleness entries of node {} at k={k} do not match its neighbor list",
                        u.node
                    )));
                }
                for &(j, s) in &u.staleness {
                    if s > k {
                        return Err(ScheduleError::ValidationFailed(format!(
                            "s_({},{})^{k} = {s} exceeds k",
                            u.node, j
                        )));
                    }
                }
            }
        }
        match self.mode {
            ScheduleMode::Synchronous => self.validate_partial(0, 0),
            ScheduleMode::Partial { b, d } => self.validate_partial(b, d),
            ScheduleMode::Total => self.validate_total(),
            ScheduleMode::Recorded => Ok(()),
        }
    }

    fn validate_partial(&self, b: usize, d: usize) -> Result<(), ScheduleError> {
        for i in 0..self.n {
            let acts = self.activations(i);
            let mut prev: Option<usize> = None;
            for &a in &acts {
                let gap_ok = match prev {
                    None => a <= b,
                    Some(p) => a - p <= b + 1,
                };
                if !gap_ok {
                    return Err(ScheduleError::ValidationFailed(format!(
                        "node {i} misses the window of length B+1={} before k={a}",
                        b + 1
                    )));
                }
                prev = Some(a);
            }
            match prev {
                None => {
                    return Err(ScheduleError::ValidationFailed(format!(
                        "node {i} never updates"
                    )))
                }
                Some(last) if self.horizon - 1 - last > b => {
                    return Err(ScheduleError::ValidationFailed(format!(
                        "node {i} stops updating after k={last}"
                    )))
                }
                _ => {}
            }
        }
        for (k, ups) in self.steps.iter().enumerate() {
            for u in ups {
                for &(j, s) in &u.staleness {
                    if k - s > d {
                        return Err(ScheduleError::ValidationFailed(format!(
                            "delay {} on edge ({},{j}) at k={k} exceeds D={d}",
                            k - s,
                            u.node
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_total(&self) -> Result<(), ScheduleError> {
        // every node keeps updating, staleness indices are nondecreasing and
        // (for long horizons) actually grow
        let mut last_s = vec![std::collections::HashMap::new(); self.n];
        let mut first_s: Vec<Option<usize>> = vec![None; self.n];
        let mut max_s = vec![0usize; self.n];
        for (k, ups) in self.steps.iter().enumerate() {
            for u in ups {
                for &(j, s) in &u.staleness {
                    if let Some(&prev) = last_s[u.node].get(&j) {
                        if s < prev {
                            return Err(ScheduleError::ValidationFailed(format!(
                                "s_({},{j}) decreases at k={k}",
                                u.node
                            )));
                        }
                    }
                    last_s[u.node].insert(j, s);
                    if first_s[u.node].is_none() {
                        first_s[u.node] = Some(s);
                    }
                    max_s[u.node] = max_s[u.node].max(s);
                }
            }
        }
        for i in 0..self.n {
            let acts = self.activations(i);
            if acts.is_empty() {
                return Err(ScheduleError::ValidationFailed(format!(
                    "node {i} never updates"
                )));
            }
            if self.horizon >= 128 {
                let grown = max_s[i] > first_s[i].unwrap_or(0) + self.horizon / 8;
                if !grown {
                    return Err(ScheduleError::ValidationFailed(format!(
                        "staleness of node {i} does not grow over the horizon"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes the text form: one update per line, `k i s_1 … s_m`.
    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        for (k, ups) in self.steps.iter().enumerate() {
            for u in ups {
                write!(w, "{k} {}", u.node)?;
                for &(_, s) in &u.staleness {
                    write!(w, " {s}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Reads the text form back. The neighbor ids for each staleness column
    /// come from the graph; the resulting schedule has mode [`ScheduleMode::Recorded`]
    /// unless all events are fresh-and-everyone, in which case mode is kept
    /// `Recorded` anyway (the mode is not stored in the file).
    pub fn read_text(
        r: impl BufRead,
        graph: &Graph,
        horizon: usize,
    ) -> Result<Schedule, ScheduleError> {
        let n = graph.node_count();
        let mut steps: Vec<Vec<ScheduledUpdate>> = vec![Vec::new(); horizon];
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| ScheduleError::ParseError {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>, what: &str| -> Result<usize, ScheduleError> {
                tok.ok_or_else(|| ScheduleError::ParseError {
                    line: lineno + 1,
                    reason: format!("missing {what}"),
                })?
                .parse()
                .map_err(|_| ScheduleError::ParseError {
                    line: lineno + 1,
                    reason: format!("bad {what}"),
                })
            };
            let k = parse(parts.next(), "iteration")?;
            let node = parse(parts.next(), "node")?;
            if k >= horizon || node >= n {
                return Err(ScheduleError::ParseError {
                    line: lineno + 1,
                    reason: format!("k={k} or node={node} out of range"),
                });
            }
            let neighbors = graph.neighbors(node);
            let mut staleness = Vec::with_capacity(neighbors.len());
            for &j in neighbors {
                let s = parse(parts.next(), "staleness value")?;
                staleness.push((j, s));
            }
            if parts.next().is_some() {
                return Err(ScheduleError::ParseError {
                    line: lineno + 1,
                    reason: "trailing tokens".into(),
                });
            }
            steps[k].push(ScheduledUpdate { node, staleness });
        }
        for ups in &mut steps {
            ups.sort_by_key(|u| u.node);
        }
        let sched = Schedule {
            n,
            horizon,
            mode: ScheduleMode::Recorded,
            seed: 0,
            steps,
        };
        sched.validate(graph)?;
        Ok(sched)
    }

    /// Wraps recorded per-iteration updates (e.g. reconstructed from a live
    /// run) into a schedule after validating the universal invariants.
    pub fn from_recorded(
        graph: &Graph,
        steps: Vec<Vec<ScheduledUpdate>>,
    ) -> Result<Schedule, ScheduleError> {
        let sched = Schedule {
            n: graph.node_count(),
            horizon: steps.len(),
            mode: ScheduleMode::Recorded,
            seed: 0,
            steps,
        };
        if sched.horizon == 0 {
            return Err(ScheduleError::EmptyHorizon);
        }
        sched.validate(graph)?;
        Ok(sched)
    }
}

fn ceil_sqrt(k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    let mut r = (k as f64).sqrt() as usize;
    while r * r < k {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= k {
        r -= 1;
    }
    r
}

fn floor_sqrt(k: usize) -> usize {
    let mut r = (k as f64).sqrt() as usize;
    while (r + 1) * (r + 1) <= k {
        r += 1;
    }
    while r * r > k {
        r -= 1;
    }
    r
}

/// Generates a schedule of the requested mode and validates it before
/// returning.
pub fn make_schedule(
    mode: ScheduleMode,
    graph: &Graph,
    horizon: usize,
    seed: u64,
) -> Result<Schedule, ScheduleError> {
    if horizon == 0 {
        return Err(ScheduleError::EmptyHorizon);
    }
    let n = graph.node_count();
    let steps = match mode {
        ScheduleMode::Synchronous => synchronous_steps(graph, horizon),
        ScheduleMode::Partial { b, d } => {
            if b + 1 > horizon {
                return Err(ScheduleError::InfeasibleWindow { b, horizon });
            }
            partial_steps(graph, horizon, b, d, seed)
        }
        ScheduleMode::Total => total_steps(graph, horizon),
        ScheduleMode::Recorded => {
            return Err(ScheduleError::ValidationFailed(
                "recorded schedules are built from event logs, not generated".into(),
            ))
        }
    };
    let sched = Schedule {
        n,
        horizon,
        mode,
        seed,
        steps,
    };
    sched.validate(graph)?;
    Ok(sched)
}

fn fresh_update(graph: &Graph, i: usize, k: usize) -> ScheduledUpdate {
    ScheduledUpdate {
        node: i,
        staleness: graph.neighbors(i).iter().map(|&j| (j, k)).collect(),
    }
}

fn synchronous_steps(graph: &Graph, horizon: usize) -> Vec<Vec<ScheduledUpdate>> {
    (0..horizon)
        .map(|k| {
            (0..graph.node_count())
                .map(|i| fresh_update(graph, i, k))
                .collect()
        })
        .collect()
}

/// Random activations conditioned to satisfy the window property: a node
/// activates spontaneously with probability 1/2 and is forced whenever its
/// deadline (last activation + B + 1) arrives. Delays are uniform on
/// `[max(0, k − D), k]`.
fn partial_steps(
    graph: &Graph,
    horizon: usize,
    b: usize,
    d: usize,
    seed: u64,
) -> Vec<Vec<ScheduledUpdate>> {
    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // deadline semantics: with no activation yet, the window {0..B} forces an
    // update at k = B at the latest
    let mut deadline: Vec<usize> = vec![b; n];
    let mut steps = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let mut ups = Vec::new();
        for (i, next_forced) in deadline.iter_mut().enumerate() {
            let forced = k == *next_forced;
            let spontaneous = b > 0 && rng.random::<f64>() < 0.5;
            if forced || spontaneous {
                let staleness = graph
                    .neighbors(i)
                    .iter()
                    .map(|&j| {
                        let lo = k.saturating_sub(d);
                        (j, rng.random_range(lo..=k))
                    })
                    .collect();
                ups.push(ScheduledUpdate { node: i, staleness });
                *next_forced = k + b + 1;
            }
        }
        steps.push(ups);
    }
    steps
}

/// Totally asynchronous steps: delays grow like `⌈√k⌉` (so `s = k − min(k,
/// ⌈√k⌉)` is unbounded but keeps aging), and per-node update gaps grow like
/// `⌊√k⌋` with a small node-dependent offset.
fn total_steps(graph: &Graph, horizon: usize) -> Vec<Vec<ScheduledUpdate>> {
    let n = graph.node_count();
    let mut next: Vec<usize> = vec![0; n];
    let mut steps = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let mut ups = Vec::new();
        let s = k - ceil_sqrt(k).min(k);
        for (i, next_k) in next.iter_mut().enumerate() {
            if *next_k == k {
                let staleness = graph.neighbors(i).iter().map(|&j| (j, s)).collect();
                ups.push(ScheduledUpdate { node: i, staleness });
                *next_k = k + 1 + floor_sqrt(k + i);
            }
        }
        steps.push(ups);
    }
    steps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_zero_zero_is_synchronous() {
        let g = Graph::ring(5).unwrap();
        let sync = make_schedule(ScheduleMode::Synchronous, &g, 50, 1).unwrap();
        let partial = make_schedule(ScheduleMode::Partial { b: 0, d: 0 }, &g, 50, 1).unwrap();
        assert_eq!(sync.steps(), partial.steps());
    }

    #[test]
    fn partial_two_two_validates() {
        let g = Graph::ring(6).unwrap();
        let sched = make_schedule(ScheduleMode::Partial { b: 2, d: 2 }, &g, 100, 7).unwrap();
        // exhaustive scan: every window of 3 contains an update of every node
        for i in 0..6 {
            let acts = sched.activations(i);
            assert!(!acts.is_empty());
            assert!(acts[0] <= 2, "node {i} first update too late");
            for w in acts.windows(2) {
                assert!(w[1] - w[0] <= 3, "node {i} gap too long");
            }
        }
        // all delays <= 2
        for (k, ups) in sched.steps().iter().enumerate() {
            for u in ups {
                for &(_, s) in &u.staleness {
                    assert!(k - s <= 2);
                }
            }
        }
    }

    #[test]
    fn total_delay_growth() {
        let g = Graph::path(3).unwrap();
        let sched = make_schedule(ScheduleMode::Total, &g, 10_000, 0).unwrap();
        let mut max_delay = 0;
        let mut last_s = 0;
        for (k, ups) in sched.steps().iter().enumerate() {
            for u in ups {
                for &(_, s) in &u.staleness {
                    max_delay = max_delay.max(k - s);
                    last_s = last_s.max(s);
                }
            }
        }
        assert!(
            max_delay <= 100,
            "delay {max_delay} exceeds ceil(sqrt(1e4))"
        );
        assert!(max_delay >= 90, "delays never grew: {max_delay}");
        assert!(last_s >= 9_000, "staleness indices did not climb: {last_s}");
    }

    #[test]
    fn infeasible_window() {
        let g = Graph::path(2).unwrap();
        assert_eq!(
            make_schedule(ScheduleMode::Partial { b: 10, d: 0 }, &g, 5, 0),
            Err(ScheduleError::InfeasibleWindow { b: 10, horizon: 5 })
        );
        assert_eq!(
            make_schedule(ScheduleMode::Synchronous, &g, 0, 0),
            Err(ScheduleError::EmptyHorizon)
        );
    }

    #[test]
    fn text_round_trip() {
        let g = Graph::ring(4).unwrap();
        let sched = make_schedule(ScheduleMode::Partial { b: 2, d: 1 }, &g, 40, 3).unwrap();
        let mut buf = Vec::new();
        sched.write_text(&mut buf).unwrap();
        let parsed = Schedule::read_text(buf.as_slice(), &g, 40).unwrap();
        assert_eq!(parsed.steps(), sched.steps());
    }

    #[test]
    fn rejects_garbage_text() {
        let g = Graph::path(2).unwrap();
        let err = Schedule::read_text("0 0".as_bytes(), &g, 10).unwrap_err();
        assert!(matches!(err, ScheduleError::ParseError { .. }));
        let err = Schedule::read_text("0 0 0 extra".as_bytes(), &g, 10).unwrap_err();
        assert!(matches!(err, ScheduleError::ParseError { .. }));
    }

    #[test]
    fn determinism() {
        let g = Graph::ring(8).unwrap();
        let a = make_schedule(ScheduleMode::Partial { b: 3, d: 2 }, &g, 200, 42).unwrap();
        let b = make_schedule(ScheduleMode::Partial { b: 3, d: 2 }, &g, 200, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sqrt_helpers() {
        for k in 0..2000usize {
            let c = ceil_sqrt(k);
            let f = floor_sqrt(k);
            assert!(f * f <= k && (f + 1) * (f + 1) > k);
            if k > 0 {
                assert!(c * c >= k && (c - 1) * (c - 1) < k);
            }
        }
    }
}
