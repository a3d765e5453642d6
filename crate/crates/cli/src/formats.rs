//! File formats: CSV trace/gap/rate/sweep tables, the JSON run manifest,
//! LIBSVM dataset ingestion, and the plain-text replay log.
//!
//! Float columns use Rust's shortest round-trip representation, so
//! `parse(emit(x)) == x` holds bit-exactly for every CSV we write.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use asyncdgd_core::engine::Trace;
use asyncdgd_core::metrics::RateReport;
use asyncdgd_core::objectives::Dataset;
use asyncdgd_core::operators::GapReport;

use crate::config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_owned(),
        source,
    }
}

/// One update event with the metrics of the state it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub node: usize,
    pub event: String,
    pub delay_max: usize,
    pub dist_fixed_point: Option<f64>,
    pub consensus_err: f64,
    pub objective_gap: Option<f64>,
}

pub fn trace_rows(
    trace: &Trace,
    suite: &asyncdgd_core::objectives::ObjectiveSuite,
    x_star: Option<&asyncdgd_core::operators::StackedState>,
    f_star: Option<f64>,
) -> Vec<TraceRow> {
    let consensus = asyncdgd_core::metrics::consensus_error(trace);
    let training = f_star.map(|f| asyncdgd_core::metrics::training_error(trace, suite, f));
    trace
        .events
        .iter()
        .map(|e| {
            let post = e.k + 1;
            TraceRow {
                k: e.k,
                node: e.node,
                event: "update".into(),
                delay_max: e.max_delay(),
                dist_fixed_point: x_star
                    .map(|xs| trace.states[post].block_max_distance(xs).expect("shapes")),
                consensus_err: consensus[post],
                objective_gap: training.as_ref().map(|t| t[post]),
            }
        })
        .collect()
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, FormatError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub algorithm: String,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub c1: f64,
    pub consensus_bound: f64,
    pub objective_bound: f64,
    pub measured_consensus: f64,
    pub measured_objective_gap: f64,
    pub f_star: f64,
}

pub fn gap_row(algorithm: &str, alpha: f64, report: &GapReport) -> GapRow {
    GapRow {
        algorithm: algorithm.to_owned(),
        alpha,
        beta: report.beta,
        c: report.c,
        c1: report.c1,
        consensus_bound: report.consensus_bound,
        objective_bound: report.objective_bound,
        measured_consensus: report.measured_consensus,
        measured_objective_gap: report.measured_objective_gap,
        f_star: report.f_star,
    }
}

pub fn write_gap_csv(path: &Path, rows: &[GapRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_gap_csv(path: &Path) -> Result<Vec<GapRow>, FormatError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub rho_theory: Option<f64>,
    pub realized_b: usize,
    pub realized_d: usize,
    pub window: Option<usize>,
    pub envelope_violations: Option<usize>,
    pub max_violation_ratio: Option<f64>,
    pub horizon: usize,
    pub terminal_distance: Option<f64>,
}

pub fn rate_row(trace: &Trace, report: Option<&RateReport>, terminal: Option<f64>) -> RateRow {
    RateRow {
        rho_theory: report.map(|r| r.rho_theory),
        realized_b: trace.realized_b,
        realized_d: trace.realized_d,
        window: report.map(RateReport::window),
        envelope_violations: report.map(|r| r.envelope_violations),
        max_violation_ratio: report.map(|r| r.max_violation_ratio),
        horizon: trace.horizon(),
        terminal_distance: terminal,
    }
}

pub fn write_rate_csv(path: &Path, rows: &[RateRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_rate_csv(path: &Path) -> Result<Vec<RateRow>, FormatError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub alpha: f64,
    pub rho: Option<f64>,
    pub terminal_distance: Option<f64>,
    pub terminal_training_error: Option<f64>,
    pub envelope_violations: Option<usize>,
    pub realized_b: usize,
    pub realized_d: usize,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, FormatError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

/// Resolved constants echoed with the config so every bound and rate can be
/// recomputed offline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConstants {
    pub n: usize,
    pub d: usize,
    pub edge_count: usize,
    pub weights_shifted: bool,
    pub alpha: f64,
    pub alpha_max: f64,
    pub alpha_default: f64,
    pub beta: f64,
    pub lambda_min: f64,
    pub self_weights: Vec<f64>,
    pub smoothness: Vec<f64>,
    pub strong_convexity: Vec<f64>,
    pub l_max: f64,
    pub l_mean: f64,
    pub rho: Option<f64>,
    pub f_star: Option<f64>,
    pub z_star: Option<Vec<f64>>,
    pub total_infimum: Option<f64>,
    pub horizon_recorded: usize,
    pub sub_seeds: SubSeeds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubSeeds {
    pub graph: u64,
    pub objective: u64,
    pub partition: u64,
    pub schedule: u64,
    pub init: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub resolved: ResolvedConstants,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, FormatError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Binary-free replay log: one event per line, `k i s_1 … s_m` with
/// staleness values in ascending neighbor order (the schedule text format).
pub fn write_replay_log(path: &Path, trace: &Trace) -> Result<(), FormatError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    for e in &trace.events {
        write!(out, "{} {}", e.k, e.node).map_err(io_err(path))?;
        for &(_, s) in &e.staleness {
            write!(out, " {s}").map_err(io_err(path))?;
        }
        writeln!(out).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(())
}

/// LIBSVM text: `label idx:val idx:val …` with 1-based indices. Labels are
/// normalized to {−1, +1}: ±1 stay, {0, 1} map to {−1, +1}, and any other
/// label set needs `digit` for one-vs-rest reduction.
pub fn parse_libsvm(text: &str, digit: Option<i64>) -> Result<Dataset, String> {
    struct RawSample {
        label: f64,
        entries: Vec<(usize, f64)>,
    }
    let mut raw = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label: f64 = parts
            .next()
            .ok_or_else(|| format!("line {}: empty", lineno + 1))?
            .parse()
            .map_err(|_| format!("line {}: bad label", lineno + 1))?;
        let mut entries = Vec::new();
        for tok in parts {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| format!("line {}: expected idx:val, got {tok:?}", lineno + 1))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| format!("line {}: bad index {idx:?}", lineno + 1))?;
            if idx == 0 {
                return Err(format!("line {}: indices are 1-based", lineno + 1));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| format!("line {}: bad value {val:?}", lineno + 1))?;
            dim = dim.max(idx);
            entries.push((idx - 1, val));
        }
        raw.push(RawSample { label, entries });
    }
    if raw.is_empty() {
        return Err("no samples".into());
    }

    let labels_seen: std::collections::BTreeSet<i64> =
        raw.iter().map(|s| s.label.round() as i64).collect();
    let to_binary = |label: f64| -> Result<f64, String> {
        if let Some(d) = digit {
            return Ok(if label.round() as i64 == d { 1.0 } else { -1.0 });
        }
        if label == 1.0 || label == -1.0 {
            Ok(label)
        } else if label == 0.0 && labels_seen.iter().all(|&l| l == 0 || l == 1) {
            Ok(-1.0)
        } else if label == 2.0 && labels_seen.iter().all(|&l| l == 1 || l == 2) {
            // covtype-style {1, 2} labels
            Ok(-1.0)
        } else {
            Err(format!(
                "label {label} needs a `digit` setting for one-vs-rest reduction"
            ))
        }
    };

    let mut features = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    for s in &raw {
        let mut v = DVector::zeros(dim);
        for &(i, x) in &s.entries {
            v[i] = x;
        }
        features.push(v);
        labels.push(to_binary(s.label)?);
    }
    Dataset::new(features, labels).map_err(|e| e.to_string())
}
