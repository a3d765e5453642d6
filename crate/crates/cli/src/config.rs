//! Versioned JSON experiment configuration and its resolution into runtime
//! objects. All randomness flows from the single top-level seed through
//! named sub-seeds (objective, partition, schedule, init).

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use asyncdgd_core::objectives::{Dataset, ObjectiveError, ObjectiveSuite};
use asyncdgd_core::operators::{
    default_step_size, max_step_size, AlgorithmKind, AlgorithmSpec, OperatorError, StackedState,
};
use asyncdgd_core::schedule::{ScheduleError, ScheduleMode};
use asyncdgd_core::topology::{Graph, TopologyError, Weights};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {found} (this build reads {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("config field error: {0}")]
    Field(String),
    #[error(
        "step size {alpha} violates the admissible bound {bound} for {kind}; \
         set unsafe_step_override to probe divergence"
    )]
    InadmissibleAlpha {
        alpha: f64,
        bound: f64,
        kind: String,
    },
    #[error("sweep value list is empty")]
    EmptySweep,
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphConfig {
    Ring { n: usize },
    Path { n: usize },
    Complete { n: usize },
    RandomGnp { n: usize, p: f64 },
    EdgeFile { n: usize, path: PathBuf },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    Metropolis,
    Lazy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveConfig {
    /// Per-node random PSD quadratics with spectra in `[spectrum.0, spectrum.1]`.
    QuadraticRandom { d: usize, spectrum: (f64, f64) },
    /// Synthetic logistic task: Gaussian features, planted separator.
    LogisticSynthetic {
        samples: usize,
        d: usize,
        lambda: f64,
    },
    /// LIBSVM text file; `digit` selects one-vs-rest for multiclass labels.
    LogisticFile {
        path: PathBuf,
        lambda: f64,
        #[serde(default)]
        digit: Option<i64>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmChoice {
    Dgd,
    DgdAtc,
}

impl From<AlgorithmChoice> for AlgorithmKind {
    fn from(c: AlgorithmChoice) -> Self {
        match c {
            AlgorithmChoice::Dgd => AlgorithmKind::Dgd,
            AlgorithmChoice::DgdAtc => AlgorithmKind::DgdAtc,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum AlphaPolicy {
    /// `min_i w_ii / max_i L_i` (DGD) or `1 / max_i L_i` (DGD-ATC).
    Default,
    /// The admissibility bound itself; inadmissible, needs the override.
    Max,
    Explicit {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ScheduleConfig {
    Synchronous,
    Partial { b: usize, d: usize },
    Total,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Sim,
    Live,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitConfig {
    #[default]
    Zeros,
    Gaussian {
        scale: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiveConfig {
    /// Wall-clock cap in milliseconds.
    pub duration_ms: u64,
    /// Stop at this block-max distance to the precomputed fixed point.
    #[serde(default)]
    pub target_tol: Option<f64>,
    /// Inject per-message latency on one undirected edge.
    #[serde(default)]
    pub link_delay_edge: Option<(usize, usize)>,
    #[serde(default)]
    pub link_delay_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub fixed_point: f64,
    pub lyapunov: f64,
    pub centralized: f64,
    pub oracle_agreement: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fixed_point: 1e-10,
            lyapunov: 1e-8,
            centralized: 1e-10,
            oracle_agreement: 1e-6,
            max_iter: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub graph: GraphConfig,
    pub weights: WeightScheme,
    /// Shift `W ← (I + W)/2` automatically when DGD-ATC needs `W ≻ 0`.
    #[serde(default = "default_true")]
    pub atc_auto_shift: bool,
    pub objective: ObjectiveConfig,
    pub algorithm: AlgorithmChoice,
    pub alpha: AlphaPolicy,
    #[serde(default)]
    pub unsafe_step_override: bool,
    pub schedule: ScheduleConfig,
    pub horizon: usize,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
    #[serde(default)]
    pub live: Option<LiveConfig>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_true() -> bool {
    true
}

fn default_mode() -> RunMode {
    RunMode::Sim
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion {
                found: cfg.schema_version,
            });
        }
        Ok(cfg)
    }
}

/// Deterministic named sub-seed derivation from the top-level seed.
pub fn sub_seed(seed: u64, tag: &str) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for b in tag.bytes() {
        h = (h.rotate_left(5) ^ u64::from(b)).wrapping_mul(0x2545_F491_4F6C_DD1D);
    }
    h
}

/// Quadratic `(A_i, b_i)` terms kept around for the linear-system oracle.
pub type QuadraticTerms = (Vec<DMatrix<f64>>, Vec<DVector<f64>>);

/// Everything needed to run and analyze one experiment.
pub struct Resolved {
    pub graph: Graph,
    pub weights: Weights,
    pub weights_shifted: bool,
    pub suite: ObjectiveSuite,
    /// Quadratic matrices kept for the direct linear-system oracle.
    pub quadratic_terms: Option<QuadraticTerms>,
    pub spec: AlgorithmSpec,
    pub alpha: f64,
    pub alpha_max: f64,
    pub alpha_default: f64,
    pub schedule_mode: ScheduleMode,
    pub x0: StackedState,
    pub config: ExperimentConfig,
}

fn build_graph(cfg: &GraphConfig, seed: u64, base_dir: &Path) -> Result<Graph, ConfigError> {
    Ok(match cfg {
        GraphConfig::Ring { n } => Graph::ring(*n)?,
        GraphConfig::Path { n } => Graph::path(*n)?,
        GraphConfig::Complete { n } => Graph::complete(*n)?,
        GraphConfig::RandomGnp { n, p } => Graph::random_gnp(*n, *p, sub_seed(seed, "graph"))?,
        GraphConfig::EdgeFile { n, path } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::Io {
                path: full.clone(),
                source,
            })?;
            let edges = parse_edge_list(&text)
                .map_err(|e| ConfigError::Field(format!("{}: {e}", full.display())))?;
            Graph::new(*n, &edges)?
        }
    })
}

/// Edge-list text: one `i j` pair per line, 0-based, `#` comments allowed.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>, String> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let a: usize = parts
            .next()
            .ok_or_else(|| format!("line {}: missing endpoint", lineno + 1))?
            .parse()
            .map_err(|_| format!("line {}: bad endpoint", lineno + 1))?;
        let b: usize = parts
            .next()
            .ok_or_else(|| format!("line {}: missing endpoint", lineno + 1))?
            .parse()
            .map_err(|_| format!("line {}: bad endpoint", lineno + 1))?;
        if parts.next().is_some() {
            return Err(format!("line {}: trailing tokens", lineno + 1));
        }
        edges.push((a, b));
    }
    Ok(edges)
}

fn build_suite(
    cfg: &ObjectiveConfig,
    n: usize,
    seed: u64,
    base_dir: &Path,
) -> Result<(ObjectiveSuite, Option<QuadraticTerms>), ConfigError> {
    match cfg {
        ObjectiveConfig::QuadraticRandom { d, spectrum } => {
            if !(spectrum.0 > 0.0 && spectrum.1 >= spectrum.0) {
                return Err(ConfigError::Field(format!(
                    "quadratic spectrum [{}, {}] must be positive and ordered",
                    spectrum.0, spectrum.1
                )));
            }
            let mut rng = crate::rng::chacha(sub_seed(seed, "objective"));
            let a_list: Vec<DMatrix<f64>> = (0..n)
                .map(|_| crate::rng::random_psd(*d, *spectrum, &mut rng))
                .collect();
            let b_list: Vec<DVector<f64>> = (0..n)
                .map(|_| DVector::from_fn(*d, |_, _| crate::rng::standard_normal(&mut rng)))
                .collect();
            let suite = ObjectiveSuite::quadratic(a_list.clone(), b_list.clone())?;
            Ok((suite, Some((a_list, b_list))))
        }
        ObjectiveConfig::LogisticSynthetic { samples, d, lambda } => {
            let ds = Dataset::synthetic_logistic(*samples, *d, sub_seed(seed, "objective"));
            let parts = ds.partition(n, sub_seed(seed, "partition"))?;
            let suite = ObjectiveSuite::logistic(parts, *lambda, ds.len())?;
            Ok((suite, None))
        }
        ObjectiveConfig::LogisticFile {
            path,
            lambda,
            digit,
        } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::Io {
                path: full.clone(),
                source,
            })?;
            let ds = crate::formats::parse_libsvm(&text, *digit)
                .map_err(|e| ConfigError::Field(format!("{}: {e}", full.display())))?;
            let parts = ds.partition(n, sub_seed(seed, "partition"))?;
            let suite = ObjectiveSuite::logistic(parts, *lambda, ds.len())?;
            Ok((suite, None))
        }
    }
}

pub fn resolve(config: ExperimentConfig, base_dir: &Path) -> Result<Resolved, ConfigError> {
    let graph = build_graph(&config.graph, config.seed, base_dir)?;
    let n = graph.node_count();
    let mut weights = match config.weights {
        WeightScheme::Metropolis => Weights::metropolis(&graph)?,
        WeightScheme::Lazy => Weights::lazy_laplacian(&graph)?,
    };
    let kind: AlgorithmKind = config.algorithm.into();
    let mut weights_shifted = false;
    if kind == AlgorithmKind::DgdAtc && config.atc_auto_shift && !weights.is_positive_definite() {
        weights = weights.ensure_positive_definite()?;
        weights_shifted = true;
    }

    let (suite, quadratic_terms) = build_suite(&config.objective, n, config.seed, base_dir)?;

    let alpha_max = max_step_size(kind, &weights, &suite)?;
    let alpha_default = default_step_size(kind, &weights, &suite)?;
    let alpha = match config.alpha {
        AlphaPolicy::Default => alpha_default,
        AlphaPolicy::Max => alpha_max,
        AlphaPolicy::Explicit { value } => value,
    };
    let spec = if config.unsafe_step_override {
        AlgorithmSpec::new_unchecked(kind, alpha, weights.clone(), suite.clone())?
    } else {
        AlgorithmSpec::new(kind, alpha, weights.clone(), suite.clone()).map_err(|e| match e {
            OperatorError::InadmissibleStep { alpha, bound } => ConfigError::InadmissibleAlpha {
                alpha,
                bound,
                kind: kind.to_string(),
            },
            other => ConfigError::Operator(other),
        })?
    };

    let schedule_mode = match config.schedule {
        ScheduleConfig::Synchronous => ScheduleMode::Synchronous,
        ScheduleConfig::Partial { b, d } => ScheduleMode::Partial { b, d },
        ScheduleConfig::Total => ScheduleMode::Total,
    };

    let d = suite.dim();
    let x0 = match config.init {
        InitConfig::Zeros => StackedState::zeros(n, d),
        InitConfig::Gaussian { scale } => {
            let mut rng = crate::rng::chacha(sub_seed(config.seed, "init"));
            StackedState::from_blocks(
                (0..n)
                    .map(|_| {
                        DVector::from_fn(d, |_, _| scale * crate::rng::standard_normal(&mut rng))
                    })
                    .collect(),
            )?
        }
    };

    if config.horizon == 0 && config.mode == RunMode::Sim {
        return Err(ConfigError::Field("horizon must be at least 1".into()));
    }
    if config.mode == RunMode::Live && config.live.is_none() {
        return Err(ConfigError::Field(
            "mode \"live\" requires a live section".into(),
        ));
    }

    Ok(Resolved {
        graph,
        weights,
        weights_shifted,
        suite,
        quadratic_terms,
        spec,
        alpha,
        alpha_max,
        alpha_default,
        schedule_mode,
        x0,
        config,
    })
}
