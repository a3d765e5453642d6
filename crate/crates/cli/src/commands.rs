//! Subcommand implementations: `run`, `verify`, `sweep`, `replay`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use nalgebra::{DMatrix, DVector};

use asyncdgd_core::engine::{
    run_async, run_live, ActivationPolicy, EngineError, LiveOptions, LiveTermination, Trace,
};
use asyncdgd_core::metrics::{rate_verdict, summary_text, RateReport};
use asyncdgd_core::objectives::{centralized_solve, ObjectiveError};
use asyncdgd_core::operators::{
    gap_report, lyapunov_oracle, solve_fixed_point, AlgorithmKind, GapReport, OperatorError,
    StackedState,
};
use asyncdgd_core::schedule::{make_schedule, Schedule, ScheduleError};

use crate::config::{
    resolve, sub_seed, AlphaPolicy, ConfigError, ExperimentConfig, GraphConfig, Resolved, RunMode,
    ScheduleConfig,
};
use crate::formats::{self, FormatError, Manifest, ResolvedConstants, SubSeeds};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("verification failed at check: {check}")]
    VerifyFailed { check: String },
    #[error("replay mismatch in {file}")]
    ReplayMismatch { file: String },
}

/// Common CLI overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: Option<RunMode>,
}

fn load_with_overrides(
    config_path: &Path,
    overrides: &Overrides,
) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(mode) = overrides.mode {
        config.mode = mode;
    }
    let out_dir = overrides
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| {
            ConfigError::Field("no output directory (set out_dir or pass --out)".into())
        })?;
    config.out_dir = Some(out_dir.clone());
    Ok((config, out_dir))
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_owned)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Derived quantities of a resolved experiment: contraction factor, fixed
/// point, and centralized optimum, each when they exist.
struct Analysis {
    rho: Option<f64>,
    x_star: Option<StackedState>,
    z_star: Option<DVector<f64>>,
    f_star: Option<f64>,
}

fn analyze(resolved: &Resolved) -> Analysis {
    let tol = resolved.config.tolerances;
    let rho = resolved.spec.contraction_factor().ok();
    let x_star = solve_fixed_point(
        &resolved.spec,
        &StackedState::zeros(resolved.graph.node_count(), resolved.suite.dim()),
        tol.fixed_point,
        tol.max_iter,
    )
    .ok();
    let solved = centralized_solve(&resolved.suite, tol.centralized, tol.max_iter).ok();
    let (z_star, f_star) = match solved {
        Some((z, f)) => (Some(z), Some(f)),
        None => (None, None),
    };
    Analysis {
        rho,
        x_star,
        z_star,
        f_star,
    }
}

fn simulate(resolved: &Resolved) -> Result<(Trace, Schedule), CliError> {
    let schedule = make_schedule(
        resolved.schedule_mode,
        &resolved.graph,
        resolved.config.horizon,
        sub_seed(resolved.config.seed, "schedule"),
    )?;
    let trace = run_async(&resolved.spec, &schedule, &resolved.x0)?;
    Ok((trace, schedule))
}

fn run_live_from_config(resolved: &Resolved, analysis: &Analysis) -> Result<Trace, CliError> {
    let live = resolved
        .config
        .live
        .as_ref()
        .expect("checked during resolution");
    let cap = Duration::from_millis(live.duration_ms);
    let termination = match live.target_tol {
        Some(tol) => {
            let x_star = analysis.x_star.clone().ok_or_else(|| {
                ConfigError::Field(
                    "live target_tol needs a solvable fixed point (strongly convex objective)"
                        .into(),
                )
            })?;
            LiveTermination::Target { x_star, tol, cap }
        }
        None => LiveTermination::Duration(cap),
    };
    let link_delay = match (live.link_delay_edge, live.link_delay_ms) {
        (Some(edge), Some(ms)) => Some((edge, Duration::from_millis(ms))),
        (None, None) => None,
        _ => {
            return Err(
                ConfigError::Field("link_delay_edge and link_delay_ms go together".into()).into(),
            )
        }
    };
    let opts = LiveOptions {
        x0: resolved.x0.clone(),
        termination,
        link_delay,
        activation: ActivationPolicy::BufferNonEmpty,
    };
    Ok(run_live(&resolved.spec, &opts)?)
}

fn manifest_for(resolved: &Resolved, analysis: &Analysis, trace: &Trace) -> Manifest {
    let n = resolved.graph.node_count();
    let seed = resolved.config.seed;
    Manifest {
        config: resolved.config.clone(),
        resolved: ResolvedConstants {
            n,
            d: resolved.suite.dim(),
            edge_count: resolved.graph.edges().len(),
            weights_shifted: resolved.weights_shifted,
            alpha: resolved.alpha,
            alpha_max: resolved.alpha_max,
            alpha_default: resolved.alpha_default,
            beta: resolved.weights.beta(),
            lambda_min: resolved.weights.lambda_min(),
            self_weights: (0..n).map(|i| resolved.weights.self_weight(i)).collect(),
            smoothness: (0..n)
                .map(|i| resolved.suite.node(i).smoothness())
                .collect(),
            strong_convexity: (0..n)
                .map(|i| resolved.suite.node(i).strong_convexity())
                .collect(),
            l_max: resolved.suite.max_smoothness(),
            l_mean: resolved.suite.mean_smoothness(),
            rho: analysis.rho,
            f_star: analysis.f_star,
            z_star: analysis
                .z_star
                .as_ref()
                .map(|z| z.iter().copied().collect()),
            total_infimum: resolved.suite.total_infimum().ok(),
            horizon_recorded: trace.horizon(),
            sub_seeds: SubSeeds {
                graph: sub_seed(seed, "graph"),
                objective: sub_seed(seed, "objective"),
                partition: sub_seed(seed, "partition"),
                schedule: sub_seed(seed, "schedule"),
                init: sub_seed(seed, "init"),
            },
        },
    }
}

struct RunArtifacts {
    trace_rows: Vec<formats::TraceRow>,
    gap_rows: Vec<formats::GapRow>,
    rate_rows: Vec<formats::RateRow>,
    gap: Option<GapReport>,
    rate: Option<RateReport>,
}

fn artifacts(resolved: &Resolved, analysis: &Analysis, trace: &Trace) -> RunArtifacts {
    let trace_rows = formats::trace_rows(
        trace,
        &resolved.suite,
        analysis.x_star.as_ref(),
        analysis.f_star,
    );
    let gap = match (&analysis.x_star, &analysis.z_star, analysis.f_star) {
        (Some(x), Some(z), Some(f)) => gap_report(&resolved.spec, x, z, f).ok(),
        _ => None,
    };
    let gap_rows = gap
        .as_ref()
        .map(|g| {
            vec![formats::gap_row(
                &resolved.spec.kind().to_string(),
                resolved.alpha,
                g,
            )]
        })
        .unwrap_or_default();
    let rate = analysis
        .x_star
        .as_ref()
        .and_then(|x| rate_verdict(trace, &resolved.spec, x).ok());
    let terminal = analysis
        .x_star
        .as_ref()
        .map(|x| trace.terminal().block_max_distance(x).expect("shapes"));
    let rate_rows = vec![formats::rate_row(trace, rate.as_ref(), terminal)];
    RunArtifacts {
        trace_rows,
        gap_rows,
        rate_rows,
        gap,
        rate,
    }
}

/// `run`: execute the configured experiment and write trace.csv, gap.csv,
/// rate.csv, and manifest.json (plus replay.log for live runs).
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<PathBuf, CliError> {
    let (config, out_dir) = load_with_overrides(config_path, overrides)?;
    let resolved = resolve(config, &base_dir(config_path))?;
    std::fs::create_dir_all(&out_dir).map_err(|source| CliError::Io {
        path: out_dir.clone(),
        source,
    })?;

    let analysis = analyze(&resolved);
    let trace = match resolved.config.mode {
        RunMode::Sim => simulate(&resolved)?.0,
        RunMode::Live => run_live_from_config(&resolved, &analysis)?,
    };

    let out = artifacts(&resolved, &analysis, &trace);
    formats::write_trace_csv(&out_dir.join("trace.csv"), &out.trace_rows)?;
    formats::write_gap_csv(&out_dir.join("gap.csv"), &out.gap_rows)?;
    formats::write_rate_csv(&out_dir.join("rate.csv"), &out.rate_rows)?;
    formats::write_manifest(
        &out_dir.join("manifest.json"),
        &manifest_for(&resolved, &analysis, &trace),
    )?;
    if resolved.config.mode == RunMode::Live {
        formats::write_replay_log(&out_dir.join("replay.log"), &trace)?;
    }

    print!("{}", summary_text(out.gap.as_ref(), out.rate.as_ref()));
    println!(
        "wrote {} events over {} iterations to {}",
        trace.events.len(),
        trace.horizon(),
        out_dir.display()
    );
    Ok(out_dir)
}

enum CheckOutcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

/// `verify`: one-shot guarantee check. Runs the oracle-agreement,
/// pseudo-contraction, envelope, and bound suites on the configured
/// instance and prints a pass/fail table.
pub fn cmd_verify(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let (config, _) = load_with_overrides(config_path, overrides)?;
    let resolved = resolve(config, &base_dir(config_path))?;
    if !resolved.suite.is_strongly_convex() {
        return Err(ConfigError::Field(
            "verify needs a strongly convex objective (all mu_i > 0)".into(),
        )
        .into());
    }
    let tol = resolved.config.tolerances;
    let spec = &resolved.spec;
    let n = resolved.graph.node_count();
    let d = resolved.suite.dim();
    let mut checks: Vec<(&str, CheckOutcome)> = Vec::new();

    // fixed-point existence hypothesis for DGD-ATC
    let pd_ok = spec.kind() != AlgorithmKind::DgdAtc || resolved.weights.is_positive_definite();
    checks.push((
        "positive-definite averaging matrix",
        if pd_ok {
            CheckOutcome::Pass(format!(
                "lambda_min = {:.3e}",
                resolved.weights.lambda_min()
            ))
        } else {
            CheckOutcome::Fail(format!(
                "NotPositiveDefinite: lambda_min = {:.3e}",
                resolved.weights.lambda_min()
            ))
        },
    ));

    let rho = if pd_ok {
        match spec.contraction_factor() {
            Ok(r) => {
                checks.push((
                    "contraction factor",
                    CheckOutcome::Pass(format!("rho = {r:.6}")),
                ));
                Some(r)
            }
            Err(e) => {
                checks.push(("contraction factor", CheckOutcome::Fail(e.to_string())));
                None
            }
        }
    } else {
        checks.push((
            "contraction factor",
            CheckOutcome::Skip("needs W > 0".into()),
        ));
        None
    };

    let x_star = if pd_ok && rho.is_some() {
        match solve_fixed_point(
            spec,
            &StackedState::zeros(n, d),
            tol.fixed_point,
            tol.max_iter,
        ) {
            Ok(x) => {
                checks.push(("fixed-point solve", CheckOutcome::Pass(String::new())));
                Some(x)
            }
            Err(e) => {
                checks.push(("fixed-point solve", CheckOutcome::Fail(e.to_string())));
                None
            }
        }
    } else {
        checks.push(("fixed-point solve", CheckOutcome::Skip(String::new())));
        None
    };

    match &x_star {
        Some(x) => {
            // The Lyapunov functions inherit the objective's strong convexity,
            // so a gradient norm of g certifies a distance of at most g/mu_min.
            // Tighten the gradient tolerance accordingly or the agreement
            // threshold is unreachable for weakly regularized suites.
            let mu_min = resolved.suite.min_strong_convexity();
            let grad_tol = tol
                .lyapunov
                .min(0.1 * mu_min * tol.oracle_agreement)
                .max(1e-14);
            match lyapunov_oracle(spec, &StackedState::zeros(n, d), grad_tol, tol.max_iter) {
                Ok(y) => {
                    let dist = x.block_max_distance(&y).expect("shapes");
                    checks.push((
                        "lyapunov oracle agreement",
                        if dist <= tol.oracle_agreement {
                            CheckOutcome::Pass(format!("distance {dist:.3e}"))
                        } else {
                            CheckOutcome::Fail(format!("distance {dist:.3e}"))
                        },
                    ));
                }
                Err(e) => checks.push((
                    "lyapunov oracle agreement",
                    CheckOutcome::Fail(e.to_string()),
                )),
            }
        }
        None => checks.push((
            "lyapunov oracle agreement",
            CheckOutcome::Skip(String::new()),
        )),
    }

    match (&x_star, &resolved.quadratic_terms) {
        (Some(x), Some((a_list, b_list))) => {
            let lin = linear_fixed_point(spec, a_list, b_list);
            let dist = x.block_max_distance(&lin).expect("shapes");
            checks.push((
                "linear-system oracle agreement",
                if dist <= tol.oracle_agreement {
                    CheckOutcome::Pass(format!("distance {dist:.3e}"))
                } else {
                    CheckOutcome::Fail(format!("distance {dist:.3e}"))
                },
            ));
        }
        (None, Some(_)) => checks.push((
            "linear-system oracle agreement",
            CheckOutcome::Skip(String::new()),
        )),
        (_, None) => checks.push((
            "linear-system oracle agreement",
            CheckOutcome::Skip("non-quadratic objective".into()),
        )),
    }

    match (&x_star, rho) {
        (Some(x), Some(r)) => {
            let mut rng = crate::rng::chacha(sub_seed(resolved.config.seed, "verify"));
            let mut worst: f64 = 0.0;
            let mut ok = true;
            for _ in 0..200 {
                let sample = StackedState::from_blocks(
                    (0..n)
                        .map(|_| {
                            DVector::from_fn(d, |_, _| 4.0 * crate::rng::standard_normal(&mut rng))
                        })
                        .collect(),
                )
                .expect("uniform blocks");
                let lhs = spec
                    .apply(&sample)
                    .expect("shapes")
                    .block_max_distance(x)
                    .expect("shapes");
                let rhs = r * sample.block_max_distance(x).expect("shapes") + 1e-9;
                worst = worst.max(lhs / rhs);
                if lhs > rhs {
                    ok = false;
                }
            }
            checks.push((
                "pseudo-contraction sampling",
                if ok {
                    CheckOutcome::Pass(format!("worst ratio {worst:.6}"))
                } else {
                    CheckOutcome::Fail(format!("worst ratio {worst:.6}"))
                },
            ));
        }
        _ => checks.push((
            "pseudo-contraction sampling",
            CheckOutcome::Skip(String::new()),
        )),
    }

    match (&x_star, rho) {
        (Some(x), Some(_)) => {
            let (trace, _) = simulate(&resolved)?;
            match rate_verdict(&trace, spec, x) {
                Ok(report) => checks.push((
                    "rate envelope",
                    if report.envelope_violations == 0 {
                        CheckOutcome::Pass(format!(
                            "0 violations over {} iterations",
                            trace.horizon()
                        ))
                    } else {
                        CheckOutcome::Fail(format!(
                            "{} violations, worst ratio {:.3}",
                            report.envelope_violations, report.max_violation_ratio
                        ))
                    },
                )),
                Err(e) => checks.push(("rate envelope", CheckOutcome::Fail(e.to_string()))),
            }
        }
        _ => checks.push(("rate envelope", CheckOutcome::Skip(String::new()))),
    }

    match &x_star {
        Some(x) => match centralized_solve(&resolved.suite, tol.centralized, tol.max_iter) {
            Ok((z, f)) => match gap_report(spec, x, &z, f) {
                Ok(g) => {
                    let ok = g.measured_consensus <= g.consensus_bound
                        && g.measured_objective_gap <= g.objective_bound;
                    checks.push((
                        "optimality-gap bounds",
                        if ok {
                            CheckOutcome::Pass(format!(
                                "consensus {:.3e} <= {:.3e}, objective {:.3e} <= {:.3e}",
                                g.measured_consensus,
                                g.consensus_bound,
                                g.measured_objective_gap,
                                g.objective_bound
                            ))
                        } else {
                            CheckOutcome::Fail("measured value exceeds its bound".into())
                        },
                    ));
                }
                Err(e) => checks.push(("optimality-gap bounds", CheckOutcome::Fail(e.to_string()))),
            },
            Err(e) => checks.push(("optimality-gap bounds", CheckOutcome::Fail(e.to_string()))),
        },
        None => checks.push(("optimality-gap bounds", CheckOutcome::Skip(String::new()))),
    }

    let mut first_fail = None;
    for (name, outcome) in &checks {
        let (tag, detail) = match outcome {
            CheckOutcome::Pass(d) => ("PASS", d),
            CheckOutcome::Fail(d) => {
                if first_fail.is_none() {
                    first_fail = Some((*name).to_owned());
                }
                ("FAIL", d)
            }
            CheckOutcome::Skip(d) => ("SKIP", d),
        };
        if detail.is_empty() {
            println!("{tag}  {name}");
        } else {
            println!("{tag}  {name}: {detail}");
        }
    }
    match first_fail {
        None => Ok(()),
        Some(check) => Err(CliError::VerifyFailed { check }),
    }
}

/// Direct solve of the linear fixed-point system for quadratic suites.
fn linear_fixed_point(
    spec: &asyncdgd_core::operators::AlgorithmSpec,
    a_list: &[DMatrix<f64>],
    b_list: &[DVector<f64>],
) -> StackedState {
    let n = spec.node_count();
    let d = spec.dim();
    let w = spec.weights().matrix();
    let mut wd = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            let v = w[(i, j)];
            if v != 0.0 {
                for r in 0..d {
                    wd[(i * d + r, j * d + r)] = v;
                }
            }
        }
    }
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
    let sol = system.lu().solve(&rhs).expect("nonsingular system");
    StackedState::from_blocks((0..n).map(|i| sol.rows(i * d, d).into_owned()).collect())
        .expect("uniform blocks")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    B,
    D,
    N,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "b" | "B" => Ok(SweepAxis::B),
            "d" | "D" => Ok(SweepAxis::D),
            "n" => Ok(SweepAxis::N),
            other => Err(format!("unknown sweep axis {other:?} (alpha|b|d|n)")),
        }
    }
}

/// `sweep`: one simulated run per value along the axis, combined into a
/// single CSV. Alpha values are fractions of the admissible bound; B/D/n
/// take integer values.
pub fn cmd_sweep(
    config_path: &Path,
    overrides: &Overrides,
    axis: SweepAxis,
    values: &[f64],
) -> Result<PathBuf, CliError> {
    if values.is_empty() {
        return Err(ConfigError::EmptySweep.into());
    }
    let (base_config, out_dir) = load_with_overrides(config_path, overrides)?;
    std::fs::create_dir_all(&out_dir).map_err(|source| CliError::Io {
        path: out_dir.clone(),
        source,
    })?;
    let dir = base_dir(config_path);
    // alpha fractions scale the bound of the base instance
    let base_resolved = resolve(base_config.clone(), &dir)?;
    let alpha_max = base_resolved.alpha_max;

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut config = base_config.clone();
        config.mode = RunMode::Sim;
        match axis {
            SweepAxis::Alpha => {
                config.alpha = AlphaPolicy::Explicit {
                    value: value * alpha_max,
                };
            }
            SweepAxis::B => match &mut config.schedule {
                ScheduleConfig::Partial { b, .. } => *b = value as usize,
                _ => {
                    return Err(ConfigError::Field(
                        "sweeping B needs a partial schedule in the config".into(),
                    )
                    .into())
                }
            },
            SweepAxis::D => match &mut config.schedule {
                ScheduleConfig::Partial { d, .. } => *d = value as usize,
                _ => {
                    return Err(ConfigError::Field(
                        "sweeping D needs a partial schedule in the config".into(),
                    )
                    .into())
                }
            },
            SweepAxis::N => {
                let n = value as usize;
                match &mut config.graph {
                    GraphConfig::Ring { n: g }
                    | GraphConfig::Path { n: g }
                    | GraphConfig::Complete { n: g }
                    | GraphConfig::RandomGnp { n: g, .. } => *g = n,
                    GraphConfig::EdgeFile { .. } => {
                        return Err(ConfigError::Field(
                            "sweeping n needs a generator graph, not an edge file".into(),
                        )
                        .into())
                    }
                }
            }
        }
        let resolved = resolve(config, &dir)?;
        let analysis = analyze(&resolved);
        let (trace, _) = simulate(&resolved)?;
        let terminal_distance = analysis
            .x_star
            .as_ref()
            .map(|x| trace.terminal().block_max_distance(x).expect("shapes"));
        let terminal_training_error = analysis.f_star.map(|f| {
            resolved
                .suite
                .total_value(&trace.terminal().consensus_mean())
                - f
        });
        let rate = analysis
            .x_star
            .as_ref()
            .and_then(|x| rate_verdict(&trace, &resolved.spec, x).ok());
        rows.push(formats::SweepRow {
            axis: format!("{axis:?}").to_lowercase(),
            value,
            alpha: resolved.alpha,
            rho: analysis.rho,
            terminal_distance,
            terminal_training_error,
            envelope_violations: rate.as_ref().map(|r| r.envelope_violations),
            realized_b: trace.realized_b,
            realized_d: trace.realized_d,
        });
    }
    let path = out_dir.join("sweep.csv");
    formats::write_sweep_csv(&path, &rows)?;
    println!("wrote {} sweep rows to {}", rows.len(), path.display());
    Ok(path)
}

/// `replay`: re-execute a recorded run from its manifest (and replay log for
/// live runs) and require the regenerated CSV artifacts to match exactly.
pub fn cmd_replay(run_dir: &Path) -> Result<(), CliError> {
    let manifest = formats::read_manifest(&run_dir.join("manifest.json"))?;
    let resolved = resolve(manifest.config.clone(), run_dir)?;
    let analysis = analyze(&resolved);

    let log_path = run_dir.join("replay.log");
    let trace = if log_path.exists() {
        let file = std::fs::File::open(&log_path).map_err(|source| CliError::Io {
            path: log_path.clone(),
            source,
        })?;
        let schedule = Schedule::read_text(
            std::io::BufReader::new(file),
            &resolved.graph,
            manifest.resolved.horizon_recorded,
        )?;
        run_async(&resolved.spec, &schedule, &resolved.x0)?
    } else {
        simulate(&resolved)?.0
    };

    let regenerated = artifacts(&resolved, &analysis, &trace);
    let stored_trace = formats::read_trace_csv(&run_dir.join("trace.csv"))?;
    if stored_trace != regenerated.trace_rows {
        return Err(CliError::ReplayMismatch {
            file: "trace.csv".into(),
        });
    }
    let stored_gap = formats::read_gap_csv(&run_dir.join("gap.csv"))?;
    if stored_gap != regenerated.gap_rows {
        return Err(CliError::ReplayMismatch {
            file: "gap.csv".into(),
        });
    }
    let stored_rate = formats::read_rate_csv(&run_dir.join("rate.csv"))?;
    if stored_rate != regenerated.rate_rows {
        return Err(CliError::ReplayMismatch {
            file: "rate.csv".into(),
        });
    }
    println!(
        "replay ok: {} events over {} iterations reproduced exactly",
        trace.events.len(),
        trace.horizon()
    );
    Ok(())
}
