//! Per-trajectory pipeline (flow, transport, diagnostics) and the ensemble
//! reduction behind `run` and `verify`.

use std::collections::BTreeMap;

use billiard_core::diagnostics::{
    sample_covector_with_q_bound, sample_series, sample_unit_covector, verify_growth, verify_identities,
    verify_monotonicity, CheckResult, CheckStatus, DiagnosticsRecord, IdentityOptions, MonotonicityOptions,
    VerificationReport,
};
use billiard_core::dynamics::{flow, sample_phase_point, PhasePoint, Termination, Trajectory};
use billiard_core::geometry::Domain;
use billiard_core::linalg::Vector;
use billiard_core::transport::{
    adjoint_residual_exact, transport_covector_with, transversal_basis, AdjointOptions, Covector, TransportOptions,
};
use billiard_core::Error as CoreError;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CheckKind, ExperimentConfig, ExplicitInitial, SamplerSpec};
use crate::error::HarnessError;

/// Multiplier applied to every curvature operator by `--corrupt-curvature`.
pub const CORRUPTION_FACTOR: f64 = 2.0;

/// Phase points redrawn per trajectory before `min_cos_phi` gives up.
const REDRAW_BUDGET: usize = 10_000;

pub const CHECK_ADJOINT: &str = "adjoint_residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub command: Command,
    pub grid: usize,
    pub corrupt_curvature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub termination: Termination,
    pub events: usize,
    pub end_time: f64,
    pub min_cos_phi: f64,
    pub initial_q: f64,
    pub final_q: f64,
    pub final_lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjoint_residual: Option<f64>,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub trajectories: usize,
    pub by_termination: BTreeMap<String, usize>,
    /// Singular terminations before half the horizon.
    pub singular_early: usize,
    pub failed_trajectories: usize,
    /// Failed checks summed over trajectories.
    pub violations: usize,
    pub worst_margins: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_adjoint_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub domain: &'static str,
    pub dim: usize,
    pub horizon: f64,
    pub grid: usize,
    pub corrupt_curvature: bool,
    pub exit_code: i32,
    pub ensemble: EnsembleSummary,
    pub trajectories: Vec<TrajectorySummary>,
}

pub struct TrajectoryOutcome {
    pub summary: TrajectorySummary,
    pub records: Vec<DiagnosticsRecord<f64>>,
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

/// Normalised initial data from an explicit entry.
fn explicit_initial(domain: &Domain<f64>, index: usize, e: &ExplicitInitial) -> Result<(PhasePoint<f64>, Covector<f64>), HarnessError> {
    let v = Vector::from_vec(e.v.clone());
    if !(v.norm() > 0.0) {
        return Err(config_err(format!("explicit[{index}]: velocity must be non-zero")));
    }
    let x0 = PhasePoint::new(Vector::from_vec(e.q.clone()), v.normalized());
    x0.validate(domain).map_err(|err| config_err(format!("explicit[{index}]: {err}")))?;
    let n0 = Covector::new(Vector::from_vec(e.z.clone()), Vector::from_vec(e.w.clone()));
    n0.validate(&x0.v).map_err(|err| config_err(format!("explicit[{index}]: {err}")))?;
    Ok((x0, n0.normalized()))
}

/// Seeded draw for trajectory `index`: the phase point and covector come from
/// stream `index` of a `ChaCha8Rng` keyed by the sampler seed, so the result
/// does not depend on scheduling.
fn sampled_initial(
    domain: &Domain<f64>,
    spec: &SamplerSpec,
    horizon: f64,
    max_events: usize,
    index: usize,
) -> Result<(PhasePoint<f64>, Covector<f64>, Trajectory<f64>), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    for _ in 0..REDRAW_BUDGET {
        let x0 = sample_phase_point(domain, spec.clearance, &mut rng).map_err(config_err)?;
        let traj = flow(domain, &x0, horizon, max_events).map_err(config_err)?;
        if spec.min_cos_phi.is_some_and(|m| traj.termination.is_singular() || traj.min_cos_phi() < m) {
            continue;
        }
        let seed = rng.next_u64();
        let n0 = match spec.c0 {
            Some(c0) => sample_covector_with_q_bound(&x0.v, c0, seed),
            None => sample_unit_covector(&x0.v, seed),
        }
        .map_err(config_err)?;
        return Ok((x0, n0, traj));
    }
    Err(config_err(format!("trajectory {index}: no phase point met min_cos_phi in {REDRAW_BUDGET} draws")))
}

fn adjoint_check(residual: f64, tolerance: f64, t: f64) -> CheckResult {
    let margin = if residual.is_nan() { f64::NEG_INFINITY } else { -residual };
    CheckResult {
        name: CHECK_ADJOINT.into(),
        status: if margin >= -tolerance { CheckStatus::Pass } else { CheckStatus::Fail },
        tolerance,
        worst_margin: Some(margin),
        t_worst: Some(t),
        samples: 1,
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    domain: &Domain<f64>,
    opts: &PipelineOptions,
    index: usize,
    keep_records: bool,
) -> Result<TrajectoryOutcome, HarnessError> {
    let (x0, n0, traj, explicit) = match (&cfg.initial.explicit, &cfg.initial.sampled) {
        (Some(list), _) => {
            let (x0, n0) = explicit_initial(domain, index, &list[index])?;
            let traj = flow(domain, &x0, cfg.horizon, cfg.max_events).map_err(config_err)?;
            (x0, n0, traj, true)
        }
        (None, Some(spec)) => {
            let (x0, n0, traj) = sampled_initial(domain, spec, cfg.horizon, cfg.max_events, index)?;
            (x0, n0, traj, false)
        }
        (None, None) => unreachable!("validated on load"),
    };
    let scale = if opts.corrupt_curvature { CORRUPTION_FACTOR } else { 1.0 };
    let series = transport_covector_with(domain, &traj, &n0, &TransportOptions { curvature_scale: scale, reproject: true })
        .map_err(config_err)?;
    let c0 = cfg.growth_rate();
    let records = sample_series(&series, opts.grid, c0);
    let tol = &cfg.tolerances;

    let mut report = VerificationReport::empty(&series);
    if cfg.checks.contains(&CheckKind::Monotonicity) {
        report = report.merge(verify_monotonicity(&series, &records, &MonotonicityOptions { tol: tol.tol_check, jump_tol: tol.jump_tol }));
    }
    if cfg.checks.contains(&CheckKind::Identities) {
        report = report.merge(verify_identities(&series, opts.grid, &IdentityOptions::default()));
    }
    if let (true, Some(c0)) = (cfg.checks.contains(&CheckKind::Growth), c0) {
        match verify_growth(&series, &records, c0, tol.tol_check) {
            Ok(r) => report = report.merge(r),
            Err(CoreError::Configuration(msg)) if explicit => {
                return Err(config_err(format!("explicit[{index}]: {msg}")));
            }
            Err(CoreError::Configuration(_)) => {
                for name in [
                    billiard_core::diagnostics::CHECK_PROP5,
                    billiard_core::diagnostics::CHECK_THEOREM,
                    billiard_core::diagnostics::CHECK_SLOPE,
                ] {
                    report.checks.push(CheckResult::skipped(name, tol.tol_check));
                }
            }
            Err(e) => return Err(config_err(e)),
        }
    }
    let mut adjoint_residual = None;
    if opts.command == Command::Verify {
        let basis = transversal_basis(&x0.v);
        let residual = adjoint_residual_exact(domain, &traj, &n0, &basis, &AdjointOptions { grid: opts.grid, curvature_scale: scale })
            .unwrap_or(f64::INFINITY);
        adjoint_residual = Some(residual);
        report.checks.push(adjoint_check(residual, tol.adjoint, traj.end_time));
    }

    let last = series.final_covector();
    let summary = TrajectorySummary {
        index,
        termination: traj.termination,
        events: traj.events.len(),
        end_time: traj.end_time,
        min_cos_phi: traj.min_cos_phi(),
        initial_q: n0.lyapunov(),
        final_q: last.lyapunov(),
        final_lambda: last.norm() / n0.norm(),
        adjoint_residual,
        passed: report.passed(),
        checks: report.checks,
    };
    Ok(TrajectoryOutcome { summary, records: if keep_records { records } else { Vec::new() } })
}

/// Number of worker threads from `BILLIARD_THREADS` (unset: rayon's default).
pub fn thread_cap() -> Result<Option<usize>, HarnessError> {
    match std::env::var("BILLIARD_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(config_err(format!("BILLIARD_THREADS must be a positive integer (got {s:?})"))),
        },
    }
}

pub fn trajectory_count(cfg: &ExperimentConfig) -> usize {
    match (&cfg.initial.explicit, &cfg.initial.sampled) {
        (Some(list), _) => list.len(),
        (None, Some(s)) => s.count,
        (None, None) => 0,
    }
}

/// Runs every trajectory (in parallel, at most `BILLIARD_THREADS` at a time)
/// and reduces the results in index order.
pub fn run_ensemble(
    cfg: &ExperimentConfig,
    opts: &PipelineOptions,
    keep_records: bool,
) -> Result<(RunSummary, Vec<Vec<DiagnosticsRecord<f64>>>), HarnessError> {
    let domain = cfg.build_domain()?;
    let count = trajectory_count(cfg);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| HarnessError::Io(e.to_string()))?;
    let outcomes: Vec<Result<TrajectoryOutcome, HarnessError>> =
        pool.install(|| (0..count).into_par_iter().map(|i| run_one(cfg, &domain, opts, i, keep_records)).collect());
    let mut summaries = Vec::with_capacity(count);
    let mut records = Vec::with_capacity(if keep_records { count } else { 0 });
    for outcome in outcomes {
        let outcome = outcome?;
        summaries.push(outcome.summary);
        if keep_records {
            records.push(outcome.records);
        }
    }
    let ensemble = reduce(&summaries, cfg.horizon);
    let exit_code = exit_code(&ensemble);
    let summary = RunSummary {
        command: match opts.command {
            Command::Run => "run",
            Command::Verify => "verify",
        },
        domain: cfg.domain.kind(),
        dim: domain.dim(),
        horizon: cfg.horizon,
        grid: opts.grid,
        corrupt_curvature: opts.corrupt_curvature,
        exit_code,
        ensemble,
        trajectories: summaries,
    };
    Ok((summary, records))
}

fn reduce(summaries: &[TrajectorySummary], horizon: f64) -> EnsembleSummary {
    let mut by_termination = BTreeMap::new();
    let mut worst_margins: BTreeMap<String, f64> = BTreeMap::new();
    let mut worst_adjoint: Option<f64> = None;
    let mut singular_early = 0;
    let mut violations = 0;
    let mut failed_trajectories = 0;
    for s in summaries {
        let key = serde_json::to_value(s.termination).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        *by_termination.entry(key).or_insert(0) += 1;
        if s.termination.is_singular() && s.end_time < horizon / 2.0 {
            singular_early += 1;
        }
        let failed = s.checks.iter().filter(|c| c.failed()).count();
        violations += failed;
        failed_trajectories += usize::from(failed > 0);
        for c in &s.checks {
            if let Some(m) = c.worst_margin {
                let slot = worst_margins.entry(c.name.clone()).or_insert(f64::INFINITY);
                *slot = slot.min(m);
            }
        }
        if let Some(r) = s.adjoint_residual {
            worst_adjoint = Some(worst_adjoint.map_or(r, |w| w.max(r)));
        }
    }
    EnsembleSummary {
        trajectories: summaries.len(),
        by_termination,
        singular_early,
        failed_trajectories,
        violations,
        worst_margins,
        worst_adjoint_residual: worst_adjoint,
    }
}

/// 2 when more than half the ensemble ends singular before `T / 2`, else 1
/// on any failed check, else 0.
pub fn exit_code(e: &EnsembleSummary) -> i32 {
    if e.trajectories > 0 && 2 * e.singular_early > e.trajectories {
        2
    } else if e.violations > 0 {
        1
    } else {
        0
    }
}
