//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::process::Command as Process;
use std::time::Instant;

use billiard_core::diagnostics::{
    CheckStatus, CHECK_DECREMENT, CHECK_PROP5, CHECK_Q_NONINCREASING, CHECK_Q_STRICTLY_DECREASING, CHECK_RATIO_NONINCREASING,
    CHECK_SEGMENT_Q, CHECK_SEGMENT_W, CHECK_SLOPE, CHECK_THEOREM, CHECK_W_CONTINUOUS, CHECK_W_INCREASING,
    CHECK_Z_SEGMENT_CONSTANT,
};
use billiard_core::dynamics::{flow, sample_phase_point, PhasePoint, Termination, Trajectory};
use billiard_core::geometry::{build_sinai, Ambient, Domain, Scatterer};
use billiard_core::linalg::Vector;
use billiard_core::transport::{event_geometry, transport_covector, transport_tangent, Covector, TangentVector};
use billiard_harness::catalog::catalog;
use billiard_harness::config::{ExperimentConfig, SamplerSpec};
use billiard_harness::pipeline::{run_ensemble, Command, PipelineOptions, RunSummary, TrajectorySummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn v(x: &[f64]) -> Vector<f64> {
    Vector::from_vec(x.to_vec())
}

fn sinai2() -> Domain<f64> {
    build_sinai(2, 0.25, 1.0, vec![v(&[0.5, 0.5])]).unwrap()
}

fn cylinder3() -> Domain<f64> {
    Domain::new(
        3,
        Ambient::Torus { side: 1.0 },
        vec![Scatterer::Cylinder { axis_point: v(&[0.5, 0.5, 0.0]), axis_directions: vec![v(&[0.0, 0.0, 1.0])], radius: 0.3 }],
    )
    .unwrap()
}

fn entry(name: &str) -> ExperimentConfig {
    catalog().into_iter().find(|e| e.name == name).unwrap().config
}

fn sampled(mut cfg: ExperimentConfig, count: usize, seed: u64, horizon: f64, c0: Option<f64>, min_cos_phi: Option<f64>) -> ExperimentConfig {
    cfg.initial.explicit = None;
    cfg.initial.sampled = Some(SamplerSpec { count, seed, c0: None, clearance: 1e-3, min_cos_phi });
    cfg.horizon = horizon;
    cfg.c0 = c0;
    cfg
}

/// Worst margin and failure count of check `name` over `trajectories`.
fn tally<'a>(trajectories: impl Iterator<Item = &'a TrajectorySummary>, name: &str) -> (usize, usize, f64) {
    let (mut ran, mut failed, mut worst) = (0, 0, f64::INFINITY);
    for t in trajectories {
        for c in t.checks.iter().filter(|c| c.name == name && c.status != CheckStatus::Skipped) {
            ran += 1;
            failed += usize::from(c.status == CheckStatus::Fail);
            if let Some(m) = c.worst_margin {
                worst = worst.min(m);
            }
        }
    }
    (ran, failed, worst)
}

fn combine(runs: &[RunSummary], subset: impl Fn(&TrajectorySummary) -> bool, names: &[&str]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let (ran, failed, worst) = tally(runs.iter().flat_map(|r| r.trajectories.iter()).filter(|t| subset(t)), name);
        pass &= failed == 0 && ran > 0;
        parts.push(format!("{name}: {failed}/{ran} failed, worst margin {worst:.3e}"));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn criterion_1() -> Outcome {
    let cfg = sampled(entry("sinai_2d"), 200, 1, 20.0, None, Some(0.01));
    let start = Instant::now();
    let (summary, _) = run_ensemble(&cfg, &PipelineOptions { command: Command::Verify, grid: cfg.grid, corrupt_curvature: false }, false).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = summary.ensemble.worst_adjoint_residual.unwrap_or(f64::NAN);
    let min_cos = summary.trajectories.iter().map(|t| t.min_cos_phi).fold(f64::INFINITY, f64::min);
    Outcome {
        pass: summary.trajectories.len() == 200 && worst < 1e-9 && elapsed < 60.0 && min_cos >= 0.01,
        detail: format!("200 trajectories, worst exact residual {worst:.3e}, min cos {min_cos:.3e}, {elapsed:.1} s"),
    }
}

/// The mixed ensemble behind criteria 2 to 7: uniform unit covectors, 1000
/// trajectories of length 100 over four domain families.
fn ensemble() -> Vec<RunSummary> {
    ["sinai_2d", "sinai_3d", "cylinder_torus_3d", "hardball_gas_n3_d2"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let cfg = sampled(entry(name), 250, 100 + k as u64, 100.0, Some(0.1), None);
            run_ensemble(&cfg, &PipelineOptions { command: Command::Run, grid: cfg.grid, corrupt_curvature: false }, false).unwrap().0
        })
        .collect()
}

fn in_subset(t: &TrajectorySummary) -> bool {
    t.initial_q <= -0.1
}

fn criterion_7(runs: &[RunSummary]) -> Outcome {
    let from_ensemble = combine(runs, |_| true, &[CHECK_DECREMENT]);
    // flat walls: a box with a round obstacle, so both kinds of event occur
    let walls = [([0.0, 0.0], [1.0, 0.0]), ([0.0, 0.0], [0.0, 1.0]), ([1.0, 1.0], [-1.0, 0.0]), ([1.0, 1.0], [0.0, -1.0])];
    let mut scatterers: Vec<Scatterer<f64>> =
        walls.iter().map(|(p, n)| Scatterer::Halfspace { plane_point: v(p), plane_normal: v(n) }).collect();
    scatterers.push(Scatterer::Sphere { center: v(&[0.5, 0.5]), radius: 0.2 });
    let boxed = Domain::new(2, Ambient::Box { sides: v(&[1.0, 1.0]) }, scatterers).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut flat_events, mut flat_nonzero) = (0, 0);
    for _ in 0..50 {
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        let x = PhasePoint::new(v(&[0.1 + 0.1 * rng.random::<f64>(), 0.1 + 0.1 * rng.random::<f64>()]), v(&[th.cos(), th.sin()]));
        let traj = flow(&boxed, &x, 20.0, 10_000).unwrap();
        let e = v(&[-th.sin(), th.cos()]);
        let series = transport_covector(&boxed, &traj, &Covector::new(e.scale(&0.6), e.scale(&-0.8))).unwrap();
        for j in series.jumps.iter().filter(|j| j.flat) {
            flat_events += 1;
            flat_nonzero += usize::from(j.decrement != 0.0);
        }
    }
    // cylinder events with w along the axis and velocity across it
    let cyl = cylinder3();
    let (mut axial_events, mut axial_nonzero) = (0, 0);
    for _ in 0..50 {
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        let x = PhasePoint::new(v(&[0.05, 0.05 + 0.1 * rng.random::<f64>(), rng.random::<f64>()]), v(&[th.cos(), th.sin(), 0.0]));
        let traj = flow(&cyl, &x, 10.0, 10_000).unwrap();
        let series = transport_covector(&cyl, &traj, &Covector::new(v(&[0.0, 0.0, 0.0]), v(&[0.0, 0.0, 1.0]))).unwrap();
        for j in &series.jumps {
            axial_events += 1;
            axial_nonzero += usize::from(j.decrement != 0.0);
        }
    }
    Outcome {
        pass: from_ensemble.pass && flat_events > 0 && flat_nonzero == 0 && axial_events > 0 && axial_nonzero == 0,
        detail: format!(
            "{}; flat walls {flat_nonzero}/{flat_events} non-zero; axial cylinder {axial_nonzero}/{axial_events} non-zero",
            from_ensemble.detail
        ),
    }
}

fn gaussian_perp(rng: &mut ChaCha8Rng, dir: &Vector<f64>) -> Vector<f64> {
    Vector::from_vec((0..dir.dim()).map(|_| rng.random::<f64>() - 0.5).collect()).reject_from(dir).normalized()
}

/// A trajectory with exactly one collision, at `cos(phi) >= 0.2`, ending mid-flight.
fn single_collision(d: &Domain<f64>, rng: &mut ChaCha8Rng) -> (PhasePoint<f64>, Trajectory<f64>) {
    loop {
        let x = sample_phase_point(d, 1e-2, rng).unwrap();
        let probe = flow(d, &x, 10.0, 2).unwrap();
        if probe.events.is_empty() || probe.events[0].cos_phi < 0.2 {
            continue;
        }
        let t1 = probe.events[0].t;
        let t2 = probe.events.get(1).map_or(t1 + 1.0, |e| e.t);
        let traj = flow(d, &x, t1 + 0.5 * (t2 - t1).min(1.0), 10).unwrap();
        if traj.events.len() == 1 {
            return (x, traj);
        }
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let h = 1e-6;
    let (mut worst, mut count) = (0.0f64, 0);
    for d in [sinai2(), cylinder3()] {
        let eps = d.tolerances().graze;
        let mut done = 0;
        while done < 25 {
            let (x, traj) = single_collision(&d, &mut rng);
            let dy = TangentVector::new(gaussian_perp(&mut rng, &x.v), gaussian_perp(&mut rng, &x.v));
            let exact = transport_tangent(&event_geometry(&d, &traj), &traj.end_time, &dy, &eps).unwrap();
            let shifted = |s: f64| PhasePoint::new(x.q.add_scaled(&s, &dy.dq), x.v.add_scaled(&s, &dy.dv).normalized());
            let plus = flow(&d, &shifted(h), traj.end_time, 10).unwrap();
            let minus = flow(&d, &shifted(-h), traj.end_time, 10).unwrap();
            if plus.events.len() != 1 || minus.events.len() != 1 {
                continue;
            }
            let fd = TangentVector::new(
                d.displacement(&plus.end.q, &minus.end.q).scale(&(0.5 / h)),
                (&plus.end.v - &minus.end.v).scale(&(0.5 / h)),
            );
            let diff = TangentVector::new(&fd.dq - &exact.dq, &fd.dv - &exact.dv);
            worst = worst.max((diff.norm_squared() / exact.norm_squared()).sqrt());
            done += 1;
            count += 1;
        }
    }
    Outcome { pass: count == 50 && worst < 1e-4, detail: format!("{count} configurations, worst relative error {worst:.3e}") }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut codes = Vec::new();
    for seed in 0..20u64 {
        let cfg = sampled(entry("sinai_2d"), 2, seed, 10.0, None, None);
        let path = dir.path().join(format!("corrupt_{seed}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        let out = Process::new(env!("CARGO_BIN_EXE_billiard"))
            .args(["verify", path.to_str().unwrap(), "--corrupt-curvature"])
            .output()
            .unwrap();
        codes.push(out.status.code().unwrap_or(-1));
    }
    let ones = codes.iter().filter(|&&c| c == 1).count();
    Outcome { pass: ones == 20, detail: format!("{ones}/20 runs exited 1 (codes {codes:?})") }
}

/// Horizons are spread so that event counts cover the allowed range up to 50.
fn criterion_10() -> Outcome {
    let domains = [sinai2(), build_sinai(3, 0.3, 1.0, vec![v(&[0.5, 0.5, 0.5])]).unwrap(), cylinder3()];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut count, mut worst, mut max_events) = (0, 0.0f64, 0);
    // (trajectories, failures) for 0-5, 6-10 and more than 10 events
    let mut bands = [(0, 0); 3];
    while count < 100 {
        let d = &domains[count % domains.len()];
        let x = sample_phase_point(d, 1e-3, &mut rng).unwrap();
        let horizon = 1.0 + 29.0 * rng.random::<f64>();
        let fwd = flow(d, &x, horizon, 50).unwrap();
        if fwd.termination != Termination::ReachedHorizon || fwd.min_cos_phi() < 0.1 {
            continue;
        }
        let back = flow(d, &fwd.end.reversed(), horizon, 50).unwrap();
        let err = d.displacement(&back.end.q, &x.q).max_abs().max((&back.end.v + &x.v).max_abs());
        let band = &mut bands[match fwd.events.len() {
            0..=5 => 0,
            6..=10 => 1,
            _ => 2,
        }];
        band.0 += 1;
        band.1 += usize::from(err.is_nan() || err >= 1e-6);
        worst = worst.max(err);
        max_events = max_events.max(fwd.events.len());
        count += 1;
    }
    let failed: usize = bands.iter().map(|b| b.1).sum();
    Outcome {
        pass: failed == 0,
        detail: format!(
            "100 trajectories (up to {max_events} events), worst deviation {worst:.3e}; failures by events: \
             0-5 {}/{}, 6-10 {}/{}, >10 {}/{}",
            bands[0].1, bands[0].0, bands[1].1, bands[1].0, bands[2].1, bands[2].0
        ),
    }
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    results.push((1, criterion_1()));
    let runs = ensemble();
    let total: usize = runs.iter().map(|r| r.trajectories.len()).sum();
    let subset = runs.iter().flat_map(|r| r.trajectories.iter()).filter(|t| in_subset(t)).count();
    let singular: usize = runs.iter().map(|r| r.ensemble.singular_early).sum();
    println!("ensemble: {total} trajectories, {subset} with Q(n0) <= -0.1, {singular} singular before T/2");
    results.push((2, combine(&runs, |_| true, &[CHECK_Q_NONINCREASING, CHECK_W_CONTINUOUS, CHECK_Z_SEGMENT_CONSTANT])));
    results.push((3, combine(&runs, in_subset, &[CHECK_Q_STRICTLY_DECREASING, CHECK_W_INCREASING, CHECK_RATIO_NONINCREASING])));
    results.push((4, combine(&runs, in_subset, &[CHECK_PROP5])));
    results.push((5, combine(&runs, in_subset, &[CHECK_THEOREM, CHECK_SLOPE])));
    results.push((6, combine(&runs, |_| true, &[CHECK_SEGMENT_Q, CHECK_SEGMENT_W])));
    results.push((7, criterion_7(&runs)));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));
    results.push((10, criterion_10()));
    let mut failed = 0;
    for (n, o) in &results {
        println!("criterion {n}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
