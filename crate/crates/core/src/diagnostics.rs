//! Lyapunov function, expansion factor and the monotonicity and growth checks
//! run on a transported covector series.
//!
//! Every check reduces to a list of margins. A margin is the slack of an
//! inequality divided by the size of the quantities it compares, so that
//! trajectories whose covectors differ by many orders of magnitude are judged
//! alike. A check passes when its worst margin is at least `-tolerance`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dynamics::Termination;
use crate::error::{Error, Result};
use crate::linalg::{orthonormal_complement, Vector};
use crate::scalar::Scalar;
use crate::transport::{Covector, TransportSeries};

/// Interior samples per free segment used when nothing else is asked for.
pub const DEFAULT_GRID: usize = 8;

/// Attempts before [`sample_covector_with_q_bound`] gives up.
pub const SAMPLER_BUDGET: usize = 1_000_000;

/// `Q(n) = <z, w>`
pub fn lyapunov_q<S: Scalar>(n: &Covector<S>) -> S {
    n.lyapunov()
}

/// `|n_t| / |n_0|`, with `n_t` taken from the covering segment.
pub fn expansion_factor<S: Scalar>(series: &TransportSeries<S>, t: S) -> Result<S> {
    let n0 = series.initial.norm();
    if !(n0 > S::zero()) {
        return Err(Error::InvalidState("initial covector is zero".into()));
    }
    Ok(series.covector_at(t)?.norm() / n0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Start,
    Interior,
    PreEvent,
    PostEvent,
    End,
}

impl SampleKind {
    /// Column value in the time-series CSV: 1 before an event, 2 after it,
    /// 0 for every other sample.
    pub fn event_flag(self) -> u8 {
        match self {
            SampleKind::PreEvent => 1,
            SampleKind::PostEvent => 2,
            _ => 0,
        }
    }
}

/// One sample of the covector series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord<S> {
    pub t: S,
    pub segment_index: usize,
    pub kind: SampleKind,
    pub q: S,
    pub norm_w: S,
    pub norm_z: S,
    pub norm_n: S,
    /// `|n_t| / |n_0|`
    pub lambda: S,
    /// `|w| / |Q|`, `+inf` when `|Q| < 1e-300`.
    pub ratio_wq: S,
    /// `|w_0| + |Q(n_0)| t / |w_0|` (0 when `w_0 = 0`).
    pub bound_prop5: S,
    /// `1 + c0 t` when a growth rate is configured.
    pub bound_theorem: Option<S>,
}

fn record<S: Scalar>(
    n: &Covector<S>,
    t: S,
    segment_index: usize,
    kind: SampleKind,
    n0: &Covector<S>,
    c0: Option<S>,
) -> DiagnosticsRecord<S> {
    let q = n.lyapunov();
    let norm_w = n.w.norm();
    let norm_z = n.z.norm();
    let w0 = n0.w.norm();
    let bound_prop5 = if w0 > S::zero() { w0 + n0.lyapunov().abs() * t / w0 } else { S::zero() };
    DiagnosticsRecord {
        t,
        segment_index,
        kind,
        q,
        norm_w,
        norm_z,
        norm_n: n.norm(),
        lambda: n.norm() / n0.norm(),
        ratio_wq: if q.abs() < S::lit(1e-300) { S::infinity() } else { norm_w / q.abs() },
        bound_prop5,
        bound_theorem: c0.map(|c| S::one() + c * t),
    }
}

/// Samples the series at every segment endpoint plus `grid` evenly spaced
/// interior points per segment of positive length. Pre- and post-event
/// samples share the event time; times are otherwise strictly increasing.
pub fn sample_series<S: Scalar>(series: &TransportSeries<S>, grid: usize, c0: Option<S>) -> Vec<DiagnosticsRecord<S>> {
    let n0 = &series.initial;
    let last = series.segments.len().saturating_sub(1);
    let mut out = Vec::with_capacity(series.segments.len() * (grid + 2));
    for (k, seg) in series.segments.iter().enumerate() {
        let first_kind = if k == 0 { SampleKind::Start } else { SampleKind::PostEvent };
        out.push(record(&seg.start, seg.t_start, k, first_kind, n0, c0));
        let span = seg.t_end - seg.t_start;
        if span > S::zero() {
            let steps = S::from_usize(grid + 1).expect("grid size");
            for i in 1..=grid {
                let t = seg.t_start + span * S::from_usize(i).expect("grid index") / steps;
                out.push(record(&seg.at(t), t, k, SampleKind::Interior, n0, c0));
            }
        }
        let end_kind = if k == last { SampleKind::End } else { SampleKind::PreEvent };
        let end = if k == last { seg.end() } else { series.jumps[k].pre.clone() };
        out.push(record(&end, seg.t_end, k, end_kind, n0, c0));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub tolerance: f64,
    /// Smallest relative margin seen; `None` for skipped or empty checks.
    pub worst_margin: Option<f64>,
    pub t_worst: Option<f64>,
    pub samples: usize,
}

impl CheckResult {
    pub fn skipped(name: &str, tolerance: f64) -> Self {
        CheckResult { name: name.into(), status: CheckStatus::Skipped, tolerance, worst_margin: None, t_worst: None, samples: 0 }
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub events: usize,
    pub termination: Termination,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub trajectory: TrajectoryMeta,
}

impl VerificationReport {
    /// Report with no checks yet for `series`.
    pub fn empty<S: Scalar>(series: &TransportSeries<S>) -> Self {
        VerificationReport { checks: Vec::new(), trajectory: meta(series) }
    }

    pub fn passed(&self) -> bool {
        !self.checks.iter().any(CheckResult::failed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Appends the checks of `other`; a name already present is replaced.
    pub fn merge(mut self, other: VerificationReport) -> Self {
        for c in other.checks {
            match self.checks.iter_mut().find(|x| x.name == c.name) {
                Some(slot) => *slot = c,
                None => self.checks.push(c),
            }
        }
        self
    }
}

fn meta<S: Scalar>(series: &TransportSeries<S>) -> TrajectoryMeta {
    TrajectoryMeta {
        events: series.jumps.len(),
        termination: series.termination,
        end_time: series.end_time.to_f64().unwrap_or(f64::NAN),
    }
}

/// Running minimum of margins for one check.
struct Tracker {
    name: &'static str,
    tolerance: f64,
    worst: Option<(f64, f64)>,
    samples: usize,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tracker { name, tolerance, worst: None, samples: 0 }
    }

    fn observe<S: Scalar>(&mut self, margin: S, t: S) {
        let m = margin.to_f64().filter(|m| !m.is_nan()).unwrap_or(f64::NEG_INFINITY);
        let t = t.to_f64().unwrap_or(f64::NAN);
        self.samples += 1;
        if self.worst.is_none_or(|(w, _)| m < w) {
            self.worst = Some((m, t));
        }
    }

    fn finish(self) -> CheckResult {
        let pass = self.worst.is_none_or(|(w, _)| w >= -self.tolerance);
        CheckResult {
            name: self.name.into(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            tolerance: self.tolerance,
            worst_margin: self.worst.map(|w| w.0),
            t_worst: self.worst.map(|w| w.1),
            samples: self.samples,
        }
    }
}

/// `slack / scale`, with `0 / 0 = 0`.
fn relative<S: Scalar>(slack: S, scale: S) -> S {
    if scale > S::zero() {
        slack / scale
    } else if slack == S::zero() {
        S::zero()
    } else if slack > S::zero() {
        S::infinity()
    } else {
        S::neg_infinity()
    }
}

/// Tolerances for [`verify_monotonicity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityOptions {
    /// Relative slack of the inequality checks.
    pub tol: f64,
    /// Largest relative jump of `|w|` across an event.
    pub jump_tol: f64,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        MonotonicityOptions { tol: 1e-9, jump_tol: 1e-12 }
    }
}

pub const CHECK_Q_NONINCREASING: &str = "q_nonincreasing";
pub const CHECK_W_CONTINUOUS: &str = "w_continuous";
pub const CHECK_Z_SEGMENT_CONSTANT: &str = "z_segment_constant";
pub const CHECK_Q_STRICTLY_DECREASING: &str = "q_strictly_decreasing";
pub const CHECK_W_INCREASING: &str = "w_increasing";
pub const CHECK_RATIO_NONINCREASING: &str = "ratio_wq_nonincreasing";
pub const CHECK_PROP5: &str = "w_linear_bound";
pub const CHECK_THEOREM: &str = "lambda_linear_bound";
pub const CHECK_SLOPE: &str = "lambda_slope";
pub const CHECK_SEGMENT_Q: &str = "segment_identity_q";
pub const CHECK_SEGMENT_W: &str = "segment_identity_w";
pub const CHECK_DECREMENT: &str = "collision_decrement";
pub const CHECK_BOOKKEEPING: &str = "q_bookkeeping";
pub const CHECK_REPROJECTION: &str = "reprojection";
pub const CHECK_ORTHOGONALITY: &str = "orthogonality";

/// Scale of the products entering `Q` at a sample.
fn q_scale<S: Scalar>(r: &DiagnosticsRecord<S>) -> S {
    r.norm_z * r.norm_w
}

/// Monotonicity checks on `records` (as produced by [`sample_series`]):
/// `Q` non-increasing, `|w|` continuous at events, `|z|` constant on
/// segments, and when `Q(n_0) < 0` also `Q` decreasing and `|w|` increasing on
/// segments and `|w| / |Q|` non-increasing throughout. The last three are
/// reported as skipped otherwise.
pub fn verify_monotonicity<S: Scalar>(
    series: &TransportSeries<S>,
    records: &[DiagnosticsRecord<S>],
    options: &MonotonicityOptions,
) -> VerificationReport {
    let tol = options.tol;
    let mut q_mono = Tracker::new(CHECK_Q_NONINCREASING, tol);
    let mut w_cont = Tracker::new(CHECK_W_CONTINUOUS, options.jump_tol);
    let mut z_const = Tracker::new(CHECK_Z_SEGMENT_CONSTANT, tol);
    let mut q_dec = Tracker::new(CHECK_Q_STRICTLY_DECREASING, tol);
    let mut w_inc = Tracker::new(CHECK_W_INCREASING, tol);
    let mut ratio = Tracker::new(CHECK_RATIO_NONINCREASING, tol);
    let negative = series.initial.lyapunov() < S::zero();

    let mut seg_z = records.first().map(|r| r.norm_z).unwrap_or_else(S::zero);
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let scale = q_scale(a).max(q_scale(b));
        q_mono.observe(relative(a.q - b.q, scale), b.t);
        if b.segment_index != a.segment_index {
            seg_z = b.norm_z;
            if a.kind == SampleKind::PreEvent && b.kind == SampleKind::PostEvent {
                w_cont.observe(-relative((b.norm_w - a.norm_w).abs(), a.norm_w), b.t);
            }
        } else {
            z_const.observe(-relative((b.norm_z - seg_z).abs(), seg_z), b.t);
            if negative && b.t > a.t {
                q_dec.observe(relative(a.q - b.q, scale), b.t);
                w_inc.observe(relative(b.norm_w - a.norm_w, a.norm_w.max(b.norm_w)), b.t);
            }
        }
        if negative {
            ratio.observe(relative(a.ratio_wq - b.ratio_wq, a.ratio_wq.max(b.ratio_wq)), b.t);
        }
    }
    let mut checks = vec![q_mono.finish(), w_cont.finish(), z_const.finish()];
    if negative {
        checks.extend([q_dec.finish(), w_inc.finish(), ratio.finish()]);
    } else {
        for name in [CHECK_Q_STRICTLY_DECREASING, CHECK_W_INCREASING, CHECK_RATIO_NONINCREASING] {
            checks.push(CheckResult::skipped(name, tol));
        }
    }
    VerificationReport { checks, trajectory: meta(series) }
}

/// Least-squares slope of `lambda` against `t` over samples in `[t_lo, t_hi]`;
/// `None` with fewer than two distinct times.
pub fn lambda_slope<S: Scalar>(records: &[DiagnosticsRecord<S>], t_lo: S, t_hi: S) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= t_lo && r.t <= t_hi)
        .map(|r| (r.t.to_f64().unwrap_or(f64::NAN), r.lambda.to_f64().unwrap_or(f64::NAN)))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Linear growth checks for a covector with `Q(n_0) <= -c0 |n_0|^2`:
/// `|w_t|` above `|w_0| + |Q(n_0)| t / |w_0|` everywhere, and
/// `lambda_t >= 1 + c0 t` for `t >= 1 / c0`, together with the least-squares
/// slope of `lambda` over `[1 / c0, T]`.
///
/// Both statements are invariant under rescaling `n_0`, so a non-unit `n_0`
/// is judged through `n_0 / |n_0|`.
pub fn verify_growth<S: Scalar>(
    series: &TransportSeries<S>,
    records: &[DiagnosticsRecord<S>],
    c0: S,
    tol: f64,
) -> Result<VerificationReport> {
    let n0 = &series.initial;
    let norm2 = n0.norm_squared();
    if !(c0 > S::zero()) {
        return Err(Error::Configuration(format!("growth rate c0 must be positive (c0 = {c0})")));
    }
    if !(norm2 > S::zero()) || n0.lyapunov() / norm2 > -c0 {
        return Err(Error::Configuration(format!(
            "growth check needs Q(n0) <= -c0 for the unit covector (Q = {}, c0 = {c0})",
            n0.lyapunov() / norm2
        )));
    }
    let mut prop5 = Tracker::new(CHECK_PROP5, tol);
    let mut theorem = Tracker::new(CHECK_THEOREM, tol);
    let onset = S::one() / c0;
    for r in records {
        prop5.observe(relative(r.norm_w - r.bound_prop5, r.bound_prop5), r.t);
        if r.t >= onset {
            let bound = S::one() + c0 * r.t;
            theorem.observe(relative(r.lambda - bound, bound), r.t);
        }
    }
    let c0f = c0.to_f64().unwrap_or(f64::NAN);
    let slope = match lambda_slope(records, onset, series.end_time) {
        Some(s) => {
            let mut tr = Tracker::new(CHECK_SLOPE, tol);
            tr.observe(relative(s - c0f, c0f), series.end_time.to_f64().unwrap_or(f64::NAN));
            tr.finish()
        }
        None => CheckResult::skipped(CHECK_SLOPE, tol),
    };
    Ok(VerificationReport { checks: vec![prop5.finish(), theorem.finish(), slope], trajectory: meta(series) })
}

/// Tolerances for [`verify_identities`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityOptions {
    pub segment_tol: f64,
    pub decrement_tol: f64,
    pub bookkeeping_tol: f64,
    pub reprojection_tol: f64,
    pub orthogonality_tol: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            segment_tol: 1e-11,
            decrement_tol: 1e-10,
            bookkeeping_tol: 1e-9,
            reprojection_tol: 1e-10,
            orthogonality_tol: 1e-10,
        }
    }
}

/// Bookkeeping of the exact segment and collision identities:
///
/// * `Q_t = Q_s - (t - s) |z_s|^2` and
///   `|w_t|^2 = |w_s|^2 - 2 (t - s) Q_s + (t - s)^2 |z_s|^2` on every segment,
///   at the `grid` interior points and the right endpoint;
/// * the Q-jump at each event against its closed form;
/// * the total change of `Q` against the sum of all segment and collision
///   decrements;
/// * the re-projection correction at each event;
/// * `z, w` orthogonal to the velocity at every segment endpoint.
pub fn verify_identities<S: Scalar>(series: &TransportSeries<S>, grid: usize, options: &IdentityOptions) -> VerificationReport {
    let mut seg_q = Tracker::new(CHECK_SEGMENT_Q, options.segment_tol);
    let mut seg_w = Tracker::new(CHECK_SEGMENT_W, options.segment_tol);
    let mut dec = Tracker::new(CHECK_DECREMENT, options.decrement_tol);
    let mut book = Tracker::new(CHECK_BOOKKEEPING, options.bookkeeping_tol);
    let mut repro = Tracker::new(CHECK_REPROJECTION, options.reprojection_tol);
    let mut ortho = Tracker::new(CHECK_ORTHOGONALITY, options.orthogonality_tol);
    let two = S::two();

    let mut total = S::zero();
    let mut magnitude = S::zero();
    for seg in &series.segments {
        let s = &seg.start;
        let (qs, zs2, ws2) = (s.lyapunov(), s.z.norm_squared(), s.w.norm_squared());
        let (zs, ws) = (zs2.sqrt(), ws2.sqrt());
        let span = seg.t_end - seg.t_start;
        let steps = S::from_usize(grid + 1).expect("grid size");
        for i in 1..=grid + 1 {
            let dt = span * S::from_usize(i).expect("grid index") / steps;
            let n = seg.at(seg.t_start + dt);
            let reach = ws + dt * zs;
            let q_expected = qs - dt * zs2;
            seg_q.observe(-relative((n.lyapunov() - q_expected).abs(), zs * reach), seg.t_start + dt);
            let w_expected = ws2 - two * dt * qs + dt * dt * zs2;
            seg_w.observe(-relative((n.w.norm_squared() - w_expected).abs(), reach * reach), seg.t_start + dt);
        }
        total = total + span * zs2;
        magnitude = magnitude + span * zs2;
        for n in [&seg.start, &seg.end()] {
            let scale = n.norm();
            let off = n.z.dot(&seg.velocity).abs().max(n.w.dot(&seg.velocity).abs());
            ortho.observe(-relative(off, scale), seg.t_start);
        }
    }
    for j in &series.jumps {
        let jump = j.pre.lyapunov() - j.post.lyapunov();
        let scale = j.pre.z.norm() * j.pre.w.norm() + j.post.z.norm() * j.post.w.norm() + j.decrement.abs();
        dec.observe(-relative((jump - j.decrement).abs(), scale), j.t);
        repro.observe(-j.reprojection, j.t);
        total = total + j.decrement;
        magnitude = magnitude + j.decrement.abs();
    }
    let q0 = series.initial.lyapunov();
    let qt = series.final_covector().lyapunov();
    let scale = magnitude + q0.abs() + qt.abs();
    book.observe(-relative(((q0 - qt) - total).abs(), scale), series.end_time);

    VerificationReport {
        checks: vec![seg_q.finish(), seg_w.finish(), dec.finish(), book.finish(), repro.finish(), ortho.finish()],
        trajectory: meta(series),
    }
}

/// Gaussian vector in `v^perp` with identity covariance there.
fn gaussian_perp<S: Scalar>(basis: &[Vector<S>], dim: usize, rng: &mut ChaCha8Rng) -> Vector<S> {
    basis.iter().fold(Vector::zeros(dim), |acc, e| {
        let g: f64 = StandardNormal.sample(rng);
        acc.add_scaled(&S::lit(g), e)
    })
}

/// Unit covector uniform on the sphere of `v^perp + v^perp`, from
/// `ChaCha8Rng` seeded by `seed`.
pub fn sample_unit_covector<S: Scalar>(v: &Vector<S>, seed: u64) -> Result<Covector<S>> {
    if v.dim() < 2 {
        return Err(Error::Infeasible("velocity complement is empty in dimension 1".into()));
    }
    let basis = orthonormal_complement(v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = Covector::new(gaussian_perp(&basis, v.dim(), &mut rng), gaussian_perp(&basis, v.dim(), &mut rng));
        if n.norm() > S::zero() {
            return Ok(n.normalized());
        }
    }
}

/// Unit covector `(z, w)` with `z, w` orthogonal to `v` and `Q <= -c0`, drawn
/// from the rotation-invariant distribution on the unit sphere of
/// `v^perp + v^perp` conditioned on the bound (rejection sampling with
/// `ChaCha8Rng` seeded by `seed`).
///
/// `c0 = 1/2` is the equality case `z = -w = e / sqrt(2)`; the direction `e`
/// is drawn from the seed. `c0 > 1/2` is infeasible.
pub fn sample_covector_with_q_bound<S: Scalar>(v: &Vector<S>, c0: S, seed: u64) -> Result<Covector<S>> {
    let half = S::lit(0.5);
    if !(c0 > S::zero()) || c0 > half {
        return Err(Error::Infeasible(format!("no unit covector has Q <= -{c0}; need 0 < c0 <= 1/2")));
    }
    if v.dim() < 2 {
        return Err(Error::Infeasible("velocity complement is empty in dimension 1".into()));
    }
    let basis = orthonormal_complement(v);
    let dim = v.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if c0 == half {
        let e = gaussian_perp(&basis, dim, &mut rng).normalized();
        let s = S::FRAC_1_SQRT_2();
        return Ok(Covector::new(e.scale(&s), e.scale(&-s)));
    }
    for _ in 0..SAMPLER_BUDGET {
        let n = Covector::new(gaussian_perp(&basis, dim, &mut rng), gaussian_perp(&basis, dim, &mut rng));
        if !(n.norm() > S::zero()) {
            continue;
        }
        let n = n.normalized();
        if n.lyapunov() <= -c0 {
            return Ok(n);
        }
    }
    Err(Error::Infeasible(format!("rejection sampler found no covector with Q <= -{c0} in {SAMPLER_BUDGET} draws")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{flow, PhasePoint};
    use crate::geometry::build_sinai;
    use crate::transport::transport_covector;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_vec(x.to_vec())
    }

    fn free_series(n0: Covector<f64>, horizon: f64) -> TransportSeries<f64> {
        // a ball too small to be reached along y = 0.1 from x = 0
        let d = build_sinai(2, 0.05, 1.0, vec![v(&[0.5, 0.5])]).unwrap();
        let x = PhasePoint::new(v(&[0.0, 0.1]), v(&[1.0, 0.0]));
        let traj = flow(&d, &x, horizon, 10).unwrap();
        assert!(traj.events.is_empty());
        transport_covector(&d, &traj, &n0).unwrap()
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_q(&Covector::new(v(&[1.0, 0.0]), v(&[-1.0, 0.0]))), -1.0);
        assert_eq!(lyapunov_q(&Covector::new(v(&[1.0, 0.0]), v(&[0.0, 2.0]))), 0.0);
        let n = Covector::new(v(&[0.3, -0.2]), v(&[-0.5, 0.7]));
        let s = 3.5;
        assert_abs_diff_eq!(lyapunov_q(&n.scale(&s)), s * s * lyapunov_q(&n), epsilon = 1e-14);
    }

    #[test]
    fn expansion_factor_in_free_flight() {
        // velocity (1, 0): covector components live on the y axis
        let n0 = Covector::new(v(&[0.0, 1.0]), v(&[0.0, -1.0])).normalized();
        let series = free_series(n0, 2.0);
        assert_eq!(expansion_factor(&series, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(expansion_factor(&series, 2.0).unwrap(), 5.0_f64.sqrt(), epsilon = 1e-14);
        assert!(matches!(expansion_factor(&series, 2.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn sampling_layout() {
        let d = build_sinai(2, 0.25, 1.0, vec![v(&[0.5, 0.5])]).unwrap();
        let x = PhasePoint::new(v(&[0.1, 0.5]), v(&[1.0, 0.0]));
        let traj = flow(&d, &x, 1.0, 10).unwrap();
        let n0 = Covector::new(v(&[0.0, 0.6]), v(&[0.0, -0.8]));
        let series = transport_covector(&d, &traj, &n0).unwrap();
        let recs = sample_series(&series, 3, Some(0.1));
        assert_eq!(recs.len(), 3 * 5);
        assert_eq!(recs[0].kind, SampleKind::Start);
        assert_eq!(recs[4].kind, SampleKind::PreEvent);
        assert_eq!(recs[5].kind, SampleKind::PostEvent);
        assert_eq!(recs[4].t, recs[5].t);
        assert_eq!(recs.last().unwrap().kind, SampleKind::End);
        for pair in recs.windows(2) {
            assert!(pair[1].t > pair[0].t || (pair[0].kind == SampleKind::PreEvent && pair[1].kind == SampleKind::PostEvent));
        }
        for r in &recs {
            assert_abs_diff_eq!(r.norm_n * r.norm_n, r.norm_z * r.norm_z + r.norm_w * r.norm_w, epsilon = 1e-12 * r.norm_n * r.norm_n);
        }
        let report = verify_monotonicity(&series, &recs, &MonotonicityOptions::default());
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.checks.len(), 6);
        let ids = verify_identities(&series, 3, &IdentityOptions::default());
        assert!(ids.passed(), "{ids:?}");
    }

    #[test]
    fn zero_z_free_flight() {
        let n0 = Covector::new(v(&[0.0, 0.0]), v(&[0.0, 1.0]));
        let series = free_series(n0, 3.0);
        let recs = sample_series(&series, DEFAULT_GRID, None);
        let report = verify_monotonicity(&series, &recs, &MonotonicityOptions::default());
        assert!(report.passed());
        assert_eq!(report.check(CHECK_Q_NONINCREASING).unwrap().worst_margin, Some(0.0));
        for name in [CHECK_Q_STRICTLY_DECREASING, CHECK_W_INCREASING, CHECK_RATIO_NONINCREASING] {
            assert_eq!(report.check(name).unwrap().status, CheckStatus::Skipped);
        }
        assert!(recs.iter().all(|r| r.lambda == 1.0 && r.ratio_wq.is_infinite()));
    }

    #[test]
    fn corrupted_record_is_caught() {
        let d = build_sinai(2, 0.25, 1.0, vec![v(&[0.5, 0.5])]).unwrap();
        let x = PhasePoint::new(v(&[0.1, 0.5]), v(&[1.0, 0.0]));
        let traj = flow(&d, &x, 1.0, 10).unwrap();
        let n0 = Covector::new(v(&[0.0, 0.6]), v(&[0.0, -0.8]));
        let series = transport_covector(&d, &traj, &n0).unwrap();
        let mut recs = sample_series(&series, 4, None);
        let k = recs.iter().position(|r| r.kind == SampleKind::PostEvent).unwrap();
        recs[k].norm_w *= 1.5;
        let report = verify_monotonicity(&series, &recs, &MonotonicityOptions::default());
        let c = report.check(CHECK_W_CONTINUOUS).unwrap();
        assert!(c.failed());
        assert!(c.worst_margin.unwrap() < 0.0);
        assert!(!report.passed());
    }

    #[test]
    fn growth_in_free_flight() {
        let c0 = 0.1;
        // Q = -0.4 for the unit covector
        let n0 = Covector::new(v(&[0.0, 0.8]), v(&[0.0, -0.6])).normalized();
        let series = free_series(n0, 25.0);
        let recs = sample_series(&series, DEFAULT_GRID, Some(c0));
        let report = verify_growth(&series, &recs, c0, 1e-9).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.check(CHECK_PROP5).unwrap().worst_margin.unwrap() >= -1e-15);
        assert!(matches!(verify_growth(&series, &recs, 0.49, 1e-9), Err(Error::Configuration(_))));
    }

    #[test]
    fn sampler_contract() {
        let vel = v(&[0.6, 0.8, 0.0]);
        let a: Covector<f64> = sample_covector_with_q_bound(&vel, 0.1, 42).unwrap();
        let b: Covector<f64> = sample_covector_with_q_bound(&vel, 0.1, 42).unwrap();
        assert_eq!(a, b);
        assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-12);
        assert!(a.lyapunov() <= -0.1 + 1e-12);
        assert!(a.z.dot(&vel).abs() < 1e-12 && a.w.dot(&vel).abs() < 1e-12);

        let edge: Covector<f64> = sample_covector_with_q_bound(&vel, 0.5, 7).unwrap();
        assert_abs_diff_eq!(edge.lyapunov(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!((&edge.z + &edge.w).max_abs(), 0.0, epsilon = 1e-16);
        assert!(matches!(sample_covector_with_q_bound(&vel, 0.6, 1), Err(Error::Infeasible(_))));
        assert!(matches!(sample_covector_with_q_bound(&vel, 0.0, 1), Err(Error::Infeasible(_))));

        let u: Covector<f64> = sample_unit_covector(&vel, 3).unwrap();
        assert_abs_diff_eq!(u.norm(), 1.0, epsilon = 1e-12);
        assert!(u.z.dot(&vel).abs() < 1e-12 && u.w.dot(&vel).abs() < 1e-12);
    }
}
