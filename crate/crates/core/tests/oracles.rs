//! Independent oracles: finite differences of the normal field and of the
//! flow map, spectra of curvature operators, exact rational pairing.

use billiard_core::dynamics::{flow, sample_phase_point, PhasePoint, Trajectory};
use billiard_core::geometry::{build_hardball_gas, build_sinai, Ambient, Domain, Scatterer};
use billiard_core::linalg::{orthonormal_complement, Vector};
use billiard_core::transport::{
    adjoint_residual_exact, event_geometry, transport_tangent, transversal_basis, AdjointOptions, Covector, TangentVector,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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
        vec![Scatterer::Cylinder {
            axis_point: v(&[0.5, 0.5, 0.0]),
            axis_directions: vec![v(&[0.0, 0.0, 1.0])],
            radius: 0.3,
        }],
    )
    .unwrap()
}

fn gaussian_perp(rng: &mut ChaCha8Rng, dir: &Vector<f64>) -> Vector<f64> {
    let x = Vector::from_vec((0..dir.dim()).map(|_| rng.random::<f64>() - 0.5).collect());
    x.reject_from(dir).normalized()
}

/// Point on a round boundary reached from `center` (the nearest axis point)
/// along the unit transversal direction `dir`.
fn surface_point(center: &Vector<f64>, dir: &Vector<f64>, radius: f64) -> Vector<f64> {
    center.add_scaled(&radius, dir)
}

#[test]
fn curvature_matches_derivative_of_normal_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // sphere in 3D: the normal along the surface curve c + r (nu + s u / r)/|.|
    let d = build_sinai(3, 0.3, 1.0, vec![v(&[0.5, 0.5, 0.5])]).unwrap();
    let c = v(&[0.5, 0.5, 0.5]);
    for _ in 0..20 {
        let nu = Vector::from_vec((0..3).map(|_| rng.random::<f64>() - 0.5).collect()).normalized();
        let u = gaussian_perp(&mut rng, &nu);
        let p = surface_point(&c, &nu, 0.3);
        let k = d.curvature_at(0, &p).unwrap();
        let mut prev = f64::INFINITY;
        for h in [2e-3, 1e-3, 5e-4] {
            let on = |s: f64| surface_point(&c, &nu.add_scaled(&(s / 0.3), &u).normalized(), 0.3);
            let plus = d.normal_at(0, &on(h)).unwrap();
            let minus = d.normal_at(0, &on(-h)).unwrap();
            let fd = (&plus - &minus).scale(&(0.5 / h));
            // the curve's velocity at s = 0 is u
            let err = (&fd - &k.apply(&u)).norm_squared();
            assert!(err < 1e-8, "h = {h}: {err}");
            // second order: the squared error drops by about 2^4 per halving
            if prev.is_finite() {
                assert!(err < prev / 8.0, "{err} vs {prev}");
            }
            prev = err;
        }
    }
    // cylinder: axial motion leaves the normal unchanged
    let d = cylinder3();
    let axis_pt = v(&[0.5, 0.5, 0.2]);
    for _ in 0..20 {
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        let nu = v(&[th.cos(), th.sin(), 0.0]);
        let u = v(&[-th.sin(), th.cos(), 0.0]).scale(&rng.random::<f64>()).add_scaled(&rng.random::<f64>(), &v(&[0.0, 0.0, 1.0]));
        let p = surface_point(&axis_pt, &nu, 0.3);
        let k = d.curvature_at(0, &p).unwrap();
        let h = 1e-4;
        let on = |s: f64| {
            let radial = v(&[u[0], u[1], 0.0]);
            let axial = u[2];
            surface_point(&axis_pt.add_scaled(&s, &v(&[0.0, 0.0, axial])), &nu.add_scaled(&(s / 0.3), &radial).normalized(), 0.3)
        };
        let fd = (&d.normal_at(0, &on(h)).unwrap() - &d.normal_at(0, &on(-h)).unwrap()).scale(&(0.5 / h));
        assert!((&fd - &k.apply(&u)).max_abs() < 1e-6);
    }
}

#[test]
fn curvature_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases: Vec<(Domain<f64>, usize, f64)> = vec![
        (build_sinai(3, 0.3, 1.0, vec![v(&[0.5, 0.5, 0.5])]).unwrap(), 2, 1.0 / 0.3),
        (cylinder3(), 1, 1.0 / 0.3),
        (build_hardball_gas(3, 2, 0.1, 1.0).unwrap(), 1, 1.0 / (0.1 * 2.0_f64.sqrt())),
    ];
    for (d, positive, kappa) in cases {
        for _ in 0..20 {
            let x = sample_phase_point(&d, 1e-3, &mut rng).unwrap();
            // walk to the first boundary point along the sampled ray
            let traj = flow(&d, &x, 50.0, 1).unwrap();
            let Some(ev) = traj.events.first() else { continue };
            let k = d.curvature_at(ev.scatterer, &ev.q).unwrap();
            let n = d.dim();
            let m = DMatrix::from_fn(n, n, |i, j| *k.matrix().get(i, j));
            assert_eq!(m, m.transpose());
            let eig = SymmetricEigen::new(m).eigenvalues;
            let mut vals: Vec<f64> = eig.iter().copied().collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(vals.iter().all(|&l| l > -1e-12), "{vals:?}");
            let count = vals.iter().filter(|&&l| (l - kappa).abs() < 1e-9 * kappa).count();
            assert_eq!(count, positive, "{vals:?}");
            assert!(vals[..n - positive].iter().all(|l| l.abs() < 1e-12));
            assert!(k.apply(&ev.normal).max_abs() < 1e-12);
        }
    }
}

/// A trajectory of horizon `T` with exactly one collision at `cos(phi) >= 0.2`.
fn single_collision(d: &Domain<f64>, rng: &mut ChaCha8Rng) -> (PhasePoint<f64>, Trajectory<f64>) {
    loop {
        let x = sample_phase_point(d, 1e-2, rng).unwrap();
        let probe = flow(d, &x, 10.0, 2).unwrap();
        if probe.events.is_empty() || probe.events[0].cos_phi < 0.2 {
            continue;
        }
        let t1 = probe.events[0].t;
        let t2 = probe.events.get(1).map_or(t1 + 1.0, |e| e.t);
        let horizon = t1 + 0.5 * (t2 - t1).min(1.0);
        let traj = flow(d, &x, horizon, 10).unwrap();
        if traj.events.len() == 1 {
            return (x, traj);
        }
    }
}

fn perturbed(x: &PhasePoint<f64>, dy: &TangentVector<f64>, h: f64) -> PhasePoint<f64> {
    PhasePoint::new(x.q.add_scaled(&h, &dy.dq), x.v.add_scaled(&h, &dy.dv).normalized())
}

#[test]
fn collision_tangent_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut count = 0;
    for d in [sinai2(), cylinder3()] {
        let eps = d.tolerances().graze;
        let mut done = 0;
        while done < 25 {
            let (x, traj) = single_collision(&d, &mut rng);
            let dy = TangentVector::new(gaussian_perp(&mut rng, &x.v), gaussian_perp(&mut rng, &x.v));
            let geometry = event_geometry(&d, &traj);
            let exact = transport_tangent(&geometry, &traj.end_time, &dy, &eps).unwrap();
            let plus = flow(&d, &perturbed(&x, &dy, h), traj.end_time, 10).unwrap();
            let minus = flow(&d, &perturbed(&x, &dy, -h), traj.end_time, 10).unwrap();
            if plus.events.len() != 1 || minus.events.len() != 1 {
                continue;
            }
            let fd = TangentVector::new(
                d.displacement(&plus.end.q, &minus.end.q).scale(&(0.5 / h)),
                (&plus.end.v - &minus.end.v).scale(&(0.5 / h)),
            );
            let diff = TangentVector::new(&fd.dq - &exact.dq, &fd.dv - &exact.dv);
            let rel = (diff.norm_squared() / exact.norm_squared()).sqrt();
            worst = worst.max(rel);
            assert!(rel < 1e-4, "relative FD mismatch {rel}");
            done += 1;
            count += 1;
        }
    }
    assert_eq!(count, 50);
    assert!(worst > 0.0);
}

#[test]
fn exact_pairing_is_conserved_and_corruption_is_not() {
    let d = sinai2();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let x = sample_phase_point(&d, 1e-3, &mut rng).unwrap();
        let traj = flow(&d, &x, 10.0, 10_000).unwrap();
        let perp = orthonormal_complement(&x.v);
        let n0 = Covector::new(perp[0].scale(&0.6), perp[0].scale(&-0.8));
        let basis = transversal_basis(&x.v);
        let ok = adjoint_residual_exact(&d, &traj, &n0, &basis, &AdjointOptions::default()).unwrap();
        assert_eq!(ok, 0.0);
        if !traj.events.is_empty() {
            let bad = adjoint_residual_exact(&d, &traj, &n0, &basis, &AdjointOptions { grid: 8, curvature_scale: 2.0 }).unwrap();
            assert!(bad > 1e-6, "{bad}");
        }
    }
}

#[test]
fn kernel_of_the_pairing_is_transported() {
    // dy with <dy, n0> = 0 stays tangent to the transported hypersurface
    let d = cylinder3();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let x = sample_phase_point(&d, 1e-3, &mut rng).unwrap();
        let traj = flow(&d, &x, 3.0, 1000).unwrap();
        let e = orthonormal_complement(&x.v);
        let n0 = Covector::new(e[0].clone(), e[1].scale(&-1.0));
        // <(e1, e0), n0> = <e1, e0> - <e0, e1> = 0
        let dy = TangentVector::new(e[1].clone(), e[0].clone());
        assert_eq!(dy.pairing(&n0), 0.0);
        let basis = [dy];
        let r = adjoint_residual_exact(&d, &traj, &n0, &basis, &AdjointOptions::default()).unwrap();
        assert_eq!(r, 0.0);
    }
}
