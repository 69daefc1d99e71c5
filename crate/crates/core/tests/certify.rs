use std::sync::OnceLock;

use ergobound_core::certify::*;
use ergobound_core::dynamics::*;
use ergobound_core::sdp::SdpOptions;
use ergobound_core::sos::*;
use ergobound_core::{CertifyError, PolySystem, Polynomial};
use proptest::prelude::*;

fn lorenz() -> PolySystem {
    PolySystem::lorenz_standard()
}

fn z4() -> Polynomial {
    Polynomial::var(3, 2).powi(4)
}

fn residual(degree: u32) -> &'static (BoundCertificate, Residual) {
    static R4: OnceLock<(BoundCertificate, Residual)> = OnceLock::new();
    static R6: OnceLock<(BoundCertificate, Residual)> = OnceLock::new();
    let cell = if degree == 4 { &R4 } else { &R6 };
    cell.get_or_init(|| {
        let opts = SosOptions::new(degree, Prescaling::lorenz_default());
        let cert = compute_bound(&lorenz(), &z4(), &opts, &SdpOptions::default()).unwrap();
        let r = Residual::new(&cert, &z4(), &lorenz()).unwrap();
        (cert, r)
    })
}

fn orbit(symbols: &'static str) -> &'static PeriodicOrbit {
    static AB: OnceLock<PeriodicOrbit> = OnceLock::new();
    static LONG: OnceLock<PeriodicOrbit> = OnceLock::new();
    let cell = if symbols == "AB" { &AB } else { &LONG };
    cell.get_or_init(|| {
        let f = lorenz();
        let sec = SectionSpec::lorenz_default(28.0);
        let seeds = close_return_seeds(&f, &sec, symbols, 500.0, &SeedOptions::default()).unwrap();
        shoot_from_seeds(&f, &sec, symbols, &seeds, &ShootingOptions::default()).orbit.unwrap()
    })
}

fn orbit_average(symbols: &'static str) -> f64 {
    time_average(&orbit(symbols).trajectory, &z4(), 0.0).unwrap()
}

fn box_shape(n: usize) -> GridShape {
    GridShape::new(GridBox::lorenz_default(), vec![n; 3]).unwrap()
}

/// Fraction of `samples` equally spaced times (midpoint rule) with `g ≤ M`.
fn sampled_occupancy(traj: &Trajectory, r: &Residual, m: f64, samples: usize) -> f64 {
    let (a, b) = (traj.t_start(), traj.t_end());
    let inside = (0..samples)
        .filter(|&k| r.eval(&traj.eval(a + (b - a) * (k as f64 + 0.5) / samples as f64)) <= m)
        .count();
    inside as f64 / samples as f64
}

#[test]
fn markov_bound_examples() {
    assert_eq!(markov_bound(0.23, 1000.0).unwrap(), 0.99977);
    assert_eq!(markov_bound(0.0, 3000.0).unwrap(), 1.0);
    assert_eq!(markov_bound(3000.0, 3000.0).unwrap(), 0.0);
    assert!(matches!(markov_bound(1.0, -1e-9), Err(CertifyError::NonPositiveThreshold(_))));
    assert!(matches!(markov_bound(-0.5, 10.0), Err(CertifyError::NegativeEpsilon(_))));
}

#[test]
fn extreme_thresholds_fill_or_empty_the_grid() {
    // g = 1 + z² on the box
    let phi = -&Polynomial::var(3, 2).powi(2);
    let r = Residual::from_parts(1.0, &Polynomial::zero(3), &phi, &lorenz()).unwrap();
    let g = region_grid(&r, box_shape(11), 0.5).unwrap();
    assert_eq!(g.member_count(), 0);
    assert_eq!(g.min_value(), 1.0);
    let all = g.with_threshold(g.max_value()).unwrap();
    assert_eq!(all.member_fraction(), 1.0);
    assert!(region_grid(&r, box_shape(11), 0.0).is_err());
    assert!(region_grid(&r, box_shape(11), -1.0).is_err());
    assert!(GridShape::new(GridBox::lorenz_default(), vec![1, 4, 4]).is_err());
}

#[test]
fn valid_certificates_are_nonnegative_on_the_box() {
    for degree in [4, 6] {
        let (cert, r) = residual(degree);
        let g = region_grid(r, box_shape(61), 3000.0).unwrap();
        assert!(g.min_value() >= -1e-6 * (1.0 + cert.bound.abs()), "{}", g.min_value());
        assert_eq!(g.certificate, certificate_id(cert.bound, &cert.v));
    }
}

#[test]
fn degree_six_region_has_two_lobes() {
    let (_, r) = residual(6);
    let g = region_grid(r, box_shape(61), 3000.0).unwrap();
    let frac = g.member_fraction();
    assert!(frac > 0.0 && frac < 1.0, "{}", frac);
    // project onto the xy-plane: each nonzero equilibrium sits in a hole
    // that the projected region encircles
    let n = 61;
    let mut shadow = vec![false; n * n];
    for (i, &m) in g.mask.iter().enumerate() {
        if m {
            shadow[i % (n * n)] = true;
        }
    }
    let cell = |v: f64| ((v + 25.0) / 50.0 * (n - 1) as f64).round() as i64;
    let at = |i: i64, j: i64| i >= 0 && j >= 0 && i < n as i64 && j < n as i64 && shadow[(j as usize) * n + i as usize];
    for eq in &lorenz_equilibria(8.0 / 3.0, 10.0, 28.0).unwrap()[1..] {
        let (ci, cj) = (cell(eq[0]), cell(eq[1]));
        for di in -1..=1 {
            for dj in -1..=1 {
                assert!(!at(ci + di, cj + dj), "equilibrium column is inside the region");
            }
        }
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            assert!((1..n as i64).any(|k| at(ci + k * di, cj + k * dj)), "no wall in direction {:?}", (di, dj));
        }
    }
    // the orbit's two loops each pass through the region
    let o = orbit("AB");
    let hits: Vec<bool> = o.trajectory.states().filter(|s| r.eval(s) <= 3000.0).map(|s| s[0] > 0.0).collect();
    assert!(hits.iter().any(|&b| b) && hits.iter().any(|&b| !b));
}

#[test]
fn masks_grow_with_threshold() {
    let (_, r) = residual(4);
    let base = region_grid(r, box_shape(21), 1.0).unwrap();
    proptest!(ProptestConfig::with_cases(64), |(a in 1.0f64..1e6, b in 1.0f64..1e6)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = base.with_threshold(lo).unwrap();
        let large = base.with_threshold(hi).unwrap();
        prop_assert!(small.mask.iter().zip(&large.mask).all(|(s, l)| !s || *l));
    });
}

#[test]
fn trace_mean_equals_gap_on_shortest_orbit() {
    let avg = orbit_average("AB");
    for degree in [4, 6] {
        let (cert, r) = residual(degree);
        let tr = residual_trace(&orbit("AB").trajectory, r, 3).unwrap();
        let eps = cert.bound - avg;
        assert!(((tr.mean - eps) / eps).abs() < 1e-6, "{} vs {}", tr.mean, eps);
        assert!(tr.min() > 0.0);
        assert_eq!(tr.times.len(), tr.values.len());
        assert_eq!(*tr.times.last().unwrap(), orbit("AB").period);
    }
    let (c6, _) = residual(6);
    assert!(c6.bound - avg > 2324.0);
}

#[test]
fn lie_term_averages_out_on_shortest_orbit() {
    let (cert, r) = residual(6);
    let o = orbit("AB");
    let shifted = &z4() + r.lie_derivative();
    let with = time_average(&o.trajectory, &shifted, 0.0).unwrap();
    let without = orbit_average("AB");
    assert!(((with - without) / without).abs() < 1e-7);
    assert_eq!(r.bound(), cert.bound);
}

#[test]
fn longer_orbit_trace_exceeds_shortest_by_the_average_gap() {
    let (_, r) = residual(6);
    let ab = residual_trace(&orbit("AB").trajectory, r, 0).unwrap().mean;
    let long = residual_trace(&orbit("AABABB").trajectory, r, 0).unwrap().mean;
    let gap = long - ab;
    assert!(gap >= 0.0 && (gap - 2798.0).abs() < 10.0, "{}", gap);
}

#[test]
fn zero_system_has_zero_trace() {
    let f = PolySystem::zero(3);
    let r = Residual::from_parts(0.0, &Polynomial::zero(3), &Polynomial::zero(3), &f).unwrap();
    let traj = integrate(&f, &[1.0, 2.0, 3.0], 1.0, 1e-10).unwrap();
    let tr = residual_trace(&traj, &r, 4).unwrap();
    assert!(tr.values.iter().all(|&v| v == 0.0));
    assert_eq!(tr.mean, 0.0);
    assert_eq!(occupancy_fraction(&traj, &r, 1.0, 0.0).unwrap(), 1.0);
}

#[test]
fn occupancy_respects_markov_estimate() {
    let o = orbit("AB");
    let avg = orbit_average("AB");
    for degree in [4, 6] {
        let (_, r) = residual(degree);
        for m in [1500.0, 3000.0, 6000.0] {
            let report = gap_report(&o.trajectory, r, &z4(), m, 0.0).unwrap();
            assert!((report.average - avg).abs() < 1e-9 * avg);
            assert!(report.consistent(1e-6), "{:?}", report);
            assert!((0.0..=1.0).contains(&report.occupancy));
            let oracle = sampled_occupancy(&o.trajectory, r, m, 200_000);
            assert!((report.occupancy - oracle).abs() < 1e-3, "{} vs {}", report.occupancy, oracle);
        }
    }
}

#[test]
fn occupancy_extremes() {
    let (_, r) = residual(6);
    let o = orbit("AB");
    let tr = residual_trace(&o.trajectory, r, 3).unwrap();
    assert_eq!(occupancy_fraction(&o.trajectory, r, tr.max() * 1.01, 0.0).unwrap(), 1.0);
    // resting on a nonzero equilibrium, g is constant at U − (r−1)⁴
    let eq = lorenz_equilibria(8.0 / 3.0, 10.0, 28.0).unwrap()[1];
    let rest = integrate(&lorenz(), &eq, 2.0, 1e-10).unwrap();
    let level = r.eval(&eq);
    assert!(level > 1000.0);
    assert_eq!(occupancy_fraction(&rest, r, 0.5 * level, 0.0).unwrap(), 0.0);
    assert_eq!(occupancy_fraction(&rest, r, 2.0 * level, 0.5).unwrap(), 1.0);
    assert!(occupancy_fraction(&rest, r, 1000.0, 2.0).is_err());
}

#[test]
fn trapping_check_verdicts() {
    for degree in [4, 6] {
        let (_, r) = residual(degree);
        let rep = trapping_check(r, &TrappingOptions::new(vec![50.0, 100.0, 200.0], 3)).unwrap();
        assert_eq!(rep.verdict, TrappingVerdict::Pass, "{:?}", rep);
        assert!(rep.decreasing);
        let mut inner = TrappingOptions::new(vec![1.0, 2.0, 5.0], 3);
        inner.center = vec![0.0, 0.0, 27.0];
        let rep = trapping_check(r, &inner).unwrap();
        assert_eq!(rep.verdict, TrappingVerdict::Inconclusive, "{:?}", rep);
    }
    let zero = Residual::from_parts(0.0, &Polynomial::zero(3), &z4(), &lorenz()).unwrap();
    let rep = trapping_check(&zero, &TrappingOptions::new(vec![50.0, 100.0, 200.0], 3)).unwrap();
    assert_eq!(rep.verdict, TrappingVerdict::Fail);
    assert!(rep.spheres.iter().all(|s| s.max_lie == 0.0));
}

#[test]
fn bound_is_nearly_attained_in_the_box() {
    for degree in [4, 6] {
        let (cert, r) = residual(degree);
        let est = max_estimate(r, &box_shape(61), 50).unwrap();
        assert!(est.slack >= -1e-6 * cert.bound && est.slack < 0.1, "{:?}", est);
    }
}

#[test]
fn certificate_identity_is_reproducible() {
    let (cert, r) = residual(4);
    let opts = SosOptions::new(4, Prescaling::lorenz_default());
    let again = compute_bound(&lorenz(), &z4(), &opts, &SdpOptions::default()).unwrap();
    assert_eq!(certificate_id(again.bound, &again.v), r.identity());
    assert_eq!(again.bound, cert.bound);
}

#[test]
fn occupancy_is_a_fraction() {
    let (_, r) = residual(4);
    let traj = &orbit("AB").trajectory;
    proptest!(ProptestConfig::with_cases(32), |(m in 1.0f64..2e5, spinup in 0.0f64..1.5)| {
        let occ = occupancy_fraction(traj, r, m, spinup).unwrap();
        prop_assert!((0.0..=1.0).contains(&occ));
    });
}
