//! Near-optimality diagnostics built from a bound certificate.
//!
//! Everything here revolves around the residual `g = U − Φ − f·∇V`, which is
//! non-negative wherever the certificate holds and whose average along any
//! bounded trajectory equals `U` minus the trajectory's average of `Φ`. Its
//! sublevel sets `S_M = {g ≤ M}` are where near-optimal trajectories spend
//! most of their time.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::dynamics::{integral_with, Trajectory, DEFAULT_NODES};
use crate::error::{CertifyError, DynamicsError, PolyError};
use crate::poly::{CompiledPoly, Polynomial};
use crate::sos::BoundCertificate;
use crate::system::PolySystem;

/// The residual `g(x) = U − Φ(x) − f·∇V(x)` of a certificate.
#[derive(Clone, Debug)]
pub struct Residual {
    bound: f64,
    poly: Polynomial,
    lie: Polynomial,
    compiled: CompiledPoly,
    identity: String,
}

impl Residual {
    pub fn new(cert: &BoundCertificate, phi: &Polynomial, system: &PolySystem) -> Result<Self, CertifyError> {
        Self::from_parts(cert.bound, &cert.v, phi, system)
    }

    pub fn from_parts(bound: f64, v: &Polynomial, phi: &Polynomial, system: &PolySystem) -> Result<Self, CertifyError> {
        let d = system.dim();
        if phi.dim() != d {
            return Err(PolyError::DimensionMismatch {
                expected: d,
                found: phi.dim(),
            }
            .into());
        }
        if !bound.is_finite() {
            return Err(CertifyError::NonFinite);
        }
        let lie = system.lie_derivative(v)?;
        let poly = Polynomial::constant(d, bound).try_sub(phi)?.try_sub(&lie)?;
        Ok(Residual {
            bound,
            compiled: poly.compile(),
            identity: certificate_id(bound, v),
            poly,
            lie,
        })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    /// `f·∇V`.
    pub fn lie_derivative(&self) -> &Polynomial {
        &self.lie
    }

    /// Hex SHA-256 of `U` and `V`, see [`certificate_id`].
    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.compiled.eval(x)
    }

    pub fn eval_with(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        self.compiled.eval_with(x, scratch)
    }
}

/// Hex SHA-256 over the bit patterns of `U` and of every term of `V` in
/// graded lexicographic order. Identical certificates give identical ids on
/// every platform.
pub fn certificate_id(bound: f64, v: &Polynomial) -> String {
    let mut h = Sha256::new();
    h.update(bound.to_bits().to_le_bytes());
    h.update((v.dim() as u64).to_le_bytes());
    for (m, c) in v.terms() {
        for &e in m.exponents() {
            h.update(e.to_le_bytes());
        }
        h.update(c.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{:02x}", b)).collect()
}

/// `max(0, 1 − ε/M)`: the guaranteed fraction of time a trajectory within
/// `ε` of the bound spends in `S_M`.
pub fn markov_bound(epsilon: f64, threshold: f64) -> Result<f64, CertifyError> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(CertifyError::NonPositiveThreshold(threshold));
    }
    if !(epsilon >= 0.0) {
        return Err(CertifyError::NegativeEpsilon(epsilon));
    }
    Ok((1.0 - epsilon / threshold).max(0.0))
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, CertifyError> {
        if lo.len() != hi.len() {
            return Err(PolyError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            }
            .into());
        }
        if !lo.iter().chain(&hi).all(|v| v.is_finite()) || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(CertifyError::NonFinite);
        }
        Ok(GridBox { lo, hi })
    }

    /// `[−25,25]² × [0,60]`, which contains the Lorenz attractor.
    pub fn lorenz_default() -> Self {
        GridBox {
            lo: vec![-25.0, -25.0, 0.0],
            hi: vec![25.0, 25.0, 60.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Node layout of a tensor grid: x varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridShape {
    pub domain: GridBox,
    pub resolution: Vec<usize>,
}

impl GridShape {
    pub fn new(domain: GridBox, resolution: Vec<usize>) -> Result<Self, CertifyError> {
        if resolution.len() != domain.dim() || resolution.iter().any(|&n| n < 2) {
            return Err(CertifyError::Resolution);
        }
        Ok(GridShape { domain, resolution })
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = (self.domain.lo[axis], self.domain.hi[axis]);
        let n = self.resolution[axis] - 1;
        if i == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / n as f64
        }
    }

    /// Coordinates of node `index`.
    pub fn node_into(&self, mut index: usize, out: &mut [f64]) {
        for (axis, o) in out.iter_mut().enumerate() {
            let n = self.resolution[axis];
            *o = self.coordinate(axis, index % n);
            index /= n;
        }
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.dim()];
        self.node_into(index, &mut out);
        out
    }

    /// Evaluates `g` on the nodes `range`, in node order.
    pub fn evaluate_range(&self, residual: &Residual, range: core::ops::Range<usize>) -> Vec<f64> {
        let mut x = vec![0.0; self.domain.dim()];
        let mut scratch = Vec::new();
        range
            .map(|i| {
                self.node_into(i, &mut x);
                residual.eval_with(&x, &mut scratch)
            })
            .collect()
    }
}

/// Samples of `g` on a tensor grid together with the sublevel mask `g ≤ M`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionGrid {
    pub shape: GridShape,
    pub values: Vec<f64>,
    pub threshold: f64,
    pub bound: f64,
    /// [`certificate_id`] of the certificate the values came from.
    pub certificate: String,
    pub mask: Vec<bool>,
}

impl RegionGrid {
    /// Wraps precomputed node values, e.g. from a parallel evaluation.
    pub fn from_values(
        shape: GridShape,
        values: Vec<f64>,
        threshold: f64,
        bound: f64,
        certificate: String,
    ) -> Result<Self, CertifyError> {
        if !(threshold > 0.0) {
            return Err(CertifyError::NonPositiveThreshold(threshold));
        }
        if values.len() != shape.len() {
            return Err(CertifyError::Resolution);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CertifyError::NonFinite);
        }
        let mask = values.iter().map(|&g| g <= threshold).collect();
        Ok(RegionGrid {
            shape,
            values,
            threshold,
            bound,
            certificate,
            mask,
        })
    }

    /// The same samples under a different threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self, CertifyError> {
        Self::from_values(
            self.shape.clone(),
            self.values.clone(),
            threshold,
            self.bound,
            self.certificate.clone(),
        )
    }

    pub fn member_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn member_fraction(&self) -> f64 {
        self.member_count() as f64 / self.values.len() as f64
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and coordinates of the node where `g` is smallest.
    pub fn argmin(&self) -> (usize, Vec<f64>) {
        let i = (0..self.values.len())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        (i, self.shape.node(i))
    }

    /// Whether `x` lies in `S_M`, by direct evaluation rather than the grid.
    pub fn contains(&self, residual: &Residual, x: &[f64]) -> bool {
        residual.eval(x) <= self.threshold
    }
}

/// Samples `g` on every node of the grid, sequentially.
pub fn region_grid(residual: &Residual, shape: GridShape, threshold: f64) -> Result<RegionGrid, CertifyError> {
    if !(threshold > 0.0) {
        return Err(CertifyError::NonPositiveThreshold(threshold));
    }
    if shape.domain.dim() != residual.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: residual.dim(),
            found: shape.domain.dim(),
        }
        .into());
    }
    let values = shape.evaluate_range(residual, 0..shape.len());
    RegionGrid::from_values(shape, values, threshold, residual.bound(), String::from(residual.identity()))
}

/// Subintervals per integrator step scanned for threshold crossings.
const OCCUPANCY_PIECES: usize = 8;

/// Time-weighted fraction of `[t_start + spinup, t_end]` during which
/// `g(x(t)) ≤ M`. Threshold crossings are located on the dense output.
pub fn occupancy_fraction(
    traj: &Trajectory,
    residual: &Residual,
    threshold: f64,
    spinup: f64,
) -> Result<f64, CertifyError> {
    if !(threshold > 0.0) {
        return Err(CertifyError::NonPositiveThreshold(threshold));
    }
    if !(spinup >= 0.0) {
        return Err(DynamicsError::InvalidArgument("spinup must be non-negative").into());
    }
    let (a, b) = (traj.t_start() + spinup, traj.t_end());
    if !(b > a) {
        return Err(DynamicsError::EmptyWindow.into());
    }
    let times = traj.times();
    let mut x = vec![0.0; traj.dim()];
    let mut scratch = Vec::new();
    let mut inside = 0.0;
    for i in 0..traj.num_steps() {
        let (t0, t1) = (times[i], times[i + 1]);
        let (lo, hi) = (t0.max(a), t1.min(b));
        if !(hi > lo) {
            continue;
        }
        let h = t1 - t0;
        let mut level = |t: f64| {
            traj.eval_step(i, (t - t0) / h, &mut x);
            residual.eval_with(&x, &mut scratch) - threshold
        };
        let dt = (hi - lo) / OCCUPANCY_PIECES as f64;
        let mut ta = lo;
        let mut fa = level(ta);
        for k in 1..=OCCUPANCY_PIECES {
            let tb = if k == OCCUPANCY_PIECES { hi } else { lo + dt * k as f64 };
            let fb = level(tb);
            inside += match (fa <= 0.0, fb <= 0.0) {
                (true, true) => tb - ta,
                (false, false) => 0.0,
                (true, false) => root(&mut level, ta, tb, fa, fb) - ta,
                (false, true) => tb - root(&mut level, ta, tb, fa, fb),
            };
            ta = tb;
            fa = fb;
        }
    }
    if !inside.is_finite() {
        return Err(CertifyError::NonFinite);
    }
    Ok((inside / (b - a)).clamp(0.0, 1.0))
}

/// Illinois iteration for a sign change of `f` on `[a, b]`.
fn root<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    let mut side = 0i8;
    let mut c = a;
    for _ in 0..100 {
        c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 || b - a <= 1e-14 * (1.0 + c.abs()) {
            break;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    c
}

/// `g` sampled along a trajectory, usually one period of an orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Quadrature mean of `g` over the whole trajectory.
    pub mean: f64,
}

impl ResidualTrace {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Samples `g` at every step point and at `interior` evenly spaced points
/// inside each step; the mean uses Gauss–Legendre quadrature on the
/// interpolant.
pub fn residual_trace(traj: &Trajectory, residual: &Residual, interior: usize) -> Result<ResidualTrace, CertifyError> {
    if traj.dim() != residual.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: residual.dim(),
            found: traj.dim(),
        }
        .into());
    }
    if !(traj.duration() > 0.0) {
        return Err(DynamicsError::EmptyWindow.into());
    }
    let times = traj.times();
    let mut scratch = Vec::new();
    let mut x = vec![0.0; traj.dim()];
    let mut ts = Vec::with_capacity(traj.num_steps() * (interior + 1) + 1);
    let mut vs = Vec::with_capacity(ts.capacity());
    for i in 0..traj.num_steps() {
        for k in 0..=interior {
            let s = k as f64 / (interior + 1) as f64;
            traj.eval_step(i, s, &mut x);
            ts.push(times[i] + s * (times[i + 1] - times[i]));
            vs.push(residual.eval_with(&x, &mut scratch));
        }
    }
    ts.push(traj.t_end());
    vs.push(residual.eval_with(traj.last_state(), &mut scratch));
    let integral = integral_with(traj, traj.t_start(), traj.t_end(), DEFAULT_NODES, |y| {
        residual.eval_with(y, &mut scratch)
    });
    let mean = integral / traj.duration();
    if !mean.is_finite() || vs.iter().any(|v| !v.is_finite()) {
        return Err(CertifyError::NonFinite);
    }
    Ok(ResidualTrace {
        times: ts,
        values: vs,
        mean,
    })
}

/// How close a trajectory comes to the bound and what that implies about
/// its time in `S_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub bound: f64,
    pub average: f64,
    /// `U − average`.
    pub epsilon: f64,
    pub threshold: f64,
    /// `1 − ε/M`, clamped to `[0, 1]`; a slightly negative `ε` counts as zero.
    pub markov_bound: f64,
    pub occupancy: f64,
}

impl GapReport {
    pub fn new(bound: f64, average: f64, threshold: f64, occupancy: f64) -> Result<Self, CertifyError> {
        let epsilon = bound - average;
        if !epsilon.is_finite() || !occupancy.is_finite() {
            return Err(CertifyError::NonFinite);
        }
        let markov_bound = markov_bound(epsilon.max(0.0), threshold)?;
        Ok(GapReport {
            bound,
            average,
            epsilon,
            threshold,
            markov_bound,
            occupancy,
        })
    }

    /// Whether the measured occupancy respects the Markov estimate.
    pub fn consistent(&self, tol: f64) -> bool {
        self.occupancy >= self.markov_bound - tol
    }
}

/// Builds the [`GapReport`] of a trajectory: its average of `Φ` from the
/// quadrature mean of `g` and its measured occupancy of `S_M`.
pub fn gap_report(
    traj: &Trajectory,
    residual: &Residual,
    phi: &Polynomial,
    threshold: f64,
    spinup: f64,
) -> Result<GapReport, CertifyError> {
    let average = crate::dynamics::time_average(traj, phi, spinup)?;
    let occupancy = occupancy_fraction(traj, residual, threshold, spinup)?;
    GapReport::new(residual.bound(), average, threshold, occupancy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrappingVerdict {
    /// Maxima of `f·∇V` fall strictly with the radius and end negative.
    Pass,
    /// The schedule never reaches a radius where `f·∇V` is negative
    /// everywhere, or the maxima do not fall monotonically.
    Inconclusive,
    /// `f·∇V ≤ U − Φ` is violated at some sample.
    Fail,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrappingOptions {
    pub radii: Vec<f64>,
    pub center: Vec<f64>,
    pub samples_per_sphere: usize,
    /// Allowed violation, relative to `1 + |U|`.
    pub tol: f64,
    pub seed: u64,
}

impl TrappingOptions {
    pub fn new(radii: Vec<f64>, dim: usize) -> Self {
        TrappingOptions {
            radii,
            center: vec![0.0; dim],
            samples_per_sphere: 4096,
            tol: 1e-4,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereSample {
    pub radius: f64,
    /// Largest sampled `f·∇V`.
    pub max_lie: f64,
    /// Largest sampled `f·∇V − (U − Φ)`.
    pub max_violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrappingReport {
    pub spheres: Vec<SphereSample>,
    pub decreasing: bool,
    pub verdict: TrappingVerdict,
}

/// Samples `f·∇V` and `f·∇V − (U − Φ)` on spheres of the given radii.
pub fn trapping_check(residual: &Residual, options: &TrappingOptions) -> Result<TrappingReport, CertifyError> {
    let d = residual.dim();
    if options.center.len() != d {
        return Err(PolyError::DimensionMismatch {
            expected: d,
            found: options.center.len(),
        }
        .into());
    }
    if options.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) || options.samples_per_sphere == 0 {
        return Err(DynamicsError::InvalidArgument("radii must be positive and samples nonzero").into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let directions: Vec<Vec<f64>> = (0..options.samples_per_sphere).map(|_| unit_vector(&mut rng, d)).collect();
    let lie = residual.lie_derivative().compile();
    let mut scratch = Vec::new();
    let mut x = vec![0.0; d];
    let mut spheres = Vec::with_capacity(options.radii.len());
    for &r in &options.radii {
        let mut max_lie = f64::NEG_INFINITY;
        let mut max_violation = f64::NEG_INFINITY;
        for u in &directions {
            for ((xi, ci), ui) in x.iter_mut().zip(&options.center).zip(u) {
                *xi = ci + r * ui;
            }
            max_lie = max_lie.max(lie.eval_with(&x, &mut scratch));
            max_violation = max_violation.max(-residual.eval_with(&x, &mut scratch));
        }
        spheres.push(SphereSample {
            radius: r,
            max_lie,
            max_violation,
        });
    }
    let mut order: Vec<&SphereSample> = spheres.iter().collect();
    order.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let decreasing = order.windows(2).all(|w| w[1].max_lie < w[0].max_lie);
    let allowed = options.tol * (1.0 + residual.bound().abs());
    let violated = spheres.iter().any(|s| s.max_violation > allowed || !s.max_violation.is_finite());
    let ends_negative = order.last().is_some_and(|s| s.max_lie < 0.0);
    let verdict = if violated {
        TrappingVerdict::Fail
    } else if decreasing && ends_negative {
        TrappingVerdict::Pass
    } else {
        TrappingVerdict::Inconclusive
    };
    Ok(TrappingReport {
        spheres,
        decreasing,
        verdict,
    })
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d)
            .map(|_| {
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen::<f64>();
                (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
            })
            .collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            v.iter_mut().for_each(|a| *a /= n);
            return v;
        }
    }
}

/// Estimate of `max (Φ + f·∇V)` over a box, i.e. `U − min g`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEstimate {
    pub point: Vec<f64>,
    pub value: f64,
    /// `U − value`; small when the bound is nearly attained in the box.
    pub slack: f64,
}

/// Grid search for the smallest `g` followed by projected gradient descent
/// from the best few nodes.
pub fn max_estimate(residual: &Residual, shape: &GridShape, starts: usize) -> Result<MaxEstimate, CertifyError> {
    let d = residual.dim();
    if shape.domain.dim() != d {
        return Err(PolyError::DimensionMismatch {
            expected: d,
            found: shape.domain.dim(),
        }
        .into());
    }
    let values = shape.evaluate_range(residual, 0..shape.len());
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let grad: Vec<CompiledPoly> = residual.polynomial().gradient().iter().map(|p| p.compile()).collect();
    let mut scratch = Vec::new();
    let mut best = (shape.node(idx[0]), values[idx[0]]);
    for &i in idx.iter().take(starts.max(1)) {
        let mut x = shape.node(i);
        let mut gx = values[i];
        let mut step = 1e-2
            * shape
                .domain
                .lo
                .iter()
                .zip(&shape.domain.hi)
                .map(|(a, b)| b - a)
                .fold(0.0, f64::max);
        for _ in 0..500 {
            let g: Vec<f64> = grad.iter().map(|p| p.eval_with(&x, &mut scratch)).collect();
            let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            if gn == 0.0 {
                break;
            }
            let trial: Vec<f64> = (0..d)
                .map(|k| (x[k] - step * g[k] / gn).clamp(shape.domain.lo[k], shape.domain.hi[k]))
                .collect();
            let gt = residual.eval_with(&trial, &mut scratch);
            if gt < gx {
                x = trial;
                gx = gt;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        if gx < best.1 {
            best = (x, gx);
        }
    }
    Ok(MaxEstimate {
        value: residual.bound() - best.1,
        slack: best.1,
        point: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markov_examples() {
        assert_eq!(markov_bound(0.23, 1000.0).unwrap(), 0.99977);
        assert_eq!(markov_bound(0.0, 5.0).unwrap(), 1.0);
        assert_eq!(markov_bound(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(markov_bound(50.0, 5.0).unwrap(), 0.0);
        assert!(markov_bound(1.0, 0.0).is_err());
        assert!(markov_bound(-1.0, 1.0).is_err());
    }

    #[test]
    fn grid_nodes_are_x_fastest() {
        let shape = GridShape::new(GridBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(), vec![3, 2]).unwrap();
        assert_eq!(shape.len(), 6);
        assert_eq!(shape.node(1), vec![0.5, 0.0]);
        assert_eq!(shape.node(3), vec![0.0, 2.0]);
        assert_eq!(shape.node(5), vec![1.0, 2.0]);
        assert!(GridShape::new(shape.domain.clone(), vec![1, 2]).is_err());
    }

    #[test]
    fn certificate_id_tracks_bound_and_v() {
        let v = Polynomial::var(3, 0);
        let a = certificate_id(1.0, &v);
        assert_eq!(a.len(), 64);
        assert_eq!(a, certificate_id(1.0, &v));
        assert_ne!(a, certificate_id(1.0 + 1e-15, &v));
        assert_ne!(a, certificate_id(1.0, &v.scale(2.0)));
    }
}
