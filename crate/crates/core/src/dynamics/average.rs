//! Finite-window time averages by Gauss–Legendre quadrature on the interpolant.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::integrate::Trajectory;
use crate::error::DynamicsError;
use crate::poly::Polynomial;

/// Gauss–Legendre nodes per step used by [`time_average`].
pub const DEFAULT_NODES: usize = 8;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pi = core::f64::consts::PI;
    for i in 0..n.div_ceil(2) {
        let mut z = (pi * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `∫ f(x(t)) dt` over `[a, b]`, applying an `nodes`-point rule on each step
/// of the trajectory that overlaps the window.
pub fn integral_with<F>(traj: &Trajectory, a: f64, b: f64, nodes: usize, mut f: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let (gx, gw) = gauss_legendre(nodes.max(1));
    let times = traj.times();
    let mut x = vec![0.0; traj.dim()];
    let mut total = 0.0;
    for i in 0..traj.num_steps() {
        let (t0, t1) = (times[i], times[i + 1]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if !(hi > lo) {
            continue;
        }
        let h = t1 - t0;
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (xi, wi) in gx.iter().zip(&gw) {
            let t = mid + half * xi;
            traj.eval_step(i, (t - t0) / h, &mut x);
            acc += wi * f(&x);
        }
        total += half * acc;
    }
    total
}

/// Mean of `f(x(t))` over `[t_start + spinup, t_end]`.
pub fn time_average_with<F>(traj: &Trajectory, spinup: f64, nodes: usize, f: F) -> Result<f64, DynamicsError>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(spinup >= 0.0) {
        return Err(DynamicsError::InvalidArgument("spinup must be non-negative"));
    }
    let a = traj.t_start() + spinup;
    let b = traj.t_end();
    if !(b > a) {
        return Err(DynamicsError::EmptyWindow);
    }
    Ok(integral_with(traj, a, b, nodes, f) / (b - a))
}

/// Finite-window average of `Φ` along the trajectory after discarding `spinup`.
pub fn time_average(traj: &Trajectory, phi: &Polynomial, spinup: f64) -> Result<f64, DynamicsError> {
    if phi.dim() != traj.dim() {
        return Err(crate::error::PolyError::DimensionMismatch {
            expected: traj.dim(),
            found: phi.dim(),
        }
        .into());
    }
    let c = phi.compile();
    let mut scratch = Vec::new();
    time_average_with(traj, spinup, DEFAULT_NODES, |x| c.eval_with(x, &mut scratch))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={} k={}", n, k);
            }
        }
    }
}
