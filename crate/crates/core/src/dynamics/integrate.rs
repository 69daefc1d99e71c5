//! Dormand–Prince 5(4) with Hairer's continuous extension.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::DynamicsError;
use crate::system::PolySystem;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROWTH: f64 = 10.0;
const BETA: f64 = 0.04;

/// Error control for the adaptive integrator. The local error of each step,
/// measured in the RMS norm with weights `atol + rtol·|y|`, is kept below 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl IntegratorOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        IntegratorOptions {
            rtol: tol,
            atol: tol,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 50_000_000,
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(DynamicsError::InvalidArgument("tolerances must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(DynamicsError::InvalidArgument("max_step must be positive"));
        }
        Ok(())
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self::with_tolerance(1e-10)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorInfo {
    pub method: &'static str,
    pub order: u32,
    pub rtol: f64,
    pub atol: f64,
    /// Step length when the run used fixed steps.
    pub fixed_step: Option<f64>,
    pub stats: StepStats,
}

fn rhs(sys: &PolySystem, x: &[f64], out: &mut [f64], scratch: &mut Vec<f64>, stats: &mut StepStats) {
    sys.eval_into(x, out, scratch);
    stats.evaluations += 1;
}

fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Evaluates the stored interpolant at `s ∈ [0, 1]` of a step.
pub(crate) fn dense_eval(dense: &[f64], d: usize, s: f64, out: &mut [f64]) {
    let s1 = 1.0 - s;
    for i in 0..d {
        let r = |k: usize| dense[k * d + i];
        out[i] = r(0) + s * (r(1) + s1 * (r(2) + s * (r(3) + s1 * r(4))));
    }
}

/// Single-trajectory stepping state.
pub(crate) struct Dopri5<'a> {
    sys: &'a PolySystem,
    d: usize,
    opts: IntegratorOptions,
    pub t: f64,
    pub y: Vec<f64>,
    /// `k[0]` holds `f(y)` between steps.
    k: [Vec<f64>; 7],
    ynew: Vec<f64>,
    ytmp: Vec<f64>,
    /// Interpolation coefficients of the last accepted step, `5·d` values.
    pub dense: Vec<f64>,
    /// Start time and length of the last accepted step.
    pub t_prev: f64,
    pub h_prev: f64,
    h: f64,
    facold: f64,
    rejected_last: bool,
    pub stats: StepStats,
    scratch: Vec<f64>,
}

impl<'a> Dopri5<'a> {
    pub fn new(sys: &'a PolySystem, x0: &[f64], t0: f64, opts: IntegratorOptions) -> Result<Self, DynamicsError> {
        opts.validate()?;
        let d = sys.dim();
        if x0.len() != d {
            return Err(crate::error::PolyError::DimensionMismatch {
                expected: d,
                found: x0.len(),
            }
            .into());
        }
        if !all_finite(x0) || !t0.is_finite() {
            return Err(DynamicsError::NonFiniteState { t: t0, state: x0.to_vec() });
        }
        let mut s = Dopri5 {
            sys,
            d,
            opts,
            t: t0,
            y: x0.to_vec(),
            k: core::array::from_fn(|_| vec![0.0; d]),
            ynew: vec![0.0; d],
            ytmp: vec![0.0; d],
            dense: vec![0.0; 5 * d],
            t_prev: t0,
            h_prev: 0.0,
            h: 0.0,
            facold: 1e-4,
            rejected_last: false,
            stats: StepStats::default(),
            scratch: Vec::new(),
        };
        rhs(sys, &s.y, &mut s.k[0], &mut s.scratch, &mut s.stats);
        s.h = match opts.initial_step {
            Some(h) if h > 0.0 => h.min(opts.max_step),
            _ => s.initial_step(),
        };
        Ok(s)
    }

    fn weight(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let d = self.d;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..d {
            let sk = self.weight(self.y[i], 0.0);
            dnf += (self.k[0][i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(self.opts.max_step);
        for i in 0..d {
            self.ytmp[i] = self.y[i] + h * self.k[0][i];
        }
        let (k0, rest) = self.k.split_at_mut(1);
        rhs(self.sys, &self.ytmp, &mut rest[0], &mut self.scratch, &mut self.stats);
        let mut der2 = 0.0;
        for i in 0..d {
            let sk = self.opts.atol + self.opts.rtol * self.y[i].abs();
            der2 += ((rest[0][i] - k0[0][i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.opts.max_step)
    }

    /// Computes stages for step `h`, leaving the fifth-order solution in
    /// `ynew` and `f(ynew)` in `k[6]`. Returns the scaled error norm.
    fn stages(&mut self, h: f64) -> f64 {
        let d = self.d;
        let sys = self.sys;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let y = &self.y;
        let yt = &mut self.ytmp;
        let sc = &mut self.scratch;
        let st = &mut self.stats;
        for i in 0..d {
            yt[i] = y[i] + h * A21 * k1[i];
        }
        rhs(sys, yt, k2, sc, st);
        for i in 0..d {
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(sys, yt, k3, sc, st);
        for i in 0..d {
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(sys, yt, k4, sc, st);
        for i in 0..d {
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(sys, yt, k5, sc, st);
        for i in 0..d {
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(sys, yt, k6, sc, st);
        for i in 0..d {
            self.ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(sys, &self.ynew, k7, sc, st);
        let mut err = 0.0;
        for i in 0..d {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = self.opts.atol + self.opts.rtol * y[i].abs().max(self.ynew[i].abs());
            err += (e / sk).powi(2);
        }
        let err = (err / d.max(1) as f64).sqrt();
        if all_finite(&self.ynew) && all_finite(k7) {
            err
        } else {
            f64::INFINITY
        }
    }

    /// Accepts the step just computed by `stages`.
    fn accept(&mut self, h: f64) {
        let d = self.d;
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        for i in 0..d {
            let ydiff = self.ynew[i] - self.y[i];
            let bspl = h * k1[i] - ydiff;
            self.dense[i] = self.y[i];
            self.dense[d + i] = ydiff;
            self.dense[2 * d + i] = bspl;
            self.dense[3 * d + i] = ydiff - h * k7[i] - bspl;
            self.dense[4 * d + i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        self.t_prev = self.t;
        self.h_prev = h;
        self.t += h;
        core::mem::swap(&mut self.y, &mut self.ynew);
        self.k.swap(0, 6);
        self.stats.accepted += 1;
    }

    fn check_budget(&self) -> Result<(), DynamicsError> {
        if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
            return Err(DynamicsError::TooManySteps(self.opts.max_steps));
        }
        Ok(())
    }

    /// Takes one accepted adaptive step, never passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<(), DynamicsError> {
        loop {
            self.check_budget()?;
            let remaining = t_limit - self.t;
            let mut h = self.h.min(self.opts.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if !(h > 16.0 * f64::EPSILON * self.t.abs().max(1.0)) {
                return Err(DynamicsError::StepSizeUnderflow {
                    t: self.t,
                    state: self.y.clone(),
                });
            }
            let err = self.stages(h);
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = h / MAX_SHRINK;
                self.rejected_last = true;
                if !(self.h > 16.0 * f64::EPSILON * self.t.abs().max(1.0)) {
                    return Err(DynamicsError::NonFiniteState {
                        t: self.t,
                        state: self.y.clone(),
                    });
                }
                continue;
            }
            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac = (fac11 / self.facold.powf(BETA) / SAFETY).clamp(1.0 / MAX_GROWTH, MAX_SHRINK);
                let mut hnew = (h / fac).min(self.opts.max_step);
                if self.rejected_last {
                    hnew = hnew.min(h);
                }
                self.facold = err.max(1e-4);
                self.rejected_last = false;
                self.accept(h);
                if last {
                    self.t = t_limit;
                    // a clipped final step says little about the next one
                    self.h = hnew.max(self.h);
                } else {
                    self.h = hnew;
                }
                return Ok(());
            }
            self.stats.rejected += 1;
            self.h = h / MAX_SHRINK.min(fac11 / SAFETY);
            self.rejected_last = true;
        }
    }

    /// Takes one step of exactly `h` without error control.
    pub fn step_fixed(&mut self, h: f64) -> Result<(), DynamicsError> {
        let err = self.stages(h);
        if err.is_nan() || !all_finite(&self.ynew) {
            return Err(DynamicsError::NonFiniteState {
                t: self.t + h,
                state: self.ynew.clone(),
            });
        }
        self.accept(h);
        Ok(())
    }

    pub fn info(&self, fixed_step: Option<f64>) -> IntegratorInfo {
        IntegratorInfo {
            method: "dopri5",
            order: 5,
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            fixed_step,
            stats: self.stats,
        }
    }
}

/// Integrated solution with the Runge–Kutta interpolant on every step.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    dense: Vec<f64>,
    info: IntegratorInfo,
}

impl Trajectory {
    fn start(dim: usize, t0: f64, x0: &[f64]) -> Self {
        Trajectory {
            dim,
            times: vec![t0],
            states: x0.to_vec(),
            dense: Vec::new(),
            info: IntegratorInfo {
                method: "dopri5",
                order: 5,
                rtol: 0.0,
                atol: 0.0,
                fixed_step: None,
                stats: StepStats::default(),
            },
        }
    }

    fn push(&mut self, stepper: &Dopri5<'_>) {
        self.times.push(stepper.t);
        self.states.extend_from_slice(&stepper.y);
        self.dense.extend_from_slice(&stepper.dense);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored time points (steps + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.states.chunks(self.dim)
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.t_end() - self.t_start()
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn info(&self) -> &IntegratorInfo {
        &self.info
    }

    pub(crate) fn step_dense(&self, i: usize) -> &[f64] {
        &self.dense[i * 5 * self.dim..(i + 1) * 5 * self.dim]
    }

    /// Index of the step containing `t` (clamped to the grid).
    pub fn step_index(&self, t: f64) -> usize {
        let n = self.num_steps();
        if n == 0 {
            return 0;
        }
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(n - 1)
    }

    /// Dense-output state at `t ∈ [t_start, t_end]`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.num_steps() == 0 {
            out.copy_from_slice(self.state(0));
            return;
        }
        let i = self.step_index(t);
        let h = self.times[i + 1] - self.times[i];
        let s = ((t - self.times[i]) / h).clamp(0.0, 1.0);
        dense_eval(self.step_dense(i), self.dim, s, out);
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    /// State at fraction `s` of step `i`.
    pub fn eval_step(&self, i: usize, s: f64, out: &mut [f64]) {
        dense_eval(self.step_dense(i), self.dim, s, out);
    }
}

/// Adaptive integration from `x0` over `[0, t_end]` with `rtol = atol = tol`.
pub fn integrate(system: &PolySystem, x0: &[f64], t_end: f64, tol: f64) -> Result<Trajectory, DynamicsError> {
    integrate_with(system, x0, t_end, IntegratorOptions::with_tolerance(tol))
}

pub fn integrate_with(
    system: &PolySystem,
    x0: &[f64],
    t_end: f64,
    options: IntegratorOptions,
) -> Result<Trajectory, DynamicsError> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(DynamicsError::InvalidArgument("t_end must be positive and finite"));
    }
    let mut stepper = Dopri5::new(system, x0, 0.0, options)?;
    let mut traj = Trajectory::start(system.dim(), 0.0, x0);
    while stepper.t < t_end {
        stepper.step(t_end)?;
        traj.push(&stepper);
    }
    traj.info = stepper.info(None);
    Ok(traj)
}

/// Integration with `steps` equal steps of the fifth-order formula.
pub fn integrate_fixed(system: &PolySystem, x0: &[f64], t_end: f64, steps: usize) -> Result<Trajectory, DynamicsError> {
    if !(t_end > 0.0) || steps == 0 {
        return Err(DynamicsError::InvalidArgument("t_end and steps must be positive"));
    }
    let h = t_end / steps as f64;
    let mut stepper = Dopri5::new(system, x0, 0.0, IntegratorOptions::with_tolerance(1.0))?;
    let mut traj = Trajectory::start(system.dim(), 0.0, x0);
    for i in 0..steps {
        stepper.step_fixed(h)?;
        if i + 1 == steps {
            stepper.t = t_end;
        }
        traj.push(&stepper);
    }
    traj.info = stepper.info(Some(h));
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_output_hits_step_endpoints() {
        let sys = PolySystem::harmonic_oscillator();
        let tr = integrate(&sys, &[1.0, 0.0], 3.0, 1e-9).unwrap();
        let mut out = [0.0; 2];
        for i in 0..tr.num_steps() {
            tr.eval_step(i, 0.0, &mut out);
            assert_eq!(&out[..], tr.state(i));
            tr.eval_step(i, 1.0, &mut out);
            for (a, b) in out.iter().zip(tr.state(i + 1)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert_eq!(tr.t_end(), 3.0);
    }

    #[test]
    fn origin_stays_put() {
        let sys = PolySystem::lorenz_standard();
        let tr = integrate(&sys, &[0.0, 0.0, 0.0], 10.0, 1e-10).unwrap();
        assert!(tr.states().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = PolySystem::harmonic_oscillator();
        assert!(integrate(&sys, &[1.0, 0.0], -1.0, 1e-8).is_err());
        assert!(integrate(&sys, &[1.0, 0.0], 1.0, 0.0).is_err());
        assert!(integrate(&sys, &[1.0], 1.0, 1e-8).is_err());
        assert!(integrate(&sys, &[f64::NAN, 0.0], 1.0, 1e-8).is_err());
    }
}
