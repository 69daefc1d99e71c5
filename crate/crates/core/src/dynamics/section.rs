//! Hyperplane sections and crossing detection on the dense output.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::integrate::{dense_eval, Trajectory};
use crate::error::DynamicsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossingDirection {
    /// `n·x − offset` goes from negative to non-negative.
    Increasing,
    /// `n·x − offset` goes from positive to non-positive.
    Decreasing,
    Both,
}

/// The hyperplane `n·x = offset` with a crossing direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionSpec {
    normal: Vec<f64>,
    offset: f64,
    direction: CrossingDirection,
}

impl SectionSpec {
    pub fn new(normal: Vec<f64>, offset: f64, direction: CrossingDirection) -> Result<Self, DynamicsError> {
        if normal.iter().all(|&v| v == 0.0) || !normal.iter().all(|v| v.is_finite()) || !offset.is_finite() {
            return Err(DynamicsError::InvalidArgument("section normal must be finite and nonzero"));
        }
        Ok(SectionSpec {
            normal,
            offset,
            direction,
        })
    }

    /// `z = r − 1`, crossed downward.
    pub fn lorenz_default(r: f64) -> Self {
        SectionSpec {
            normal: vec![0.0, 0.0, 1.0],
            offset: r - 1.0,
            direction: CrossingDirection::Decreasing,
        }
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn direction(&self) -> CrossingDirection {
        self.direction
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed distance-like value `n·x − offset`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>() - self.offset
    }

    /// Whether a step from value `s0` to `s1` crosses in the declared direction.
    pub fn crosses(&self, s0: f64, s1: f64) -> bool {
        let down = s0 > 0.0 && s1 <= 0.0;
        let up = s0 < 0.0 && s1 >= 0.0;
        match self.direction {
            CrossingDirection::Decreasing => down,
            CrossingDirection::Increasing => up,
            CrossingDirection::Both => down || up,
        }
    }

    /// Whether the velocity `v` points through the plane in the declared direction.
    pub fn agrees_with(&self, v: &[f64]) -> bool {
        let nv: f64 = self.normal.iter().zip(v).map(|(n, x)| n * x).sum();
        match self.direction {
            CrossingDirection::Decreasing => nv < 0.0,
            CrossingDirection::Increasing => nv > 0.0,
            CrossingDirection::Both => nv != 0.0,
        }
    }

    /// Orthogonal projection of `x` onto the plane.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let nn: f64 = self.normal.iter().map(|v| v * v).sum();
        let s = self.value(x) / nn;
        x.iter().zip(&self.normal).map(|(xi, ni)| xi - s * ni).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub state: Vec<f64>,
}

/// Root of the section value inside one step, by the Illinois variant of
/// regula falsi on the interpolant.
pub(crate) fn refine_in_step(section: &SectionSpec, dense: &[f64], d: usize, t0: f64, h: f64) -> Crossing {
    let mut x = vec![0.0; d];
    let g = |s: f64, x: &mut [f64]| {
        dense_eval(dense, d, s, x);
        section.value(x)
    };
    let (mut a, mut b) = (0.0, 1.0);
    let mut fa = g(a, &mut x);
    let mut fb = g(b, &mut x);
    let mut best = if fa.abs() < fb.abs() { a } else { b };
    let mut side = 0i8;
    for _ in 0..200 {
        if fa == 0.0 || fb == 0.0 || b - a <= 1e-15 {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = g(c, &mut x);
        let prev = best;
        best = c;
        if fc == 0.0 || (c - prev).abs() <= 1e-16 {
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
    if fa == 0.0 {
        best = a;
    } else if fb == 0.0 {
        best = b;
    }
    dense_eval(dense, d, best, &mut x);
    Crossing { t: t0 + best * h, state: x }
}

/// All crossings of the section in its declared direction, in time order.
pub fn section_crossings(traj: &Trajectory, section: &SectionSpec) -> Vec<Crossing> {
    let d = traj.dim();
    if section.dim() != d {
        return Vec::new();
    }
    let mut out = Vec::new();
    let times = traj.times();
    let mut s0 = section.value(traj.state(0));
    for i in 0..traj.num_steps() {
        let s1 = section.value(traj.state(i + 1));
        if section.crosses(s0, s1) {
            out.push(refine_in_step(section, traj.step_dense(i), d, times[i], times[i + 1] - times[i]));
        }
        s0 = s1;
    }
    out
}
