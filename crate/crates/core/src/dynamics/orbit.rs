//! Periodic orbits by Newton shooting on a Poincaré return map.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use super::integrate::{integrate_with, Dopri5, IntegratorOptions, Trajectory};
use super::section::{refine_in_step, Crossing, SectionSpec};
use crate::error::DynamicsError;
use crate::system::PolySystem;

/// Splits a symbol word into its primitive root and repetition count, then
/// rotates the root to its lexicographically least form.
///
/// `"ABAB"` gives `("AB", 2)`, `"BAA"` gives `("AAB", 1)`.
pub fn canonical_symbols(word: &str) -> (String, usize) {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n == 0 {
        return (String::new(), 0);
    }
    let period = (1..=n)
        .find(|&p| n.is_multiple_of(p) && (p..n).all(|i| chars[i] == chars[i - p]))
        .unwrap_or(n);
    let root: String = chars[..period].iter().collect();
    (least_rotation(&root), n / period)
}

/// True when `a` is a cyclic rotation of `b`.
pub fn same_cycle(a: &str, b: &str) -> bool {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    a.len() == b.len() && (0..a.len().max(1)).any(|r| (0..a.len()).all(|i| a[(i + r) % a.len()] == b[i]))
}

/// `'A'` when the chosen coordinate is negative, `'B'` otherwise.
pub fn symbol_of(x: &[f64], axis: usize) -> char {
    if x[axis] < 0.0 {
        'A'
    } else {
        'B'
    }
}

/// Equilibria of the Lorenz system: the origin and, for `r > 1`, the pair
/// `(±√(β(r−1)), ±√(β(r−1)), r−1)`.
pub fn lorenz_equilibria(beta: f64, sigma: f64, r: f64) -> Result<Vec<[f64; 3]>, DynamicsError> {
    if !(beta > 0.0 && sigma > 0.0 && r > 0.0) {
        return Err(DynamicsError::InvalidArgument("Lorenz parameters must be positive"));
    }
    let mut out = vec![[0.0; 3]];
    if r > 1.0 {
        let s = (beta * (r - 1.0)).sqrt();
        out.push([s, s, r - 1.0]);
        out.push([-s, -s, r - 1.0]);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingOptions {
    pub integrator: IntegratorOptions,
    /// Convergence threshold on `|P^k(x) − x|`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Relative finite-difference step, scaled by `1 + |x|`.
    pub fd_step: f64,
    /// Give up on a return map that has not produced `k` crossings by then.
    pub max_return_time: f64,
    /// Coordinate whose sign labels each crossing.
    pub symbol_axis: usize,
    /// Require each crossing label to match the label at the highest point
    /// of the loop that precedes it.
    pub check_loop_labels: bool,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            integrator: IntegratorOptions::with_tolerance(1e-12),
            tol: 1e-10,
            max_iterations: 40,
            fd_step: 1e-7,
            max_return_time: 100.0,
            symbol_axis: 0,
            check_loop_labels: true,
        }
    }
}

/// Result of following a point to its `k`-th section crossing.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnMap {
    pub state: Vec<f64>,
    pub time: f64,
    pub crossings: Vec<Crossing>,
    pub symbols: String,
    /// Labels taken where the section function peaks between crossings.
    pub loop_symbols: String,
}

/// `P^k(x0)`: the state at the `k`-th crossing after time zero.
pub fn return_map(
    system: &PolySystem,
    section: &SectionSpec,
    x0: &[f64],
    k: usize,
    options: &ShootingOptions,
) -> Result<ReturnMap, DynamicsError> {
    if k == 0 {
        return Err(DynamicsError::InvalidArgument("return count must be positive"));
    }
    let d = system.dim();
    let mut stepper = Dopri5::new(system, x0, 0.0, options.integrator)?;
    let mut crossings = Vec::with_capacity(k);
    let mut loop_symbols = String::new();
    let mut s0 = section.value(x0);
    let mut peak = (s0, symbol_of(x0, options.symbol_axis));
    while crossings.len() < k {
        if stepper.t >= options.max_return_time {
            return Err(DynamicsError::MissingCrossing);
        }
        stepper.step(options.max_return_time)?;
        let s1 = section.value(&stepper.y);
        if section.crosses(s0, s1) {
            crossings.push(refine_in_step(section, &stepper.dense, d, stepper.t_prev, stepper.h_prev));
            loop_symbols.push(peak.1);
            peak = (s1, symbol_of(&stepper.y, options.symbol_axis));
        } else if s1 > peak.0 {
            peak = (s1, symbol_of(&stepper.y, options.symbol_axis));
        }
        s0 = s1;
    }
    let symbols = crossings.iter().map(|c| symbol_of(&c.state, options.symbol_axis)).collect();
    let last = crossings.last().unwrap();
    Ok(ReturnMap {
        state: last.state.clone(),
        time: last.t,
        symbols,
        loop_symbols,
        crossings,
    })
}

/// Orthonormal frame of a section hyperplane.
struct Frame {
    origin: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl Frame {
    fn new(section: &SectionSpec) -> Self {
        let n = section.normal();
        let d = n.len();
        let nn: f64 = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        let unit: Vec<f64> = n.iter().map(|v| v / nn).collect();
        let origin: Vec<f64> = unit.iter().map(|u| u * section.offset() / nn).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
        let skip = (0..d)
            .max_by(|&a, &b| unit[a].abs().partial_cmp(&unit[b].abs()).unwrap())
            .unwrap_or(0);
        for j in (0..d).filter(|&j| j != skip) {
            let mut v = vec![0.0; d];
            v[j] = 1.0;
            for q in core::iter::once(&unit).chain(basis.iter()) {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
            let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
        Frame { origin, basis }
    }

    fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|e| e.iter().zip(x).zip(&self.origin).map(|((ei, xi), oi)| ei * (xi - oi)).sum())
            .collect()
    }

    /// In-plane components of a vector.
    fn tangential(&self, v: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|e| e.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (e, ui) in self.basis.iter().zip(u) {
            for (xi, ei) in x.iter_mut().zip(e) {
                *xi += ui * ei;
            }
        }
        x
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// A converged closed orbit anchored on the section.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    pub anchor: Vec<f64>,
    pub period: f64,
    /// Crossing labels in canonical rotation.
    pub symbols: String,
    /// `|P^k(anchor) − anchor|` at convergence.
    pub residual: f64,
    pub iterations: usize,
    /// Section crossings over one period; the last one closes the orbit.
    pub crossings: Vec<Crossing>,
    /// One period of the flow from the anchor.
    pub trajectory: Trajectory,
}

impl PeriodicOrbit {
    /// `|flow(anchor, T) − anchor|` along the stored trajectory.
    pub fn closure_error(&self) -> f64 {
        let end = self.trajectory.last_state();
        norm(&end.iter().zip(&self.anchor).map(|(a, b)| a - b).collect::<Vec<_>>())
    }
}

struct Evaluation {
    x: Vec<f64>,
    map: ReturnMap,
    g: Vec<f64>,
    residual: f64,
}

/// Newton iteration on `P^k(x) − x` restricted to the section, with a
/// central-difference Jacobian and step halving.
pub fn find_periodic_orbit(
    system: &PolySystem,
    section: &SectionSpec,
    symbols: &str,
    guess: &[f64],
    options: &ShootingOptions,
) -> Result<PeriodicOrbit, DynamicsError> {
    let d = system.dim();
    let k = symbols.chars().count();
    if k == 0 {
        return Err(DynamicsError::InvalidArgument("symbol sequence is empty"));
    }
    if guess.len() != d || section.dim() != d {
        return Err(crate::error::PolyError::DimensionMismatch {
            expected: d,
            found: guess.len(),
        }
        .into());
    }
    if d < 2 {
        return Err(DynamicsError::InvalidArgument("shooting needs at least two dimensions"));
    }
    let frame = Frame::new(section);
    let evaluate = |u: &[f64]| -> Result<Evaluation, DynamicsError> {
        let x = frame.point(u);
        let map = return_map(system, section, &x, k, options)?;
        let diff: Vec<f64> = map.state.iter().zip(&x).map(|(a, b)| a - b).collect();
        let g = frame.tangential(&diff);
        Ok(Evaluation {
            residual: norm(&diff),
            x,
            map,
            g,
        })
    };
    let mut u = frame.coords(guess);
    let mut cur = evaluate(&u)?;
    let m = d - 1;
    let mut iterations = 0;
    while cur.residual > options.tol {
        if iterations >= options.max_iterations {
            return Err(DynamicsError::NoConvergence {
                iterations,
                residual: cur.residual,
            });
        }
        iterations += 1;
        let h = options.fd_step * (1.0 + norm(&cur.x));
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let mut up = u.clone();
            up[j] += h;
            let mut um = u.clone();
            um[j] -= h;
            let gp = evaluate(&up)?.g;
            let gm = evaluate(&um)?.g;
            for i in 0..m {
                jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let rhs = -DVector::from_column_slice(&cur.g);
        let du = jac.lu().solve(&rhs).ok_or(DynamicsError::NoConvergence {
            iterations,
            residual: cur.residual,
        })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(du.iter()).map(|(a, b)| a + lambda * b).collect();
            match evaluate(&trial) {
                Ok(next) if next.residual < cur.residual => {
                    u = trial;
                    cur = next;
                    break;
                }
                _ => {
                    lambda *= 0.5;
                    if lambda < 1.0 / 1024.0 {
                        return Err(DynamicsError::NoConvergence {
                            iterations,
                            residual: cur.residual,
                        });
                    }
                }
            }
        }
    }
    let fx = system.eval(&cur.x);
    let speed = norm(&fx);
    if !section.agrees_with(&fx) || speed <= 1e-6 * (1.0 + norm(&cur.x)) {
        return Err(DynamicsError::NotTransversal);
    }
    if options.check_loop_labels && cur.map.loop_symbols != cur.map.symbols {
        return Err(DynamicsError::AmbiguousSymbols {
            crossings: cur.map.symbols.clone(),
            loops: cur.map.loop_symbols.clone(),
        });
    }
    if canonical_symbols(&cur.map.symbols) != canonical_symbols(symbols) {
        return Err(DynamicsError::SymbolMismatch {
            requested: String::from(symbols),
            found: cur.map.symbols.clone(),
        });
    }
    let period = cur.map.time;
    let trajectory = integrate_with(system, &cur.x, period, options.integrator)?;
    Ok(PeriodicOrbit {
        anchor: cur.x,
        period,
        symbols: least_rotation(&cur.map.symbols),
        residual: cur.residual,
        iterations,
        crossings: cur.map.crossings,
        trajectory,
    })
}

fn least_rotation(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    (0..chars.len())
        .map(|r| chars[r..].iter().chain(&chars[..r]).collect::<String>())
        .min()
        .unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedOptions {
    pub start: [f64; 3],
    /// Transient discarded before collecting crossings.
    pub spinup: f64,
    pub tol: f64,
    pub max_seeds: usize,
    pub symbol_axis: usize,
}

impl Default for SeedOptions {
    fn default() -> Self {
        SeedOptions {
            start: [1.0, 1.0, 1.0],
            spinup: 10.0,
            tol: 1e-10,
            max_seeds: 20,
            symbol_axis: 0,
        }
    }
}

/// Candidate start for shooting: a crossing whose `k`-th successor lands
/// nearby with the requested itinerary.
#[derive(Clone, Debug, PartialEq)]
pub struct Seed {
    pub state: Vec<f64>,
    pub time: f64,
    pub distance: f64,
    pub symbols: String,
}

/// Close returns of a chaotic run, sorted by return distance.
pub fn close_return_seeds(
    system: &PolySystem,
    section: &SectionSpec,
    symbols: &str,
    run_length: f64,
    options: &SeedOptions,
) -> Result<Vec<Seed>, DynamicsError> {
    if !(run_length > 0.0) {
        return Err(DynamicsError::InvalidArgument("run_length must be positive"));
    }
    let k = symbols.chars().count();
    if k == 0 {
        return Ok(Vec::new());
    }
    let d = system.dim();
    let start = &options.start[..d.min(3)];
    let x0 = if options.spinup > 0.0 {
        integrate_with(system, start, options.spinup, IntegratorOptions::with_tolerance(options.tol))?
            .last_state()
            .to_vec()
    } else {
        start.to_vec()
    };
    let run = integrate_with(system, &x0, run_length, IntegratorOptions::with_tolerance(options.tol))?;
    let cr = super::section::section_crossings(&run, section);
    let labels: Vec<char> = cr.iter().map(|c| symbol_of(&c.state, options.symbol_axis)).collect();
    let mut seeds = Vec::new();
    for i in 0..cr.len().saturating_sub(k) {
        let word: String = labels[i + 1..=i + k].iter().collect();
        if !same_cycle(&word, symbols) {
            continue;
        }
        let dist = norm(&cr[i + k].state.iter().zip(&cr[i].state).map(|(a, b)| a - b).collect::<Vec<_>>());
        seeds.push(Seed {
            state: cr[i].state.clone(),
            time: cr[i].t,
            distance: dist,
            symbols: word,
        });
    }
    seeds.sort_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap().then(a.time.partial_cmp(&b.time).unwrap()));
    seeds.truncate(options.max_seeds);
    Ok(seeds)
}

/// Outcome of trying seeds in order until one converges. Seeds that failed
/// before the success (or all of them) are the low-confidence ones.
#[derive(Clone, Debug)]
pub struct SeededOrbit {
    pub orbit: Option<PeriodicOrbit>,
    pub used_seed: Option<usize>,
    pub rejected: Vec<(usize, DynamicsError)>,
}

pub fn shoot_from_seeds(
    system: &PolySystem,
    section: &SectionSpec,
    symbols: &str,
    seeds: &[Seed],
    options: &ShootingOptions,
) -> SeededOrbit {
    let mut rejected = Vec::new();
    for (i, s) in seeds.iter().enumerate() {
        match find_periodic_orbit(system, section, symbols, &s.state, options) {
            Ok(orbit) => {
                return SeededOrbit {
                    orbit: Some(orbit),
                    used_seed: Some(i),
                    rejected,
                }
            }
            Err(e) => rejected.push((i, e)),
        }
    }
    SeededOrbit {
        orbit: None,
        used_seed: None,
        rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_normalization() {
        assert_eq!(canonical_symbols("ABAB"), ("AB".into(), 2));
        assert_eq!(canonical_symbols("BA"), ("AB".into(), 1));
        assert_eq!(canonical_symbols("BAA"), ("AAB".into(), 1));
        assert_eq!(canonical_symbols("ABBAAB"), ("AABABB".into(), 1));
        assert_eq!(canonical_symbols("AAAA"), ("A".into(), 4));
        assert!(same_cycle("ABB", "BBA"));
        assert!(!same_cycle("ABB", "AAB"));
    }

    #[test]
    fn equilibria() {
        let eq = lorenz_equilibria(8.0 / 3.0, 10.0, 28.0).unwrap();
        assert_eq!(eq.len(), 3);
        assert!((eq[1][0] - 72.0f64.sqrt()).abs() < 1e-14);
        assert_eq!(lorenz_equilibria(8.0 / 3.0, 10.0, 1.0).unwrap().len(), 1);
        let f = PolySystem::lorenz_standard();
        for p in eq {
            assert!(f.eval(&p).iter().all(|v| v.abs() < 1e-12));
        }
    }
}
