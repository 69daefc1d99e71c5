//! Infeasible-start primal-dual path following with the HKM direction and
//! Mehrotra predictor-corrector steps.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};

use super::problem::{SdpProblem, SparseSym};
use crate::error::SdpError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpOptions {
    /// Bound on the relative gap and the relative primal/dual infeasibilities.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken by each step.
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tolerance: 1e-9,
            max_iterations: 200,
            step_fraction: 0.98,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

/// Per-iteration progress, handed to the monitor callback.
#[derive(Clone, Copy, Debug)]
pub struct IterationInfo {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
    pub primal_step: f64,
    pub dual_step: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub free: Vec<f64>,
    pub blocks: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub slack: Vec<DMatrix<f64>>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative gap `max(⟨X,S⟩, |p−d|) / (1 + |p| + |d|)`.
    pub gap: f64,
    /// `‖b − 𝒜X − Bu‖ / (1 + ‖b‖)`.
    pub primal_infeasibility: f64,
    /// `‖(C − S − 𝒜*y, c − Bᵀy)‖ / (1 + ‖(C, c)‖)`.
    pub dual_infeasibility: f64,
    /// Iterations at which the weak-duality identity check failed.
    pub weak_duality_violations: usize,
    /// Reason for a non-converged exit, if any.
    pub message: Option<String>,
}

impl SdpSolution {
    pub fn max_residual(&self) -> f64 {
        self.gap.max(self.primal_infeasibility).max(self.dual_infeasibility)
    }
}

/// Absolute residuals recomputed from a candidate point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// Primal minus dual objective.
    pub gap: f64,
}

/// Recomputes `‖b − 𝒜X − Bu‖`, the dual infeasibility norm and `p − d`
/// directly from the problem data.
pub fn residuals(problem: &SdpProblem, sol: &SdpSolution) -> Residuals {
    let ax = problem.apply(&sol.free, &sol.blocks);
    let rp: f64 = problem
        .constraints
        .iter()
        .zip(&ax)
        .map(|(c, v)| (c.rhs - v) * (c.rhs - v))
        .sum::<f64>()
        .sqrt();
    let (bty, aty) = problem.apply_adjoint(&sol.y);
    let mut rd2 = 0.0;
    for (k, at) in aty.iter().enumerate() {
        let mut r = problem.block_cost[k].to_dense(problem.block_dims[k]);
        r -= &sol.slack[k];
        r -= at;
        rd2 += r.norm_squared();
    }
    for (c, v) in problem.free_cost.iter().zip(&bty) {
        rd2 += (c - v) * (c - v);
    }
    let pobj = problem.primal_objective(&sol.free, &sol.blocks);
    let dobj: f64 = problem.constraints.iter().zip(&sol.y).map(|(c, y)| c.rhs * y).sum();
    Residuals {
        primal_infeasibility: rp,
        dual_infeasibility: rd2.sqrt(),
        gap: pobj - dobj,
    }
}

pub fn solve(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpSolution, SdpError> {
    solve_with_monitor(problem, options, &mut |_| {})
}

/// Like [`solve`], reporting every iteration to `monitor`.
pub fn solve_with_monitor(
    problem: &SdpProblem,
    options: &SdpOptions,
    monitor: &mut dyn FnMut(&IterationInfo),
) -> Result<SdpSolution, SdpError> {
    problem.validate()?;
    let kept = presolve(problem)?;
    let reduced = SdpProblem {
        block_dims: problem.block_dims.clone(),
        num_free: problem.num_free,
        free_cost: problem.free_cost.clone(),
        block_cost: problem.block_cost.clone(),
        constraints: kept.iter().map(|&i| problem.constraints[i].clone()).collect(),
    };
    let mut sol = Ipm::new(&reduced, options).run(monitor);
    let mut y = vec![0.0; problem.num_constraints()];
    for (yi, &i) in sol.y.iter().zip(&kept) {
        y[i] = *yi;
    }
    sol.y = y;
    Ok(sol)
}

/// Drops free-only rows that are linearly dependent on other free-only rows
/// (the Schur system would otherwise be singular). Returns kept indices.
fn presolve(problem: &SdpProblem) -> Result<Vec<usize>, SdpError> {
    let free_rows: Vec<usize> = (0..problem.num_constraints())
        .filter(|&i| problem.constraints[i].is_free_only())
        .collect();
    let nf = problem.num_free;
    let mut dropped = vec![false; problem.num_constraints()];
    if !free_rows.is_empty() {
        let r = free_rows.len();
        // Row echelon elimination with full pivoting on [B_free | b_free].
        let mut a = DMatrix::<f64>::zeros(r, nf + 1);
        for (ri, &i) in free_rows.iter().enumerate() {
            for &(j, v) in &problem.constraints[i].free {
                a[(ri, j)] += v;
            }
            a[(ri, nf)] = problem.constraints[i].rhs;
        }
        let scale = a.columns(0, nf).amax().max(1e-300);
        let rhs_scale = 1.0 + a.column(nf).amax();
        let mut rows: Vec<usize> = (0..r).collect();
        let mut cols: Vec<usize> = (0..nf).collect();
        let mut rank = 0;
        while rank < r && rank < nf {
            let (mut bi, mut bj, mut best) = (rank, rank, 0.0);
            for ii in rank..r {
                for jj in rank..nf {
                    let v = a[(rows[ii], cols[jj])].abs();
                    if v > best {
                        best = v;
                        bi = ii;
                        bj = jj;
                    }
                }
            }
            if best <= 1e-11 * scale {
                break;
            }
            rows.swap(rank, bi);
            cols.swap(rank, bj);
            let pr = rows[rank];
            let pc = cols[rank];
            let piv = a[(pr, pc)];
            for &row in &rows[rank + 1..] {
                let f = a[(row, pc)] / piv;
                if f != 0.0 {
                    for c in 0..=nf {
                        let v = a[(pr, c)];
                        a[(row, c)] -= f * v;
                    }
                }
            }
            rank += 1;
        }
        for &row in &rows[rank..] {
            if a[(row, nf)].abs() > 1e-9 * rhs_scale {
                return Err(SdpError::InvalidProblem(String::from(
                    "inconsistent equality constraints on free variables",
                )));
            }
            dropped[free_rows[row]] = true;
        }
    }
    Ok((0..problem.num_constraints()).filter(|&i| !dropped[i]).collect())
}

fn sym_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest `α` with `X + α dX ⪰ 0`; infinite if the direction never leaves the cone.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let chol = x.clone().cholesky()?;
    let l = chol.l();
    let a1 = l.solve_lower_triangular(dx)?;
    let mut w = l.solve_lower_triangular(&a1.transpose())?;
    symmetrize(&mut w);
    let lmin = w.symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(-1.0 / lmin)
    }
}

struct Ipm<'a> {
    p: &'a SdpProblem,
    opts: &'a SdpOptions,
    /// For each block, the constraints touching it.
    block_cons: Vec<Vec<(usize, &'a SparseSym)>>,
    /// Dense `B` (m × nf).
    bmat: DMatrix<f64>,
    b: Vec<f64>,
    cost: Vec<DMatrix<f64>>,
    n_total: usize,
}

struct Kkt {
    k: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Kkt {
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.lu.solve(rhs)?;
        for _ in 0..2 {
            let r = rhs - &self.k * &x;
            let dx = self.lu.solve(&r)?;
            x += dx;
        }
        let res = (rhs - &self.k * &x).amax();
        if x.iter().all(|v| v.is_finite()) && res <= 1e-6 * (1.0 + rhs.amax()) {
            Some(x)
        } else {
            None
        }
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dy: Vec<f64>,
    du: Vec<f64>,
}

impl<'a> Ipm<'a> {
    fn new(p: &'a SdpProblem, opts: &'a SdpOptions) -> Self {
        let nb = p.block_dims.len();
        let mut block_cons: Vec<Vec<(usize, &SparseSym)>> = vec![Vec::new(); nb];
        for (i, c) in p.constraints.iter().enumerate() {
            for (k, a) in &c.blocks {
                if !a.is_empty() {
                    block_cons[*k].push((i, a));
                }
            }
        }
        let m = p.num_constraints();
        let mut bmat = DMatrix::zeros(m, p.num_free);
        for (i, c) in p.constraints.iter().enumerate() {
            for &(j, v) in &c.free {
                bmat[(i, j)] += v;
            }
        }
        let cost = (0..nb).map(|k| p.block_cost[k].to_dense(p.block_dims[k])).collect();
        Ipm {
            p,
            opts,
            block_cons,
            bmat,
            b: p.rhs(),
            cost,
            n_total: p.block_dims.iter().sum(),
        }
    }

    /// Scaled identities following the usual interior-point heuristic.
    fn initial_point(&self) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut xs = Vec::new();
        let mut ss = Vec::new();
        for (k, &n) in self.p.block_dims.iter().enumerate() {
            let nf = n as f64;
            let mut xi: f64 = 10.0f64.max(nf.sqrt());
            let mut eta: f64 = 10.0f64.max(nf.sqrt());
            for &(i, a) in &self.block_cons[k] {
                let na = a.frobenius_norm();
                xi = xi.max(nf * (1.0 + self.b[i].abs()) / (1.0 + na));
                eta = eta.max(na);
            }
            eta = eta.max(self.cost[k].norm());
            xs.push(DMatrix::identity(n, n) * xi);
            ss.push(DMatrix::identity(n, n) * eta);
        }
        (xs, ss)
    }

    /// `M_ij = ⟨A_i, X A_j S⁻¹⟩`.
    fn schur(&self, x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.p.num_constraints();
        let mut schur = DMatrix::zeros(m, m);
        for (k, cons) in self.block_cons.iter().enumerate() {
            let n = self.p.block_dims[k];
            let mut g = DMatrix::zeros(n, n);
            for &(j, aj) in cons {
                g.fill(0.0);
                for &(p, q, v) in &aj.entries {
                    g.ger(v, &x[k].column(p), &sinv[k].column(q), 1.0);
                    if p != q {
                        g.ger(v, &x[k].column(q), &sinv[k].column(p), 1.0);
                    }
                }
                for &(i, ai) in cons {
                    schur[(i, j)] += ai.dot(&g);
                }
            }
        }
        symmetrize(&mut schur);
        schur
    }

    fn factor_kkt(&self, schur: &DMatrix<f64>, reg: f64) -> Option<Kkt> {
        let m = schur.nrows();
        let nf = self.p.num_free;
        let mut k = DMatrix::zeros(m + nf, m + nf);
        k.view_mut((0, 0), (m, m)).copy_from(schur);
        k.view_mut((0, m), (m, nf)).copy_from(&self.bmat);
        k.view_mut((m, 0), (nf, m)).copy_from(&self.bmat.transpose());
        if reg > 0.0 {
            for i in 0..m {
                k[(i, i)] += reg;
            }
            for i in m..m + nf {
                k[(i, i)] -= reg;
            }
        }
        let lu = k.clone().lu();
        Some(Kkt { k, lu })
    }

    /// Solves the Newton system for a given complementarity target
    /// `rc = σμS⁻¹ − X − corr`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        kkt: &Kkt,
        x: &[DMatrix<f64>],
        sinv: &[DMatrix<f64>],
        rc: &[DMatrix<f64>],
        rp: &[f64],
        rd: &[DMatrix<f64>],
        rf: &[f64],
    ) -> Option<Direction> {
        let m = self.p.num_constraints();
        let nf = self.p.num_free;
        let nb = self.p.block_dims.len();
        // t = rc − X Rd S⁻¹
        let t: Vec<DMatrix<f64>> = (0..nb).map(|k| &rc[k] - &x[k] * &rd[k] * &sinv[k]).collect();
        let at = self.p.apply(&vec![0.0; nf], &t);
        let mut rhs = DVector::zeros(m + nf);
        for i in 0..m {
            rhs[i] = rp[i] - at[i];
        }
        for j in 0..nf {
            rhs[m + j] = rf[j];
        }
        let sol = kkt.solve(&rhs)?;
        let dy: Vec<f64> = sol.rows(0, m).iter().copied().collect();
        let du: Vec<f64> = sol.rows(m, nf).iter().copied().collect();
        let (_, aty) = self.p.apply_adjoint(&dy);
        let mut ds = Vec::with_capacity(nb);
        let mut dx = Vec::with_capacity(nb);
        for k in 0..nb {
            let dsk = &rd[k] - &aty[k];
            let mut dxk = &rc[k] - &x[k] * &dsk * &sinv[k];
            symmetrize(&mut dxk);
            ds.push(dsk);
            dx.push(dxk);
        }
        Some(Direction { dx, ds, dy, du })
    }

    fn step_lengths(&self, x: &[DMatrix<f64>], s: &[DMatrix<f64>], d: &Direction) -> Option<(f64, f64)> {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for k in 0..x.len() {
            ap = ap.min(max_step(&x[k], &d.dx[k])?);
            ad = ad.min(max_step(&s[k], &d.ds[k])?);
        }
        Some((ap, ad))
    }

    fn run(&self, monitor: &mut dyn FnMut(&IterationInfo)) -> SdpSolution {
        let p = self.p;
        let nb = p.block_dims.len();
        let m = p.num_constraints();
        let nf = p.num_free;
        let (mut x, mut s) = self.initial_point();
        let mut u = vec![0.0; nf];
        let mut y = vec![0.0; m];

        let norm_b = 1.0 + self.b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_c = 1.0
            + (self.cost.iter().map(|c| c.norm_squared()).sum::<f64>()
                + p.free_cost.iter().map(|v| v * v).sum::<f64>())
            .sqrt();

        let mut best: Option<(f64, SdpSolution)> = None;
        let mut violations = 0usize;
        let mut status = SolveStatus::MaxIterations;
        let mut message = None;
        let mut last_steps = (1.0, 1.0);
        let mut last_sigma = 0.0;
        let mut stall = 0usize;
        let mut iter = 0usize;

        loop {
            // residuals at the current point
            let ax = p.apply(&u, &x);
            let rp: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let (bty, aty) = p.apply_adjoint(&y);
            let rd: Vec<DMatrix<f64>> = (0..nb).map(|k| &self.cost[k] - &s[k] - &aty[k]).collect();
            let rf: Vec<f64> = p.free_cost.iter().zip(&bty).map(|(c, v)| c - v).collect();
            let pobj = p.primal_objective(&u, &x);
            let dobj: f64 = self.b.iter().zip(&y).map(|(b, y)| b * y).sum();
            let xs: f64 = (0..nb).map(|k| sym_inner(&x[k], &s[k])).sum();
            let mu = xs / self.n_total as f64;

            let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
            let dinf = (rd.iter().map(|r| r.norm_squared()).sum::<f64>()
                + rf.iter().map(|v| v * v).sum::<f64>())
            .sqrt()
                / norm_c;
            let scale = 1.0 + pobj.abs() + dobj.abs();
            let gap = xs.max((pobj - dobj).abs()) / scale;

            // p − d = ⟨X,S⟩ + ⟨Rd,X⟩ + rfᵀu − Rpᵀy; with X, S ≻ 0 the
            // primal objective cannot undercut the dual by more than the
            // infeasibility terms.
            let slack = (0..nb).map(|k| sym_inner(&rd[k], &x[k])).sum::<f64>().abs()
                + rf.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>().abs()
                + rp.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().abs()
                + 1e-9 * scale;
            if pobj - dobj < -slack {
                violations += 1;
            }
            debug_assert!(pobj - dobj >= -slack, "weak duality violated at iteration {}", iter);

            monitor(&IterationInfo {
                iteration: iter,
                primal_objective: pobj,
                dual_objective: dobj,
                gap,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                mu,
                primal_step: last_steps.0,
                dual_step: last_steps.1,
                sigma: last_sigma,
            });

            let merit = gap.max(pinf).max(dinf);
            let snapshot = |status: SolveStatus| SdpSolution {
                free: u.clone(),
                blocks: x.clone(),
                y: y.clone(),
                slack: s.clone(),
                status,
                iterations: iter,
                primal_objective: pobj,
                dual_objective: dobj,
                gap,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                weak_duality_violations: violations,
                message: None,
            };
            let improved = match &best {
                Some((bm, _)) => merit < 0.9 * *bm,
                None => true,
            };
            if best.as_ref().is_none_or(|(bm, _)| merit <= *bm) {
                best = Some((merit, snapshot(SolveStatus::MaxIterations)));
            }
            stall = if improved { 0 } else { stall + 1 };

            if merit <= self.opts.tolerance {
                status = SolveStatus::Converged;
                break;
            }
            if iter >= self.opts.max_iterations {
                message = Some(String::from("iteration cap reached"));
                break;
            }
            if stall >= 25 {
                status = SolveStatus::NumericalFailure;
                message = Some(String::from("no progress in 25 iterations"));
                break;
            }

            let sinv: Option<Vec<DMatrix<f64>>> = s
                .iter()
                .map(|sk| sk.clone().cholesky().map(|c| c.inverse()))
                .collect();
            let Some(mut sinv) = sinv else {
                status = SolveStatus::NumericalFailure;
                message = Some(String::from("dual slack lost positive definiteness"));
                break;
            };
            for si in sinv.iter_mut() {
                symmetrize(si);
            }
            let schur = self.schur(&x, &sinv);

            let neg_x: Vec<DMatrix<f64>> = x.iter().map(|xk| -xk).collect();
            let diag_scale = schur.diagonal().amax().max(1.0);
            let attempt = |reg: f64| -> Option<(Kkt, Direction)> {
                let kkt = self.factor_kkt(&schur, reg)?;
                let d = self.direction(&kkt, &x, &sinv, &neg_x, &rp, &rd, &rf)?;
                Some((kkt, d))
            };
            let Some((kkt, pred)) = attempt(0.0).or_else(|| attempt(1e-12 * diag_scale)) else {
                status = SolveStatus::NumericalFailure;
                message = Some(String::from("Schur complement system is singular"));
                break;
            };

            let Some((ap_aff, ad_aff)) = self.step_lengths(&x, &s, &pred) else {
                status = SolveStatus::NumericalFailure;
                message = Some(String::from("iterate lost positive definiteness"));
                break;
            };
            let ap_aff = ap_aff.min(1.0);
            let ad_aff = ad_aff.min(1.0);
            let mut xs_aff = 0.0;
            for k in 0..nb {
                let xa = &x[k] + &pred.dx[k] * ap_aff;
                let sa = &s[k] + &pred.ds[k] * ad_aff;
                xs_aff += sym_inner(&xa, &sa);
            }
            let mu_aff = xs_aff / self.n_total as f64;
            let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

            let rc: Vec<DMatrix<f64>> = (0..nb)
                .map(|k| &sinv[k] * (sigma * mu) - &x[k] - &pred.dx[k] * &pred.ds[k] * &sinv[k])
                .collect();
            let Some(corr) = self.direction(&kkt, &x, &sinv, &rc, &rp, &rd, &rf) else {
                status = SolveStatus::NumericalFailure;
                message = Some(String::from("corrector solve failed"));
                break;
            };
            let Some((ap, ad)) = self.step_lengths(&x, &s, &corr) else {
                status = SolveStatus::NumericalFailure;
                message = Some(String::from("iterate lost positive definiteness"));
                break;
            };
            let ap = (self.opts.step_fraction * ap).min(1.0);
            let ad = (self.opts.step_fraction * ad).min(1.0);

            for k in 0..nb {
                x[k] += &corr.dx[k] * ap;
                s[k] += &corr.ds[k] * ad;
                symmetrize(&mut x[k]);
                symmetrize(&mut s[k]);
            }
            for (ui, di) in u.iter_mut().zip(&corr.du) {
                *ui += ap * di;
            }
            for (yi, di) in y.iter_mut().zip(&corr.dy) {
                *yi += ad * di;
            }
            last_steps = (ap, ad);
            last_sigma = sigma;
            iter += 1;
        }

        let mut out = best.map(|(_, s)| s).expect("at least one iterate is recorded");
        out.status = status;
        out.iterations = iter;
        out.weak_duality_violations = violations;
        out.message = message;
        out
    }
}
