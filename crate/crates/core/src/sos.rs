//! Sum-of-squares programs for bounds on long-time averages.
//!
//! For a system `f`, quantity `Φ` and auxiliary-function degree `2h`, the
//! program searches for `U` and `V` (all monomials of degree `1..=2h`) such
//! that `U − Φ − f·∇V = bᵀ Q b` with `Q ⪰ 0` and `b` the monomials of degree
//! `≤ h'`, where `2h'` is the largest even degree the residual can have. Every
//! coefficient of the residual is matched by one equality, so residual
//! coefficients of odd top degree are forced to cancel through equalities on
//! `V` alone. Minimizing `U` gives the bound.
//!
//! Variables are pre-scaled (`x = scales ⊙ x̃ + shifts`) and `Φ` normalized
//! before assembly; certificates report `U` and `V` in the original
//! coordinates and keep the Gram matrix in the scaled monomial basis.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DMatrix;

use crate::error::SosError;
use crate::poly::{monomial_basis, Monomial, Polynomial};
use crate::sdp::{Constraint, SdpProblem, SdpSolution, SolveStatus, SparseSym};
use crate::system::PolySystem;

/// Affine change of variables `x = scales ⊙ x̃ + shifts`.
#[derive(Clone, Debug, PartialEq)]
pub struct Prescaling {
    pub scales: Vec<f64>,
    pub shifts: Vec<f64>,
}

impl Prescaling {
    pub fn identity(dim: usize) -> Self {
        Prescaling {
            scales: alloc::vec![1.0; dim],
            shifts: alloc::vec![0.0; dim],
        }
    }

    /// `x/10, y/10, z/30`.
    pub fn lorenz_default() -> Self {
        Prescaling {
            scales: alloc::vec![10.0, 10.0, 30.0],
            shifts: alloc::vec![0.0; 3],
        }
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    /// Maps a polynomial in original variables to scaled variables.
    pub fn to_scaled(&self, p: &Polynomial) -> Result<Polynomial, SosError> {
        Ok(p.affine_rescale(&self.scales, &self.shifts)?)
    }

    /// Maps a polynomial in scaled variables back to original variables.
    pub fn to_original(&self, p: &Polynomial) -> Result<Polynomial, SosError> {
        let inv: Vec<f64> = self.scales.iter().map(|s| 1.0 / s).collect();
        let sh: Vec<f64> = self.shifts.iter().zip(&self.scales).map(|(t, s)| -t / s).collect();
        Ok(p.affine_rescale(&inv, &sh)?)
    }

    pub fn scaled_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.scales)
            .zip(&self.shifts)
            .map(|((xi, s), t)| (xi - t) / s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SosOptions {
    /// Degree of the `V` ansatz; even and at least 2.
    pub aux_degree: u32,
    pub prescaling: Prescaling,
    /// Restrict the nonnegativity requirement to the ball `|x| ≤ R` with an
    /// SOS multiplier (S-procedure). Off by default.
    pub ball_radius: Option<f64>,
}

impl SosOptions {
    pub fn new(aux_degree: u32, prescaling: Prescaling) -> Self {
        SosOptions {
            aux_degree,
            prescaling,
            ball_radius: None,
        }
    }
}

#[derive(Clone, Debug)]
struct BallPart {
    radius: f64,
    /// `R² − |x|²` in scaled variables.
    g: Polynomial,
    basis: Vec<Monomial>,
}

/// The assembled bound problem. Immutable after construction.
#[derive(Clone, Debug)]
pub struct SosBoundProgram {
    system: PolySystem,
    phi: Polynomial,
    aux_degree: u32,
    prescaling: Prescaling,
    objective_scale: f64,
    scaled_phi: Polynomial,
    v_basis: Vec<Monomial>,
    v_lie: Vec<Polynomial>,
    residual_degree: u32,
    gram_basis: Vec<Monomial>,
    rows: Vec<Monomial>,
    ball: Option<BallPart>,
}

impl SosBoundProgram {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }
    pub fn system(&self) -> &PolySystem {
        &self.system
    }
    pub fn phi(&self) -> &Polynomial {
        &self.phi
    }
    pub fn aux_degree(&self) -> u32 {
        self.aux_degree
    }
    pub fn prescaling(&self) -> &Prescaling {
        &self.prescaling
    }
    /// Factor dividing the scaled `Φ` so its largest coefficient is one.
    pub fn objective_scale(&self) -> f64 {
        self.objective_scale
    }
    /// Monomials of `V` in scaled variables (degree `1..=aux_degree`).
    pub fn v_basis(&self) -> &[Monomial] {
        &self.v_basis
    }
    pub fn gram_basis(&self) -> &[Monomial] {
        &self.gram_basis
    }
    /// Highest degree the residual `U − Φ − f·∇V` can reach.
    pub fn residual_degree(&self) -> u32 {
        self.residual_degree
    }
    /// One matching constraint per monomial, in graded order.
    pub fn constraint_monomials(&self) -> &[Monomial] {
        &self.rows
    }
    /// Number of free scalars: `U` followed by the `V` coefficients.
    pub fn num_free(&self) -> usize {
        1 + self.v_basis.len()
    }
    pub fn ball_radius(&self) -> Option<f64> {
        self.ball.as_ref().map(|b| b.radius)
    }
}

/// Builds the coefficient-matching program for `U − Φ − f·∇V` being SOS.
pub fn build_bound_program(
    system: &PolySystem,
    phi: &Polynomial,
    options: &SosOptions,
) -> Result<SosBoundProgram, SosError> {
    let d = system.dim();
    if options.aux_degree < 2 || !options.aux_degree.is_multiple_of(2) {
        return Err(SosError::InvalidAuxDegree(options.aux_degree));
    }
    if phi.dim() != d {
        return Err(crate::error::PolyError::DimensionMismatch {
            expected: d,
            found: phi.dim(),
        }
        .into());
    }
    if options.prescaling.dim() != d {
        return Err(crate::error::PolyError::DimensionMismatch {
            expected: d,
            found: options.prescaling.dim(),
        }
        .into());
    }
    let pre = &options.prescaling;
    let scaled_system = system.affine_rescale(&pre.scales, &pre.shifts)?;
    let phi_scaled = pre.to_scaled(phi)?;
    let max_coeff = phi_scaled.max_abs_coeff();
    let objective_scale = if max_coeff > 0.0 { max_coeff } else { 1.0 };
    let scaled_phi = phi_scaled.scale(1.0 / objective_scale);

    let v_basis: Vec<Monomial> = monomial_basis(d, options.aux_degree)
        .into_iter()
        .filter(|m| !m.is_constant())
        .collect();
    let v_lie = v_basis
        .iter()
        .map(|m| scaled_system.lie_derivative(&Polynomial::monomial(m.clone(), 1.0)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut residual_degree = scaled_phi.degree();
    for l in &v_lie {
        residual_degree = residual_degree.max(l.degree());
    }
    let half = residual_degree / 2;
    let gram_basis = monomial_basis(d, half);

    let ball = match options.ball_radius {
        Some(radius) if half >= 1 => {
            let mut g = Polynomial::constant(d, radius * radius);
            for i in 0..d {
                let mut xi = Polynomial::var(d, i).scale(pre.scales[i]);
                xi.add_term(Monomial::one(d), pre.shifts[i]);
                g = &g - &(&xi * &xi);
            }
            Some(BallPart {
                radius,
                g,
                basis: monomial_basis(d, half - 1),
            })
        }
        _ => None,
    };

    Ok(SosBoundProgram {
        system: system.clone(),
        phi: phi.clone(),
        aux_degree: options.aux_degree,
        prescaling: pre.clone(),
        objective_scale,
        scaled_phi,
        v_basis,
        v_lie,
        residual_degree,
        gram_basis,
        rows: monomial_basis(d, residual_degree),
        ball,
    })
}

/// Standard-form SDP for the program: free scalars `(U, v_1, …)`, block 0 the
/// Gram matrix, block 1 the ball multiplier when enabled.
///
/// Row for monomial `α`: `⟨A_α, Q⟩ + ⟨G_α, Y⟩ + Σ_j v_j (f·∇m_j)_α − U·[α = 1] = −Φ_α`.
pub fn assemble_sdp(program: &SosBoundProgram) -> SdpProblem {
    let row_of: BTreeMap<&Monomial, usize> = program.rows.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut dims = alloc::vec![program.gram_basis.len()];
    if let Some(b) = &program.ball {
        dims.push(b.basis.len());
    }
    let mut p = SdpProblem::new(dims, program.num_free());
    p.free_cost[0] = 1.0;

    let mut constraints: Vec<Constraint> = program
        .rows
        .iter()
        .map(|m| Constraint {
            free: Vec::new(),
            blocks: Vec::new(),
            rhs: -program.scaled_phi.coeff(m),
        })
        .collect();
    constraints[0].free.push((0, -1.0));
    for (j, l) in program.v_lie.iter().enumerate() {
        for (m, c) in l.terms() {
            constraints[row_of[m]].free.push((1 + j, c));
        }
    }
    let mut gram_rows: Vec<SparseSym> = alloc::vec![SparseSym::new(); program.rows.len()];
    let gb = &program.gram_basis;
    for q in 0..gb.len() {
        for p_ in 0..=q {
            let m = gb[p_].mul(&gb[q]);
            gram_rows[row_of[&m]].push(p_, q, 1.0);
        }
    }
    for (c, a) in constraints.iter_mut().zip(gram_rows) {
        if !a.is_empty() {
            c.blocks.push((0, a));
        }
    }
    if let Some(ball) = &program.ball {
        let mut mult_rows: Vec<SparseSym> = alloc::vec![SparseSym::new(); program.rows.len()];
        let cb = &ball.basis;
        for q in 0..cb.len() {
            for p_ in 0..=q {
                let base = cb[p_].mul(&cb[q]);
                for (gm, gc) in ball.g.terms() {
                    let m = base.mul(gm);
                    mult_rows[row_of[&m]].push(p_, q, gc);
                }
            }
        }
        for (c, a) in constraints.iter_mut().zip(mult_rows) {
            if !a.is_empty() {
                c.blocks.push((1, a));
            }
        }
    }
    p.constraints = constraints;
    p
}

/// Multiplier for the optional ball constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct BallMultiplier {
    pub radius: f64,
    pub gram: DMatrix<f64>,
    pub basis: Vec<Monomial>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// `|primal − dual|` objective difference in units of `U`.
    pub duality_gap: f64,
}

/// `U`, `V` and the SOS certificate for `U − Φ − f·∇V ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificate {
    pub aux_degree: u32,
    pub bound: f64,
    /// Auxiliary function in original variables.
    pub v: Polynomial,
    /// Gram matrix in units of `Φ`, indexed by `gram_basis` in scaled variables.
    pub gram: DMatrix<f64>,
    pub gram_basis: Vec<Monomial>,
    pub multiplier: Option<BallMultiplier>,
    pub prescaling: Prescaling,
    pub residual_infnorm: f64,
    pub gram_min_eigenvalue: f64,
    pub solver: SolverReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative allowance on the smallest Gram eigenvalue.
    pub psd: f64,
    /// Relative allowance on residual coefficients.
    pub fit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { psd: 1e-8, fit: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidityReport {
    pub valid: bool,
    pub residual_infnorm: f64,
    pub gram_min_eigenvalue: f64,
    pub gram_norm: f64,
    pub bound: f64,
    pub tolerances: Tolerances,
}

/// Pulls `U`, `V` and the Gram matrices out of a solver point and validates
/// the result by direct reconstruction.
pub fn extract_certificate(program: &SosBoundProgram, solution: &SdpSolution) -> Result<BoundCertificate, SosError> {
    let usable = solution.status == SolveStatus::Converged || solution.max_residual() <= 1e-6;
    if !usable {
        return Err(SosError::SolverFailed(alloc::format!(
            "status {} with residual {:e}",
            solution.status.as_str(),
            solution.max_residual()
        )));
    }
    if solution.free.len() != program.num_free()
        || solution.blocks.is_empty()
        || solution.blocks[0].nrows() != program.gram_basis.len()
    {
        return Err(SosError::SolutionShape);
    }
    let s = program.objective_scale;
    let d = program.dim();
    let mut v_scaled = Polynomial::zero(d);
    for (m, &c) in program.v_basis.iter().zip(&solution.free[1..]) {
        v_scaled.add_term(m.clone(), c * s);
    }
    let v = program.prescaling.to_original(&v_scaled)?;
    let multiplier = program.ball.as_ref().map(|b| BallMultiplier {
        radius: b.radius,
        gram: &solution.blocks[1] * s,
        basis: b.basis.clone(),
    });
    let mut cert = BoundCertificate {
        aux_degree: program.aux_degree,
        bound: solution.free[0] * s,
        v,
        gram: &solution.blocks[0] * s,
        gram_basis: program.gram_basis.clone(),
        multiplier,
        prescaling: program.prescaling.clone(),
        residual_infnorm: 0.0,
        gram_min_eigenvalue: 0.0,
        solver: SolverReport {
            status: solution.status,
            iterations: solution.iterations,
            relative_gap: solution.gap,
            primal_infeasibility: solution.primal_infeasibility,
            dual_infeasibility: solution.dual_infeasibility,
            duality_gap: s * (solution.primal_objective - solution.dual_objective).abs(),
        },
    };
    let report = validate_certificate(&cert, &program.system, &program.phi, Tolerances::default())?;
    cert.residual_infnorm = report.residual_infnorm;
    cert.gram_min_eigenvalue = report.gram_min_eigenvalue;
    Ok(cert)
}

/// `U − Φ − f·∇V − bᵀGb − σ·g` in scaled variables.
pub fn reconstruction_residual(
    cert: &BoundCertificate,
    system: &PolySystem,
    phi: &Polynomial,
) -> Result<Polynomial, SosError> {
    let d = system.dim();
    let lie = system.lie_derivative(&cert.v)?;
    let mut r = Polynomial::constant(d, cert.bound).try_sub(phi)?;
    r = r.try_sub(&lie)?;
    let mut r = cert.prescaling.to_scaled(&r)?;
    r = &r - &quadratic_form(&cert.gram, &cert.gram_basis, d);
    if let Some(mult) = &cert.multiplier {
        let pre = &cert.prescaling;
        let mut g = Polynomial::constant(d, mult.radius * mult.radius);
        for i in 0..d {
            let mut xi = Polynomial::var(d, i).scale(pre.scales[i]);
            xi.add_term(Monomial::one(d), pre.shifts[i]);
            g = &g - &(&xi * &xi);
        }
        r = &r - &(&quadratic_form(&mult.gram, &mult.basis, d) * &g);
    }
    Ok(r)
}

/// `bᵀ G b` for the monomial vector `b`.
pub fn quadratic_form(gram: &DMatrix<f64>, basis: &[Monomial], dim: usize) -> Polynomial {
    let mut out = Polynomial::zero(dim);
    for q in 0..basis.len() {
        for p in 0..basis.len() {
            let c = gram[(p, q)];
            if c != 0.0 {
                out.add_term(basis[p].mul(&basis[q]), c);
            }
        }
    }
    out
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Recomputes the residual coefficients and Gram spectrum of a certificate.
pub fn validate_certificate(
    cert: &BoundCertificate,
    system: &PolySystem,
    phi: &Polynomial,
    tolerances: Tolerances,
) -> Result<ValidityReport, SosError> {
    let r = reconstruction_residual(cert, system, phi)?;
    let residual_infnorm = r.max_abs_coeff();
    let mut lmin = min_eigenvalue(&cert.gram);
    let mut gnorm = cert.gram.norm();
    if let Some(mult) = &cert.multiplier {
        lmin = lmin.min(min_eigenvalue(&mult.gram));
        gnorm = gnorm.max(mult.gram.norm());
    }
    let finite = residual_infnorm.is_finite() && lmin.is_finite() && cert.bound.is_finite();
    let valid = finite
        && lmin >= -tolerances.psd * (1.0 + gnorm)
        && residual_infnorm <= tolerances.fit * (1.0 + cert.bound.abs());
    Ok(ValidityReport {
        valid,
        residual_infnorm,
        gram_min_eigenvalue: lmin,
        gram_norm: gnorm,
        bound: cert.bound,
        tolerances,
    })
}

/// Upper bound on `Φ + f·∇V − U` over the box `[lo, hi]` implied by the
/// residual coefficients and any negative Gram eigenvalue. For a valid
/// certificate, `Φ + f·∇V ≤ U + slack` everywhere in the box.
pub fn residual_slack_on_box(
    cert: &BoundCertificate,
    system: &PolySystem,
    phi: &Polynomial,
    lo: &[f64],
    hi: &[f64],
) -> Result<f64, SosError> {
    let r = reconstruction_residual(cert, system, phi)?;
    let pre = &cert.prescaling;
    let amax: Vec<f64> = (0..system.dim())
        .map(|i| {
            let a = ((lo[i] - pre.shifts[i]) / pre.scales[i]).abs();
            let b = ((hi[i] - pre.shifts[i]) / pre.scales[i]).abs();
            a.max(b)
        })
        .collect();
    let bound_of = |m: &Monomial| m.exponents().iter().zip(&amax).fold(1.0, |acc, (&e, &a)| acc * a.powi(e as i32));
    let mut slack: f64 = r.terms().map(|(m, c)| c.abs() * bound_of(m)).sum();
    let lmin = min_eigenvalue(&cert.gram);
    if lmin < 0.0 {
        let bsq: f64 = cert.gram_basis.iter().map(|m| bound_of(m) * bound_of(m)).sum();
        slack += -lmin * bsq;
    }
    Ok(slack)
}

/// Build, assemble, solve and extract in one call.
pub fn compute_bound(
    system: &PolySystem,
    phi: &Polynomial,
    options: &SosOptions,
    sdp_options: &crate::sdp::SdpOptions,
) -> Result<BoundCertificate, SosError> {
    let program = build_bound_program(system, phi, options)?;
    let sdp = assemble_sdp(&program);
    let solution = crate::sdp::solve(&sdp, sdp_options).map_err(|e| SosError::SolverFailed(alloc::format!("{}", e)))?;
    extract_certificate(&program, &solution)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small_degree() {
        let f = PolySystem::lorenz_standard();
        let phi = Polynomial::var(3, 2);
        for deg in [0, 1, 3, 5] {
            let opts = SosOptions::new(deg, Prescaling::identity(3));
            assert!(matches!(build_bound_program(&f, &phi, &opts), Err(SosError::InvalidAuxDegree(_))));
        }
        let opts = SosOptions::new(2, Prescaling::identity(3));
        assert!(build_bound_program(&f, &Polynomial::var(2, 0), &opts).is_err());
    }

    #[test]
    fn lorenz_z4_sizes() {
        let f = PolySystem::lorenz_standard();
        let phi = Polynomial::var(3, 2).powi(4);
        let p4 = build_bound_program(&f, &phi, &SosOptions::new(4, Prescaling::lorenz_default())).unwrap();
        assert_eq!(p4.gram_basis().len(), 10);
        assert_eq!(p4.v_basis().len(), 34);
        let sdp = assemble_sdp(&p4);
        assert_eq!(sdp.block_dims, alloc::vec![10]);
        assert_eq!(sdp.num_free, 35);
        assert_eq!(sdp.num_constraints(), 56);
        let p6 = build_bound_program(&f, &phi, &SosOptions::new(6, Prescaling::lorenz_default())).unwrap();
        assert_eq!(p6.gram_basis().len(), 20);
        assert_eq!(p6.residual_degree(), 7);
        assert_eq!(assemble_sdp(&p6).num_constraints(), 120);
    }

    #[test]
    fn lorenz_z_degree_two_block() {
        let f = PolySystem::lorenz_standard();
        let p = build_bound_program(&f, &Polynomial::var(3, 2), &SosOptions::new(2, Prescaling::identity(3))).unwrap();
        let sdp = assemble_sdp(&p);
        assert_eq!(sdp.block_dims, alloc::vec![4]);
    }

    #[test]
    fn assembly_is_deterministic() {
        let f = PolySystem::lorenz_standard();
        let phi = Polynomial::var(3, 2).powi(4);
        let opts = SosOptions::new(4, Prescaling::lorenz_default());
        let a = assemble_sdp(&build_bound_program(&f, &phi, &opts).unwrap());
        let b = assemble_sdp(&build_bound_program(&f, &phi, &opts).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn exact_point_has_zero_residual() {
        // f = 0 and Φ = 3: U = 3, V = 0, Gram = 0 is an exact certificate.
        let f = PolySystem::zero(2);
        let phi = Polynomial::constant(2, 3.0);
        let cert = BoundCertificate {
            aux_degree: 2,
            bound: 3.0,
            v: Polynomial::zero(2),
            gram: DMatrix::zeros(1, 1),
            gram_basis: monomial_basis(2, 0),
            multiplier: None,
            prescaling: Prescaling::identity(2),
            residual_infnorm: 0.0,
            gram_min_eigenvalue: 0.0,
            solver: SolverReport {
                status: SolveStatus::Converged,
                iterations: 0,
                relative_gap: 0.0,
                primal_infeasibility: 0.0,
                dual_infeasibility: 0.0,
                duality_gap: 0.0,
            },
        };
        let r = validate_certificate(&cert, &f, &phi, Tolerances::default()).unwrap();
        assert_eq!(r.residual_infnorm, 0.0);
        assert!(r.valid);
        // The same zero certificate cannot certify a nonzero Φ.
        let bad = BoundCertificate { bound: 0.0, ..cert };
        let r = validate_certificate(&bad, &f, &phi, Tolerances::default()).unwrap();
        assert!(!r.valid);
    }
}
