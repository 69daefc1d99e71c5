//! Certificate JSON.
//!
//! A certificate file is self-contained: besides `U`, `V` and the Gram
//! matrix it records the system, `Φ`, the pre-scaling and the solver
//! metadata, so `verify` can re-check it without the original config.
//! Polynomials are embedded in the text form of [`super::poly_text`]; the
//! Gram matrix is a row-major array over `gram_basis` (exponent lists in the
//! scaled variables).

use ergobound_core::certify::certificate_id;
use ergobound_core::sdp::SolveStatus;
use ergobound_core::sos::{BallMultiplier, BoundCertificate, Prescaling, SolverReport};
use ergobound_core::{Monomial, PolySystem, Polynomial};
use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize};

use super::poly_text::{read_polynomial, write_polynomial};
use super::FormatError;

pub const CERTIFICATE_FORMAT: &str = "ergobound-certificate-1";

/// Non-finite numbers are written as `null` and read back as NaN.
fn nan_or<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub variables: Vec<String>,
    pub parameters: Vec<(String, f64)>,
    pub components: Vec<String>,
}

impl SystemSpec {
    pub fn from_system(system: &PolySystem) -> Self {
        SystemSpec {
            variables: system.variables().to_vec(),
            parameters: system.parameters().to_vec(),
            components: system.components().iter().map(write_polynomial).collect(),
        }
    }

    pub fn to_system(&self) -> Result<PolySystem, FormatError> {
        let comps = self.components.iter().map(|c| read_polynomial(c)).collect::<Result<Vec<_>, _>>()?;
        PolySystem::new(comps, self.variables.clone())
            .map(|s| s.with_parameters(self.parameters.clone()))
            .map_err(|e| FormatError::Invalid(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub status: String,
    pub iterations: usize,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub duality_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierFile {
    pub radius: f64,
    pub gram: Vec<f64>,
    pub basis: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format: String,
    pub certificate_id: String,
    pub system: SystemSpec,
    pub phi: String,
    pub aux_degree: u32,
    pub bound: f64,
    pub v: String,
    pub gram_size: usize,
    pub gram: Vec<f64>,
    pub gram_basis: Vec<Vec<u32>>,
    pub multiplier: Option<MultiplierFile>,
    pub prescaling: Prescale,
    #[serde(deserialize_with = "nan_or")]
    pub residual_infnorm: f64,
    #[serde(deserialize_with = "nan_or")]
    pub gram_min_eigenvalue: f64,
    pub valid: bool,
    pub solver: SolverMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prescale {
    pub scales: Vec<f64>,
    pub shifts: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn square(n: usize, data: &[f64]) -> Result<DMatrix<f64>, FormatError> {
    if data.len() != n * n {
        return Err(FormatError::Invalid(format!("Gram array has {} entries for size {}", data.len(), n)));
    }
    Ok(DMatrix::from_row_slice(n, n, data))
}

fn basis(b: &[Vec<u32>], dim: usize) -> Result<Vec<Monomial>, FormatError> {
    b.iter()
        .map(|e| {
            if e.len() == dim {
                Ok(Monomial::new(e.clone()))
            } else {
                Err(FormatError::Invalid("basis exponent list has the wrong length".into()))
            }
        })
        .collect()
}

fn status_from(s: &str) -> Result<SolveStatus, FormatError> {
    [SolveStatus::Converged, SolveStatus::MaxIterations, SolveStatus::NumericalFailure]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| FormatError::Invalid(format!("unknown solver status {:?}", s)))
}

impl CertificateFile {
    pub fn new(cert: &BoundCertificate, system: &PolySystem, phi: &Polynomial, valid: bool) -> Self {
        CertificateFile {
            format: CERTIFICATE_FORMAT.into(),
            certificate_id: certificate_id(cert.bound, &cert.v),
            system: SystemSpec::from_system(system),
            phi: write_polynomial(phi),
            aux_degree: cert.aux_degree,
            bound: cert.bound,
            v: write_polynomial(&cert.v),
            gram_size: cert.gram.nrows(),
            gram: row_major(&cert.gram),
            gram_basis: cert.gram_basis.iter().map(|m| m.exponents().to_vec()).collect(),
            multiplier: cert.multiplier.as_ref().map(|m| MultiplierFile {
                radius: m.radius,
                gram: row_major(&m.gram),
                basis: m.basis.iter().map(|b| b.exponents().to_vec()).collect(),
            }),
            prescaling: Prescale {
                scales: cert.prescaling.scales.clone(),
                shifts: cert.prescaling.shifts.clone(),
            },
            residual_infnorm: cert.residual_infnorm,
            gram_min_eigenvalue: cert.gram_min_eigenvalue,
            valid,
            solver: SolverMeta {
                status: cert.solver.status.as_str().into(),
                iterations: cert.solver.iterations,
                relative_gap: cert.solver.relative_gap,
                primal_infeasibility: cert.solver.primal_infeasibility,
                dual_infeasibility: cert.solver.dual_infeasibility,
                duality_gap: cert.solver.duality_gap,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let file: CertificateFile = serde_json::from_str(text)?;
        if file.format != CERTIFICATE_FORMAT {
            return Err(FormatError::Invalid(format!("unsupported certificate format {:?}", file.format)));
        }
        Ok(file)
    }

    /// Rebuilds the system, `Φ` and the certificate.
    pub fn decode(&self) -> Result<(PolySystem, Polynomial, BoundCertificate), FormatError> {
        let system = self.system.to_system()?;
        let d = system.dim();
        let phi = read_polynomial(&self.phi)?;
        let v = read_polynomial(&self.v)?;
        if phi.dim() != d || v.dim() != d || self.prescaling.scales.len() != d || self.prescaling.shifts.len() != d {
            return Err(FormatError::Invalid("certificate dimensions disagree".into()));
        }
        let gram_basis = basis(&self.gram_basis, d)?;
        if gram_basis.len() != self.gram_size {
            return Err(FormatError::Invalid("Gram basis length differs from Gram size".into()));
        }
        let multiplier = match &self.multiplier {
            Some(m) => {
                let b = basis(&m.basis, d)?;
                Some(BallMultiplier {
                    radius: m.radius,
                    gram: square(b.len(), &m.gram)?,
                    basis: b,
                })
            }
            None => None,
        };
        let cert = BoundCertificate {
            aux_degree: self.aux_degree,
            bound: self.bound,
            v,
            gram: square(self.gram_size, &self.gram)?,
            gram_basis,
            multiplier,
            prescaling: Prescaling {
                scales: self.prescaling.scales.clone(),
                shifts: self.prescaling.shifts.clone(),
            },
            residual_infnorm: self.residual_infnorm,
            gram_min_eigenvalue: self.gram_min_eigenvalue,
            solver: SolverReport {
                status: status_from(&self.solver.status)?,
                iterations: self.solver.iterations,
                relative_gap: self.solver.relative_gap,
                primal_infeasibility: self.solver.primal_infeasibility,
                dual_infeasibility: self.solver.dual_infeasibility,
                duality_gap: self.solver.duality_gap,
            },
        };
        Ok((system, phi, cert))
    }
}
