//! Polynomial vector fields `dx/dt = f(x)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::PolyError;
use crate::poly::{CompiledPoly, Polynomial};

/// A polynomial ODE with named parameters. Names are metadata; all algebra
/// works on variable indices.
#[derive(Clone, Debug)]
pub struct PolySystem {
    components: Vec<Polynomial>,
    compiled: Vec<CompiledPoly>,
    variables: Vec<String>,
    parameters: Vec<(String, f64)>,
}

impl PolySystem {
    pub fn new(components: Vec<Polynomial>, variables: Vec<String>) -> Result<Self, PolyError> {
        let d = components.len();
        if let Some(p) = components.iter().find(|p| p.dim() != d) {
            return Err(PolyError::DimensionMismatch {
                expected: d,
                found: p.dim(),
            });
        }
        if variables.len() != d {
            return Err(PolyError::DimensionMismatch {
                expected: d,
                found: variables.len(),
            });
        }
        let compiled = components.iter().map(Polynomial::compile).collect();
        Ok(PolySystem {
            components,
            compiled,
            variables,
            parameters: Vec::new(),
        })
    }

    pub fn with_parameters(mut self, parameters: Vec<(String, f64)>) -> Self {
        self.parameters = parameters;
        self
    }

    /// Lorenz equations `(σ(y−x), x(r−z)−y, xy−βz)`.
    pub fn lorenz(beta: f64, sigma: f64, r: f64) -> Self {
        let d = 3;
        let t = |c: f64, e: [u32; 3]| (c, e.to_vec());
        let fx = Polynomial::from_terms(d, [t(-sigma, [1, 0, 0]), t(sigma, [0, 1, 0])]).unwrap();
        let fy = Polynomial::from_terms(d, [t(r, [1, 0, 0]), t(-1.0, [0, 1, 0]), t(-1.0, [1, 0, 1])]).unwrap();
        let fz = Polynomial::from_terms(d, [t(1.0, [1, 1, 0]), t(-beta, [0, 0, 1])]).unwrap();
        let names = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        PolySystem::new(alloc::vec![fx, fy, fz], names)
            .unwrap()
            .with_parameters(alloc::vec![
                ("beta".to_string(), beta),
                ("sigma".to_string(), sigma),
                ("r".to_string(), r),
            ])
    }

    /// Lorenz at `(β, σ, r) = (8/3, 10, 28)`.
    pub fn lorenz_standard() -> Self {
        Self::lorenz(8.0 / 3.0, 10.0, 28.0)
    }

    /// `x' = y, y' = -x`; period 2π.
    pub fn harmonic_oscillator() -> Self {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        PolySystem::new(alloc::vec![y, -x], alloc::vec!["x".to_string(), "y".to_string()]).unwrap()
    }

    /// The zero field in `dim` variables.
    pub fn zero(dim: usize) -> Self {
        let names = (0..dim).map(|i| alloc::format!("x{}", i)).collect();
        PolySystem::new(alloc::vec![Polynomial::zero(dim); dim], names).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn parameters(&self) -> &[(String, f64)] {
        &self.parameters
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// Writes `f(x)` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        for (o, c) in out.iter_mut().zip(&self.compiled) {
            *o = c.eval_with(x, scratch);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim()];
        let mut scratch = Vec::new();
        self.eval_into(x, &mut out, &mut scratch);
        out
    }

    /// `f·∇v = Σᵢ fᵢ ∂v/∂xᵢ`.
    pub fn lie_derivative(&self, v: &Polynomial) -> Result<Polynomial, PolyError> {
        if v.dim() != self.dim() {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim(),
                found: v.dim(),
            });
        }
        let mut out = Polynomial::zero(self.dim());
        for (i, fi) in self.components.iter().enumerate() {
            let dv = v.partial(i);
            if dv.is_zero() || fi.is_zero() {
                continue;
            }
            out = &out + &(fi * &dv);
        }
        Ok(out)
    }

    /// The field in coordinates `x̃` with `x = scales ⊙ x̃ + shifts`:
    /// `x̃ᵢ' = fᵢ(scales ⊙ x̃ + shifts) / scalesᵢ`.
    pub fn affine_rescale(&self, scales: &[f64], shifts: &[f64]) -> Result<PolySystem, PolyError> {
        let comps = self
            .components
            .iter()
            .zip(scales)
            .map(|(c, &s)| c.affine_rescale(scales, shifts).map(|p| p.scale(1.0 / s)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolySystem::new(comps, self.variables.clone())?.with_parameters(self.parameters.clone()))
    }
}
