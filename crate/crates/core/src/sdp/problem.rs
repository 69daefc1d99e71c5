use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::SdpError;

/// Symmetric matrix given by its upper-triangle entries `(row, col, value)`
/// with `row <= col`. An off-diagonal entry stands for both `(i, j)` and `(j, i)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        SparseSym { entries: Vec::new() }
    }

    /// Adds `v` at `(i, j)`; the pair is normalized to the upper triangle.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((a, b, v));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `⟨A, G⟩ = Σ A_ij G_ij` for an arbitrary (possibly non-symmetric) `G`.
    pub fn dot(&self, g: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v * g[(i, i)]
                } else {
                    v * (g[(i, j)] + g[(j, i)])
                }
            })
            .sum()
    }

    /// `out += alpha * A`.
    pub fn add_to(&self, alpha: f64, out: &mut DMatrix<f64>) {
        for &(i, j, v) in &self.entries {
            out[(i, j)] += alpha * v;
            if i != j {
                out[(j, i)] += alpha * v;
            }
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        self.add_to(1.0, &mut m);
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let s: f64 = self
            .entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum();
        num_traits::Float::sqrt(s)
    }
}

/// One linear equality `Σ_j a_j u_j + Σ_k ⟨A_k, X_k⟩ = rhs`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    /// `(free variable index, coefficient)` pairs.
    pub free: Vec<(usize, f64)>,
    /// `(block index, symmetric coefficient matrix)` pairs.
    pub blocks: Vec<(usize, SparseSym)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn is_free_only(&self) -> bool {
        self.blocks.iter().all(|(_, a)| a.is_empty())
    }
}

/// Standard-form SDP with free scalars:
///
/// ```text
/// minimize    cᵀu + Σ_k ⟨C_k, X_k⟩
/// subject to  Σ_j B_ij u_j + Σ_k ⟨A_ik, X_k⟩ = b_i,   X_k ⪰ 0,  u free.
/// ```
///
/// The dual is `maximize bᵀy` s.t. `Bᵀy = c`, `C_k − Σ_i y_i A_ik = S_k ⪰ 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub num_free: usize,
    pub free_cost: Vec<f64>,
    pub block_cost: Vec<SparseSym>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>, num_free: usize) -> Self {
        let nb = block_dims.len();
        SdpProblem {
            block_dims,
            num_free,
            free_cost: alloc::vec![0.0; num_free],
            block_cost: alloc::vec![SparseSym::new(); nb],
            constraints: Vec::new(),
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let nb = self.block_dims.len();
        if self.free_cost.len() != self.num_free {
            return Err(SdpError::InvalidProblem(format!(
                "free cost has {} entries for {} free variables",
                self.free_cost.len(),
                self.num_free
            )));
        }
        if self.block_cost.len() != nb {
            return Err(SdpError::InvalidProblem("one cost matrix per block required".into()));
        }
        if self.block_dims.contains(&0) {
            return Err(SdpError::InvalidProblem("empty PSD block".into()));
        }
        let check_sym = |k: usize, a: &SparseSym| -> Result<(), SdpError> {
            let n = self.block_dims[k];
            for &(i, j, v) in &a.entries {
                if i > j || j >= n {
                    return Err(SdpError::InvalidProblem(format!(
                        "entry ({}, {}) out of range or below diagonal in block {}",
                        i, j, k
                    )));
                }
                if !v.is_finite() {
                    return Err(SdpError::InvalidProblem("non-finite matrix entry".into()));
                }
            }
            Ok(())
        };
        for (k, c) in self.block_cost.iter().enumerate() {
            check_sym(k, c)?;
        }
        if self.free_cost.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::InvalidProblem("non-finite objective".into()));
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(SdpError::InvalidProblem(format!("non-finite rhs in constraint {}", i)));
            }
            for &(j, v) in &con.free {
                if j >= self.num_free || !v.is_finite() {
                    return Err(SdpError::InvalidProblem(format!("bad free entry in constraint {}", i)));
                }
            }
            for (k, a) in &con.blocks {
                if *k >= nb {
                    return Err(SdpError::InvalidProblem(format!("block index {} out of range", k)));
                }
                check_sym(*k, a)?;
            }
        }
        Ok(())
    }

    /// `𝒜(X) + Bu`.
    pub fn apply(&self, free: &[f64], blocks: &[DMatrix<f64>]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                let f: f64 = c.free.iter().map(|&(j, v)| v * free[j]).sum();
                let b: f64 = c.blocks.iter().map(|(k, a)| a.dot(&blocks[*k])).sum();
                f + b
            })
            .collect()
    }

    /// `(Bᵀy, 𝒜*(y))`.
    pub fn apply_adjoint(&self, y: &[f64]) -> (Vec<f64>, Vec<DMatrix<f64>>) {
        let mut free = alloc::vec![0.0; self.num_free];
        let mut blocks: Vec<DMatrix<f64>> =
            self.block_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (c, &yi) in self.constraints.iter().zip(y) {
            for &(j, v) in &c.free {
                free[j] += v * yi;
            }
            for (k, a) in &c.blocks {
                a.add_to(yi, &mut blocks[*k]);
            }
        }
        (free, blocks)
    }

    pub fn primal_objective(&self, free: &[f64], blocks: &[DMatrix<f64>]) -> f64 {
        let f: f64 = self.free_cost.iter().zip(free).map(|(c, u)| c * u).sum();
        let b: f64 = self.block_cost.iter().zip(blocks).map(|(c, x)| c.dot(x)).sum();
        f + b
    }
}
