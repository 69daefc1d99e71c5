//! Sparse multivariate polynomials with `f64` coefficients.
//!
//! Terms live in a [`BTreeMap`] keyed by [`Monomial`], so iteration (and hence
//! evaluation and serialization) always follows the graded monomial order
//! described on [`Monomial`]'s `Ord` impl.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::PolyError;

/// Exponent vector of a monomial `x1^e1 * ... * xd^ed`.
///
/// Ordering is graded: lower total degree first; within one degree, larger
/// exponents on earlier variables come first. For three variables this yields
/// `1, x, y, z, x², xy, xz, y², yz, z², x³, ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    /// The monomial `x_var`.
    pub fn var(dim: usize, var: usize) -> Self {
        let mut e = vec![0; dim];
        e[var] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dim(), other.dim());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Value at `x`, using repeated multiplication for each factor.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .fold(1.0, |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `dim` variables of total degree at most `max_degree`,
/// in ascending graded order. The count is `C(dim + max_degree, dim)`.
pub fn monomial_basis(dim: usize, max_degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        monomials_of_degree(dim, deg, &mut out);
    }
    out
}

/// Monomials of exactly `degree`, appended in graded order.
pub fn monomials_of_degree(dim: usize, degree: u32, out: &mut Vec<Monomial>) {
    fn rec(dim: usize, var: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if var + 1 == dim {
            cur[var] = left;
            out.push(Monomial(cur.clone()));
            cur[var] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[var] = e;
            rec(dim, var + 1, left - e, cur, out);
        }
        cur[var] = 0;
    }
    if dim == 0 {
        if degree == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    let mut cur = vec![0; dim];
    rec(dim, 0, degree, &mut cur, out);
}

/// Sparse polynomial in a fixed number of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::one(dim), c);
        p
    }

    /// The coordinate polynomial `x_var`.
    pub fn var(dim: usize, var: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::var(dim, var), 1.0);
        p
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut p = Self::zero(m.dim());
        p.add_term(m, c);
        p
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs, merging repeats.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (f64, Vec<u32>)>,
    {
        let mut p = Self::zero(dim);
        for (c, e) in terms {
            if e.len() != dim {
                return Err(PolyError::DimensionMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Maximum total degree of a stored term; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&Monomial::one(self.dim))
    }

    /// Adds `c * m`, dropping the term if it cancels to exactly zero.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        debug_assert_eq!(m.dim(), self.dim);
        if c == 0.0 {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if *v == 0.0 {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// Removes every term with `|coefficient| <= threshold`.
    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.abs() > threshold);
    }

    pub fn pruned(mut self, threshold: f64) -> Self {
        self.prune(threshold);
        self
    }

    /// Largest absolute coefficient (zero for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Ok(Polynomial {
            dim: self.dim,
            terms: acc,
        })
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn powi(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.dim, 1.0);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Evaluates at `x`, checking dimension and finiteness of the point.
    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinitePoint);
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates at `x` without validation. Terms are summed in graded order.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, &c)| c * m.eval(x))
            .sum()
    }

    /// Partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, &c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut em = m.0.clone();
            em[var] -= 1;
            out.add_term(Monomial(em), c * e as f64);
        }
        out
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.partial(i)).collect()
    }

    /// Composition with the affine map `x_i -> scales[i] * x_i + shifts[i]`,
    /// fully expanded.
    pub fn affine_rescale(&self, scales: &[f64], shifts: &[f64]) -> Result<Polynomial, PolyError> {
        if scales.len() != self.dim || shifts.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                found: if scales.len() != self.dim {
                    scales.len()
                } else {
                    shifts.len()
                },
            });
        }
        if let Some(&s) = scales.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(PolyError::NonPositiveScale(s));
        }
        let max_deg = self.degree();
        // powers[i][k] = (scale_i x_i + shift_i)^k
        let powers: Vec<Vec<Polynomial>> = (0..self.dim)
            .map(|i| {
                let mut lin = Polynomial::var(self.dim, i).scale(scales[i]);
                lin.add_term(Monomial::one(self.dim), shifts[i]);
                let mut v = Vec::with_capacity(max_deg as usize + 1);
                v.push(Polynomial::constant(self.dim, 1.0));
                for k in 1..=max_deg as usize {
                    let next = &v[k - 1] * &lin;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(self.dim);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(self.dim, c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            for (tm, tc) in term.terms {
                out.add_term(tm, tc);
            }
        }
        Ok(out)
    }

    /// Flattened `(coefficient, exponents)` view used by hot evaluation loops.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", c)?;
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i)?,
                    _ => write!(f, "*x{}^{}", i, e)?,
                }
            }
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $try:ident) => {
        impl<'a> $tr<&'a Polynomial> for &'a Polynomial {
            type Output = Polynomial;
            /// Panics on dimension mismatch; use the `try_` form to handle it.
            fn $method(self, rhs: &'a Polynomial) -> Polynomial {
                self.$try(rhs).expect("polynomial dimension mismatch")
            }
        }
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                self.$try(&rhs).expect("polynomial dimension mismatch")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Dense term list for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    dim: usize,
    max_exp: usize,
    coeffs: Vec<f64>,
    exps: Vec<u32>,
}

impl CompiledPoly {
    fn new(p: &Polynomial) -> Self {
        let mut coeffs = Vec::with_capacity(p.num_terms());
        let mut exps = Vec::with_capacity(p.num_terms() * p.dim);
        let mut max_exp = 0;
        for (m, c) in p.terms() {
            coeffs.push(c);
            for &e in m.exponents() {
                max_exp = max_exp.max(e as usize);
                exps.push(e);
            }
        }
        CompiledPoly {
            dim: p.dim,
            max_exp,
            coeffs,
            exps,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates at `x` using `scratch` for the table of powers.
    pub fn eval_with(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let stride = self.max_exp + 1;
        scratch.clear();
        scratch.resize(stride * self.dim, 1.0);
        for (i, &xi) in x.iter().enumerate().take(self.dim) {
            for k in 1..stride {
                scratch[i * stride + k] = scratch[i * stride + k - 1] * xi;
            }
        }
        let mut sum = 0.0;
        for (t, &c) in self.coeffs.iter().enumerate() {
            let mut v = c;
            for i in 0..self.dim {
                v *= scratch[i * stride + self.exps[t * self.dim + i] as usize];
            }
            sum += v;
        }
        sum
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut scratch = Vec::new();
        self.eval_with(x, &mut scratch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3(terms: &[(f64, [u32; 3])]) -> Polynomial {
        Polynomial::from_terms(3, terms.iter().map(|(c, e)| (*c, e.to_vec()))).unwrap()
    }

    #[test]
    fn add_cancels_and_identities() {
        let a = p3(&[(1.0, [2, 0, 0]), (1.0, [0, 1, 0])]);
        let b = p3(&[(-1.0, [2, 0, 0])]);
        assert_eq!(&a + &b, p3(&[(1.0, [0, 1, 0])]));
        assert_eq!(&a + &Polynomial::zero(3), a);
        let x = Polynomial::var(3, 0);
        let y = Polynomial::var(3, 1);
        assert_eq!(&(&x + &y) + &(&x - &y), x.scale(2.0));
    }

    #[test]
    fn mul_examples() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let one = Polynomial::constant(2, 1.0);
        let lhs = &(&x + &y) * &(&x - &y);
        assert_eq!(lhs, &(&x * &x) - &(&y * &y));
        assert_eq!(&lhs * &one, lhs);
        let xp1 = &x + &one;
        let sq = &xp1 * &xp1;
        assert_eq!(sq, Polynomial::from_terms(2, [(1.0, vec![2, 0]), (2.0, vec![1, 0]), (1.0, vec![0, 0])]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let a = Polynomial::var(2, 0);
        let b = Polynomial::var(3, 0);
        assert!(matches!(a.try_add(&b), Err(PolyError::DimensionMismatch { .. })));
        assert!(matches!(a.try_mul(&b), Err(PolyError::DimensionMismatch { .. })));
        assert!(a.eval(&[1.0, 2.0, 3.0]).is_err());
        assert_eq!(a.eval(&[f64::NAN, 1.0]), Err(PolyError::NonFinitePoint));
    }

    #[test]
    fn eval_examples() {
        let z4 = p3(&[(1.0, [0, 0, 4])]);
        assert_eq!(z4.eval(&[0.0, 0.0, 2.0]).unwrap(), 16.0);
        let p = p3(&[(3.5, [0, 0, 0]), (2.0, [1, 1, 0]), (-1.0, [0, 0, 3])]);
        assert_eq!(p.eval(&[0.0; 3]).unwrap(), 3.5);
        // xy - (8/3) z vanishes at the nonzero Lorenz equilibrium.
        let beta = 8.0 / 3.0;
        let q = p3(&[(1.0, [1, 1, 0]), (-beta, [0, 0, 1])]);
        let s = (beta * 27.0).sqrt();
        assert!(q.eval(&[s, s, 27.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let z4 = p3(&[(1.0, [0, 0, 4])]);
        let g = z4.gradient();
        assert!(g[0].is_zero() && g[1].is_zero());
        assert_eq!(g[2], p3(&[(4.0, [0, 0, 3])]));
        assert!(Polynomial::constant(3, 7.0).gradient().iter().all(Polynomial::is_zero));
        let q = Polynomial::from_terms(2, [(1.0, vec![2, 0]), (1.0, vec![0, 2])]).unwrap();
        let g = q.gradient();
        assert_eq!(g[0], Polynomial::var(2, 0).scale(2.0));
        assert_eq!(g[1], Polynomial::var(2, 1).scale(2.0));
    }

    #[test]
    fn basis_order_and_counts() {
        let b = monomial_basis(3, 2);
        let names: Vec<Vec<u32>> = b.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            names,
            vec![
                vec![0, 0, 0],
                vec![1, 0, 0],
                vec![0, 1, 0],
                vec![0, 0, 1],
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2],
            ]
        );
        assert_eq!(monomial_basis(3, 0), vec![Monomial::one(3)]);
        assert_eq!(monomial_basis(3, 3).len(), 20);
    }

    #[test]
    fn rescale_examples() {
        let x = Polynomial::var(3, 0);
        let p = p3(&[(1.5, [1, 2, 0]), (-2.0, [0, 0, 3]), (1.0, [0, 0, 0])]);
        assert_eq!(p.affine_rescale(&[1.0; 3], &[0.0; 3]).unwrap(), p);
        let z4 = p3(&[(1.0, [0, 0, 4])]);
        assert_eq!(z4.affine_rescale(&[1.0, 1.0, 2.0], &[0.0; 3]).unwrap(), z4.scale(16.0));
        let shifted = x.affine_rescale(&[1.0; 3], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(shifted, &x + &Polynomial::constant(3, 1.0));
        assert_eq!(
            x.affine_rescale(&[0.0, 1.0, 1.0], &[0.0; 3]),
            Err(PolyError::NonPositiveScale(0.0))
        );
    }

    #[test]
    fn compiled_matches_tree_eval() {
        let p = p3(&[(1.5, [1, 2, 0]), (-2.0, [0, 0, 3]), (1.0, [0, 0, 0]), (0.25, [4, 0, 1])]);
        let c = p.compile();
        let x = [0.3, -1.2, 2.5];
        assert!((c.eval(&x) - p.eval_unchecked(&x)).abs() < 1e-12);
    }
}
