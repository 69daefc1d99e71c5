use approx::assert_relative_eq;
use ergobound_core::dynamics::lorenz_equilibria;
use ergobound_core::{monomial_basis, PolySystem, Polynomial};
use proptest::prelude::*;

fn poly3() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-10.0f64..10.0, prop::array::uniform3(0u32..4)), 1..8)
        .prop_map(|terms| Polynomial::from_terms(3, terms.into_iter().map(|(c, e)| (c, e.to_vec()))).unwrap())
}

fn point3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-3.0f64..3.0)
}

/// `Σ |c| |x^α|`, the natural scale of rounding errors in `p(x)`.
fn abs_eval(p: &Polynomial, x: &[f64]) -> f64 {
    p.terms().map(|(m, c)| (c * m.eval(x)).abs()).sum()
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
}

proptest! {
    #[test]
    fn product_evaluates_to_product(p in poly3(), q in poly3(), x in point3()) {
        let pq = &p * &q;
        let lhs = pq.eval(&x).unwrap();
        let rhs = p.eval(&x).unwrap() * q.eval(&x).unwrap();
        let scale = abs_eval(&p, &x) * abs_eval(&q, &x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + scale), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn gradient_matches_central_differences(p in poly3(), x in point3()) {
        let grad = p.gradient();
        for i in 0..3 {
            let h = 1e-5 * (1.0 + x[i].abs());
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.eval(&xp).unwrap() - p.eval(&xm).unwrap()) / (2.0 * h);
            let exact = grad[i].eval(&x).unwrap();
            let scale = abs_eval(&grad[i], &x) + abs_eval(&p, &x);
            prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + scale), "{} vs {}", fd, exact);
        }
    }

    #[test]
    fn rescale_round_trips(p in poly3(), s in prop::array::uniform3(0.1f64..10.0), t in prop::array::uniform3(-5.0f64..5.0)) {
        let q = p.affine_rescale(&s, &t).unwrap();
        let inv_s: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
        let inv_t: Vec<f64> = s.iter().zip(&t).map(|(a, b)| -b / a).collect();
        let back = q.affine_rescale(&inv_s, &inv_t).unwrap();
        let scale = p.max_abs_coeff();
        let diff = &back - &p;
        prop_assert!(diff.max_abs_coeff() <= 1e-10 * scale.max(q.max_abs_coeff()), "{}", diff.max_abs_coeff());
    }

    #[test]
    fn lie_derivative_vanishes_at_equilibria(v in poly3()) {
        let f = PolySystem::lorenz_standard();
        let lie = f.lie_derivative(&v).unwrap();
        prop_assert_eq!(lie.eval(&[0.0; 3]).unwrap(), 0.0);
        for eq in lorenz_equilibria(8.0 / 3.0, 10.0, 28.0).unwrap() {
            let grad_scale: f64 = v.gradient().iter().map(|g| abs_eval(g, &eq)).sum();
            prop_assert!(lie.eval(&eq).unwrap().abs() <= 1e-12 * (1.0 + grad_scale) * 100.0);
        }
    }
}

#[test]
fn basis_sizes_and_order() {
    for d in 1..=4usize {
        for k in 0..=10u32 {
            let b = monomial_basis(d, k);
            assert_eq!(b.len() as u64, binomial(d as u64 + k as u64, d as u64), "d={} k={}", d, k);
            assert!(b.windows(2).all(|w| w[0] < w[1]));
            assert!(b.windows(2).all(|w| w[0].degree() <= w[1].degree()));
        }
    }
}

#[test]
fn equilibrium_residual_of_lorenz_z_component() {
    let f = PolySystem::lorenz_standard();
    let s = (8.0f64 / 3.0 * 27.0).sqrt();
    assert_relative_eq!(f.components()[2].eval(&[s, s, 27.0]).unwrap(), 0.0, epsilon = 1e-12);
}
