use dgsem_core::spectral::{
    gauss_lobatto, legendre_eval, tensor_divergence, tensor_gradient, NodalBasis, NodalField3D,
};
use proptest::prelude::*;

fn poly_values(basis: &NodalBasis, coeffs: &[f64]) -> Vec<f64> {
    basis
        .nodes()
        .iter()
        .map(|&x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))
        .collect()
}

/// Exact L2 norm squared on [-1, 1] of a polynomial given by monomial
/// coefficients.
fn exact_norm_sq(coeffs: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, a) in coeffs.iter().enumerate() {
        for (j, b) in coeffs.iter().enumerate() {
            if (i + j) % 2 == 0 {
                s += a * b * 2.0 / (i + j + 1) as f64;
            }
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summation_by_parts_matches_integration_by_parts(
        n in 1usize..16,
        seed_u in prop::collection::vec(-1.0f64..1.0, 16),
        seed_v in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let b = NodalBasis::new(n).unwrap();
        let u = poly_values(&b, &seed_u[..=n]);
        let v = poly_values(&b, &seed_v[..=n]);
        let lhs = b.inner_product(&u, &b.differentiate(&v)).unwrap()
            + b.inner_product(&b.differentiate(&u), &v).unwrap();
        let rhs = u[n] * v[n] - u[0] * v[0];
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn discrete_norm_is_equivalent_to_continuous(
        n in 1usize..12,
        coeffs in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let b = NodalBasis::new(n).unwrap();
        let c = &coeffs[..=n];
        let exact = exact_norm_sq(c).sqrt();
        prop_assume!(exact > 1e-6);
        let u = poly_values(&b, c);
        let discrete = b.inner_product(&u, &u).unwrap().sqrt();
        let bound = (2.0 + 1.0 / n as f64).sqrt();
        prop_assert!(discrete >= exact * (1.0 - 1e-12), "{discrete} < {exact}");
        prop_assert!(discrete <= bound * exact * (1.0 + 1e-12), "{discrete} > {bound} {exact}");
    }

    #[test]
    fn sbp_in_three_dimensions(
        n in 1usize..7,
        dir in 0usize..3,
        seed in prop::collection::vec(-1.0f64..1.0, 2 * 512),
    ) {
        let b = NodalBasis::new(n).unwrap();
        let np = n + 1;
        let n3 = np * np * np;
        let u = NodalField3D::from_values(n, seed[..n3].to_vec()).unwrap();
        let v = NodalField3D::from_values(n, seed[512..512 + n3].to_vec()).unwrap();
        let du = &tensor_gradient(&b, &u)[dir];
        let dv = &tensor_gradient(&b, &v)[dir];
        let lhs = b.inner_product_3d(u.values(), dv.values()).unwrap()
            + b.inner_product_3d(du.values(), v.values()).unwrap();
        // surface term: the two faces normal to `dir`
        let w = b.weights();
        let mut surface = 0.0;
        for q in 0..np {
            for p in 0..np {
                let idx = |e: usize| match dir {
                    0 => e + np * (p + np * q),
                    1 => p + np * (e + np * q),
                    _ => p + np * (q + np * e),
                };
                let hi = idx(n);
                let lo = idx(0);
                surface += w[p] * w[q] * (u.values()[hi] * v.values()[hi] - u.values()[lo] * v.values()[lo]);
            }
        }
        prop_assert!((lhs - surface).abs() < 1e-12 * (1.0 + surface.abs()));
    }

    #[test]
    fn discrete_divergence_theorem(
        n in 1usize..7,
        seed in prop::collection::vec(-1.0f64..1.0, 3 * 512),
    ) {
        let b = NodalBasis::new(n).unwrap();
        let np = n + 1;
        let n3 = np * np * np;
        let f: [NodalField3D<f64>; 3] = std::array::from_fn(|d| {
            NodalField3D::from_values(n, seed[d * 512..d * 512 + n3].to_vec()).unwrap()
        });
        let div = tensor_divergence(&b, &f);
        let ones = vec![1.0; n3];
        let volume = b.inner_product_3d(div.values(), &ones).unwrap();
        let w = b.weights();
        let mut surface = 0.0;
        for (d, comp) in f.iter().enumerate() {
            for q in 0..np {
                for p in 0..np {
                    let idx = |e: usize| match d {
                        0 => e + np * (p + np * q),
                        1 => p + np * (e + np * q),
                        _ => p + np * (q + np * e),
                    };
                    surface += w[p] * w[q] * (comp.values()[idx(n)] - comp.values()[idx(0)]);
                }
            }
        }
        prop_assert!((volume - surface).abs() < 1e-12 * (1.0 + surface.abs()));
    }

    #[test]
    fn interpolation_reproduces_polynomials(
        n in 1usize..15,
        coeffs in prop::collection::vec(-1.0f64..1.0, 15),
        x in -1.0f64..1.0,
    ) {
        let b = NodalBasis::new(n).unwrap();
        let c = &coeffs[..=n];
        let u = poly_values(&b, c);
        let exact = c.iter().rev().fold(0.0, |acc, a| acc * x + a);
        prop_assert!((b.interpolate(&u, x) - exact).abs() < 1e-12);
    }
}

#[test]
fn legendre_examples() {
    assert_eq!(legendre_eval(0, 0.3), (1.0, 0.0));
    let (l, dl) = legendre_eval(1, 0.5);
    assert_eq!((l, dl), (0.5, 1.0));
    assert!((legendre_eval(2, 0.5).0 + 0.125).abs() < 1e-15);
}

#[test]
fn lobatto_rules_for_low_degree() {
    let (x, w) = gauss_lobatto(1).unwrap();
    assert_eq!(x, vec![-1.0, 1.0]);
    assert_eq!(w, vec![1.0, 1.0]);
    let (x, w) = gauss_lobatto(2).unwrap();
    assert!(
        (x[1]).abs() < 1e-15
            && (w[1] - 4.0 / 3.0).abs() < 1e-15
            && (w[0] - 1.0 / 3.0).abs() < 1e-15
    );
    for n in 1..=30 {
        let (x, w) = gauss_lobatto(n).unwrap();
        assert_eq!(x[0], -1.0);
        assert_eq!(x[n], 1.0);
        assert!(x.windows(2).all(|p| p[1] > p[0]));
        assert!(w.iter().all(|&v| v > 0.0));
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }
    assert!(gauss_lobatto(0).is_err());
    assert!(gauss_lobatto(31).is_err());
}

#[test]
fn interpolation_examples() {
    let b = NodalBasis::new(2).unwrap();
    let sq: Vec<f64> = b.nodes().iter().map(|x| x * x).collect();
    assert!((b.interpolate(&sq, 0.7) - 0.49).abs() < 1e-15);
    assert!((b.interpolate(&[1.0; 3], 0.123) - 1.0).abs() < 1e-15);
    for (j, &xj) in b.nodes().iter().enumerate() {
        assert_eq!(b.interpolate(&sq, xj), sq[j]);
    }
}

#[test]
fn quadrature_examples() {
    let b = NodalBasis::new(2).unwrap();
    let sq: Vec<f64> = b.nodes().iter().map(|x| x * x).collect();
    assert!((b.quadrature(&sq).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let b1 = NodalBasis::new(1).unwrap();
    assert!((b1.quadrature(&[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
    for n in 1..=10 {
        let b = NodalBasis::new(n).unwrap();
        let odd: Vec<f64> = b.nodes().iter().map(|x| x.powi(2 * n as i32 - 1)).collect();
        assert!(b.quadrature(&odd).unwrap().abs() < 1e-14);
    }
    let b3 = NodalBasis::new(3).unwrap();
    assert!((b3.inner_product_3d(&[1.0; 64], &[1.0; 64]).unwrap() - 8.0).abs() < 1e-14);
}

#[test]
fn aliasing_of_an_unresolved_mode() {
    // u = L_4 sampled on N = 3 nodes projects onto the lower modes
    let b = NodalBasis::new(3).unwrap();
    let u: Vec<f64> = b.nodes().iter().map(|&x| legendre_eval(4, x).0).collect();
    let c = b.aliasing_coefficients(&u).unwrap();
    // brute-force quadrature oracle
    let oracle: Vec<f64> = (0..=3)
        .map(|k| {
            let lk: Vec<f64> = b.nodes().iter().map(|&x| legendre_eval(k, x).0).collect();
            let num: f64 = (0..4).map(|j| b.weights()[j] * u[j] * lk[j]).sum();
            let den: f64 = (0..4).map(|j| b.weights()[j] * lk[j] * lk[j]).sum();
            num / den
        })
        .collect();
    for k in 0..=3 {
        assert!((c[k] - oracle[k]).abs() < 1e-14);
    }
    assert!(c.iter().any(|v| v.abs() > 1e-3));
    let b2 = NodalBasis::new(5).unwrap();
    let l2: Vec<f64> = b2.nodes().iter().map(|&x| legendre_eval(2, x).0).collect();
    let c = b2.aliasing_coefficients(&l2).unwrap();
    for (k, v) in c.iter().enumerate() {
        assert!((v - if k == 2 { 1.0 } else { 0.0 }).abs() < 1e-13);
    }
}

#[test]
fn spectral_accuracy_of_interpolation() {
    let f = |x: f64| (std::f64::consts::PI * x).sin().exp();
    let samples: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 / 200.0).collect();
    let errors: Vec<f64> = (4..=20)
        .map(|n| {
            let b = NodalBasis::new(n).unwrap();
            let u: Vec<f64> = b.nodes().iter().map(|&x| f(x)).collect();
            samples
                .iter()
                .map(|&x| (b.interpolate(&u, x) - f(x)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    // the local algebraic order log(e_n / e_{n+4}) / log((n+4)/n) keeps growing
    let orders: Vec<f64> = (0..errors.len() - 4)
        .step_by(4)
        .map(|i| {
            let n = (i + 4) as f64;
            (errors[i] / errors[i + 4]).ln() / ((n + 4.0) / n).ln()
        })
        .collect();
    assert!(orders.windows(2).all(|w| w[1] > w[0]), "{orders:?}");
    assert!(errors.last().unwrap() < &5e-5, "{errors:?}");
}

#[test]
fn gradient_of_linear_and_polynomial_fields() {
    let b = NodalBasis::new(4).unwrap();
    let x = b.nodes().to_vec();
    let lin = NodalField3D::from_fn(4, |i, _, _| x[i]);
    let g = tensor_gradient(&b, &lin);
    assert!(g[0].values().iter().all(|v| (v - 1.0).abs() < 1e-13));
    assert!(g[1]
        .values()
        .iter()
        .chain(g[2].values())
        .all(|v| v.abs() < 1e-13));
    let p = NodalField3D::from_fn(4, |i, j, k| x[i].powi(3) * x[j] * x[k].powi(4));
    let g = tensor_gradient(&b, &p);
    for k in 0..5 {
        for j in 0..5 {
            for i in 0..5 {
                let expect = [
                    3.0 * x[i].powi(2) * x[j] * x[k].powi(4),
                    x[i].powi(3) * x[k].powi(4),
                    4.0 * x[i].powi(3) * x[j] * x[k].powi(3),
                ];
                for d in 0..3 {
                    assert!((g[d].at(i, j, k) - expect[d]).abs() < 1e-12);
                }
            }
        }
    }
    let id = [
        NodalField3D::from_fn(4, |i, _, _| x[i]),
        NodalField3D::from_fn(4, |_, j, _| x[j]),
        NodalField3D::from_fn(4, |_, _, k| x[k]),
    ];
    assert!(tensor_divergence(&b, &id)
        .values()
        .iter()
        .all(|v| (v - 3.0).abs() < 1e-12));
}
