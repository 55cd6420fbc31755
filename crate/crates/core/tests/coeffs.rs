use iterint::quadrature::gauss_legendre;
use iterint::{coeff_tensor, kernel_norm_sq, trace_sum, Basis, Interval, Weight};

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for perm in permutations(k - 1) {
        for pos in 0..k {
            let mut p = perm.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out
}

fn check_symmetrization(k: usize, basis: &Basis, weight: &Weight) {
    let p = 8;
    let c = coeff_tensor(k, &vec![p; k], &vec![weight.clone(); k], basis).unwrap();
    let single = coeff_tensor(1, &[p], std::slice::from_ref(weight), basis).unwrap();
    let perms = permutations(k);
    for idx in c.indices() {
        let sym: f64 = perms
            .iter()
            .map(|perm| c.get(&perm.iter().map(|&l| idx[l]).collect::<Vec<_>>()))
            .sum();
        let product: f64 = idx.iter().map(|&j| single.get(&[j])).product();
        assert!((sym - product).abs() <= 1e-10, "{idx:?}: {sym} vs {product}");
    }
}

#[test]
fn symmetrization_matches_product_of_projections() {
    let legendre = Basis::legendre(Interval::new(0.2, 1.4).unwrap());
    let trig = Basis::trigonometric(Interval::unit());
    for k in [2, 3] {
        check_symmetrization(k, &legendre, &Weight::ConstantOne);
        check_symmetrization(k, &legendre, &Weight::Monomial { q: 1 });
        check_symmetrization(k, &trig, &Weight::ConstantOne);
    }
}

#[test]
fn second_order_against_cube_quadrature() {
    // Direct quadrature of K = 1{t1 < t2} on the square, split along the diagonal.
    let basis = Basis::legendre(Interval::unit());
    let c = coeff_tensor(2, &[5, 5], &[Weight::ConstantOne, Weight::ConstantOne], &basis).unwrap();
    let (z, w) = gauss_legendre(20);
    for j1 in 0..=5 {
        for j2 in 0..=5 {
            let mut total = 0.0;
            for (a, wa) in z.iter().zip(&w) {
                let t2 = 0.5 * (a + 1.0);
                for (b, wb) in z.iter().zip(&w) {
                    let t1 = 0.5 * (b + 1.0) * t2;
                    total += 0.25 * wa * wb * t2 * basis.phi(j1, t1).unwrap() * basis.phi(j2, t2).unwrap();
                }
            }
            assert!((total - c.get(&[j1, j2])).abs() < 1e-13);
        }
    }
}

#[test]
fn bessel_sums_grow_toward_the_kernel_norm() {
    for basis in [Basis::legendre(Interval::unit()), Basis::trigonometric(Interval::unit())] {
        let weights = [Weight::ConstantOne, Weight::Monomial { q: 1 }];
        let norm = kernel_norm_sq(&weights, basis.interval).unwrap();
        let c = coeff_tensor(2, &[24, 24], &weights, &basis).unwrap();
        let mut last = 0.0;
        for p in 0..=24 {
            let s: f64 = (0..=p).flat_map(|a| (0..=p).map(move |b| (a, b))).map(|(a, b)| c.get(&[a, b]).powi(2)).sum();
            assert!(s > last, "{:?} p={p}", basis.kind);
            assert!(s <= norm);
            last = s;
        }
    }
    let basis = Basis::legendre(Interval::unit());
    let w3 = vec![Weight::ConstantOne; 3];
    let c = coeff_tensor(3, &[10; 3], &w3, &basis).unwrap();
    assert!(c.frobenius_sq() < kernel_norm_sq(&w3, basis.interval).unwrap());
}

#[test]
fn monomial_trace_residual_shrinks() {
    let basis = Basis::legendre(Interval::unit());
    let w = Weight::Monomial { q: 1 };
    let limit = 1.0 / 6.0;
    let mut last = f64::INFINITY;
    for p in [2, 4, 8, 16, 32, 64] {
        let r = (trace_sum(p, &w, &w, &basis).unwrap() - limit).abs();
        assert!(r <= last + 1e-13);
        last = r;
    }
}

#[test]
fn tensors_are_bitwise_reproducible() {
    let basis = Basis::trigonometric(Interval::new(0.0, 2.0).unwrap());
    let w = vec![Weight::ConstantOne, Weight::Monomial { q: 2 }, Weight::ConstantOne];
    let a = coeff_tensor(3, &[6; 3], &w, &basis).unwrap();
    let b = coeff_tensor(3, &[6; 3], &w, &basis).unwrap();
    let bits = |c: &iterint::Coeffs| c.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}
