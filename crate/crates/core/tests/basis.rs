use iterint::quadrature::{gauss_legendre, NodalGrid};
use iterint::{legendre_p, Basis, Interval};
use proptest::prelude::*;

fn gram_error(basis: &Basis, nodes: &[f64], weights: &[f64], n: usize) -> f64 {
    let values: Vec<Vec<f64>> = (0..n).map(|j| nodes.iter().map(|&x| basis.phi(j, x).unwrap()).collect()).collect();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..=j {
            let ip: f64 = (0..nodes.len()).map(|i| weights[i] * values[j][i] * values[k][i]).sum();
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

#[test]
fn legendre_orthonormal_up_to_64() {
    let iv = Interval::new(-0.3, 1.7).unwrap();
    let basis = Basis::legendre(iv);
    let (z, w) = gauss_legendre(70);
    let nodes: Vec<f64> = z.iter().map(|&x| iv.from_canonical(x)).collect();
    let weights: Vec<f64> = w.iter().map(|&x| x * iv.length() / 2.0).collect();
    assert!(gram_error(&basis, &nodes, &weights, 65) <= 1e-12);
}

#[test]
fn trigonometric_orthonormal_up_to_64() {
    let iv = Interval::new(0.5, 2.0).unwrap();
    let basis = Basis::trigonometric(iv);
    let grid = NodalGrid::new(iv, 64, 24);
    assert!(gram_error(&basis, grid.nodes(), grid.weights(), 65) <= 1e-12);
}

#[test]
fn legendre_envelope_has_one_constant() {
    let mut worst: f64 = 0.0;
    for n in 2..=64usize {
        for i in 1..200 {
            let x = -1.0 + 2.0 * i as f64 / 200.0;
            let v = legendre_p(n, x).unwrap().abs() * ((n + 1) as f64).sqrt() * (1.0 - x * x).powf(0.25);
            worst = worst.max(v);
        }
    }
    // sqrt(2/π) is the asymptotic envelope.
    assert!(worst < 1.0, "envelope constant {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn phi_integral_is_additive(j in 0usize..40, x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0, trig in any::<bool>()) {
        let mut pts = [x, y, z];
        pts.sort_by(f64::total_cmp);
        let [a, b, c] = pts;
        let iv = Interval::new(0.0, 1.0).unwrap();
        let basis = if trig { Basis::trigonometric(iv) } else { Basis::legendre(iv) };
        let lhs = basis.phi_integral(j, a, b).unwrap() + basis.phi_integral(j, b, c).unwrap();
        let rhs = basis.phi_integral(j, a, c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13);
    }

    #[test]
    fn phi_stays_within_its_sup_norm(j in 0usize..200, x in 0.0f64..=1.0) {
        let iv = Interval::unit();
        let leg: Basis = Basis::legendre(iv);
        let trig: Basis = Basis::trigonometric(iv);
        let bound = ((2 * j + 1) as f64).sqrt();
        prop_assert!(leg.phi(j, x).unwrap().abs() <= bound * (1.0 + 1e-12));
        prop_assert!(trig.phi(j, x).unwrap().abs() <= 2f64.sqrt() + 1e-12);
    }
}
