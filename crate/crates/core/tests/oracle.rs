use iterint::expand::{ito_truncated, NoiseIndexTuple, TruncationSpec};
use iterint::oracle::{
    ito_sum, mse_pathwise, sample_path, strat_sum, zeta_from_path, Calculus, MseStudy, PathProjector, StratRule,
};
use iterint::stats::MeanEstimate;
use iterint::{coeff_tensor, Basis, Interval, Weight};

#[test]
fn path_sums_have_wiener_variance_and_independent_components() {
    let iv = Interval::new(0.0, 2.0).unwrap();
    let n = 100_000u64;
    let mut sums = Vec::new();
    let mut cross = Vec::new();
    for s in 0..n {
        let path = sample_path(s, 2, 4, iv).unwrap();
        let a: f64 = path.component(1).iter().sum();
        let b: f64 = path.component(2).iter().sum();
        sums.push(a * a);
        cross.push(a * b);
    }
    assert!(MeanEstimate::from_samples(&sums).covers(2.0, 4.0));
    assert!(MeanEstimate::from_samples(&cross).covers(0.0, 4.0));
}

#[test]
fn same_component_ito_sum_has_isometry_moments() {
    let w = [Weight::ConstantOne, Weight::ConstantOne];
    let idx = NoiseIndexTuple::new(vec![1, 1]).unwrap();
    let xs: Vec<f64> = (0..20_000)
        .map(|s| ito_sum(&sample_path(s, 1, 512, Interval::unit()).unwrap(), &w, &idx).unwrap())
        .collect();
    let mean = MeanEstimate::from_samples(&xs);
    assert!(mean.covers(0.0, 4.0));
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    // Discrete isometry: (1 - 1/N) / 2.
    assert!(MeanEstimate::from_samples(&sq).covers(0.5 * (1.0 - 1.0 / 512.0), 4.0));
}

#[test]
fn distinct_components_have_no_stratonovich_shift() {
    let w = [Weight::ConstantOne, Weight::ConstantOne];
    let idx = NoiseIndexTuple::new(vec![1, 2]).unwrap();
    for rule in [StratRule::Midpoint, StratRule::Trapezoidal] {
        let gaps: Vec<f64> = (0..4_000)
            .map(|s| {
                let path = sample_path(s, 2, 1024, Interval::unit()).unwrap();
                strat_sum(&path, &w, &idx, rule).unwrap() - ito_sum(&path, &w, &idx).unwrap()
            })
            .collect();
        assert!(MeanEstimate::from_samples(&gaps).covers(0.0, 4.0));
    }
}

#[test]
fn first_order_coupling_is_exact() {
    let basis = Basis::legendre(Interval::new(1.0, 3.0).unwrap());
    let w = [Weight::ConstantOne];
    let c = coeff_tensor(1, &[6], &w, &basis).unwrap();
    let t = TruncationSpec::shared(1, 6).unwrap();
    for (s, i) in [(0u64, 1usize), (1, 2), (2, 0)] {
        let path = sample_path(s, 2, 1000, basis.interval).unwrap();
        let z = zeta_from_path(&path, &basis, 6).unwrap();
        let idx = NoiseIndexTuple::new(vec![i]).unwrap();
        let lhs = ito_truncated(&c, &z, &idx, &t).unwrap();
        let rhs = ito_sum(&path, &w, &idx).unwrap();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }
}

#[test]
fn projected_coordinates_are_uncorrelated() {
    let basis = Basis::legendre(Interval::unit());
    let p = 8;
    let projector = PathProjector::new(basis, p, 1 << 12).unwrap();
    let n = 10_000u64;
    let mut moments = vec![0.0; (p + 1) * (p + 1)];
    for s in 0..n {
        let z = projector.project(&sample_path(s, 1, 1 << 12, basis.interval).unwrap()).unwrap();
        let r = z.row(1);
        for a in 0..=p {
            for b in 0..=p {
                moments[a * (p + 1) + b] += r[a] * r[b] / n as f64;
            }
        }
    }
    // Off-diagonal products have variance near 1/n; diagonal squares near 2/n.
    for a in 0..=p {
        for b in 0..=p {
            let target = if a == b { 1.0 } else { 0.0 };
            let sd = if a == b { (2.0 / n as f64).sqrt() } else { (1.0 / n as f64).sqrt() };
            assert!((moments[a * (p + 1) + b] - target).abs() < 4.5 * sd, "({a},{b})");
        }
    }
}

#[test]
fn third_order_stratonovich_error_shrinks() {
    let study = MseStudy {
        basis: Basis::legendre(Interval::unit()),
        weights: vec![Weight::ConstantOne; 3],
        idx: NoiseIndexTuple::new(vec![1, 2, 3]).unwrap(),
        orders: vec![2, 4, 8, 16],
        steps: 1 << 11,
        seeds: 1000,
        base_seed: 7,
        calculus: Calculus::Stratonovich(StratRule::Midpoint),
    };
    let rows = mse_pathwise(&study).unwrap();
    for pair in rows.windows(2) {
        assert!(pair[1].mse < pair[0].mse, "{rows:?}");
    }
}

#[test]
fn doubling_the_grid_keeps_the_second_moment() {
    let w = [Weight::ConstantOne, Weight::ConstantOne];
    let idx = NoiseIndexTuple::new(vec![1, 2]).unwrap();
    let second = |steps: usize, base: u64| {
        let sq: Vec<f64> = (0..5_000)
            .map(|s| ito_sum(&sample_path(base + s, 2, steps, Interval::unit()).unwrap(), &w, &idx).unwrap().powi(2))
            .collect();
        MeanEstimate::from_samples(&sq)
    };
    let (a, b) = (second(1 << 12, 0), second(1 << 13, 1_000_000));
    assert!((a.mean - b.mean).abs() < 4.0 * (a.se.powi(2) + b.se.powi(2)).sqrt());
}
