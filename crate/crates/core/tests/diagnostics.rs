use iterint::diagnostics::{
    b_constants, delta_sum_trend, delta_table, delta_tables, interior_points, legendre_g_corner, pointwise_head_sum,
    pointwise_tail_sum, tail_kernel_fp, DeltaKind, IndexCase,
};
use iterint::expand::sample_table;
use iterint::quadrature::gauss_legendre;
use iterint::stats::MeanEstimate;
use iterint::{legendre_p, Basis, Interval, Weight};

fn unit_legendre() -> Basis {
    Basis::legendre(Interval::unit())
}

#[test]
fn legendre_g_and_h_closed_forms() {
    let b = unit_legendre();
    for p in [3, 5, 10, 20] {
        let tables = delta_tables(&[DeltaKind::G, DeltaKind::H], p, &b).unwrap();
        for t in &tables {
            assert!((t.get(p, p) - legendre_g_corner(p, 1.0)).abs() <= 1e-12);
            for r in 0..=p {
                for c in 0..=p {
                    if (r, c) != (p, p) {
                        assert!((t.get(r, c) + t.get(c, r)).abs() <= 1e-12, "{} p={p} ({r},{c})", t.kind);
                    }
                }
            }
        }
    }
}

#[test]
fn tail_kernel_is_symmetric_with_a_stable_envelope() {
    let b = Basis::legendre(Interval::new(-1.0, 2.0).unwrap());
    let pts = interior_points(&b.interval, 9);
    let mut scaled = Vec::new();
    for p in [16, 32, 64, 128] {
        let mut worst: f64 = 0.0;
        for &s in &pts {
            for &s1 in &pts {
                let f = tail_kernel_fp(&b, s, s1, Some(p)).unwrap();
                assert!((f - tail_kernel_fp(&b, s1, s, Some(p)).unwrap()).abs() <= 1e-13);
                let (z, z1) = (b.interval.to_canonical(s), b.interval.to_canonical(s1));
                worst = worst.max(f.abs() * p as f64 * ((1.0 - z * z) * (1.0 - z1 * z1)).powf(0.25));
            }
        }
        scaled.push(worst);
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi < 1.5 * lo, "{scaled:?}");
    assert!(tail_kernel_fp(&b, -1.0, 0.5, Some(3)).is_err());
}

#[test]
fn a_entries_scale_like_inverse_p_sqrt_row() {
    let b = unit_legendre();
    let fitted: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&p| {
            let t = delta_table(DeltaKind::A, p, &b).unwrap();
            let mut worst: f64 = 0.0;
            for r in 1..=p.min(32) {
                for c in 0..=p {
                    worst = worst.max(t.get(r, c).abs() * p as f64 * (r as f64).sqrt());
                }
            }
            worst
        })
        .collect();
    let bound = 1.25 * fitted[0];
    assert!(fitted.iter().all(|&c| c <= bound), "{fitted:?}");
}

/// `a[r][c] = ½ ∫ φ_c Ψ_r Σ_{j>p} Φ_j²`, with the tail summed directly up to `cutoff`.
fn a_by_direct_tail(p: usize, cutoff: usize) -> Vec<f64> {
    let (z, w) = gauss_legendre(cutoff + p + 4);
    let n = p + 1;
    let mut out = vec![0.0; n * n];
    for (&x, &wx) in z.iter().zip(&w) {
        let legendre: Vec<f64> = (0..=cutoff + 1).map(|j| legendre_p(j, x).unwrap()).collect();
        // Φ_j(s) = ½ (P_{j+1} - P_{j-1}) / √(2j+1) on [0, 1].
        let head = |j: usize| {
            let below = if j == 0 { -1.0 } else { legendre[j - 1] };
            0.5 * (legendre[j + 1] - below) / ((2 * j + 1) as f64).sqrt()
        };
        let tail: f64 = (p + 1..=cutoff).map(|j| head(j).powi(2)).sum();
        let phi: Vec<f64> = (0..n).map(|j| ((2 * j + 1) as f64).sqrt() * legendre[j]).collect();
        let total = |j: usize| if j == 0 { 1.0 } else { 0.0 };
        for r in 0..n {
            let psi_r = total(r) - head(r);
            for c in 0..n {
                out[r * n + c] += 0.25 * wx * phi[c] * psi_r * tail;
            }
        }
    }
    out
}

#[test]
fn a_table_agrees_with_a_directly_summed_tail() {
    let b = unit_legendre();
    let p = 4;
    let table = delta_table(DeltaKind::A, p, &b).unwrap();
    // The directly summed tail misses O(1/cutoff); extrapolate it away.
    let coarse = a_by_direct_tail(p, 200);
    let fine = a_by_direct_tail(p, 400);
    let scale = table.values.iter().fold(0f64, |m, v| m.max(v.abs()));
    for (i, &x) in table.values.iter().enumerate() {
        let y = 2.0 * fine[i] - coarse[i];
        assert!((x - y).abs() < 2e-4 * scale, "entry {i}: {x} vs {y}");
    }
}

#[test]
fn equal_index_moments_match_monte_carlo() {
    let b = unit_legendre();
    let p = 4;
    let n = 100_000u64;
    let tables = delta_tables(&DeltaKind::ALL, p, &b).unwrap();
    let draws: Vec<Vec<f64>> = (0..n).map(|s| sample_table(s, 1, p, &b).unwrap().row(1).to_vec()).collect();
    for t in &tables {
        let sq: Vec<f64> = draws
            .iter()
            .map(|z| {
                let mut s = 0.0;
                for r in 0..=p {
                    for c in 0..=p {
                        s += t.get(r, c) * z[r] * z[c];
                    }
                }
                s * s
            })
            .collect();
        let est = MeanEstimate::from_samples(&sq);
        let exact = t.second_moment(IndexCase::EqualNonzero);
        assert!(est.covers(exact, 4.0), "{}: {est:?} vs {exact}", t.kind);
        let frob: f64 = t.values.iter().map(|v| v * v).sum();
        assert!((t.second_moment(IndexCase::DistinctNonzero) - frob).abs() <= 1e-18);
    }
}

#[test]
fn diagonal_sums_shrink_beyond_sixteen() {
    for b in [unit_legendre(), Basis::trigonometric(Interval::unit())] {
        for kind in DeltaKind::ALL {
            let trend = delta_sum_trend(kind, &[16, 24, 32, 48], &b).unwrap();
            for w in trend.windows(2) {
                assert!(w[1].1.abs() < w[0].1.abs(), "{:?} {kind}: {trend:?}", b.kind);
            }
        }
    }
}

#[test]
fn pointwise_sums_settle_on_half_the_weight_product() {
    let b = unit_legendre();
    let ramp = Weight::Monomial { q: 1 };
    let pts = interior_points(&b.interval, 11);
    let deviation = |p: usize, tail: bool| {
        pts.iter()
            .map(|&s| {
                let (v, target) = if tail {
                    (pointwise_tail_sum(p, &Weight::ConstantOne, &ramp, &b, s).unwrap(), 0.5 * ramp.eval(0.0, s))
                } else {
                    (pointwise_head_sum(p, &ramp, &ramp, &b, s).unwrap(), 0.5 * ramp.eval(0.0, s).powi(2))
                };
                (v - target).abs()
            })
            .fold(0f64, f64::max)
    };
    for tail in [false, true] {
        assert!(deviation(256, tail) < deviation(16, tail));
    }
}

#[test]
fn diagonal_constants_are_reproducible() {
    let b = unit_legendre();
    let x = b_constants(8, &b).unwrap();
    let y = b_constants(8, &b).unwrap();
    assert_eq!(x, y);
    assert!(x.adjacent.is_finite() && x.interleaved.is_finite() && x.nested.is_finite());
}
