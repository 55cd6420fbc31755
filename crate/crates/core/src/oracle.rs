//! Fine-grid integral sums on simulated Wiener paths, and the coupling of
//! Gaussian coordinates to the same paths.

use rayon::prelude::*;

use crate::basis::{BasisSystem, Interval};
use crate::coeffs::{basis_on_grid_points, coeff_tensor, kernel_norm_sq, CoeffTensor, WeightFn};
use crate::error::{Error, Result};
use crate::expand::{
    ito_truncated, sample_table, strat_truncated, time_row, GaussianTable, HermiteReference, NoiseIndexTuple,
    TruncationSpec,
};
use crate::rng::{self, domain};
use crate::stats::{loglog_slope, MeanEstimate};

/// Increments of an m-dimensional Wiener process on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    interval: Interval<f64>,
    seed: u64,
    /// `increments[i - 1][l]` is the increment of component i over step l.
    increments: Vec<Vec<f64>>,
}

impl WienerPath {
    pub fn from_increments(interval: Interval<f64>, increments: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let n = increments.first().map_or(0, Vec::len);
        if n < 2 || increments.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("a path needs at least two steps in every component".into()));
        }
        Ok(Self {
            interval,
            seed,
            increments,
        })
    }

    pub fn interval(&self) -> Interval<f64> {
        self.interval
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.increments.len()
    }

    pub fn steps(&self) -> usize {
        self.increments[0].len()
    }

    pub fn dt(&self) -> f64 {
        self.interval.length() / self.steps() as f64
    }

    pub fn time(&self, l: usize) -> f64 {
        if l == self.steps() {
            self.interval.end
        } else {
            self.interval.start + l as f64 * self.dt()
        }
    }

    /// Increment of component `i` over step `l`; component 0 is time.
    pub fn increment(&self, i: usize, l: usize) -> f64 {
        if i == 0 {
            self.dt()
        } else {
            self.increments[i - 1][l]
        }
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.increments[i - 1]
    }
}

pub fn sample_path(seed: u64, m: usize, steps: usize, interval: Interval<f64>) -> Result<WienerPath> {
    if steps < 2 || m == 0 {
        return Err(Error::Dimension(format!("path with {m} components and {steps} steps")));
    }
    let scale = (interval.length() / steps as f64).sqrt();
    let increments = (1..=m)
        .map(|i| {
            let mut row = vec![0.0; steps];
            rng::fill_normals(seed, rng::stream_id(domain::PATH, i as u64), 0, &mut row);
            row.iter_mut().for_each(|x| *x *= scale);
            row
        })
        .collect();
    WienerPath::from_increments(interval, increments, seed)
}

fn check_sum_inputs(path: &WienerPath, weights: &[WeightFn<f64>], idx: &NoiseIndexTuple) -> Result<()> {
    if weights.len() != idx.k() {
        return Err(Error::Dimension(format!(
            "{} weights for an index tuple of length {}",
            weights.len(),
            idx.k()
        )));
    }
    if idx.max_component() > path.m() {
        return Err(Error::Dimension(format!(
            "component {} exceeds path components {}",
            idx.max_component(),
            path.m()
        )));
    }
    Ok(())
}

/// Left-point iterated sum over `l_1 < ... < l_k`, by prefix accumulation.
pub fn ito_sum(path: &WienerPath, weights: &[WeightFn<f64>], idx: &NoiseIndexTuple) -> Result<f64> {
    check_sum_inputs(path, weights, idx)?;
    let k = idx.k();
    let start = path.interval.start;
    let comps = idx.as_slice();
    // partial[r] = sum over the first r levels so far; partial[0] = 1.
    let mut partial = [1.0, 0.0, 0.0, 0.0, 0.0];
    for l in 0..path.steps() {
        let tau = path.time(l);
        for r in (1..=k).rev() {
            partial[r] += weights[r - 1].eval(start, tau) * partial[r - 1] * path.increment(comps[r - 1], l);
        }
    }
    Ok(partial[k])
}

/// Discretisation rule for the Stratonovich sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StratRule {
    /// Pairs of fine steps form one coarse step whose integrand is taken at
    /// the fine midpoint.
    #[default]
    Midpoint,
    Trapezoidal,
}

/// Symmetric iterated sum approximating the Stratonovich integral.
pub fn strat_sum(
    path: &WienerPath,
    weights: &[WeightFn<f64>],
    idx: &NoiseIndexTuple,
    rule: StratRule,
) -> Result<f64> {
    check_sum_inputs(path, weights, idx)?;
    let k = idx.k();
    let start = path.interval.start;
    let comps = idx.as_slice();
    let psi = |r: usize, tau: f64| weights[r - 1].eval(start, tau);
    let n = path.steps();
    let mut s = [1.0, 0.0, 0.0, 0.0, 0.0];

    // One trapezoidal step over fine step l; levels ascend so level r-1 is
    // already advanced when level r needs it.
    let trapezoid = |s: &mut [f64; 5], l: usize| {
        let (a, b) = (path.time(l), path.time(l + 1));
        let old = *s;
        for r in 1..=k {
            let d = path.increment(comps[r - 1], l);
            s[r] = old[r] + 0.5 * (psi(r, a) * old[r - 1] + psi(r, b) * s[r - 1]) * d;
        }
    };

    match rule {
        StratRule::Trapezoidal => {
            for l in 0..n {
                trapezoid(&mut s, l);
            }
        }
        StratRule::Midpoint => {
            let mut l = 0;
            while l + 1 < n {
                let mid_time = path.time(l + 1);
                let old = s;
                let mut mid = s;
                trapezoid(&mut mid, l);
                for r in 1..=k {
                    let d = path.increment(comps[r - 1], l) + path.increment(comps[r - 1], l + 1);
                    s[r] = old[r] + psi(r, mid_time) * mid[r - 1] * d;
                }
                l += 2;
            }
            if l < n {
                trapezoid(&mut s, l);
            }
        }
    }
    Ok(s[k])
}

/// Values `φ_j(τ_l)` at the left grid points, reused across paths.
#[derive(Debug, Clone)]
pub struct PathProjector {
    basis: BasisSystem<f64>,
    p: usize,
    steps: usize,
    /// `values[j * steps + l]`.
    values: Vec<f64>,
    time_row: Vec<f64>,
}

impl PathProjector {
    pub fn new(basis: BasisSystem<f64>, p: usize, steps: usize) -> Result<Self> {
        basis.check_index(p)?;
        let iv = basis.interval;
        let dt = iv.length() / steps as f64;
        let points: Vec<f64> = (0..steps).map(|l| iv.start + l as f64 * dt).collect();
        Ok(Self {
            basis,
            p,
            steps,
            values: basis_on_grid_points(&basis, &points, p),
            time_row: time_row(&basis, p)?,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Left-point coordinates `ζ_j^{(i)} ≈ Σ_l φ_j(τ_l) Δw_l^{(i)}`; row 0 exact.
    pub fn project(&self, path: &WienerPath) -> Result<GaussianTable<f64>> {
        if path.steps() != self.steps || path.interval() != self.basis.interval {
            return Err(Error::Dimension("path grid does not match the projector".into()));
        }
        let mut rows = vec![self.time_row.clone()];
        for i in 1..=path.m() {
            let dw = path.component(i);
            let row = (0..=self.p)
                .map(|j| {
                    let phi = &self.values[j * self.steps..(j + 1) * self.steps];
                    phi.iter().zip(dw).map(|(a, b)| a * b).sum()
                })
                .collect();
            rows.push(row);
        }
        GaussianTable::from_rows(rows, Some(path.seed()))
    }
}

pub fn zeta_from_path(path: &WienerPath, basis: &BasisSystem<f64>, p: usize) -> Result<GaussianTable<f64>> {
    PathProjector::new(*basis, p, path.steps())?.project(path)
}

/// Which expansion is compared against which oracle sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calculus {
    Ito,
    Stratonovich(StratRule),
}

#[derive(Debug, Clone)]
pub struct MseStudy {
    pub basis: BasisSystem<f64>,
    pub weights: Vec<WeightFn<f64>>,
    pub idx: NoiseIndexTuple,
    /// Truncation orders to compare, ascending.
    pub orders: Vec<usize>,
    pub steps: usize,
    pub seeds: u64,
    pub base_seed: u64,
    pub calculus: Calculus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseRow {
    pub p: usize,
    pub mse: f64,
    pub se: f64,
    /// `∫K² - Σ C²`, defined for k <= 2 with distinct nonzero components.
    pub parseval: Option<f64>,
}

impl MseStudy {
    fn parseval_applies(&self) -> bool {
        let i = self.idx.as_slice();
        self.idx.k() <= 2 && i.iter().all(|&c| c != 0) && (self.idx.k() == 1 || i[0] != i[1])
    }
}

/// Pathwise mean-square error of the truncated expansion fed with coordinates
/// projected from each path, against the oracle sum on the same path.
pub fn mse_pathwise(study: &MseStudy) -> Result<Vec<MseRow>> {
    let k = study.idx.k();
    if study.orders.is_empty() {
        return Err(Error::Dimension("no truncation orders requested".into()));
    }
    let pmax = *study.orders.iter().max().unwrap_or(&0);
    let c = coeff_tensor(k, &vec![pmax; k], &study.weights, &study.basis)?;
    let truncs: Vec<TruncationSpec> = study
        .orders
        .iter()
        .map(|&p| TruncationSpec::shared(k, p))
        .collect::<Result<_>>()?;
    let projector = PathProjector::new(study.basis, pmax, study.steps)?;
    let m = study.idx.max_component().max(1);

    let per_seed: Vec<Vec<f64>> = (0..study.seeds)
        .into_par_iter()
        .map(|s| -> Result<Vec<f64>> {
            let path = sample_path(study.base_seed.wrapping_add(s), m, study.steps, study.basis.interval)?;
            let z = projector.project(&path)?;
            let oracle = match study.calculus {
                Calculus::Ito => ito_sum(&path, &study.weights, &study.idx)?,
                Calculus::Stratonovich(rule) => strat_sum(&path, &study.weights, &study.idx, rule)?,
            };
            truncs
                .iter()
                .map(|t| {
                    let v = match study.calculus {
                        Calculus::Ito => ito_truncated(&c, &z, &study.idx, t)?,
                        Calculus::Stratonovich(_) => strat_truncated(&c, &z, &study.idx, t)?,
                    };
                    Ok((v - oracle).powi(2))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let norm = if study.parseval_applies() {
        Some(kernel_norm_sq(&study.weights, study.basis.interval)?)
    } else {
        None
    };
    Ok(study
        .orders
        .iter()
        .enumerate()
        .map(|(col, &p)| {
            let xs: Vec<f64> = per_seed.iter().map(|r| r[col]).collect();
            let est = MeanEstimate::from_samples(&xs);
            let parseval = norm.map(|n| n - truncated_frobenius(&c, &vec![p; k]));
            MseRow {
                p,
                mse: est.mean,
                se: est.se,
                parseval,
            }
        })
        .collect())
}

/// Σ C² over `j_l <= orders[l]`.
pub fn truncated_frobenius(c: &CoeffTensor<f64>, orders: &[usize]) -> f64 {
    c.indices()
        .zip(c.values())
        .filter(|(idx, _)| idx.iter().zip(orders).all(|(j, p)| j <= p))
        .map(|(_, v)| v * v)
        .sum()
}

/// Exact expectation of the squared coupling error of [`mse_pathwise`] for
/// k = 2, distinct Wiener components and the Ito calculus:
/// `Σ_{l1,l2} (K_p(τ_l1, τ_l2) - 1{l1 < l2} ψ_1 ψ_2)² Δτ²`, where `K_p` is the
/// truncated kernel expansion evaluated at left grid points.
pub fn coupled_grid_mse_k2(c: &CoeffTensor<f64>, orders: [usize; 2], steps: usize) -> Result<f64> {
    if c.k() != 2 || orders[0] > c.orders()[0] || orders[1] > c.orders()[1] {
        return Err(Error::Dimension("grid error needs a k = 2 tensor covering the orders".into()));
    }
    let basis = c.basis();
    let iv = basis.interval;
    let dt = iv.length() / steps as f64;
    let points: Vec<f64> = (0..steps).map(|l| iv.start + l as f64 * dt).collect();
    let pmax = orders[0].max(orders[1]);
    let phi = basis_on_grid_points(basis, &points, pmax);
    let psi: Vec<Vec<f64>> = c.weights().iter().map(|w| points.iter().map(|&x| w.eval(iv.start, x)).collect()).collect();
    let d2 = c.orders()[1] + 1;
    let total: f64 = (0..steps)
        .into_par_iter()
        .map(|l1| {
            let mut a = vec![0.0; orders[1] + 1];
            for j1 in 0..=orders[0] {
                let f = phi[j1 * steps + l1];
                for (j2, av) in a.iter_mut().enumerate() {
                    *av += f * c.values()[j1 * d2 + j2];
                }
            }
            let mut row = 0.0;
            for l2 in 0..steps {
                let mut kp = 0.0;
                for (j2, av) in a.iter().enumerate() {
                    kp += av * phi[j2 * steps + l2];
                }
                let target = if l1 < l2 { psi[0][l1] * psi[1][l2] } else { 0.0 };
                row += (kp - target).powi(2);
            }
            row
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total * dt * dt)
}

/// Mean-square gap between the truncated Ito expansion and the Hermite closed
/// form, for `i_1 = ... = i_k = 1` and a common weight, over sampled tables.
pub fn mse_against_hermite(
    k: usize,
    weight: &WeightFn<f64>,
    basis: &BasisSystem<f64>,
    orders: &[usize],
    seeds: u64,
    base_seed: u64,
) -> Result<Vec<MseRow>> {
    let pmax = *orders.iter().max().ok_or_else(|| Error::Dimension("no orders".into()))?;
    let c = coeff_tensor(k, &vec![pmax; k], &vec![weight.clone(); k], basis)?;
    let idx = NoiseIndexTuple::new(vec![1; k])?;
    let refs: Vec<HermiteReference<f64>> = orders
        .iter()
        .map(|&p| HermiteReference::new(weight, basis, p))
        .collect::<Result<_>>()?;
    let truncs: Vec<TruncationSpec> = orders.iter().map(|&p| TruncationSpec::shared(k, p)).collect::<Result<_>>()?;
    let per_seed: Vec<Vec<f64>> = (0..seeds)
        .into_par_iter()
        .map(|s| -> Result<Vec<f64>> {
            let z = sample_table(base_seed.wrapping_add(s), 1, pmax, basis)?;
            truncs
                .iter()
                .zip(&refs)
                .map(|(t, h)| Ok((ito_truncated(&c, &z, &idx, t)? - h.value(k, &z, 1)?).powi(2)))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(orders
        .iter()
        .enumerate()
        .map(|(col, &p)| {
            let xs: Vec<f64> = per_seed.iter().map(|r| r[col]).collect();
            let est = MeanEstimate::from_samples(&xs);
            MseRow {
                p,
                mse: est.mean,
                se: est.se,
                parseval: None,
            }
        })
        .collect())
}

/// Log-log slope of MSE against p.
pub fn mse_slope(rows: &[MseRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.p as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mse).collect();
    loglog_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(k: usize) -> Vec<WeightFn<f64>> {
        vec![WeightFn::ConstantOne; k]
    }

    fn idx(v: &[usize]) -> NoiseIndexTuple {
        NoiseIndexTuple::new(v.to_vec()).unwrap()
    }

    #[test]
    fn first_order_sums_telescope() {
        let iv = Interval::new(0.0, 2.0).unwrap();
        let path = sample_path(5, 2, 64, iv).unwrap();
        let total: f64 = path.component(2).iter().sum();
        assert!((ito_sum(&path, &ones(1), &idx(&[2])).unwrap() - total).abs() < 1e-13);
        assert!((ito_sum(&path, &ones(1), &idx(&[0])).unwrap() - 2.0).abs() < 1e-13);
        for rule in [StratRule::Midpoint, StratRule::Trapezoidal] {
            assert!((strat_sum(&path, &ones(1), &idx(&[2]), rule).unwrap() - total).abs() < 1e-13);
        }
    }

    #[test]
    fn path_is_deterministic() {
        let iv = Interval::unit();
        assert_eq!(sample_path(3, 2, 16, iv).unwrap(), sample_path(3, 2, 16, iv).unwrap());
        assert_ne!(sample_path(3, 2, 16, iv).unwrap(), sample_path(4, 2, 16, iv).unwrap());
        assert!(sample_path(3, 2, 1, iv).is_err());
    }

    #[test]
    fn second_order_sum_against_brute_force() {
        let iv = Interval::new(1.0, 2.0).unwrap();
        let path = sample_path(8, 2, 33, iv).unwrap();
        let w = vec![WeightFn::Monomial { q: 1 }, WeightFn::ConstantOne];
        let mut brute = 0.0;
        for l2 in 0..33 {
            for l1 in 0..l2 {
                brute += (1.0 - path.time(l1)) * path.increment(1, l1) * path.increment(2, l2);
            }
        }
        assert!((ito_sum(&path, &w, &idx(&[1, 2])).unwrap() - brute).abs() < 1e-13);
    }

    #[test]
    fn midpoint_correction_is_the_even_step_squares() {
        let iv = Interval::unit();
        let path = sample_path(1, 1, 64, iv).unwrap();
        let d = strat_sum(&path, &ones(2), &idx(&[1, 1]), StratRule::Midpoint).unwrap()
            - ito_sum(&path, &ones(2), &idx(&[1, 1])).unwrap();
        let expect: f64 = path.component(1).iter().step_by(2).map(|x| x * x).sum();
        assert!((d - expect).abs() < 1e-13);
        // Trapezoid gives half the full quadratic variation.
        let t = strat_sum(&path, &ones(2), &idx(&[1, 1]), StratRule::Trapezoidal).unwrap()
            - ito_sum(&path, &ones(2), &idx(&[1, 1])).unwrap();
        let qv: f64 = path.component(1).iter().map(|x| x * x).sum();
        assert!((t - 0.5 * qv).abs() < 1e-13);
    }

    #[test]
    fn projected_coordinates_are_exact_for_the_constant() {
        let basis = BasisSystem::legendre(Interval::new(0.0, 3.0).unwrap());
        let path = sample_path(2, 1, 128, basis.interval).unwrap();
        let z = zeta_from_path(&path, &basis, 6).unwrap();
        let w: f64 = path.component(1).iter().sum();
        assert!((z.row(1)[0] - w / 3f64.sqrt()).abs() < 1e-13);
        assert!((z.row(0)[0] - 3f64.sqrt()).abs() < 1e-15);
        let c = coeff_tensor(1, &[6], &ones(1), &basis).unwrap();
        let t = TruncationSpec::shared(1, 6).unwrap();
        let e = ito_truncated(&c, &z, &idx(&[1]), &t).unwrap();
        assert!((e - ito_sum(&path, &ones(1), &idx(&[1])).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn first_order_mse_is_negligible() {
        let study = MseStudy {
            basis: BasisSystem::legendre(Interval::unit()),
            weights: ones(1),
            idx: idx(&[1]),
            orders: vec![0, 3],
            steps: 64,
            seeds: 50,
            base_seed: 0,
            calculus: Calculus::Ito,
        };
        for row in mse_pathwise(&study).unwrap() {
            assert!(row.mse < 1e-25);
            assert!(row.parseval.unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn grid_mse_tends_to_parseval() {
        let basis = BasisSystem::legendre(Interval::unit());
        let c = coeff_tensor(2, &[4, 4], &ones(2), &basis).unwrap();
        let parseval = 0.5 - c.frobenius_sq();
        let coarse = coupled_grid_mse_k2(&c, [4, 4], 256).unwrap();
        let fine = coupled_grid_mse_k2(&c, [4, 4], 1024).unwrap();
        assert!((fine - parseval).abs() < (coarse - parseval).abs());
        assert!((fine - parseval).abs() < 1e-3);
    }
}
