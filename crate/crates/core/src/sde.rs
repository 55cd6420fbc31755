//! Euler and Milstein strong schemes whose double integrals come from the
//! truncated Fourier-Legendre expansion, and a strong-order study on
//! coupled Brownian paths.
//!
//! Paths are represented by a dyadic tree of Legendre coordinates. On each
//! finest cell every component carries `p + 1` independent standard normal
//! coordinates `ζ_j = ∫ φ_j dw`; the coordinates of a parent cell are exact
//! linear combinations of those of its two children, because every parent
//! basis polynomial of degree <= p restricted to a child is a polynomial of
//! the same degree. All step sizes therefore see one Brownian path, resolved
//! to degree p on every finest cell.

use rayon::prelude::*;

use crate::basis::{legendre_unchecked, BasisSystem, Interval};
use crate::coeffs::{coeff_tensor, WeightFn};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::rng::{self, domain};
use crate::stats::{loglog_slope, MeanEstimate};

/// `dx = a(x, s) ds + Σ_i B_i(x, s) dw_i`.
pub trait SdeModel: Send + Sync {
    fn dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn initial(&self) -> Vec<f64>;
    fn drift(&self, x: &[f64], s: f64, out: &mut [f64]);
    /// Column `i` (0-based) of the diffusion.
    fn diffusion(&self, x: &[f64], s: f64, i: usize, out: &mut [f64]);
    /// `(∂B_{i2}/∂x) B_{i1}`.
    fn diffusion_derivative(&self, x: &[f64], s: f64, i1: usize, i2: usize, out: &mut [f64]);
}

/// Linear model `dx = A x ds + Σ_i B_i x dw_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSde {
    pub drift: Vec<Vec<f64>>,
    pub diffusion: Vec<Vec<Vec<f64>>>,
    pub x0: Vec<f64>,
}

fn mat_vec(m: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

impl LinearSde {
    pub fn new(drift: Vec<Vec<f64>>, diffusion: Vec<Vec<Vec<f64>>>, x0: Vec<f64>) -> Result<Self> {
        let n = x0.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if n == 0 || diffusion.is_empty() || !square(&drift) || !diffusion.iter().all(square) {
            return Err(Error::Dimension("linear model matrices must be n x n with n = len(x0)".into()));
        }
        Ok(Self { drift, diffusion, x0 })
    }

    /// Two components driven by two Wiener processes whose diffusion
    /// matrices do not commute.
    pub fn noncommutative() -> Self {
        Self {
            drift: vec![vec![-0.1, 0.3], vec![-0.3, -0.1]],
            diffusion: vec![
                vec![vec![0.8, 0.3], vec![-0.2, 0.6]],
                vec![vec![-0.5, 0.2], vec![0.4, 0.7]],
            ],
            x0: vec![1.0, 0.5],
        }
    }

    /// Two noises with commuting (diagonal) diffusion matrices.
    pub fn commutative() -> Self {
        Self {
            drift: vec![vec![-0.1, 0.0], vec![0.0, 0.2]],
            diffusion: vec![
                vec![vec![0.5, 0.0], vec![0.0, -0.3]],
                vec![vec![0.2, 0.0], vec![0.0, 0.7]],
            ],
            x0: vec![1.0, 2.0],
        }
    }

    /// `dx = λ x dw`.
    pub fn scalar(lambda: f64, x0: f64) -> Self {
        Self {
            drift: vec![vec![0.0]],
            diffusion: vec![vec![vec![lambda]]],
            x0: vec![x0],
        }
    }

    /// Largest entry of `B_1 B_2 - B_2 B_1` over all pairs.
    pub fn commutator_norm(&self) -> f64 {
        let n = self.x0.len();
        let mut worst: f64 = 0.0;
        for a in &self.diffusion {
            for b in &self.diffusion {
                for r in 0..n {
                    for c in 0..n {
                        let ab: f64 = (0..n).map(|k| a[r][k] * b[k][c]).sum();
                        let ba: f64 = (0..n).map(|k| b[r][k] * a[k][c]).sum();
                        worst = worst.max((ab - ba).abs());
                    }
                }
            }
        }
        worst
    }
}

impl SdeModel for LinearSde {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn noise_dim(&self) -> usize {
        self.diffusion.len()
    }

    fn initial(&self) -> Vec<f64> {
        self.x0.clone()
    }

    fn drift(&self, x: &[f64], _s: f64, out: &mut [f64]) {
        mat_vec(&self.drift, x, out);
    }

    fn diffusion(&self, x: &[f64], _s: f64, i: usize, out: &mut [f64]) {
        mat_vec(&self.diffusion[i], x, out);
    }

    fn diffusion_derivative(&self, x: &[f64], _s: f64, i1: usize, i2: usize, out: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        mat_vec(&self.diffusion[i1], x, &mut tmp);
        mat_vec(&self.diffusion[i2], &tmp, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Euler,
    Milstein,
}

/// Noise consumed by one step: increments and the double Ito integrals
/// `iterated[i1 * m + i2] = I_{(i1 i2)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepNoise {
    pub h: f64,
    pub dw: Vec<f64>,
    pub iterated: Vec<f64>,
}

/// One step of the scheme from `x` at time `s`; `step` labels errors.
pub fn strong_step(
    model: &dyn SdeModel,
    scheme: Scheme,
    x: &[f64],
    s: f64,
    noise: &StepNoise,
    step: usize,
) -> Result<Vec<f64>> {
    let n = model.dim();
    let m = model.noise_dim();
    if x.len() != n || noise.dw.len() != m {
        return Err(Error::Dimension(format!(
            "state of length {} / {} increments for a model with n = {n}, m = {m}",
            x.len(),
            noise.dw.len()
        )));
    }
    if !(noise.h > 0.0) {
        return Err(Error::Precondition(format!("step length {} must be positive", noise.h)));
    }
    let mut out = x.to_vec();
    let mut buf = vec![0.0; n];
    model.drift(x, s, &mut buf);
    for k in 0..n {
        out[k] += buf[k] * noise.h;
    }
    for i in 0..m {
        model.diffusion(x, s, i, &mut buf);
        for k in 0..n {
            out[k] += buf[k] * noise.dw[i];
        }
    }
    if scheme == Scheme::Milstein {
        if noise.iterated.len() != m * m {
            return Err(Error::Dimension("Milstein needs all m x m double integrals".into()));
        }
        for i1 in 0..m {
            for i2 in 0..m {
                let w = noise.iterated[i1 * m + i2];
                model.diffusion_derivative(x, s, i1, i2, &mut buf);
                for k in 0..n {
                    out[k] += buf[k] * w;
                }
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step });
    }
    Ok(out)
}

/// Truncated k = 2 expansion with ψ ≡ 1 on the unit interval, stored by its
/// nonzero entries. On a step of length h with standardised coordinates
/// `ζ^{(i)}` it gives `I_{(i1 i2)} = h (Σ C ζ^{(i1)} ζ^{(i2)} - 1{i1 = i2} Σ_j C_jj)`,
/// the same sum as [`crate::expand::ito_truncated`].
#[derive(Debug, Clone)]
pub struct DoubleIntegralExpansion {
    p: usize,
    entries: Vec<(usize, usize, f64)>,
    trace: f64,
}

impl DoubleIntegralExpansion {
    pub fn new(p: usize) -> Result<Self> {
        let basis: BasisSystem<f64> = BasisSystem::legendre(Interval::unit());
        let c = coeff_tensor(2, &[p, p], &[WeightFn::ConstantOne, WeightFn::ConstantOne], &basis)?;
        let entries = c
            .indices()
            .zip(c.values())
            .filter(|(_, v)| v.abs() > 1e-15)
            .map(|(idx, &v)| (idx[0], idx[1], v))
            .collect();
        let trace = (0..=p).map(|j| c.get(&[j, j])).sum();
        Ok(Self { p, entries, trace })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Step noise from standardised coordinates, one slice per component.
    pub fn step_noise(&self, h: f64, coords: &[&[f64]]) -> StepNoise {
        let m = coords.len();
        let root = h.sqrt();
        let dw = coords.iter().map(|z| root * z[0]).collect();
        let mut iterated = vec![0.0; m * m];
        for i1 in 0..m {
            for i2 in 0..m {
                let (a, b) = (coords[i1], coords[i2]);
                let mut s = 0.0;
                for &(j1, j2, v) in &self.entries {
                    s += v * a[j1] * b[j2];
                }
                if i1 == i2 {
                    s -= self.trace;
                }
                iterated[i1 * m + i2] = h * s;
            }
        }
        StepNoise { h, dw, iterated }
    }
}

/// Coordinate maps from the two halves of a cell into the cell itself.
#[derive(Debug, Clone)]
struct RefinementMaps {
    p: usize,
    /// Lower-triangular `left[j * (p+1) + i]`.
    left: Vec<f64>,
    right: Vec<f64>,
}

impl RefinementMaps {
    fn new(p: usize) -> Self {
        let n = p + 1;
        let (x, w) = gauss_legendre(p + 2);
        let mut left = vec![0.0; n * n];
        let mut right = vec![0.0; n * n];
        for (&xk, &wk) in x.iter().zip(&w) {
            // Child variable y = xk on [-1, 1]; parent variable (y - 1)/2 or (y + 1)/2.
            let (pl, pr) = ((xk - 1.0) * 0.5, (xk + 1.0) * 0.5);
            for j in 0..n {
                let nj = ((2 * j + 1) as f64 / 2.0).sqrt();
                let (pj_l, pj_r) = (legendre_unchecked(j, pl), legendre_unchecked(j, pr));
                for i in 0..=j {
                    let ni = ((2 * i + 1) as f64).sqrt();
                    let pi = legendre_unchecked(i, xk);
                    // dx_parent = dy / 2.
                    left[j * n + i] += 0.5 * wk * nj * pj_l * ni * pi;
                    right[j * n + i] += 0.5 * wk * nj * pj_r * ni * pi;
                }
            }
        }
        Self { p, left, right }
    }

    fn merge(&self, left: &[f64], right: &[f64], out: &mut [f64]) {
        let n = self.p + 1;
        for j in 0..n {
            let (lrow, rrow) = (&self.left[j * n..j * n + j + 1], &self.right[j * n..j * n + j + 1]);
            let mut s = 0.0;
            for i in 0..=j {
                s += lrow[i] * left[i] + rrow[i] * right[i];
            }
            out[j] = s;
        }
    }
}

/// Legendre coordinates of one m-dimensional Brownian path on [0, 1] at
/// every dyadic level from `finest` up to the root.
#[derive(Debug, Clone)]
pub struct BrownianTree {
    p: usize,
    finest: u32,
    /// `levels[l][i]` holds component i at level l: cell c at `c * (p+1)`.
    levels: Vec<Vec<Vec<f64>>>,
}

impl BrownianTree {
    pub fn sample(seed: u64, m: usize, p: usize, finest: u32) -> Self {
        let maps = RefinementMaps::new(p);
        Self::sample_with(seed, m, finest, &maps)
    }

    fn sample_with(seed: u64, m: usize, finest: u32, maps: &RefinementMaps) -> Self {
        let p = maps.p;
        let n = p + 1;
        let mut levels: Vec<Vec<Vec<f64>>> = vec![Vec::new(); finest as usize + 1];
        let cells = 1usize << finest;
        levels[finest as usize] = (1..=m)
            .map(|i| {
                let mut buf = vec![0.0; cells * n];
                rng::fill_normals(seed, rng::stream_id(domain::TREE, i as u64), 0, &mut buf);
                buf
            })
            .collect();
        for l in (0..finest as usize).rev() {
            let parents = 1usize << l;
            let merged = levels[l + 1]
                .iter()
                .map(|child| {
                    let mut out = vec![0.0; parents * n];
                    for c in 0..parents {
                        maps.merge(
                            &child[2 * c * n..(2 * c + 1) * n],
                            &child[(2 * c + 1) * n..(2 * c + 2) * n],
                            &mut out[c * n..(c + 1) * n],
                        );
                    }
                    out
                })
                .collect();
            levels[l] = merged;
        }
        Self { p, finest, levels }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn finest(&self) -> u32 {
        self.finest
    }

    /// Coordinates of component `i` (1-based) on cell `c` of `level`.
    pub fn coords(&self, level: u32, i: usize, c: usize) -> &[f64] {
        let n = self.p + 1;
        &self.levels[level as usize][i - 1][c * n..(c + 1) * n]
    }

    /// Wiener increment of component `i` over cell `c` of `level`.
    pub fn increment(&self, level: u32, i: usize, c: usize) -> f64 {
        self.coords(level, i, c)[0] * (0.5f64).powi(level as i32).sqrt()
    }
}

/// Integrate the model over [0, 1] with steps `2^-level`.
pub fn integrate(
    model: &dyn SdeModel,
    scheme: Scheme,
    tree: &BrownianTree,
    level: u32,
    expansion: &DoubleIntegralExpansion,
) -> Result<Vec<f64>> {
    let m = model.noise_dim();
    if expansion.p() > tree.p() || level > tree.finest() {
        return Err(Error::Dimension("tree does not resolve the requested level or order".into()));
    }
    let steps = 1usize << level;
    let h = 1.0 / steps as f64;
    let mut x = model.initial();
    for c in 0..steps {
        let coords: Vec<&[f64]> = (1..=m).map(|i| &tree.coords(level, i, c)[..=expansion.p()]).collect();
        let noise = expansion.step_noise(h, &coords);
        x = strong_step(model, scheme, &x, c as f64 * h, &noise, c)?;
    }
    Ok(x)
}

/// A scheme fed by the expansion truncated at `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub p: usize,
}

#[derive(Debug, Clone)]
pub struct StrongOrderStudy {
    pub schemes: Vec<SchemeSpec>,
    /// Step sizes `2^-level`, coarse to fine.
    pub levels: Vec<u32>,
    /// Reference: Milstein at `2^-reference_level` with `reference_p`.
    pub reference_level: u32,
    pub reference_p: usize,
    pub seeds: u64,
    pub base_seed: u64,
}

impl Default for StrongOrderStudy {
    fn default() -> Self {
        Self {
            schemes: vec![
                SchemeSpec {
                    scheme: Scheme::Euler,
                    p: 0,
                },
                SchemeSpec {
                    scheme: Scheme::Milstein,
                    p: 64,
                },
            ],
            levels: (4..=9).collect(),
            reference_level: 11,
            reference_p: 64,
            seeds: 1000,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongOrderRow {
    pub h: f64,
    pub mean_error: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct StrongOrderResult {
    pub spec: SchemeSpec,
    pub rows: Vec<StrongOrderRow>,
    pub slope: f64,
}

/// Mean Euclidean error at the final time against the reference solution,
/// with every scheme and step size driven by the same tree per seed.
pub fn strong_order_study(model: &dyn SdeModel, study: &StrongOrderStudy) -> Result<Vec<StrongOrderResult>> {
    if study.levels.iter().any(|&l| l >= study.reference_level) || study.levels.len() < 2 {
        return Err(Error::Precondition(
            "need at least two step levels, all coarser than the reference level".into(),
        ));
    }
    let tree_p = study
        .schemes
        .iter()
        .map(|s| s.p)
        .chain([study.reference_p])
        .max()
        .unwrap_or(0);
    let maps = RefinementMaps::new(tree_p);
    let reference = DoubleIntegralExpansion::new(study.reference_p)?;
    let expansions: Vec<DoubleIntegralExpansion> = study
        .schemes
        .iter()
        .map(|s| DoubleIntegralExpansion::new(s.p))
        .collect::<Result<_>>()?;
    let m = model.noise_dim();
    let errors: Vec<Vec<f64>> = (0..study.seeds)
        .into_par_iter()
        .map(|s| -> Result<Vec<f64>> {
            let tree = BrownianTree::sample_with(study.base_seed.wrapping_add(s), m, study.reference_level, &maps);
            let exact = integrate(model, Scheme::Milstein, &tree, study.reference_level, &reference)?;
            let mut out = Vec::with_capacity(study.schemes.len() * study.levels.len());
            for (spec, exp) in study.schemes.iter().zip(&expansions) {
                for &level in &study.levels {
                    let x = integrate(model, spec.scheme, &tree, level, exp)?;
                    let err = x.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    out.push(err);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let nl = study.levels.len();
    Ok(study
        .schemes
        .iter()
        .enumerate()
        .map(|(si, &spec)| {
            let rows: Vec<StrongOrderRow> = study
                .levels
                .iter()
                .enumerate()
                .map(|(li, &level)| {
                    let xs: Vec<f64> = errors.iter().map(|e| e[si * nl + li]).collect();
                    let est = MeanEstimate::from_samples(&xs);
                    StrongOrderRow {
                        h: (0.5f64).powi(level as i32),
                        mean_error: est.mean,
                        se: est.se,
                    }
                })
                .collect();
            let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
            let es: Vec<f64> = rows.iter().map(|r| r.mean_error).collect();
            StrongOrderResult {
                spec,
                slope: loglog_slope(&hs, &es),
                rows,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::{ito_truncated, GaussianTable, NoiseIndexTuple, TruncationSpec};

    #[test]
    fn zero_diffusion_is_an_euler_ode_step() {
        let model = LinearSde::new(vec![vec![-1.0, 2.0], vec![0.5, 0.0]], vec![vec![vec![0.0; 2]; 2]], vec![1.0, 3.0]).unwrap();
        let noise = StepNoise {
            h: 0.1,
            dw: vec![0.7],
            iterated: vec![0.2],
        };
        for scheme in [Scheme::Euler, Scheme::Milstein] {
            let x = strong_step(&model, scheme, &[1.0, 3.0], 0.0, &noise, 0).unwrap();
            assert!((x[0] - (1.0 + 0.1 * 5.0)).abs() < 1e-15);
            assert!((x[1] - (3.0 + 0.1 * 0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn commutative_milstein_ignores_the_antisymmetric_part() {
        let model = LinearSde::commutative();
        assert!(model.commutator_norm() < 1e-15);
        let x = [1.3, -0.4];
        let mk = |a: f64| StepNoise {
            h: 0.01,
            dw: vec![0.1, -0.05],
            iterated: vec![0.0, -0.0025 + a, 0.0025 - a - 0.005, 0.0],
        };
        let base = strong_step(&model, Scheme::Milstein, &x, 0.0, &mk(0.0), 0).unwrap();
        let moved = strong_step(&model, Scheme::Milstein, &x, 0.0, &mk(0.37), 0).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(LinearSde::noncommutative().commutator_norm() > 0.1);
    }

    #[test]
    fn scalar_milstein_matches_closed_form() {
        let lambda = 0.8;
        let model = LinearSde::scalar(lambda, 2.0);
        for p in [0, 3, 20] {
            let exp = DoubleIntegralExpansion::new(p).unwrap();
            let z: Vec<f64> = (0..=p).map(|j| 0.3 - 0.1 * j as f64).collect();
            let h = 0.04;
            let noise = exp.step_noise(h, &[&z]);
            let dw = noise.dw[0];
            let x = strong_step(&model, Scheme::Milstein, &[2.0], 0.0, &noise, 0).unwrap();
            let expect = 2.0 * (1.0 + lambda * dw + 0.5 * lambda * lambda * (dw * dw - h));
            assert!((x[0] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn sparse_expansion_matches_the_engine() {
        let p = 12;
        let exp = DoubleIntegralExpansion::new(p).unwrap();
        let basis = BasisSystem::legendre(Interval::new(0.0, 0.25).unwrap());
        let c = coeff_tensor(2, &[p, p], &[WeightFn::ConstantOne, WeightFn::ConstantOne], &basis).unwrap();
        let z1: Vec<f64> = (0..=p).map(|j| ((j * 7 % 5) as f64 - 2.0) * 0.4).collect();
        let z2: Vec<f64> = (0..=p).map(|j| ((j * 3 % 4) as f64 - 1.5) * 0.6).collect();
        let time: Vec<f64> = (0..=p).map(|j| if j == 0 { 0.5 } else { 0.0 }).collect();
        let table = GaussianTable::from_rows(vec![time, z1.clone(), z2.clone()], None).unwrap();
        let noise = exp.step_noise(0.25, &[&z1, &z2]);
        let t = TruncationSpec::shared(2, p).unwrap();
        for (i1, i2) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let idx = NoiseIndexTuple::new(vec![i1, i2]).unwrap();
            let v = ito_truncated(&c, &table, &idx, &t).unwrap();
            assert!((v - noise.iterated[(i1 - 1) * 2 + (i2 - 1)]).abs() < 1e-14);
        }
    }

    #[test]
    fn tree_levels_are_consistent() {
        let tree = BrownianTree::sample(3, 2, 8, 5);
        // Increments add up across levels.
        for level in 0..5u32 {
            let c = (1usize << level) - 1;
            let parent = tree.increment(level, 1, c);
            let kids = tree.increment(level + 1, 1, 2 * c) + tree.increment(level + 1, 1, 2 * c + 1);
            assert!((parent - kids).abs() < 1e-13);
        }
        // Merge matrices preserve unit variance.
        let maps = RefinementMaps::new(8);
        let n = 9;
        for j in 0..n {
            let v: f64 = (0..n).map(|i| maps.left[j * n + i].powi(2) + maps.right[j * n + i].powi(2)).sum();
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn blow_up_reports_the_step() {
        let model = LinearSde::scalar(1e200, 1e200);
        let noise = StepNoise {
            h: 0.1,
            dw: vec![1e200],
            iterated: vec![0.0],
        };
        assert_eq!(
            strong_step(&model, Scheme::Euler, &[1e200], 0.0, &noise, 7),
            Err(Error::NonFinite { step: 7 })
        );
    }
}
