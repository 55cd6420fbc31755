//! Fourier coefficients of the simplex kernel.
//!
//! For weights ψ_1..ψ_k the kernel is `K(t_1..t_k) = Π ψ_l(t_l)` on
//! `t_1 < ... < t_k` and zero elsewhere. Its coefficient against
//! `φ_{j_1}(t_1)...φ_{j_k}(t_k)` is evaluated as a chain of running integrals
//! `Φ_1 = ∫ψ_1φ_{j_1}`, `Φ_l = ∫ψ_lφ_{j_l}Φ_{l-1}`, `C = Φ_k(end)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::{BasisKind, BasisSystem, Interval};
use crate::error::{Error, Result};
use crate::quadrature::{GridPlan, NodalGrid, REFINE_TOL};
use crate::scalar::Real;

/// Default entry cap for dense tensors: 64^4 (p <= 63 at k = 4).
pub const DEFAULT_ENTRY_CAP: usize = 64 * 64 * 64 * 64;

pub type WeightCallable<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A weight ψ(τ) on the integration interval.
#[derive(Clone)]
pub enum WeightFn<T> {
    ConstantOne,
    /// ψ(τ) = (start - τ)^q.
    Monomial { q: u32 },
    /// A user function with its declared number of continuous derivatives.
    Custom {
        f: WeightCallable<T>,
        smoothness: u32,
        label: String,
    },
}

impl<T> fmt::Debug for WeightFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFn::ConstantOne => write!(f, "ConstantOne"),
            WeightFn::Monomial { q } => write!(f, "Monomial {{ q: {q} }}"),
            WeightFn::Custom {
                smoothness, label, ..
            } => write!(f, "Custom {{ label: {label:?}, smoothness: {smoothness} }}"),
        }
    }
}

impl<T: Real> WeightFn<T> {
    pub fn custom(label: impl Into<String>, smoothness: u32, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        WeightFn::Custom {
            f: Arc::new(f),
            smoothness,
            label: label.into(),
        }
    }

    pub fn eval(&self, start: T, tau: T) -> T {
        match self {
            WeightFn::ConstantOne => T::one(),
            WeightFn::Monomial { q } => (start - tau).powi(*q as i32),
            WeightFn::Custom { f, .. } => f(tau),
        }
    }

    /// Polynomial degree, if the weight is a polynomial.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match self {
            WeightFn::ConstantOne => Some(0),
            WeightFn::Monomial { q } => Some(*q as usize),
            WeightFn::Custom { .. } => None,
        }
    }

    /// Number of continuous derivatives; `None` means infinitely smooth.
    pub fn smoothness(&self) -> Option<u32> {
        match self {
            WeightFn::Custom { smoothness, .. } => Some(*smoothness),
            _ => None,
        }
    }

    pub fn is_smooth_to(&self, order: u32) -> bool {
        self.smoothness().is_none_or(|s| s >= order)
    }

    pub fn is_constant_one(&self) -> bool {
        matches!(self, WeightFn::ConstantOne)
    }
}

/// Grid plan for a chain of `orders.len()` running integrals whose level `l`
/// integrand carries `φ_j` (j <= orders[l]) times weight `l`, plus
/// `extra_degree` polynomial degree and `extra_cycles` oscillations.
pub(crate) fn chain_plan<T: Real>(
    basis: &BasisSystem<T>,
    orders: &[usize],
    weight_degrees: &[Option<usize>],
    extra_degree: usize,
) -> GridPlan {
    let polynomial = weight_degrees.iter().all(Option::is_some);
    match (basis.kind, polynomial) {
        (BasisKind::Legendre, true) => {
            let k = orders.len();
            let mut degree = extra_degree;
            let mut nodes = 1;
            for l in 0..k {
                degree += orders[l] + weight_degrees[l].unwrap_or(0);
                if l > 0 {
                    degree += 1;
                }
                if l + 1 < k {
                    nodes = nodes.max(degree + 1);
                } else {
                    nodes = nodes.max(degree / 2 + 1);
                }
            }
            GridPlan::Exact { nodes }
        }
        (BasisKind::Trigonometric, _) => {
            let cycles: usize = orders.iter().map(|&p| basis.frequency(p)).sum();
            GridPlan::oscillatory(cycles.max(1))
        }
        (BasisKind::Legendre, false) => {
            let degree: usize = orders.iter().sum::<usize>() + extra_degree;
            GridPlan::Refine {
                panels: (degree / 8).max(2),
                nodes_per_panel: crate::quadrature::PANEL_NODES,
            }
        }
    }
}

/// `out[j * n + i] = φ_j(x_i)` for j <= p.
pub(crate) fn basis_on_grid<T: Real>(basis: &BasisSystem<T>, grid: &NodalGrid<T>, p: usize) -> Vec<T> {
    basis_on_grid_points(basis, grid.nodes(), p)
}

/// `out[j * n + i] = φ_j(points_i)` for j <= p; points must lie in the interval.
pub fn basis_on_grid_points<T: Real>(basis: &BasisSystem<T>, points: &[T], p: usize) -> Vec<T> {
    let n = points.len();
    let mut out = vec![T::zero(); (p + 1) * n];
    let mut buf = vec![T::zero(); p + 1];
    for (i, &x) in points.iter().enumerate() {
        basis.phi_all(x, &mut buf);
        for j in 0..=p {
            out[j * n + i] = buf[j];
        }
    }
    out
}

/// `ψ(x_i) φ_j(x_i)` rows for j <= p.
fn weighted_rows<T: Real>(
    basis: &BasisSystem<T>,
    grid: &NodalGrid<T>,
    weight: &WeightFn<T>,
    p: usize,
) -> Vec<T> {
    let n = grid.len();
    let start = basis.interval.start;
    let psi = grid.sample(|x| weight.eval(start, x));
    let mut rows = basis_on_grid(basis, grid, p);
    for j in 0..=p {
        for i in 0..n {
            rows[j * n + i] = rows[j * n + i] * psi[i];
        }
    }
    rows
}

/// Dense coefficient tensor, stored row-major in `(j_1, ..., j_k)` with `j_k`
/// varying fastest.
#[derive(Debug, Clone)]
pub struct CoeffTensor<T> {
    orders: Vec<usize>,
    basis: BasisSystem<T>,
    weights: Vec<WeightFn<T>>,
    values: Vec<T>,
}

impl<T: Real> CoeffTensor<T> {
    pub fn k(&self) -> usize {
        self.orders.len()
    }

    /// Largest index per dimension.
    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn dims(&self) -> Vec<usize> {
        self.orders.iter().map(|p| p + 1).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let mut strides = vec![1; dims.len()];
        for l in (0..dims.len().saturating_sub(1)).rev() {
            strides[l] = strides[l + 1] * dims[l + 1];
        }
        strides
    }

    pub fn basis(&self) -> &BasisSystem<T> {
        &self.basis
    }

    pub fn weights(&self) -> &[WeightFn<T>] {
        &self.weights
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, index: &[usize]) -> T {
        assert_eq!(index.len(), self.k());
        let mut offset = 0;
        for (l, (&j, &s)) in index.iter().zip(&self.strides()).enumerate() {
            assert!(j <= self.orders[l], "index out of range");
            offset += j * s;
        }
        self.values[offset]
    }

    /// Σ C² over all stored entries.
    pub fn frobenius_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    /// Multi-indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let dims = self.dims();
        (0..self.values.len()).map(move |mut flat| {
            let mut idx = vec![0; dims.len()];
            for l in (0..dims.len()).rev() {
                idx[l] = flat % dims[l];
                flat /= dims[l];
            }
            idx
        })
    }
}

fn check_weights<T>(k: usize, weights: &[WeightFn<T>]) -> Result<()> {
    if !(1..=4).contains(&k) {
        return Err(Error::Dimension(format!("multiplicity {k} outside 1..=4")));
    }
    if weights.len() != k {
        return Err(Error::Dimension(format!(
            "{} weights given for multiplicity {k}",
            weights.len()
        )));
    }
    Ok(())
}

/// A single coefficient `∫ K Π φ_{j_l}` with `index = (j_1, ..., j_k)`.
pub fn fourier_coeff<T: Real>(
    k: usize,
    index: &[usize],
    weights: &[WeightFn<T>],
    basis: &BasisSystem<T>,
) -> Result<T> {
    check_weights(k, weights)?;
    if index.len() != k {
        return Err(Error::Dimension(format!("index of length {} for multiplicity {k}", index.len())));
    }
    for &j in index {
        basis.check_index(j)?;
    }
    let degrees: Vec<_> = weights.iter().map(WeightFn::polynomial_degree).collect();
    let plan = chain_plan(basis, index, &degrees, 0);
    let out = plan.run(basis.interval, REFINE_TOL, |grid| {
        let start = basis.interval.start;
        let mut prev = vec![T::one(); grid.len()];
        let mut value = T::zero();
        for (l, (&j, w)) in index.iter().zip(weights).enumerate() {
            let f: Vec<T> = grid
                .nodes()
                .iter()
                .zip(&prev)
                .map(|(&x, &pv)| w.eval(start, x) * basis.phi_unchecked(j, x) * pv)
                .collect();
            if l + 1 == k {
                value = grid.integrate(&f);
            } else {
                prev = grid.cumulative(&f);
            }
        }
        Ok(vec![value])
    })?;
    Ok(out[0])
}

/// Dense tensor of coefficients for `j_l <= orders[l]`.
pub fn coeff_tensor<T: Real>(
    k: usize,
    orders: &[usize],
    weights: &[WeightFn<T>],
    basis: &BasisSystem<T>,
) -> Result<CoeffTensor<T>> {
    coeff_tensor_capped(k, orders, weights, basis, DEFAULT_ENTRY_CAP)
}

pub fn coeff_tensor_capped<T: Real>(
    k: usize,
    orders: &[usize],
    weights: &[WeightFn<T>],
    basis: &BasisSystem<T>,
    entry_cap: usize,
) -> Result<CoeffTensor<T>> {
    check_weights(k, weights)?;
    if orders.len() != k {
        return Err(Error::Dimension(format!("{} orders for multiplicity {k}", orders.len())));
    }
    for &p in orders {
        basis.check_index(p)?;
    }
    let entries = orders
        .iter()
        .try_fold(1usize, |acc, &p| acc.checked_mul(p + 1))
        .unwrap_or(usize::MAX);
    if entries > entry_cap {
        return Err(Error::TooLarge {
            entries,
            cap: entry_cap,
        });
    }
    let degrees: Vec<_> = weights.iter().map(WeightFn::polynomial_degree).collect();
    let plan = chain_plan(basis, orders, &degrees, 0);
    let values = plan.run(basis.interval, REFINE_TOL, |grid| {
        Ok(tensor_on_grid(grid, orders, weights, basis))
    })?;
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: pos });
    }
    Ok(CoeffTensor {
        orders: orders.to_vec(),
        basis: *basis,
        weights: weights.to_vec(),
        values,
    })
}

fn tensor_on_grid<T: Real>(
    grid: &NodalGrid<T>,
    orders: &[usize],
    weights: &[WeightFn<T>],
    basis: &BasisSystem<T>,
) -> Vec<T> {
    let k = orders.len();
    let n = grid.len();
    let rows: Vec<Vec<T>> = orders
        .iter()
        .zip(weights)
        .map(|(&p, w)| weighted_rows(basis, grid, w, p))
        .collect();
    let dims: Vec<usize> = orders.iter().map(|p| p + 1).collect();
    let total: usize = dims.iter().product();
    let mut values = vec![T::zero(); total];
    if k == 1 {
        for (j, v) in values.iter_mut().enumerate() {
            *v = grid.integrate(&rows[0][j * n..(j + 1) * n]);
        }
        return values;
    }
    let chunk = total / dims[0];
    values.par_chunks_mut(chunk).enumerate().for_each(|(j1, out)| {
        let first = grid.cumulative(&rows[0][j1 * n..(j1 + 1) * n]);
        chain_level(grid, &rows, &dims, 1, &first, out);
    });
    values
}

fn chain_level<T: Real>(
    grid: &NodalGrid<T>,
    rows: &[Vec<T>],
    dims: &[usize],
    level: usize,
    prev: &[T],
    out: &mut [T],
) {
    let n = grid.len();
    let row = &rows[level];
    if level + 1 == dims.len() {
        let wp: Vec<T> = prev.iter().zip(grid.weights()).map(|(&a, &b)| a * b).collect();
        for (j, v) in out.iter_mut().enumerate() {
            let r = &row[j * n..(j + 1) * n];
            let mut s = T::zero();
            for i in 0..n {
                s = s + r[i] * wp[i];
            }
            *v = s;
        }
        return;
    }
    let sub = out.len() / dims[level];
    let mut integrand = vec![T::zero(); n];
    let mut cur = vec![T::zero(); n];
    for j in 0..dims[level] {
        let r = &row[j * n..(j + 1) * n];
        for i in 0..n {
            integrand[i] = r[i] * prev[i];
        }
        grid.cumulative_into(&integrand, &mut cur);
        chain_level(grid, rows, dims, level + 1, &cur, &mut out[j * sub..(j + 1) * sub]);
    }
}

/// `∫ K² = ∫_{simplex} Π ψ_l(t_l)² dt`.
pub fn kernel_norm_sq<T: Real>(weights: &[WeightFn<T>], interval: Interval<T>) -> Result<T> {
    check_weights(weights.len(), weights)?;
    let k = weights.len();
    let all_poly = weights.iter().all(|w| w.polynomial_degree().is_some());
    let plan = if all_poly {
        let degree: usize = weights.iter().map(|w| 2 * w.polynomial_degree().unwrap_or(0)).sum::<usize>() + k;
        GridPlan::Exact { nodes: degree + 1 }
    } else {
        GridPlan::Refine {
            panels: 2,
            nodes_per_panel: crate::quadrature::PANEL_NODES,
        }
    };
    let out = plan.run(interval, REFINE_TOL, |grid| {
        let start = interval.start;
        let mut prev = vec![T::one(); grid.len()];
        let mut value = T::zero();
        for (l, w) in weights.iter().enumerate() {
            let f: Vec<T> = grid
                .nodes()
                .iter()
                .zip(&prev)
                .map(|(&x, &pv)| {
                    let v = w.eval(start, x);
                    v * v * pv
                })
                .collect();
            if l + 1 == k {
                value = grid.integrate(&f);
            } else {
                prev = grid.cumulative(&f);
            }
        }
        Ok(vec![value])
    })?;
    Ok(out[0])
}

/// Diagonal `C_{jj}` of the k = 2 tensor for j <= p.
pub fn diagonal_k2<T: Real>(
    p: usize,
    first: &WeightFn<T>,
    second: &WeightFn<T>,
    basis: &BasisSystem<T>,
) -> Result<Vec<T>> {
    basis.check_index(p)?;
    let degrees = [first.polynomial_degree(), second.polynomial_degree()];
    let plan = chain_plan(basis, &[p, p], &degrees, 0);
    plan.run(basis.interval, REFINE_TOL, |grid| {
        let n = grid.len();
        let a = weighted_rows(basis, grid, first, p);
        let b = weighted_rows(basis, grid, second, p);
        Ok((0..=p)
            .into_par_iter()
            .map(|j| {
                let cum = grid.cumulative(&a[j * n..(j + 1) * n]);
                grid.dot(&b[j * n..(j + 1) * n], &cum)
            })
            .collect())
    })
}

/// `Σ_{j<=p} C_{jj}` for the k = 2 kernel with weights (ψ_1, ψ_2).
pub fn trace_sum<T: Real>(
    p: usize,
    first: &WeightFn<T>,
    second: &WeightFn<T>,
    basis: &BasisSystem<T>,
) -> Result<T> {
    let diag = diagonal_k2(p, first, second, basis)?;
    Ok(diag.into_iter().sum())
}

/// `∫ ψ_1 ψ_2` over the interval.
pub fn weight_product_integral<T: Real>(
    first: &WeightFn<T>,
    second: &WeightFn<T>,
    interval: Interval<T>,
) -> Result<T> {
    let plan = match (first.polynomial_degree(), second.polynomial_degree()) {
        (Some(a), Some(b)) => GridPlan::Exact { nodes: (a + b) / 2 + 1 },
        _ => GridPlan::Refine {
            panels: 2,
            nodes_per_panel: crate::quadrature::PANEL_NODES,
        },
    };
    let out = plan.run(interval, REFINE_TOL, |grid| {
        let start = interval.start;
        Ok(vec![grid.integrate(&grid.sample(|x| first.eval(start, x) * second.eval(start, x)))])
    })?;
    Ok(out[0])
}
