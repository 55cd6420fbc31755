//! Composite Gauss-Legendre grids with exact-on-polynomials running integrals.
//!
//! A grid stores `panels * nodes` points. On each panel the running integral
//! of a sampled function is obtained from its degree `nodes - 1` interpolant,
//! so for polynomial data of low enough degree both [`NodalGrid::integrate`]
//! and [`NodalGrid::cumulative`] are exact up to rounding.

use std::sync::Arc;

use crate::basis::{legendre_unchecked, Interval};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton.
        let k = (i + 1) as f64;
        let nf = n as f64;
        let mut z = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos()
            * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let p = legendre_unchecked(n, x);
    let q = legendre_unchecked(n - 1, x);
    (p, n as f64 * (x * p - q) / (x * x - 1.0))
}

/// Local running-integral matrix: `(Q f)_i = ∫_{-1}^{x_i} interp(f)`.
fn integration_matrix(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len();
    // P_m at every node, m = 0..=n.
    let p: Vec<Vec<f64>> = x
        .iter()
        .map(|&xi| (0..=n).map(|m| legendre_unchecked(m, xi)).collect())
        .collect();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        // ∫_{-1}^{x_i} P_m for m < n.
        let mut antider = vec![0.0; n];
        antider[0] = x[i] + 1.0;
        for m in 1..n {
            antider[m] = (p[i][m + 1] - p[i][m - 1]) / (2 * m + 1) as f64;
        }
        for k in 0..n {
            let mut s = 0.0;
            for m in 0..n {
                s += (2 * m + 1) as f64 * 0.5 * p[k][m] * antider[m];
            }
            q[i * n + k] = w[k] * s;
        }
    }
    q
}

#[derive(Debug, Clone)]
pub struct NodalGrid<T> {
    interval: Interval<T>,
    panels: usize,
    nodes_per_panel: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    local: Arc<Vec<T>>,
    half_width: T,
}

impl<T: Real> NodalGrid<T> {
    pub fn new(interval: Interval<T>, panels: usize, nodes_per_panel: usize) -> Self {
        assert!(panels >= 1 && nodes_per_panel >= 1);
        let (x, w) = gauss_legendre(nodes_per_panel);
        let local = integration_matrix(&x, &w).into_iter().map(T::lit).collect();
        let a = interval.start.to_f64_lossy();
        let width = interval.length().to_f64_lossy() / panels as f64;
        let half = 0.5 * width;
        let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
        let mut weights = Vec::with_capacity(panels * nodes_per_panel);
        for q in 0..panels {
            let mid = a + width * (q as f64 + 0.5);
            for k in 0..nodes_per_panel {
                nodes.push(T::lit(mid + half * x[k]));
                weights.push(T::lit(half * w[k]));
            }
        }
        Self {
            interval,
            panels,
            nodes_per_panel,
            nodes,
            weights,
            local: Arc::new(local),
            half_width: T::lit(half),
        }
    }

    pub fn interval(&self) -> Interval<T> {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate(&self, f: &[T]) -> T {
        debug_assert_eq!(f.len(), self.len());
        f.iter().zip(&self.weights).map(|(&a, &b)| a * b).sum()
    }

    /// Weighted inner product ∫ f g.
    pub fn dot(&self, f: &[T], g: &[T]) -> T {
        debug_assert_eq!(f.len(), self.len());
        let mut s = T::zero();
        for i in 0..f.len() {
            s = s + self.weights[i] * f[i] * g[i];
        }
        s
    }

    /// `out_i = ∫_start^{x_i} f`.
    pub fn cumulative_into(&self, f: &[T], out: &mut [T]) {
        debug_assert_eq!(f.len(), self.len());
        let n = self.nodes_per_panel;
        let mut offset = T::zero();
        for q in 0..self.panels {
            let fp = &f[q * n..(q + 1) * n];
            let op = &mut out[q * n..(q + 1) * n];
            for i in 0..n {
                let row = &self.local[i * n..(i + 1) * n];
                let mut s = T::zero();
                for k in 0..n {
                    s = s + row[k] * fp[k];
                }
                op[i] = offset + self.half_width * s;
            }
            let mut total = T::zero();
            for k in 0..n {
                total = total + self.weights[q * n + k] * fp[k];
            }
            offset = offset + total;
        }
    }

    pub fn cumulative(&self, f: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); f.len()];
        self.cumulative_into(f, &mut out);
        out
    }

    /// `out_i = ∫_{x_i}^end f`.
    pub fn reverse_cumulative(&self, f: &[T]) -> Vec<T> {
        let total = self.integrate(f);
        let mut out = self.cumulative(f);
        for v in out.iter_mut() {
            *v = total - *v;
        }
        out
    }

    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

/// How a computation chooses its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPlan {
    /// One panel with enough nodes for exactness on polynomial data.
    Exact { nodes: usize },
    /// Composite panels, doubled until successive results agree.
    Refine {
        panels: usize,
        nodes_per_panel: usize,
    },
}

/// Absolute tolerance between successive refinement levels.
pub const REFINE_TOL: f64 = 1e-13;
/// Refinement gives up once the panel count would exceed this.
pub const MAX_PANELS: usize = 1 << 14;
/// Nodes per panel used for non-polynomial integrands.
pub const PANEL_NODES: usize = 24;

impl GridPlan {
    /// Plan for integrands oscillating at most `cycles` times over the interval.
    pub fn oscillatory(cycles: usize) -> Self {
        GridPlan::Refine {
            panels: (2 * cycles).max(2),
            nodes_per_panel: PANEL_NODES,
        }
    }

    /// Run `compute` on the planned grid(s); for refinement plans, double the
    /// panel count until the largest entrywise change is at most `tol`.
    pub fn run<T: Real>(
        self,
        interval: Interval<T>,
        tol: f64,
        compute: impl Fn(&NodalGrid<T>) -> Result<Vec<T>>,
    ) -> Result<Vec<T>> {
        match self {
            GridPlan::Exact { nodes } => compute(&NodalGrid::new(interval, 1, nodes.max(1))),
            GridPlan::Refine {
                panels,
                nodes_per_panel,
            } => {
                let mut panels = panels.max(1);
                let mut prev = compute(&NodalGrid::new(interval, panels, nodes_per_panel))?;
                loop {
                    let next_panels = panels * 2;
                    if next_panels > MAX_PANELS {
                        return Err(Error::Quadrature {
                            tol,
                            achieved: f64::NAN,
                            panels,
                        });
                    }
                    let next = compute(&NodalGrid::new(interval, next_panels, nodes_per_panel))?;
                    let change = prev
                        .iter()
                        .zip(&next)
                        .map(|(a, b)| (*a - *b).abs().to_f64_lossy())
                        .fold(0.0, f64::max);
                    // Float precision sets a floor on achievable agreement.
                    let scale = next
                        .iter()
                        .map(|v| v.abs().to_f64_lossy())
                        .fold(1.0, f64::max);
                    let floor = 64.0 * T::epsilon().to_f64_lossy() * scale;
                    if change <= tol.max(floor) {
                        return Ok(next);
                    }
                    if next_panels * 2 > MAX_PANELS {
                        return Err(Error::Quadrature {
                            tol,
                            achieved: change,
                            panels: next_panels,
                        });
                    }
                    prev = next;
                    panels = next_panels;
                }
            }
        }
    }
}
