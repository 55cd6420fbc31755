//! Finite-p checks of the limits behind the Ito-Stratonovich conversion:
//! diagonal trace residuals, tail kernels, the Δ coefficient tables `a..h`,
//! their second moments and the k = 4 diagonal constants.
//!
//! Every tail `Σ_{j>p}` is rewritten through completeness of the basis as an
//! exact kernel minus a finite sum, with `Φ_j(x) = ∫_start^x φ_j` and
//! `Ψ_j(x) = ∫_x^end φ_j`:
//!
//! * `Σ_{j>p} Φ_j(x)² = (x - start) - Σ_{j<=p} Φ_j(x)²`
//! * `Σ_{j>p} Ψ_j(x)² = (end - x) - Σ_{j<=p} Ψ_j(x)²`
//! * `Σ_{j>p} (Φ_j(s) - Φ_j(u))² = (s - u) - Σ_{j<=p} (Φ_j(s) - Φ_j(u))²`
//! * `Σ_{j>p} Ψ_j(s)Ψ_j(s1) = (end - max(s, s1)) - Σ_{j<=p} Ψ_j(s)Ψ_j(s1)`

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::basis::{BasisKind, BasisSystem, Interval};
use crate::coeffs::{
    basis_on_grid, chain_plan, coeff_tensor, trace_sum, weight_product_integral, CoeffTensor, WeightFn,
};
use crate::error::{Error, Result};
use crate::quadrature::{GridPlan, NodalGrid, REFINE_TOL};
use crate::scalar::Real;

fn check_interior<T: Real>(iv: &Interval<T>, x: T) -> Result<()> {
    if !(x > iv.start && x < iv.end) {
        return Err(Error::Domain {
            value: x.to_f64_lossy(),
            domain: format!("open interval ({:?}, {:?})", iv.start, iv.end),
        });
    }
    Ok(())
}

fn antiderivatives<T: Real>(basis: &BasisSystem<T>, p: Option<usize>, x: T) -> Vec<T> {
    let start = basis.interval.start;
    match p {
        None => Vec::new(),
        Some(p) => (0..=p)
            .map(|j| basis.phi_antiderivative(j, x) - basis.phi_antiderivative(j, start))
            .collect(),
    }
}

/// `Σ_{j>p} Ψ_j(s) Ψ_j(s1)`; `p = None` subtracts nothing.
pub fn tail_kernel_fp<T: Real>(basis: &BasisSystem<T>, s: T, s1: T, p: Option<usize>) -> Result<T> {
    let iv = basis.interval;
    check_interior(&iv, s)?;
    check_interior(&iv, s1)?;
    if let Some(p) = p {
        basis.check_index(p)?;
    }
    let total = antiderivatives(basis, p, iv.end);
    let a = antiderivatives(basis, p, s);
    let b = antiderivatives(basis, p, s1);
    let mut out = iv.end - s.max(s1);
    for j in 0..total.len() {
        out = out - (total[j] - a[j]) * (total[j] - b[j]);
    }
    Ok(out)
}

/// `Σ_{j>p} Φ_j(s)²`; `p = None` subtracts nothing.
pub fn tail_kernel_head<T: Real>(basis: &BasisSystem<T>, s: T, p: Option<usize>) -> Result<T> {
    let iv = basis.interval;
    check_interior(&iv, s)?;
    if let Some(p) = p {
        basis.check_index(p)?;
    }
    let a = antiderivatives(basis, p, s);
    Ok(a.iter().fold(s - iv.start, |acc, &v| acc - v * v))
}

/// The eight Δ coefficient families. Each table is indexed `x[row][col]`
/// where row and column carry the basis indices paired with the later and
/// earlier noise slot respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeltaKind {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl DeltaKind {
    pub const ALL: [DeltaKind; 8] = [
        DeltaKind::A,
        DeltaKind::B,
        DeltaKind::C,
        DeltaKind::D,
        DeltaKind::E,
        DeltaKind::F,
        DeltaKind::G,
        DeltaKind::H,
    ];

    pub fn tag(self) -> char {
        match self {
            DeltaKind::A => 'a',
            DeltaKind::B => 'b',
            DeltaKind::C => 'c',
            DeltaKind::D => 'd',
            DeltaKind::E => 'e',
            DeltaKind::F => 'f',
            DeltaKind::G => 'g',
            DeltaKind::H => 'h',
        }
    }
}

impl fmt::Display for DeltaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

impl FromStr for DeltaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DeltaKind::ALL
            .iter()
            .copied()
            .find(|k| s.len() == 1 && s.starts_with(k.tag()))
            .ok_or_else(|| Error::Precondition(format!("unknown Δ coefficient kind {s:?}; expected one of a..h")))
    }
}

/// Components driving the row and column coordinates of `Σ x ζ ζ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexCase {
    /// Same nonzero component in both slots.
    EqualNonzero,
    /// Two different nonzero components.
    DistinctNonzero,
    /// The column slot is the time component.
    ColumnTime,
    /// The row slot is the time component.
    RowTime,
    BothTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable<T> {
    pub kind: DeltaKind,
    pub p: usize,
    pub interval: Interval<T>,
    /// `values[row * (p + 1) + col]`.
    pub values: Vec<T>,
}

impl<T: Real> DeltaTable<T> {
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * (self.p + 1) + col]
    }

    pub fn diagonal_sum(&self) -> T {
        (0..=self.p).map(|j| self.get(j, j)).sum()
    }

    /// Exact second moment of `Σ_{row,col} x ζ_row ζ_col` for the given case.
    /// The time coordinate vector is `√L e_0` for both bases.
    pub fn second_moment(&self, case: IndexCase) -> T {
        let n = self.p + 1;
        let len = self.interval.length();
        match case {
            IndexCase::EqualNonzero => {
                let diag = self.diagonal_sum();
                let mut off = T::zero();
                for j2 in 0..n {
                    for j1 in 0..j2 {
                        let s = self.get(j1, j2) + self.get(j2, j1);
                        off = off + s * s;
                    }
                }
                let sq: T = (0..n).map(|j| self.get(j, j) * self.get(j, j)).sum();
                diag * diag + off + T::lit(2.0) * sq
            }
            IndexCase::DistinctNonzero => self.values.iter().map(|&v| v * v).sum(),
            IndexCase::ColumnTime => len * (0..n).map(|r| self.get(r, 0) * self.get(r, 0)).sum::<T>(),
            IndexCase::RowTime => len * (0..n).map(|c| self.get(0, c) * self.get(0, c)).sum::<T>(),
            IndexCase::BothTime => len * len * self.get(0, 0) * self.get(0, 0),
        }
    }
}

/// Node values shared by all Δ kinds at one truncation order.
struct Workspace<'g, T> {
    grid: &'g NodalGrid<T>,
    n: usize,
    p: usize,
    /// `φ_j` at nodes, j-major.
    phi: Vec<T>,
    /// `Φ_j` at nodes, j-major.
    head: Vec<T>,
    /// `Ψ_j` at nodes, j-major.
    tail: Vec<T>,
    /// `Σ_{j<=p} Φ_j²`.
    head_sq: Vec<T>,
    /// `Σ_{j<=p} Ψ_j²`.
    tail_sq: Vec<T>,
    /// `x - start`.
    from_start: Vec<T>,
    /// `end - x`.
    to_end: Vec<T>,
}

impl<'g, T: Real> Workspace<'g, T> {
    fn new(grid: &'g NodalGrid<T>, basis: &BasisSystem<T>, p: usize) -> Self {
        let n = grid.len();
        let iv = basis.interval;
        let phi = basis_on_grid(basis, grid, p);
        let mut head = vec![T::zero(); (p + 1) * n];
        let mut tail = vec![T::zero(); (p + 1) * n];
        let start = iv.start;
        for j in 0..=p {
            let total = basis.phi_antiderivative(j, iv.end) - basis.phi_antiderivative(j, start);
            for (i, &x) in grid.nodes().iter().enumerate() {
                let h = basis.phi_antiderivative(j, x) - basis.phi_antiderivative(j, start);
                head[j * n + i] = h;
                tail[j * n + i] = total - h;
            }
        }
        let sum_sq = |v: &[T]| -> Vec<T> {
            (0..n)
                .map(|i| (0..=p).map(|j| v[j * n + i] * v[j * n + i]).sum())
                .collect()
        };
        let head_sq = sum_sq(&head);
        let tail_sq = sum_sq(&tail);
        Self {
            grid,
            n,
            p,
            phi,
            head,
            tail,
            head_sq,
            tail_sq,
            from_start: grid.nodes().iter().map(|&x| x - start).collect(),
            to_end: grid.nodes().iter().map(|&x| iv.end - x).collect(),
        }
    }

    fn row<'a>(&self, v: &'a [T], j: usize) -> &'a [T] {
        &v[j * self.n..(j + 1) * self.n]
    }

    fn times(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x * y).collect()
    }

    /// `table[row][col] = scale ∫ rowfn(row) · colfn(col)` for all pairs,
    /// where `colfn` yields a node vector per column index.
    fn assemble(&self, scale: T, row_basis: &[T], column: impl Fn(usize) -> Vec<T> + Sync) -> Vec<T> {
        let p = self.p;
        let cols: Vec<Vec<T>> = (0..=p).into_par_iter().map(&column).collect();
        let mut out = vec![T::zero(); (p + 1) * (p + 1)];
        for r in 0..=p {
            let rb = self.row(row_basis, r);
            for (c, cv) in cols.iter().enumerate() {
                out[r * (p + 1) + c] = scale * self.grid.dot(rb, cv);
            }
        }
        out
    }

    fn table(&self, kind: DeltaKind) -> Vec<T> {
        let half = T::lit(0.5);
        let g = self.grid;
        let tail_a: Vec<T> = self.from_start.iter().zip(&self.head_sq).map(|(&a, &b)| a - b).collect();
        let tail_b: Vec<T> = self.to_end.iter().zip(&self.tail_sq).map(|(&a, &b)| a - b).collect();
        match kind {
            // ½ ∫ φ_row(s) ∫_start^s φ_col(s1) TA(s1)
            DeltaKind::A => self.assemble(half, &self.phi, |c| g.cumulative(&Self::times(self.row(&self.phi, c), &tail_a))),
            // ½ ∫ φ_row TA Φ_col
            DeltaKind::B => self.assemble(half, &self.phi, |c| Self::times(&tail_a, self.row(&self.head, c))),
            // ½ ∫ φ_row(s) ∫_start^s φ_col(u) TC(u, s) du
            DeltaKind::C => self.assemble(half, &self.phi, |c| self.c_inner(c)),
            // ½ ∫ φ_col TB Ψ_row, stored with the row index first
            DeltaKind::D => transpose(
                self.p,
                &self.assemble(half, &self.phi, |r| Self::times(&tail_b, self.row(&self.tail, r))),
            ),
            // ½ ∫ φ_col(u) ∫_u^end φ_row(s) TC(u, s) ds
            DeltaKind::E => transpose(self.p, &self.assemble(half, &self.phi, |r| self.e_inner(r))),
            // ½ ∫ φ_row TB Φ_col
            DeltaKind::F => self.assemble(half, &self.phi, |c| Self::times(&tail_b, self.row(&self.head, c))),
            // ∫ φ_row(s) ∫_start^s φ_col(s1) F_p(s1, s)
            DeltaKind::G => self.assemble(T::one(), &self.phi, |c| self.g_inner(c)),
            // ∫ φ_col(u) ∫_u^end φ_row(s) F_p(u, s)
            DeltaKind::H => transpose(self.p, &self.assemble(T::one(), &self.phi, |r| self.h_inner(r))),
        }
    }

    fn c_inner(&self, c: usize) -> Vec<T> {
        let g = self.grid;
        let phi_c = self.row(&self.phi, c);
        let i0 = self.row(&self.head, c);
        let moment = g.cumulative(&Self::times(phi_c, &self.from_start));
        let q = g.cumulative(&Self::times(phi_c, &self.head_sq));
        let mut out: Vec<T> = (0..self.n)
            .map(|i| (self.from_start[i] - self.head_sq[i]) * i0[i] - moment[i] - q[i])
            .collect();
        let mut buf = vec![T::zero(); self.n];
        let mut cum = vec![T::zero(); self.n];
        for j in 0..=self.p {
            let hj = self.row(&self.head, j);
            for i in 0..self.n {
                buf[i] = phi_c[i] * hj[i];
            }
            g.cumulative_into(&buf, &mut cum);
            for i in 0..self.n {
                out[i] = out[i] + T::lit(2.0) * hj[i] * cum[i];
            }
        }
        out
    }

    fn e_inner(&self, r: usize) -> Vec<T> {
        let g = self.grid;
        let phi_r = self.row(&self.phi, r);
        let r0 = self.row(&self.tail, r);
        let moment = g.reverse_cumulative(&Self::times(phi_r, &self.to_end));
        let q = g.reverse_cumulative(&Self::times(phi_r, &self.tail_sq));
        let mut out: Vec<T> = (0..self.n)
            .map(|i| (self.to_end[i] - self.tail_sq[i]) * r0[i] - moment[i] - q[i])
            .collect();
        for j in 0..=self.p {
            let tj = self.row(&self.tail, j);
            let rc = g.reverse_cumulative(&Self::times(phi_r, tj));
            for i in 0..self.n {
                out[i] = out[i] + T::lit(2.0) * tj[i] * rc[i];
            }
        }
        out
    }

    fn g_inner(&self, c: usize) -> Vec<T> {
        let g = self.grid;
        let phi_c = self.row(&self.phi, c);
        let i0 = self.row(&self.head, c);
        let mut out: Vec<T> = (0..self.n).map(|i| self.to_end[i] * i0[i]).collect();
        let mut buf = vec![T::zero(); self.n];
        let mut cum = vec![T::zero(); self.n];
        for j in 0..=self.p {
            let tj = self.row(&self.tail, j);
            for i in 0..self.n {
                buf[i] = phi_c[i] * tj[i];
            }
            g.cumulative_into(&buf, &mut cum);
            for i in 0..self.n {
                out[i] = out[i] - tj[i] * cum[i];
            }
        }
        out
    }

    fn h_inner(&self, r: usize) -> Vec<T> {
        let g = self.grid;
        let phi_r = self.row(&self.phi, r);
        let mut out = g.reverse_cumulative(&Self::times(phi_r, &self.to_end));
        for j in 0..=self.p {
            let tj = self.row(&self.tail, j);
            let rc = g.reverse_cumulative(&Self::times(phi_r, tj));
            for i in 0..self.n {
                out[i] = out[i] - tj[i] * rc[i];
            }
        }
        out
    }
}

fn transpose<T: Real>(p: usize, v: &[T]) -> Vec<T> {
    let n = p + 1;
    let mut out = vec![T::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = v[r * n + c];
        }
    }
    out
}

fn delta_plan<T: Real>(basis: &BasisSystem<T>, p: usize) -> GridPlan {
    match basis.kind {
        // Running integrands reach degree 3p + 2 and the outer integrand 4p + 3.
        BasisKind::Legendre => GridPlan::Exact { nodes: 3 * p + 4 },
        // Up to four basis factors per integrand.
        BasisKind::Trigonometric => chain_plan(basis, &[p, p, p, p], &[Some(0); 4], 0),
    }
}

/// Several Δ tables at one truncation order, sharing the node precomputation.
pub fn delta_tables<T: Real>(kinds: &[DeltaKind], p: usize, basis: &BasisSystem<T>) -> Result<Vec<DeltaTable<T>>> {
    basis.check_index(p + 1)?;
    let size = (p + 1) * (p + 1);
    let flat = delta_plan(basis, p).run(basis.interval, REFINE_TOL, |grid| {
        let ws = Workspace::new(grid, basis, p);
        Ok(kinds.iter().flat_map(|&k| ws.table(k)).collect())
    })?;
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| DeltaTable {
            kind,
            p,
            interval: basis.interval,
            values: flat[i * size..(i + 1) * size].to_vec(),
        })
        .collect())
}

pub fn delta_table<T: Real>(kind: DeltaKind, p: usize, basis: &BasisSystem<T>) -> Result<DeltaTable<T>> {
    Ok(delta_tables(&[kind], p, basis)?.remove(0))
}

/// One entry `x[row][col]` of the kind's table at truncation order p.
pub fn delta_coeff<T: Real>(kind: DeltaKind, row: usize, col: usize, p: usize, basis: &BasisSystem<T>) -> Result<T> {
    if row > p || col > p {
        return Err(Error::Dimension(format!("entry ({row}, {col}) outside a table of order {p}")));
    }
    Ok(delta_table(kind, p, basis)?.get(row, col))
}

pub fn delta_second_moment<T: Real>(kind: DeltaKind, p: usize, case: IndexCase, basis: &BasisSystem<T>) -> Result<T> {
    Ok(delta_table(kind, p, basis)?.second_moment(case))
}

/// `(p, Σ_j x_jj)` for each requested order.
pub fn delta_sum_trend<T: Real>(kind: DeltaKind, orders: &[usize], basis: &BasisSystem<T>) -> Result<Vec<(usize, T)>> {
    if orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("truncation orders must be strictly ascending".into()));
    }
    orders
        .iter()
        .map(|&p| Ok((p, delta_table(kind, p, basis)?.diagonal_sum())))
        .collect()
}

/// Closed form of the Legendre `g_pp` entry: `L² / (8 (2p + 3)(2p + 1))`.
pub fn legendre_g_corner<T: Real>(p: usize, length: T) -> T {
    let p = T::from_usize_lossy(p);
    length * length / (T::lit(8.0) * (T::lit(2.0) * p + T::lit(3.0)) * (T::lit(2.0) * p + T::one()))
}

/// `|Σ_{j<=p} C_jj - ½ ∫ ψ_1 ψ_2|` for the k = 2 kernel.
pub fn trace_residual<T: Real>(
    p: usize,
    first: &WeightFn<T>,
    second: &WeightFn<T>,
    basis: &BasisSystem<T>,
) -> Result<T> {
    let trace = trace_sum(p, first, second, basis)?;
    let limit = weight_product_integral(first, second, basis.interval)? * T::lit(0.5);
    Ok((trace - limit).abs())
}

/// Diagonal sums of the k = 4 tensor with ψ ≡ 1, in storage order
/// `values[j1][j2][j3][j4]`:
/// `Σ C[a][a][b][b]`, `Σ C[a][b][a][b]`, `Σ C[a][b][b][a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BConstants<T> {
    pub adjacent: T,
    pub interleaved: T,
    pub nested: T,
}

impl<T: Real> BConstants<T> {
    pub fn from_tensor(c: &CoeffTensor<T>) -> Result<Self> {
        if c.k() != 4 || c.orders().iter().any(|&p| p != c.orders()[0]) {
            return Err(Error::Dimension("diagonal constants need a square k = 4 tensor".into()));
        }
        let n = c.orders()[0] + 1;
        let at = |a: usize, b: usize, x: usize, y: usize| c.values()[((a * n + b) * n + x) * n + y];
        let (mut adjacent, mut interleaved, mut nested) = (T::zero(), T::zero(), T::zero());
        for a in 0..n {
            for b in 0..n {
                adjacent = adjacent + at(a, a, b, b);
                interleaved = interleaved + at(a, b, a, b);
                nested = nested + at(a, b, b, a);
            }
        }
        Ok(Self {
            adjacent,
            interleaved,
            nested,
        })
    }

    /// Limits as p grows: `L²/8`, 0, 0.
    pub fn limits(length: T) -> Self {
        Self {
            adjacent: length * length / T::lit(8.0),
            interleaved: T::zero(),
            nested: T::zero(),
        }
    }
}

pub fn b_constants<T: Real>(p: usize, basis: &BasisSystem<T>) -> Result<BConstants<T>> {
    let c = coeff_tensor(4, &[p; 4], &vec![WeightFn::ConstantOne; 4], basis)?;
    BConstants::from_tensor(&c)
}

/// `(∫_a^b ψ φ_j)_{j<=p}`.
pub fn partial_projection<T: Real>(basis: &BasisSystem<T>, weight: &WeightFn<T>, p: usize, a: T, b: T) -> Result<Vec<T>> {
    let sub = Interval::new(a, b)?;
    if !(basis.interval.contains(a) && basis.interval.contains(b)) {
        return Err(Error::Domain {
            value: a.to_f64_lossy(),
            domain: format!("[{:?}, {:?}]", basis.interval.start, basis.interval.end),
        });
    }
    if weight.is_constant_one() {
        return (0..=p).map(|j| basis.phi_integral(j, a, b)).collect();
    }
    let plan = match (basis.kind, weight.polynomial_degree()) {
        (BasisKind::Legendre, Some(q)) => GridPlan::Exact { nodes: (p + q) / 2 + 1 },
        _ => GridPlan::oscillatory(basis.frequency(p).max(1)),
    };
    plan.run(sub, REFINE_TOL, |grid| {
        let start = basis.interval.start;
        let psi = grid.sample(|x| weight.eval(start, x));
        let mut buf = vec![T::zero(); p + 1];
        let mut acc = vec![T::zero(); p + 1];
        for (i, &x) in grid.nodes().iter().enumerate() {
            basis.phi_all(x, &mut buf);
            for j in 0..=p {
                acc[j] = acc[j] + grid.weights()[i] * psi[i] * buf[j];
            }
        }
        Ok(acc)
    })
}

/// `Σ_{j<=p} ψ_2(s) φ_j(s) ∫_start^s ψ_1 φ_j`, which tends to `½ ψ_1(s) ψ_2(s)`.
pub fn pointwise_head_sum<T: Real>(
    p: usize,
    first: &WeightFn<T>,
    second: &WeightFn<T>,
    basis: &BasisSystem<T>,
    s: T,
) -> Result<T> {
    let iv = basis.interval;
    check_interior(&iv, s)?;
    let proj = partial_projection(basis, first, p, iv.start, s)?;
    let mut phi = vec![T::zero(); p + 1];
    basis.phi_all(s, &mut phi);
    Ok(second.eval(iv.start, s) * phi.iter().zip(&proj).map(|(&a, &b)| a * b).sum::<T>())
}

/// `Σ_{j<=p} ψ_2(s) φ_j(s) ∫_s^end ψ_3 φ_j`, which tends to `½ ψ_2(s) ψ_3(s)`.
pub fn pointwise_tail_sum<T: Real>(
    p: usize,
    second: &WeightFn<T>,
    third: &WeightFn<T>,
    basis: &BasisSystem<T>,
    s: T,
) -> Result<T> {
    let iv = basis.interval;
    check_interior(&iv, s)?;
    let proj = partial_projection(basis, third, p, s, iv.end)?;
    let mut phi = vec![T::zero(); p + 1];
    basis.phi_all(s, &mut phi);
    Ok(second.eval(iv.start, s) * phi.iter().zip(&proj).map(|(&a, &b)| a * b).sum::<T>())
}

/// Chebyshev points inside `(start + ε, end - ε)` with `ε = 0.05 L`.
pub fn interior_points<T: Real>(interval: &Interval<T>, count: usize) -> Vec<T> {
    let len = interval.length();
    let eps = T::lit(0.05) * len;
    let lo = interval.start + eps;
    let half = (len - eps - eps) * T::lit(0.5);
    (0..count)
        .map(|i| {
            let theta = T::PI() * (T::from_usize_lossy(i) + T::lit(0.5)) / T::from_usize_lossy(count);
            lo + half * (T::one() - theta.cos())
        })
        .collect()
}
