//! Truncated Ito and Stratonovich expansions of iterated integrals.
//!
//! With Gaussian coordinates ζ_j^{(i)} the Stratonovich approximation is the
//! plain contraction `Σ C_{j_1..j_k} Π ζ_{j_l}^{(i_l)}`. The Ito version
//! subtracts, for every pair of slots `a < b` driven by the same nonzero
//! component, the contraction with `j_a = j_b` summed out; at k = 4 the
//! three double pairings are added back.

use crate::basis::BasisSystem;
use crate::coeffs::{coeff_tensor, kernel_norm_sq, CoeffTensor, WeightFn};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::scalar::Real;

/// Noise components `(i_1, ..., i_k)`; 0 denotes the time component.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NoiseIndexTuple(Vec<usize>);

impl NoiseIndexTuple {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if !(1..=4).contains(&indices.len()) {
            return Err(Error::Dimension(format!(
                "noise index tuple of length {} outside 1..=4",
                indices.len()
            )));
        }
        Ok(Self(indices))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn max_component(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Slots `a < b` with `i_a = i_b != 0`.
    pub fn matched_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for a in 0..self.0.len() {
            for b in a + 1..self.0.len() {
                if self.0[a] == self.0[b] && self.0[a] != 0 {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    pub fn pair_matches(&self, a: usize, b: usize) -> bool {
        self.0[a] == self.0[b] && self.0[a] != 0
    }
}

/// Truncation orders per dimension; multiplicities 3 and 4 share one order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationSpec {
    orders: Vec<usize>,
}

impl TruncationSpec {
    pub fn new(orders: Vec<usize>) -> Result<Self> {
        let k = orders.len();
        if !(1..=4).contains(&k) {
            return Err(Error::Dimension(format!("truncation for multiplicity {k}")));
        }
        if k >= 3 && orders.iter().any(|&p| p != orders[0]) {
            return Err(Error::Precondition(format!(
                "multiplicity {k} expansions converge only along a single shared truncation order; got {orders:?}"
            )));
        }
        Ok(Self { orders })
    }

    pub fn shared(k: usize, p: usize) -> Result<Self> {
        Self::new(vec![p; k])
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn k(&self) -> usize {
        self.orders.len()
    }

    pub fn max_order(&self) -> usize {
        self.orders.iter().copied().max().unwrap_or(0)
    }
}

/// Coordinates ζ_j^{(i)} for components i = 0..=m and j = 0..=p.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTable<T> {
    seed: Option<u64>,
    rows: Vec<Vec<T>>,
}

impl<T: Real> GaussianTable<T> {
    /// Table from explicit rows; row 0 must be the deterministic time row.
    pub fn from_rows(rows: Vec<Vec<T>>, seed: Option<u64>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Dimension("a table needs row 0 and at least one noise row".into()));
        }
        let width = rows[0].len();
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("table rows must share a nonzero length".into()));
        }
        Ok(Self { seed, rows })
    }

    pub fn m(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn p(&self) -> usize {
        self.rows[0].len() - 1
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.rows[i]
    }
}

/// Row 0 `(∫ φ_j)_{j<=p}`.
pub fn time_row<T: Real>(basis: &BasisSystem<T>, p: usize) -> Result<Vec<T>> {
    let iv = basis.interval;
    (0..=p).map(|j| basis.phi_integral(j, iv.start, iv.end)).collect()
}

/// Sample a table: row 0 is deterministic, entry (i, j) of the other rows is
/// draw `j` of stream `i` keyed by `seed`.
pub fn sample_table<T: Real>(seed: u64, m: usize, p: usize, basis: &BasisSystem<T>) -> Result<GaussianTable<T>> {
    if m == 0 {
        return Err(Error::Dimension("at least one noise component is required".into()));
    }
    basis.check_index(p)?;
    let mut rows = Vec::with_capacity(m + 1);
    rows.push(time_row(basis, p)?);
    let mut buf = vec![0.0; p + 1];
    for i in 1..=m {
        rng::fill_normals(seed, rng::stream_id(domain::TABLE, i as u64), 0, &mut buf);
        rows.push(buf.iter().map(|&x| T::lit(x)).collect());
    }
    GaussianTable::from_rows(rows, Some(seed))
}

#[derive(Clone, Copy)]
enum Slot<'a, T> {
    Vector(&'a [T]),
    PairOpen(usize),
    PairClose(usize),
}

struct Contraction<'a, T> {
    values: &'a [T],
    strides: &'a [usize],
    dims: &'a [usize],
    slots: Vec<Slot<'a, T>>,
    pair_range: [usize; 2],
}

impl<T: Real> Contraction<'_, T> {
    fn run(&self) -> T {
        let mut bound = [0usize; 2];
        self.level(0, 0, &mut bound)
    }

    fn level(&self, l: usize, offset: usize, bound: &mut [usize; 2]) -> T {
        let k = self.slots.len();
        if l == k {
            return self.values[offset];
        }
        let stride = self.strides[l];
        match self.slots[l] {
            Slot::Vector(v) => {
                let d = self.dims[l];
                if l + 1 == k {
                    let row = &self.values[offset..offset + d];
                    let mut s = T::zero();
                    for j in 0..d {
                        s = s + row[j] * v[j];
                    }
                    s
                } else {
                    let mut s = T::zero();
                    for j in 0..d {
                        s = s + v[j] * self.level(l + 1, offset + j * stride, bound);
                    }
                    s
                }
            }
            Slot::PairOpen(id) => {
                let mut s = T::zero();
                for j in 0..self.pair_range[id] {
                    bound[id] = j;
                    s = s + self.level(l + 1, offset + j * stride, bound);
                }
                s
            }
            Slot::PairClose(id) => self.level(l + 1, offset + bound[id] * stride, bound),
        }
    }
}

/// Contract `values` (strided view with extents `dims`) with one vector per
/// slot, except that each pair in `pairs` has its two indices set equal and
/// summed.
fn contract<T: Real>(
    values: &[T],
    strides: &[usize],
    dims: &[usize],
    vectors: &[&[T]],
    pairs: &[(usize, usize)],
) -> T {
    let mut slots: Vec<Slot<T>> = vectors.iter().map(|v| Slot::Vector(v)).collect();
    let mut pair_range = [0usize; 2];
    for (id, &(a, b)) in pairs.iter().enumerate() {
        slots[a] = Slot::PairOpen(id);
        slots[b] = Slot::PairClose(id);
        pair_range[id] = dims[a].min(dims[b]);
    }
    Contraction {
        values,
        strides,
        dims,
        slots,
        pair_range,
    }
    .run()
}

/// All sets of disjoint pairs drawn from `pairs`, including the empty set.
fn matchings(pairs: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    fn grow(
        pairs: &[(usize, usize)],
        from: usize,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        out.push(current.clone());
        for i in from..pairs.len() {
            let (a, b) = pairs[i];
            if current.iter().all(|&(c, d)| a != c && a != d && b != c && b != d) {
                current.push((a, b));
                grow(pairs, i + 1, current, out);
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(pairs, 0, &mut Vec::new(), &mut out);
    out
}

fn check_inputs<T: Real>(
    c: &CoeffTensor<T>,
    z: &GaussianTable<T>,
    idx: &NoiseIndexTuple,
    trunc: &TruncationSpec,
) -> Result<()> {
    let k = c.k();
    if idx.k() != k || trunc.k() != k {
        return Err(Error::Dimension(format!(
            "tensor multiplicity {k}, index tuple length {}, truncation length {}",
            idx.k(),
            trunc.k()
        )));
    }
    for (l, (&p, &cap)) in trunc.orders().iter().zip(c.orders()).enumerate() {
        if p > cap {
            return Err(Error::Dimension(format!(
                "truncation order {p} in slot {} exceeds tensor order {cap}",
                l + 1
            )));
        }
    }
    if trunc.max_order() > z.p() {
        return Err(Error::Dimension(format!(
            "truncation order {} exceeds table order {}",
            trunc.max_order(),
            z.p()
        )));
    }
    if idx.max_component() > z.m() {
        return Err(Error::Dimension(format!(
            "noise component {} exceeds table components {}",
            idx.max_component(),
            z.m()
        )));
    }
    Ok(())
}

fn slot_vectors<'a, T: Real>(
    z: &'a GaussianTable<T>,
    idx: &NoiseIndexTuple,
    trunc: &TruncationSpec,
) -> Vec<&'a [T]> {
    idx.as_slice()
        .iter()
        .zip(trunc.orders())
        .map(|(&i, &p)| &z.row(i)[..=p])
        .collect()
}

/// Truncated Ito expansion.
pub fn ito_truncated<T: Real>(
    c: &CoeffTensor<T>,
    z: &GaussianTable<T>,
    idx: &NoiseIndexTuple,
    trunc: &TruncationSpec,
) -> Result<T> {
    check_inputs(c, z, idx, trunc)?;
    let vectors = slot_vectors(z, idx, trunc);
    let dims: Vec<usize> = trunc.orders().iter().map(|p| p + 1).collect();
    let strides = c.strides();
    let mut total = T::zero();
    for m in matchings(&idx.matched_pairs()) {
        let term = contract(c.values(), &strides, &dims, &vectors, &m);
        total = if m.len() % 2 == 0 { total + term } else { total - term };
    }
    Ok(total)
}

/// Truncated Stratonovich expansion: the plain multiple sum.
pub fn strat_truncated<T: Real>(
    c: &CoeffTensor<T>,
    z: &GaussianTable<T>,
    idx: &NoiseIndexTuple,
    trunc: &TruncationSpec,
) -> Result<T> {
    check_inputs(c, z, idx, trunc)?;
    let vectors = slot_vectors(z, idx, trunc);
    let dims: Vec<usize> = trunc.orders().iter().map(|p| p + 1).collect();
    Ok(contract(c.values(), &c.strides(), &dims, &vectors, &[]))
}

/// One partial trace: slots `pair` summed on the diagonal, the `rest` slots
/// left free and stored densely.
#[derive(Debug, Clone)]
pub struct PairTrace<T> {
    pub pair: (usize, usize),
    pub rest: Vec<usize>,
    pub rest_dims: Vec<usize>,
    pub values: Vec<T>,
}

/// Full diagonal sum over a pairing of all four slots.
#[derive(Debug, Clone)]
pub struct DoubleTrace<T> {
    pub pairs: [(usize, usize); 2],
    pub value: T,
}

/// Partial traces of a coefficient tensor that make up the finite-truncation
/// difference between the Stratonovich and Ito expansions.
#[derive(Debug, Clone)]
pub struct CorrectionFamily<T> {
    k: usize,
    orders: Vec<usize>,
    pair_traces: Vec<PairTrace<T>>,
    double_traces: Vec<DoubleTrace<T>>,
}

impl<T: Real> CorrectionFamily<T> {
    pub fn from_tensor(c: &CoeffTensor<T>, trunc: &TruncationSpec) -> Result<Self> {
        let k = c.k();
        if !(2..=4).contains(&k) || trunc.k() != k {
            return Err(Error::Dimension(format!("correction family for multiplicity {k}")));
        }
        for (&p, &cap) in trunc.orders().iter().zip(c.orders()) {
            if p > cap {
                return Err(Error::Dimension(format!("truncation order {p} exceeds tensor order {cap}")));
            }
        }
        let dims: Vec<usize> = trunc.orders().iter().map(|p| p + 1).collect();
        let strides = c.strides();
        let mut pair_traces = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                let rest: Vec<usize> = (0..k).filter(|&l| l != a && l != b).collect();
                let rest_dims: Vec<usize> = rest.iter().map(|&l| dims[l]).collect();
                let size: usize = rest_dims.iter().product();
                let range = dims[a].min(dims[b]);
                let mut values = vec![T::zero(); size];
                for (flat, v) in values.iter_mut().enumerate() {
                    let mut base = 0;
                    let mut rem = flat;
                    for (r, &l) in rest.iter().enumerate().rev() {
                        base += (rem % rest_dims[r]) * strides[l];
                        rem /= rest_dims[r];
                    }
                    let mut s = T::zero();
                    for j in 0..range {
                        s = s + c.values()[base + j * (strides[a] + strides[b])];
                    }
                    *v = s;
                }
                pair_traces.push(PairTrace {
                    pair: (a, b),
                    rest,
                    rest_dims,
                    values,
                });
            }
        }
        let mut double_traces = Vec::new();
        if k == 4 {
            for pairs in [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]] {
                let r0 = dims[pairs[0].0].min(dims[pairs[0].1]);
                let r1 = dims[pairs[1].0].min(dims[pairs[1].1]);
                let mut s = T::zero();
                for x in 0..r0 {
                    for y in 0..r1 {
                        let mut idx = [0usize; 4];
                        idx[pairs[0].0] = x;
                        idx[pairs[0].1] = x;
                        idx[pairs[1].0] = y;
                        idx[pairs[1].1] = y;
                        let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                        s = s + c.values()[off];
                    }
                }
                double_traces.push(DoubleTrace { pairs, value: s });
            }
        }
        Ok(Self {
            k,
            orders: trunc.orders().to_vec(),
            pair_traces,
            double_traces,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pair_traces(&self) -> &[PairTrace<T>] {
        &self.pair_traces
    }

    pub fn double_traces(&self) -> &[DoubleTrace<T>] {
        &self.double_traces
    }
}

/// `strat_truncated - ito_truncated` assembled from the partial traces.
pub fn strat_correction<T: Real>(
    family: &CorrectionFamily<T>,
    z: &GaussianTable<T>,
    idx: &NoiseIndexTuple,
) -> Result<T> {
    if idx.k() != family.k {
        return Err(Error::Dimension(format!(
            "index tuple of length {} for a multiplicity {} family",
            idx.k(),
            family.k
        )));
    }
    if idx.max_component() > z.m() || family.orders.iter().any(|&p| p > z.p()) {
        return Err(Error::Dimension("table too small for the correction family".into()));
    }
    let i = idx.as_slice();
    let mut total = T::zero();
    for term in &family.pair_traces {
        if !idx.pair_matches(term.pair.0, term.pair.1) {
            continue;
        }
        let vectors: Vec<&[T]> = term
            .rest
            .iter()
            .map(|&l| &z.row(i[l])[..=family.orders[l]])
            .collect();
        let value = if vectors.is_empty() {
            term.values[0]
        } else {
            let mut strides = vec![1; term.rest_dims.len()];
            for r in (0..strides.len().saturating_sub(1)).rev() {
                strides[r] = strides[r + 1] * term.rest_dims[r + 1];
            }
            contract(&term.values, &strides, &term.rest_dims, &vectors, &[])
        };
        total = total + value;
    }
    for term in &family.double_traces {
        if term.pairs.iter().all(|&(a, b)| idx.pair_matches(a, b)) {
            total = total - term.value;
        }
    }
    Ok(total)
}

/// Closed-form iterated Ito integrals with one common weight and one Wiener
/// component, through Hermite polynomials of the first-order projection.
#[derive(Debug, Clone)]
pub struct HermiteReference<T> {
    projection: Vec<T>,
    norm_sq: T,
}

impl<T: Real> HermiteReference<T> {
    pub fn new(weight: &WeightFn<T>, basis: &BasisSystem<T>, p: usize) -> Result<Self> {
        let c = coeff_tensor(1, &[p], std::slice::from_ref(weight), basis)?;
        let norm_sq = kernel_norm_sq(std::slice::from_ref(weight), basis.interval)?;
        Ok(Self {
            projection: c.values().to_vec(),
            norm_sq,
        })
    }

    /// `(Σ_j (∫ψφ_j) ζ_j, ∫ψ²)`.
    pub fn moments(&self, z: &GaussianTable<T>, i: usize) -> Result<(T, T)> {
        if i == 0 || i > z.m() || self.projection.len() > z.p() + 1 {
            return Err(Error::Dimension(format!(
                "component {i} / order {} not available in the table",
                self.projection.len() - 1
            )));
        }
        let row = z.row(i);
        let delta = self.projection.iter().zip(row).map(|(&a, &b)| a * b).sum();
        Ok((delta, self.norm_sq))
    }

    pub fn value(&self, k: usize, z: &GaussianTable<T>, i: usize) -> Result<T> {
        let (d, v) = self.moments(z, i)?;
        let lit = T::lit;
        Ok(match k {
            1 => d,
            2 => (d * d - v) / lit(2.0),
            3 => (d * d * d - lit(3.0) * d * v) / lit(6.0),
            4 => (d.powi(4) - lit(6.0) * d * d * v + lit(3.0) * v * v) / lit(24.0),
            _ => return Err(Error::Dimension(format!("Hermite reference for multiplicity {k}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisKind, Interval};

    fn ones(k: usize) -> Vec<WeightFn<f64>> {
        vec![WeightFn::ConstantOne; k]
    }

    fn legendre(len: f64) -> BasisSystem<f64> {
        BasisSystem::legendre(Interval::new(0.0, len).unwrap())
    }

    #[test]
    fn matchings_are_complete() {
        let all: Vec<(usize, usize)> = NoiseIndexTuple::new(vec![1, 1, 1, 1]).unwrap().matched_pairs();
        assert_eq!(all.len(), 6);
        let m = matchings(&all);
        // empty + 6 single + 3 double
        assert_eq!(m.len(), 10);
        assert_eq!(m.iter().filter(|x| x.len() == 2).count(), 3);
        assert_eq!(matchings(&[]).len(), 1);
    }

    #[test]
    fn truncation_rules() {
        assert!(TruncationSpec::new(vec![3, 5]).is_ok());
        assert!(matches!(TruncationSpec::new(vec![3, 3, 4]), Err(Error::Precondition(_))));
        assert!(TruncationSpec::new(vec![]).is_err());
        assert_eq!(TruncationSpec::shared(4, 6).unwrap().orders(), &[6, 6, 6, 6]);
    }

    #[test]
    fn table_row_zero_and_determinism() {
        let basis = legendre(4.0);
        let a = sample_table(11, 2, 6, &basis).unwrap();
        let b = sample_table(11, 2, 6, &basis).unwrap();
        assert_eq!(a, b);
        assert!((a.row(0)[0] - 2.0).abs() < 1e-15);
        assert!(a.row(0)[1..].iter().all(|v| v.abs() < 1e-15));
        let wide = sample_table(11, 2, 12, &basis).unwrap();
        assert_eq!(&wide.row(2)[..7], a.row(2));
    }

    #[test]
    fn first_order_and_time_component() {
        let basis = legendre(3.0);
        let c = coeff_tensor(1, &[5], &ones(1), &basis).unwrap();
        let z = sample_table(1, 1, 5, &basis).unwrap();
        let t = TruncationSpec::shared(1, 5).unwrap();
        let w = ito_truncated(&c, &z, &NoiseIndexTuple::new(vec![1]).unwrap(), &t).unwrap();
        assert!((w - 3f64.sqrt() * z.row(1)[0]).abs() < 1e-14);
        let time = ito_truncated(&c, &z, &NoiseIndexTuple::new(vec![0]).unwrap(), &t).unwrap();
        assert!((time - 3.0).abs() < 1e-14);
    }

    #[test]
    fn second_order_same_component() {
        let basis = legendre(2.0);
        let c = coeff_tensor(2, &[16, 16], &ones(2), &basis).unwrap();
        let t = TruncationSpec::shared(2, 16).unwrap();
        let idx = NoiseIndexTuple::new(vec![1, 1]).unwrap();
        for seed in 0..5 {
            let z = sample_table(seed, 1, 16, &basis).unwrap();
            let z0 = z.row(1)[0];
            let ito = ito_truncated(&c, &z, &idx, &t).unwrap();
            let strat = strat_truncated(&c, &z, &idx, &t).unwrap();
            assert!((ito - (z0 * z0 - 1.0)).abs() < 1e-13);
            assert!((strat - z0 * z0).abs() < 1e-13);
        }
    }

    #[test]
    fn correction_matches_difference() {
        for kind in [BasisKind::Legendre, BasisKind::Trigonometric] {
            let basis = BasisSystem::new(kind, Interval::new(0.5, 1.75).unwrap());
            for (k, tuples) in [
                (2, vec![vec![1, 1], vec![2, 1]]),
                (3, vec![vec![1, 1, 2], vec![2, 1, 2], vec![1, 1, 1], vec![0, 1, 1]]),
                (4, vec![vec![1, 1, 1, 1], vec![1, 2, 1, 2], vec![1, 2, 2, 1], vec![0, 2, 0, 2]]),
            ] {
                let p = 4;
                let mut w = ones(k);
                w[0] = WeightFn::Monomial { q: 1 };
                let c = coeff_tensor(k, &vec![p; k], &w, &basis).unwrap();
                let t = TruncationSpec::shared(k, p).unwrap();
                let fam = CorrectionFamily::from_tensor(&c, &t).unwrap();
                for tuple in tuples {
                    let idx = NoiseIndexTuple::new(tuple).unwrap();
                    let z = sample_table(3, 2, p, &basis).unwrap();
                    let d = strat_truncated(&c, &z, &idx, &t).unwrap() - ito_truncated(&c, &z, &idx, &t).unwrap();
                    let corr = strat_correction(&fam, &z, &idx).unwrap();
                    assert!((d - corr).abs() < 1e-12, "{kind:?} {idx:?}");
                }
            }
        }
    }

    #[test]
    fn rectangular_k2_trace_uses_min_order() {
        let basis = legendre(1.0);
        let w = vec![WeightFn::Monomial { q: 1 }, WeightFn::Monomial { q: 1 }];
        let c = coeff_tensor(2, &[6, 3], &w, &basis).unwrap();
        let t = TruncationSpec::new(vec![6, 3]).unwrap();
        let fam = CorrectionFamily::from_tensor(&c, &t).unwrap();
        let z = sample_table(2, 1, 6, &basis).unwrap();
        let idx = NoiseIndexTuple::new(vec![1, 1]).unwrap();
        let trace: f64 = (0..=3).map(|j| c.get(&[j, j])).sum();
        assert!((strat_correction(&fam, &z, &idx).unwrap() - trace).abs() < 1e-15);
    }

    #[test]
    fn distinct_components_need_no_correction() {
        let basis = legendre(1.0);
        let c = coeff_tensor(3, &[3, 3, 3], &ones(3), &basis).unwrap();
        let t = TruncationSpec::shared(3, 3).unwrap();
        let fam = CorrectionFamily::from_tensor(&c, &t).unwrap();
        let z = sample_table(4, 3, 3, &basis).unwrap();
        let idx = NoiseIndexTuple::new(vec![1, 2, 3]).unwrap();
        assert_eq!(strat_correction(&fam, &z, &idx).unwrap(), 0.0);
        assert_eq!(
            strat_truncated(&c, &z, &idx, &t).unwrap(),
            ito_truncated(&c, &z, &idx, &t).unwrap()
        );
    }

    #[test]
    fn hermite_matches_second_order() {
        let basis = legendre(1.5);
        let h = HermiteReference::new(&WeightFn::ConstantOne, &basis, 7).unwrap();
        let c = coeff_tensor(2, &[7, 7], &ones(2), &basis).unwrap();
        let t = TruncationSpec::shared(2, 7).unwrap();
        let idx = NoiseIndexTuple::new(vec![2, 2]).unwrap();
        for seed in 0..4 {
            let z = sample_table(seed, 2, 7, &basis).unwrap();
            let a = h.value(2, &z, 2).unwrap();
            let b = ito_truncated(&c, &z, &idx, &t).unwrap();
            assert!((a - b).abs() < 1e-13);
            assert!((h.value(1, &z, 2).unwrap() - 1.5f64.sqrt() * z.row(2)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_in_each_row() {
        let basis = legendre(1.0);
        let c = coeff_tensor(3, &[3, 3, 3], &ones(3), &basis).unwrap();
        let t = TruncationSpec::shared(3, 3).unwrap();
        let idx = NoiseIndexTuple::new(vec![1, 2, 2]).unwrap();
        let z = sample_table(9, 2, 3, &basis).unwrap();
        let mut scaled = z.clone();
        scaled.row_mut(1).iter_mut().for_each(|v| *v *= 2.5);
        let a = ito_truncated(&c, &z, &idx, &t).unwrap();
        let b = ito_truncated(&c, &scaled, &idx, &t).unwrap();
        assert!((2.5 * a - b).abs() < 1e-13);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let basis = legendre(1.0);
        let c = coeff_tensor(2, &[3, 3], &ones(2), &basis).unwrap();
        let z = sample_table(1, 1, 3, &basis).unwrap();
        let t = TruncationSpec::shared(2, 3).unwrap();
        let bad_idx = NoiseIndexTuple::new(vec![1, 2]).unwrap();
        assert!(ito_truncated(&c, &z, &bad_idx, &t).is_err());
        let t5 = TruncationSpec::shared(2, 5).unwrap();
        assert!(ito_truncated(&c, &z, &NoiseIndexTuple::new(vec![1, 1]).unwrap(), &t5).is_err());
    }
}
