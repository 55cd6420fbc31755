//! Orthonormal Legendre and trigonometric systems on a finite interval.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default cap on the polynomial degree / basis index.
pub const DEFAULT_MAX_DEGREE: usize = 4096;

const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub start: T,
    pub end: T,
}

impl<T: Real> Interval<T> {
    pub fn new(start: T, end: T) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end > start && (end - start).is_finite()) {
            return Err(Error::Interval {
                t: start.to_f64_lossy(),
                end: end.to_f64_lossy(),
            });
        }
        Ok(Self { start, end })
    }

    pub fn unit() -> Self {
        Self {
            start: T::zero(),
            end: T::one(),
        }
    }

    pub fn length(&self) -> T {
        self.end - self.start
    }

    pub fn midpoint(&self) -> T {
        (self.start + self.end) * T::lit(0.5)
    }

    /// Affine map onto [-1, 1].
    pub fn to_canonical(&self, s: T) -> T {
        (s - self.midpoint()) * T::lit(2.0) / self.length()
    }

    pub fn from_canonical(&self, z: T) -> T {
        self.midpoint() + z * self.length() * T::lit(0.5)
    }

    pub fn contains(&self, s: T) -> bool {
        let slack = T::lit(DOMAIN_SLACK) * self.length();
        s >= self.start - slack && s <= self.end + slack
    }

    fn check(&self, s: T) -> Result<T> {
        if !self.contains(s) {
            return Err(Error::Domain {
                value: s.to_f64_lossy(),
                domain: format!("[{:?}, {:?}]", self.start, self.end),
            });
        }
        Ok(s.max(self.start).min(self.end))
    }

    pub fn cast<U: Real>(&self) -> Interval<U> {
        Interval {
            start: U::lit(self.start.to_f64_lossy()),
            end: U::lit(self.end.to_f64_lossy()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Legendre,
    /// Constant, then a (sin, cos) pair for each harmonic r = 1, 2, ...
    Trigonometric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSystem<T> {
    pub kind: BasisKind,
    pub interval: Interval<T>,
    pub max_degree: usize,
}

/// Evaluate P_n(x) by the three-term recurrence.
pub fn legendre_p<T: Real>(n: usize, x: T) -> Result<T> {
    let x = check_canonical(x)?;
    Ok(legendre_unchecked(n, x))
}

fn check_canonical<T: Real>(x: T) -> Result<T> {
    if !(x.abs() <= T::one() + T::lit(DOMAIN_SLACK)) {
        return Err(Error::Domain {
            value: x.to_f64_lossy(),
            domain: "[-1, 1]".into(),
        });
    }
    Ok(x.max(-T::one()).min(T::one()))
}

pub(crate) fn legendre_unchecked<T: Real>(n: usize, x: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = x;
    for m in 1..n {
        let mf = T::from_usize_lossy(m);
        let next = ((mf + mf + T::one()) * x * cur - mf * prev) / (mf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Fill `out[m] = P_m(x)` for m = 0..out.len().
pub(crate) fn legendre_all<T: Real>(x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    out[0] = T::one();
    if out.len() > 1 {
        out[1] = x;
    }
    for m in 1..out.len().saturating_sub(1) {
        let mf = T::from_usize_lossy(m);
        out[m + 1] = ((mf + mf + T::one()) * x * out[m] - mf * out[m - 1]) / (mf + T::one());
    }
}

/// P_n(x) and P'_n(x) by differentiating the recurrence.
pub fn legendre_with_derivative<T: Real>(n: usize, x: T) -> Result<(T, T)> {
    let x = check_canonical(x)?;
    let (mut p0, mut d0) = (T::one(), T::zero());
    if n == 0 {
        return Ok((p0, d0));
    }
    let (mut p1, mut d1) = (x, T::one());
    for m in 1..n {
        let mf = T::from_usize_lossy(m);
        let a = mf + mf + T::one();
        let p2 = (a * x * p1 - mf * p0) / (mf + T::one());
        let d2 = (a * (p1 + x * d1) - mf * d0) / (mf + T::one());
        p0 = p1;
        d0 = d1;
        p1 = p2;
        d1 = d2;
    }
    Ok((p1, d1))
}

impl<T: Real> BasisSystem<T> {
    pub fn new(kind: BasisKind, interval: Interval<T>) -> Self {
        Self {
            kind,
            interval,
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }

    pub fn legendre(interval: Interval<T>) -> Self {
        Self::new(BasisKind::Legendre, interval)
    }

    pub fn trigonometric(interval: Interval<T>) -> Self {
        Self::new(BasisKind::Trigonometric, interval)
    }

    pub fn with_max_degree(mut self, cap: usize) -> Self {
        self.max_degree = cap;
        self
    }

    pub fn check_index(&self, j: usize) -> Result<()> {
        if j > self.max_degree {
            return Err(Error::DegreeCap {
                degree: j,
                cap: self.max_degree,
            });
        }
        Ok(())
    }

    /// Harmonic number and phase (false = sine, true = cosine) of a trig index.
    fn harmonic(j: usize) -> (usize, bool) {
        (j.div_ceil(2), j.is_multiple_of(2))
    }

    /// Number of full oscillations of φ_j over the interval (trig) or its degree (Legendre).
    pub fn frequency(&self, j: usize) -> usize {
        match self.kind {
            BasisKind::Legendre => j,
            BasisKind::Trigonometric => Self::harmonic(j).0,
        }
    }

    pub fn phi(&self, j: usize, s: T) -> Result<T> {
        self.check_index(j)?;
        let s = self.interval.check(s)?;
        Ok(self.phi_unchecked(j, s))
    }

    pub(crate) fn phi_unchecked(&self, j: usize, s: T) -> T {
        let len = self.interval.length();
        match self.kind {
            BasisKind::Legendre => {
                let z = self.interval.to_canonical(s).max(-T::one()).min(T::one());
                let norm = (T::from_usize_lossy(2 * j + 1) / len).sqrt();
                norm * legendre_unchecked(j, z)
            }
            BasisKind::Trigonometric => {
                if j == 0 {
                    return T::one() / len.sqrt();
                }
                let (r, cosine) = Self::harmonic(j);
                let theta = T::TAU() * T::from_usize_lossy(r) * (s - self.interval.start) / len;
                let norm = (T::lit(2.0) / len).sqrt();
                norm * if cosine { theta.cos() } else { theta.sin() }
            }
        }
    }

    /// Fill `out[j] = φ_j(s)` for j = 0..out.len().
    pub(crate) fn phi_all(&self, s: T, out: &mut [T]) {
        let len = self.interval.length();
        match self.kind {
            BasisKind::Legendre => {
                let z = self.interval.to_canonical(s).max(-T::one()).min(T::one());
                legendre_all(z, out);
                for (j, v) in out.iter_mut().enumerate() {
                    *v = *v * (T::from_usize_lossy(2 * j + 1) / len).sqrt();
                }
            }
            BasisKind::Trigonometric => {
                for (j, v) in out.iter_mut().enumerate() {
                    *v = self.phi_unchecked(j, s);
                }
            }
        }
    }

    /// Closed-form ∫_a^b φ_j(s) ds.
    pub fn phi_integral(&self, j: usize, a: T, b: T) -> Result<T> {
        self.check_index(j)?;
        let a = self.interval.check(a)?;
        let b = self.interval.check(b)?;
        if a > b {
            return Err(Error::Domain {
                value: a.to_f64_lossy(),
                domain: format!("lower limit must not exceed upper limit {:?}", b),
            });
        }
        Ok(self.phi_antiderivative(j, b) - self.phi_antiderivative(j, a))
    }

    /// An antiderivative of φ_j, chosen to vanish at the interval start.
    pub(crate) fn phi_antiderivative(&self, j: usize, s: T) -> T {
        let len = self.interval.length();
        match self.kind {
            BasisKind::Legendre => {
                if j == 0 {
                    return (s - self.interval.start) / len.sqrt();
                }
                let z = self.interval.to_canonical(s).max(-T::one()).min(T::one());
                let scale = len.sqrt() / (T::lit(2.0) * T::from_usize_lossy(2 * j + 1).sqrt());
                // P_{j+1} - P_{j-1} vanishes at z = -1, so this is zero at the start.
                scale * (legendre_unchecked(j + 1, z) - legendre_unchecked(j - 1, z))
            }
            BasisKind::Trigonometric => {
                if j == 0 {
                    return (s - self.interval.start) / len.sqrt();
                }
                let (r, cosine) = Self::harmonic(j);
                let omega = T::TAU() * T::from_usize_lossy(r) / len;
                let theta = omega * (s - self.interval.start);
                let norm = (T::lit(2.0) / len).sqrt() / omega;
                if cosine {
                    norm * theta.sin()
                } else {
                    norm * (T::one() - theta.cos())
                }
            }
        }
    }
}
