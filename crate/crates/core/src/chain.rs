//! Open chain of `N` spins with nearest-neighbour hopping.
//!
//! The one-excitation Hamiltonian is the path-graph adjacency matrix. Its
//! spectrum `x_j = 2 cos(j pi/(N+1))` and sine eigenvectors are used
//! directly, so no general eigensolver is involved.
//!
//! Public indices are zero based (`beta_0 .. beta_{N-1}`) unless a function
//! says otherwise; the infinite chain keeps its natural one-based sites.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::bessel::{bessel_jn, i_pow, Sommerfeld};
use crate::error::{Error, Result};
use crate::math::{abs, cos, sin, sqrt, PI};

/// How a caller numbers chain sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// Sites `1..=N`, states `|m>`.
    OneBased,
    /// Sites `0..N`, states `beta_n`.
    #[default]
    ZeroBased,
}

impl Convention {
    /// Converts an index in this convention to a zero-based one.
    pub fn to_zero_based(self, idx: usize) -> Option<usize> {
        match self {
            Convention::ZeroBased => Some(idx),
            Convention::OneBased => idx.checked_sub(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSpec {
    len: usize,
    pub convention: Convention,
}

impl ChainSpec {
    pub fn new(len: usize) -> Result<Self> {
        Self::with_convention(len, Convention::ZeroBased)
    }

    pub fn with_convention(len: usize, convention: Convention) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidParameter { name: "N", value: 0.0 });
        }
        Ok(ChainSpec { len, convention })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the last site, the one coupled to the field.
    pub fn last(&self) -> usize {
        self.len - 1
    }

    /// Maps an index given in `self.convention` to zero-based, checking range.
    pub fn site(&self, idx: usize) -> Result<usize> {
        match self.convention.to_zero_based(idx) {
            Some(i) if i < self.len => Ok(i),
            _ => Err(Error::IndexOutOfRange { index: idx, len: self.len }),
        }
    }

    pub(crate) fn check(&self, idx: usize) -> Result<()> {
        if idx < self.len {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: idx, len: self.len })
        }
    }
}

/// Closed-form spectral data of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    spec: ChainSpec,
    x: Vec<f64>,
}

impl EigenSystem {
    pub fn new(spec: ChainSpec) -> Self {
        let n = spec.len();
        let x = (1..=n).map(|j| 2.0 * cos(j as f64 * PI / (n as f64 + 1.0))).collect();
        EigenSystem { spec, x }
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `x_1 > x_2 > ... > x_N`; entry `j` holds `x_{j+1}`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.x
    }

    /// Normalized eigenvector component `sqrt(2/(N+1)) sin((n+1)(j+1) pi/(N+1))`.
    pub fn vector(&self, j: usize, n: usize) -> f64 {
        let np1 = self.len() as f64 + 1.0;
        sqrt(2.0 / np1) * sin((n as f64 + 1.0) * (j as f64 + 1.0) * PI / np1)
    }

    /// `a_j^(n,m) = -(2/(N+1)) sin((n+1) j pi/(N+1)) sin((m+1) j pi/(N+1))`,
    /// with `j` zero based here.
    pub fn weight(&self, j: usize, n: usize, m: usize) -> f64 {
        -self.vector(j, n) * self.vector(j, m)
    }

    pub fn weights(&self, n: usize, m: usize) -> Result<Vec<f64>> {
        self.spec.check(n)?;
        self.spec.check(m)?;
        Ok((0..self.len()).map(|j| self.weight(j, n, m)).collect())
    }
}

/// `<n|exp(-itH_N)|m>` from the finite integral sums,
/// `(-i)^{n-m} J^N_{n-m}(2t) - (-i)^{n+m} J^N_{n+m}(2t)` in one-based sites.
pub fn green_finite(spec: &ChainSpec, n: usize, m: usize, t: f64) -> Result<Complex64> {
    spec.check(n)?;
    spec.check(m)?;
    let (n1, m1) = (n as i64 + 1, m as i64 + 1);
    let big = spec.len();
    let d = i_pow(-(n1 - m1)) * bessel_jn(big, n1 - m1, 2.0 * t)?;
    let s = i_pow(-(n1 + m1)) * bessel_jn(big, n1 + m1, 2.0 * t)?;
    Ok(d - s)
}

/// Full `N x N` propagator matrix, row major.
pub fn green_matrix(spec: &ChainSpec, t: f64) -> Result<Vec<Complex64>> {
    let n = spec.len();
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            g.push(green_finite(spec, i, k, t)?);
        }
    }
    Ok(g)
}

/// Semi-infinite chain propagator `<n|U(t)|m>` with one-based sites `n, m >= 1`.
pub fn green_infinite(n: usize, m: usize, t: f64) -> Result<Complex64> {
    if n == 0 || m == 0 {
        return Err(Error::IndexOutOfRange { index: 0, len: usize::MAX });
    }
    let j = Sommerfeld::default().j_orders(n + m, 2.0 * t)?;
    let (n, m) = (n as i64, m as i64);
    let diff = (n - m).unsigned_abs() as usize;
    // J_{-k} = (-1)^k J_k
    let j_diff = if n >= m { j[diff] } else { crate::math::parity(n - m) * j[diff] };
    let j_sum = j[(n + m) as usize];
    Ok(i_pow(-(n - m)) * j_diff - i_pow(-(n + m)) * j_sum)
}

/// `sum_{m=1}^{j-1} [(m/t) J_m(2t)]^2`, the probability that spin `j`
/// (one based) has not yet flipped. Even in `t`.
pub fn flip_deficit(j: usize, t: f64) -> Result<f64> {
    flip_deficit_with(&Sommerfeld::default(), j, t)
}

pub fn flip_deficit_with(bessel: &Sommerfeld, j: usize, t: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::IndexOutOfRange { index: 0, len: usize::MAX });
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    if j == 1 {
        return Ok(0.0);
    }
    let t = abs(t);
    let mut sum = 0.0;
    if t < 1e-4 {
        // (m/t) J_m(2t) = m t^{m-1}/m! (1 - t^2/(m+1) + ...)
        let mut fact = 1.0;
        let mut tp = 1.0;
        for m in 1..j {
            let mf = m as f64;
            fact *= mf;
            if m > 1 {
                tp *= t;
            }
            let term = mf * tp / fact * (1.0 - t * t / (mf + 1.0));
            sum += term * term;
        }
    } else {
        let jm = bessel.j_orders(j - 1, 2.0 * t)?;
        for (m, v) in jm.iter().enumerate().skip(1) {
            let term = m as f64 / t * v;
            sum += term * term;
        }
    }
    Ok(sum)
}

/// Probability that spin `j` (one based) has flipped by time `t`.
pub fn flip_probability(j: usize, t: f64) -> Result<f64> {
    let p = 1.0 - flip_deficit(j, t)?;
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::NumericalAccuracy { what: "flip probability range", residual: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> ChainSpec {
        ChainSpec::new(n).unwrap()
    }

    #[test]
    fn spectrum_examples() {
        let e = EigenSystem::new(spec(1));
        assert!(e.eigenvalues()[0].abs() < 1e-15);
        let e = EigenSystem::new(spec(2));
        assert!((e.eigenvalues()[0] - 1.0).abs() < 1e-15);
        assert!((e.eigenvalues()[1] + 1.0).abs() < 1e-15);
        let e = EigenSystem::new(spec(3));
        assert!((e.weight(0, 0, 0) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn sine_orthogonality() {
        for n in [1, 2, 5, 9] {
            let e = EigenSystem::new(spec(n));
            for a in 0..n {
                for b in 0..n {
                    let s: f64 = (0..n).map(|j| e.vector(j, a) * e.vector(j, b)).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn green_at_zero_is_identity() {
        let s = spec(7);
        for n in 0..7 {
            for m in 0..7 {
                let g = green_finite(&s, n, m, 0.0).unwrap();
                let want = if n == m { 1.0 } else { 0.0 };
                assert!((g - Complex64::new(want, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn single_site_is_a_phase() {
        let s = spec(1);
        for t in [0.3, 4.0, 100.0] {
            assert!((green_finite(&s, 0, 0, t).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn index_checks() {
        let s = spec(3);
        assert!(green_finite(&s, 3, 0, 1.0).is_err());
        assert!(green_infinite(0, 1, 1.0).is_err());
        assert!(flip_probability(0, 1.0).is_err());
        let one = ChainSpec::with_convention(3, Convention::OneBased).unwrap();
        assert_eq!(one.site(1).unwrap(), 0);
        assert!(one.site(0).is_err());
        assert!(one.site(4).is_err());
    }

    #[test]
    fn flip_limits() {
        assert_eq!(flip_probability(1, 3.0).unwrap(), 1.0);
        assert!(flip_probability(2, 1e-6).unwrap() < 1e-11);
        // series branch joins the quadrature branch continuously
        let a = flip_deficit(4, 0.99e-4).unwrap();
        let b = flip_deficit(4, 1.01e-4).unwrap();
        assert!((a - b).abs() < 1e-8);
        assert_eq!(flip_deficit(3, -2.0).unwrap(), flip_deficit(3, 2.0).unwrap());
    }

    #[test]
    fn infinite_at_zero() {
        for n in 1..5 {
            for m in 1..5 {
                let g = green_infinite(n, m, 0.0).unwrap();
                let want = if n == m { 1.0 } else { 0.0 };
                assert!((g - Complex64::new(want, 0.0)).norm() < 1e-14);
            }
        }
    }
}
