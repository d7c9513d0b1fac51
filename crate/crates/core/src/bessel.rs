//! Bessel functions of the first kind from the Sommerfeld integral
//!
//! `J_n(xi) = (i^n / pi) * int_0^pi exp(-i xi cos a) cos(n a) da`
//!
//! and the finite sums obtained by sampling that integral at `j pi / (N+1)`,
//! which are exactly the matrix elements of the open chain of length `N`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{abs, ceil, cos, sin_cos, PI};
use crate::quadrature::GaussLegendre;

/// Discretization of the Sommerfeld integral.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre points per panel (at least 16).
    pub node_count: usize,
    /// Stop when two successive panel doublings differ by less than this.
    pub tol: f64,
    /// Give up after this many doublings.
    pub max_doublings: u32,
    /// Largest |n| accepted.
    pub max_order: i64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { node_count: 32, tol: 1e-13, max_doublings: 12, max_order: 1 << 16 }
    }
}

/// Evaluator with a fixed quadrature rule.
#[derive(Debug, Clone)]
pub struct Sommerfeld {
    spec: QuadratureSpec,
    rule: GaussLegendre,
}

impl Default for Sommerfeld {
    fn default() -> Self {
        Self::new(QuadratureSpec::default()).expect("default spec is valid")
    }
}

impl Sommerfeld {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        if spec.node_count < 16 {
            return Err(Error::InvalidParameter { name: "node_count", value: spec.node_count as f64 });
        }
        if !(spec.tol > 0.0) {
            return Err(Error::InvalidParameter { name: "tol", value: spec.tol });
        }
        let rule = GaussLegendre::new(spec.node_count);
        Ok(Sommerfeld { spec, rule })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// `J_n(xi)` for any integer order.
    pub fn j(&self, n: i64, xi: f64) -> Result<f64> {
        if n.unsigned_abs() > self.spec.max_order as u64 {
            return Err(Error::OrderOutOfRange { order: n, max: self.spec.max_order });
        }
        let k = n.unsigned_abs() as usize;
        let v = self.j_orders(k, xi)?;
        // J_{-n} = (-1)^n J_n
        let sign = if n < 0 { crate::math::parity(n) } else { 1.0 };
        Ok(sign * v[k])
    }

    /// `[J_0(xi), ..., J_{n_max}(xi)]` from one shared quadrature.
    pub fn j_orders(&self, n_max: usize, xi: f64) -> Result<Vec<f64>> {
        if n_max as i64 > self.spec.max_order {
            return Err(Error::OrderOutOfRange { order: n_max as i64, max: self.spec.max_order });
        }
        if !xi.is_finite() {
            return Err(Error::InvalidParameter { name: "xi", value: xi });
        }
        let mut panels = 1 + ceil((abs(xi) + n_max as f64) / 8.0) as usize;
        let (mut prev, _) = self.integrate(n_max, xi, panels);
        for _ in 0..self.spec.max_doublings {
            panels *= 2;
            let (cur, imag) = self.integrate(n_max, xi, panels);
            let delta = cur.iter().zip(&prev).map(|(a, b)| abs(a - b)).fold(0.0, f64::max);
            if delta < self.spec.tol {
                let resid = imag.iter().map(|v| abs(*v)).fold(0.0, f64::max);
                if resid > 1e3 * self.spec.tol {
                    return Err(Error::NumericalAccuracy { what: "Bessel imaginary residual", residual: resid });
                }
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::NumericalAccuracy { what: "Sommerfeld quadrature", residual: f64::NAN })
    }

    /// Real parts and imaginary residuals for all orders on `panels` panels.
    fn integrate(&self, n_max: usize, xi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; n_max + 1];
        let mut b = vec![0.0; n_max + 1];
        let h = PI / panels as f64;
        for p in 0..panels {
            let c = (p as f64 + 0.5) * h;
            for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let alpha = c + 0.5 * h * x;
                let ca = cos(alpha);
                let (sphi, cphi) = sin_cos(xi * ca);
                // cos(k alpha) by the Chebyshev recurrence
                let mut t0 = 1.0;
                let mut t1 = ca;
                for k in 0..=n_max {
                    let tk = if k == 0 { t0 } else { t1 };
                    a[k] += w * cphi * tk;
                    b[k] += w * sphi * tk;
                    if k >= 1 {
                        let t2 = 2.0 * ca * t1 - t0;
                        t0 = t1;
                        t1 = t2;
                    }
                }
            }
        }
        let scale = 0.5 * h / PI;
        let mut re = Vec::with_capacity(n_max + 1);
        let mut im = Vec::with_capacity(n_max + 1);
        for k in 0..=n_max {
            let (ak, bk) = (a[k] * scale, b[k] * scale);
            // i^k e^{-i phi} = cos(k pi/2 - phi) + i sin(k pi/2 - phi)
            let (r, i) = match k % 4 {
                0 => (ak, -bk),
                1 => (bk, ak),
                2 => (-ak, bk),
                _ => (-bk, -ak),
            };
            re.push(r);
            im.push(i);
        }
        (re, im)
    }
}

/// `J_n(xi)` with the default quadrature.
pub fn bessel_j(n: i64, xi: f64) -> Result<f64> {
    Sommerfeld::default().j(n, xi)
}

/// The `N`-point integral sum
/// `(i^n/(N+1)) sum_{j=1}^N exp(-i xi cos(j pi/(N+1))) cos(n j pi/(N+1))`.
pub fn bessel_jn(big_n: usize, n: i64, xi: f64) -> Result<Complex64> {
    if big_n == 0 {
        return Err(Error::InvalidParameter { name: "N", value: 0.0 });
    }
    let d = PI / (big_n as f64 + 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..=big_n {
        let th = j as f64 * d;
        let (s, c) = sin_cos(xi * cos(th));
        let w = cos(n as f64 * th);
        acc += Complex64::new(c * w, -s * w);
    }
    Ok(i_pow(n) * acc / (big_n as f64 + 1.0))
}

/// `i^n` for any integer `n`.
pub fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}
