//! Filon-type quadrature for `int f(p) exp(i p t) dp`.
//!
//! On each panel `[c-h, c+h]` the amplitude is replaced by its degree-7
//! Legendre expansion through the 8 Gauss points, and the oscillator is
//! integrated exactly:
//!
//! `int_{-1}^{1} P_k(u) exp(i w u) du = 2 i^k j_k(w)`.

use num_complex::Complex64;

use crate::bessel::i_pow;
use crate::math::{abs, sin_cos};
use crate::quadrature::{legendre_with_derivative, GaussLegendre};

/// Points per panel; the expansion has degree `ORDER - 1`.
pub const ORDER: usize = 8;

/// Maps node values to Legendre coefficients.
#[derive(Debug, Clone)]
pub struct Filon {
    /// Nodes on [-1, 1].
    pub nodes: [f64; ORDER],
    projection: [[f64; ORDER]; ORDER],
}

impl Default for Filon {
    fn default() -> Self {
        Self::new()
    }
}

impl Filon {
    pub fn new() -> Self {
        let rule = GaussLegendre::new(ORDER);
        let mut nodes = [0.0; ORDER];
        let mut projection = [[0.0; ORDER]; ORDER];
        for i in 0..ORDER {
            nodes[i] = rule.nodes[i];
            for (k, row) in projection.iter_mut().enumerate() {
                let (pk, _) = legendre_with_derivative(k, rule.nodes[i]);
                row[i] = (2.0 * k as f64 + 1.0) / 2.0 * rule.weights[i] * pk;
            }
        }
        Filon { nodes, projection }
    }

    /// Legendre coefficients `c_k` with `f(c + h u) = sum_k c_k P_k(u)`.
    pub fn coefficients(&self, values: &[f64; ORDER]) -> [f64; ORDER] {
        let mut c = [0.0; ORDER];
        for (k, row) in self.projection.iter().enumerate() {
            c[k] = row.iter().zip(values).map(|(a, b)| a * b).sum();
        }
        c
    }
}

/// Oscillator moments `2 i^k j_k(w)` for one panel half-width.
pub fn moments(w: f64) -> [Complex64; ORDER] {
    let mut j = [0.0; ORDER];
    spherical_j(w, &mut j);
    let mut m = [Complex64::new(0.0, 0.0); ORDER];
    for k in 0..ORDER {
        m[k] = 2.0 * i_pow(k as i64) * j[k];
    }
    m
}

/// `int_{c-h}^{c+h} f(p) exp(i p t) dp` from Legendre coefficients and the
/// moments for `w = t h`.
#[inline]
pub fn panel_integral(coeffs: &[f64; ORDER], c: f64, h: f64, t: f64, moments: &[Complex64; ORDER]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..ORDER {
        acc += coeffs[k] * moments[k];
    }
    let (s, co) = sin_cos(c * t);
    Complex64::new(co, s) * acc * h
}

/// Spherical Bessel functions `j_0(x) .. j_{n-1}(x)` written into `out`.
pub fn spherical_j(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    if x < 0.0 {
        spherical_j(-x, out);
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
        return;
    }
    if x < 1.0 {
        series(x, out);
    } else if x > n as f64 {
        upward(x, out);
    } else {
        miller(x, out);
    }
}

fn series(x: f64, out: &mut [f64]) {
    let x2 = -0.5 * x * x;
    let mut lead = 1.0;
    for (k, v) in out.iter_mut().enumerate() {
        if k > 0 {
            lead *= x / (2.0 * k as f64 + 1.0);
        }
        let mut term = 1.0;
        let mut sum = 1.0;
        for s in 1..40 {
            term *= x2 / (s as f64 * (2.0 * (k + s) as f64 + 1.0));
            sum += term;
            if abs(term) < 1e-17 * abs(sum) {
                break;
            }
        }
        *v = lead * sum;
    }
}

fn upward(x: f64, out: &mut [f64]) {
    let (s, c) = sin_cos(x);
    let j0 = s / x;
    out[0] = j0;
    if out.len() == 1 {
        return;
    }
    let j1 = s / (x * x) - c / x;
    out[1] = j1;
    for k in 1..out.len() - 1 {
        out[k + 1] = (2.0 * k as f64 + 1.0) / x * out[k] - out[k - 1];
    }
}

fn miller(x: f64, out: &mut [f64]) {
    let n = out.len();
    let start = n + 25 + x as usize;
    let mut hi = 0.0;
    let mut cur = 1e-30;
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k < n {
            out[k] = cur;
        }
        norm += (2.0 * k as f64 + 1.0) * cur * cur;
        if k == 0 {
            break;
        }
        let lower = (2.0 * k as f64 + 1.0) / x * cur - hi;
        hi = cur;
        cur = lower;
        if abs(cur) > 1e150 {
            // rescale everything accumulated so far
            let f = 1e-150;
            cur *= f;
            hi *= f;
            norm *= f * f;
            for v in out.iter_mut() {
                *v *= f;
            }
        }
    }
    let scale = 1.0 / crate::math::sqrt(norm);
    let (s, c) = sin_cos(x);
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let sign = if abs(j0) >= abs(j1) {
        if (j0 >= 0.0) == (out[0] >= 0.0) {
            1.0
        } else {
            -1.0
        }
    } else if (j1 >= 0.0) == (out[1.min(n - 1)] >= 0.0) {
        1.0
    } else {
        -1.0
    };
    for v in out.iter_mut() {
        *v *= sign * scale;
    }
}
