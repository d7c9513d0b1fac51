//! Symmetric tridiagonal tools for the discretized continuum.
//!
//! A chain whose last site couples to many independent modes (a star
//! attached to a path) is brought to tridiagonal form by orthogonal
//! rotations that act on the modes only, so chain basis vectors are left
//! untouched. The tridiagonal matrix is then diagonalized by implicit QL,
//! accumulating only the eigenvector rows that are asked for.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, hypot};

/// `diag[i]` on the diagonal, `off[i]` coupling `i` and `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length must be n-1");
        Tridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Adds a mode of energy `d` coupled by `z` to the last site of the
    /// leading block of length `hub + 1`, then restores tridiagonal form.
    pub fn attach(&mut self, hub: usize, d: f64, z: f64) {
        let p = hub;
        if self.diag.len() == p + 1 {
            self.diag.push(d);
            self.off.push(z);
            return;
        }
        // new mode goes right after the hub; the old neighbour becomes a bulge
        self.diag.insert(p + 1, d);
        self.off.insert(p + 1, 0.0);
        let mut bulge = self.off[p];
        self.off[p] = z;
        let n = self.diag.len();
        let mut k = p;
        while bulge != 0.0 {
            let x = self.off[k];
            let r = hypot(x, bulge);
            let (c, s) = (x / r, bulge / r);
            self.off[k] = r;
            let (a1, a2, b1) = (self.diag[k + 1], self.diag[k + 2], self.off[k + 1]);
            let (cc, ss, cs) = (c * c, s * s, c * s);
            self.diag[k + 1] = cc * a1 + 2.0 * cs * b1 + ss * a2;
            self.diag[k + 2] = ss * a1 - 2.0 * cs * b1 + cc * a2;
            self.off[k + 1] = cs * (a2 - a1) + (cc - ss) * b1;
            if k + 3 >= n {
                break;
            }
            let e2 = self.off[k + 2];
            bulge = s * e2;
            self.off[k + 2] = c * e2;
            k += 1;
        }
    }
}

/// Eigenvalues and selected eigenvector rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRows {
    pub values: Vec<f64>,
    /// `rows[r][l]` is component `r` of eigenvector `l`.
    pub rows: Vec<Vec<f64>>,
}

/// Implicit QL with Wilkinson-type shifts. Only the eigenvector components
/// with indices in `rows` are accumulated, which costs `O(n^2 rows.len())`.
pub fn eigen_rows(t: &Tridiagonal, rows: &[usize]) -> Result<EigenRows> {
    let n = t.len();
    let mut d = t.diag.clone();
    let mut e = t.off.clone();
    e.push(0.0);
    let mut z: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            let mut v = vec![0.0; n];
            if r < n {
                v[r] = 1.0;
            }
            v
        })
        .collect();
    let max_iter = 60;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = abs(d[m]) + abs(d[m + 1]);
                if abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > max_iter {
                return Err(Error::Eigensolver { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for zr in z.iter_mut() {
                    let f = zr[i + 1];
                    zr[i + 1] = s * zr[i] + c * f;
                    zr[i] = c * zr[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver { iterations: 0 });
    }
    Ok(EigenRows { values: d, rows: z })
}
