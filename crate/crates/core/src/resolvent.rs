//! Resolvent of the radiating chain restricted to the chain sites.
//!
//! With `f_mn(xi) = sum_j a_j^(n,m) / (xi - x_j)` for the bare chain and the
//! field self-energy `f_sigma(xi) = -int rho(eps) / (xi + eps0 - eps) d eps`,
//! coupling the last site gives
//!
//! `F_mn = f_mn + v^4 f_{m,N-1} f_sigma f_{N-1,n} / (1 - v^4 f_{N-1,N-1} f_sigma)`.
//!
//! Near a chain eigenvalue both numerator and denominator are multiplied by
//! `P(xi) = prod_j (xi - x_j)`, which removes the cancelling poles exactly.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::chain::{ChainSpec, EigenSystem};
use crate::error::{Error, Result};
use crate::field::{check_epsilon0, Admissibility, EnergyGrid, Field};
use crate::math::{abs, ln, PI};
use crate::quadrature::GaussLegendre;

/// Distance to a chain eigenvalue below which the pole-free form is used.
pub const POLE_BAND: f64 = 1e-4;
/// `|1 - v^4 f f_sigma|` below this is reported as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;
/// Scan minimum required by the pre-flight check.
pub const PREFLIGHT_MIN: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Resolvent {
    eig: EigenSystem,
    field: Field,
    grid: EnergyGrid,
    rule: GaussLegendre,
}

/// Which quantity a spectral sample holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    /// Coupled element `F_mn`.
    BigF,
    /// Bare chain element `f_mn`.
    SmallF,
    /// Self-energy `f_sigma`.
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSample {
    pub p: f64,
    pub value: Complex64,
    pub kind: SampleKind,
}

/// Outcome of scanning `|1 - v^4 f_{N-1,N-1}(p) f_sigma(p)|` along the real axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenominatorScan {
    pub min: f64,
    pub argmin: f64,
    /// Real zeros found below the continuum threshold (bound states).
    pub roots: Vec<f64>,
    pub points: usize,
    pub p_lo: f64,
    pub p_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preflight {
    pub admissibility: Admissibility,
    pub scan: DenominatorScan,
    /// `min_j |f_sigma(x_j)|`; must be nonzero for the poles to cancel.
    pub sigma_at_poles: f64,
    pub passed: bool,
}

impl Preflight {
    /// Human-readable reason for a failure, with a hint.
    pub fn diagnosis(&self) -> Option<&'static str> {
        if self.passed {
            None
        } else if !self.admissibility.basic {
            Some("eps0 must exceed a*b^2 + 2; raise eps0 (the strong bound is the safe choice)")
        } else if !self.scan.roots.is_empty() {
            Some("denominator has a real zero below threshold (bound state); raise eps0 or lower v")
        } else if self.scan.min < PREFLIGHT_MIN {
            Some("denominator nearly vanishes on the real axis; raise eps0 or lower v")
        } else {
            Some("self-energy vanishes at a chain eigenvalue; change the form factor")
        }
    }
}

/// Real part of `xi` and the scale factors for the pole-free form.
struct PoleForm {
    /// `P(xi)`.
    p: Complex64,
    /// `P(xi) f_{n,N-1}(xi)` for every `n`.
    pf_last: Vec<Complex64>,
    /// `prod_{i != j} (xi - x_i)` for the nearby eigenvalue `j`.
    reduced: Complex64,
}

impl Resolvent {
    pub fn new(spec: ChainSpec, field: Field, grid: EnergyGrid) -> Self {
        Resolvent { eig: EigenSystem::new(spec), field, grid, rule: GaussLegendre::new(16) }
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.eig.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn last(&self) -> usize {
        self.eig.len() - 1
    }

    fn v4(&self) -> f64 {
        self.field.params().v4()
    }

    fn eps0(&self) -> f64 {
        self.field.params().eps0
    }

    /// Lowest `p` with continuum weight, `a b^2 - eps0`.
    pub fn p_threshold(&self) -> f64 {
        self.grid.lower() - self.eps0()
    }

    /// Highest `p` with continuum weight, `eps_max - eps0`.
    pub fn p_upper(&self) -> f64 {
        self.grid.upper() - self.eps0()
    }

    /// Bare chain element `f_mn(xi)`.
    pub fn f_mn(&self, n: usize, m: usize, xi: Complex64) -> Result<Complex64> {
        self.eig.spec().check(n)?;
        self.eig.spec().check(m)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &x) in self.eig.eigenvalues().iter().enumerate() {
            let d = xi - x;
            if d.norm() < 1e-14 * x.abs().max(1.0) {
                return Err(Error::Pole { x });
            }
            acc += self.eig.weight(j, n, m) / d;
        }
        Ok(acc)
    }

    /// `f_sigma(xi)` for `Im xi <= 0`; the real axis gives the boundary value.
    pub fn f_sigma(&self, xi: Complex64) -> Result<Complex64> {
        if xi.im > 0.0 {
            return Err(Error::HalfPlane { im: xi.im });
        }
        if xi.im == 0.0 {
            return Ok(self.f_sigma_boundary(xi.re));
        }
        Ok(self.f_sigma_nn(xi))
    }

    /// Direct quadrature of `-int rho(eps)/(xi + eps0 - eps)` off the axis.
    ///
    /// Panels are graded geometrically toward `Re xi + eps0` down to the
    /// scale `|Im xi|`, so the near-singular kernel stays resolved.
    pub fn f_sigma_nn(&self, xi: Complex64) -> Complex64 {
        let z = xi + self.eps0();
        let s = z.re;
        let nu = abs(z.im);
        let (lo, hi) = (self.grid.lower(), self.grid.upper());
        let kernel = |e: f64, r: f64| r / (z - e);

        let local = self.local_width(s);
        let half = (2.0 * local).max(8.0 * nu);
        let (wl, wr) = ((s - half).max(lo), (s + half).min(hi));
        let mut acc = Complex64::new(0.0, 0.0);

        let nodes = self.grid.nodes();
        let weights = self.grid.weights();
        let rho = self.grid.rho();
        let breaks = self.grid.breaks();
        for i in 0..self.grid.panel_count() {
            let (a, b) = (breaks[i], breaks[i + 1]);
            if wl >= wr || b <= wl || a >= wr {
                for k in self.grid.panel_nodes(i) {
                    acc += weights[k] * kernel(nodes[k], rho[k]);
                }
                continue;
            }
            // the part of this panel outside the refinement window
            if a < wl {
                acc += self.panel(a, wl, &kernel);
            }
            if b > wr {
                acc += self.panel(wr, b, &kernel);
            }
        }
        if wl < wr {
            let c = s.clamp(wl, wr);
            for brk in [graded_side(s, c, wl, nu), graded_side(s, c, wr, nu)] {
                for ab in brk.windows(2) {
                    let (a, b) = if ab[0] < ab[1] { (ab[0], ab[1]) } else { (ab[1], ab[0]) };
                    acc += self.panel(a, b, &kernel);
                }
            }
        }
        -acc
    }

    fn panel<K: Fn(f64, f64) -> Complex64>(&self, a: f64, b: f64, kernel: &K) -> Complex64 {
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let e = c + h * x;
            acc += w * kernel(e, self.field.rho(e));
        }
        acc * h
    }

    /// Width of the grid panel nearest to `s`.
    fn local_width(&self, s: f64) -> f64 {
        let br = self.grid.breaks();
        let i = match self.grid.panel_of(s) {
            Some(i) => i,
            None if s <= br[0] => 0,
            None => br.len() - 2,
        };
        br[i + 1] - br[i]
    }

    /// Boundary value `f_sigma(p - i0) = -PV(s) - i pi rho(s)`, `s = p + eps0`,
    /// with the principal value taken by subtracting `rho(s)`.
    pub fn f_sigma_boundary(&self, p: f64) -> Complex64 {
        let s = p + self.eps0();
        let (lo, hi) = (self.grid.lower(), self.grid.upper());
        let nodes = self.grid.nodes();
        let weights = self.grid.weights();
        let rho = self.grid.rho();
        let Some(ip) = self.grid.panel_of(s) else {
            // no singularity inside the support
            let mut pv = 0.0;
            for k in 0..nodes.len() {
                pv += weights[k] * rho[k] / (s - nodes[k]);
            }
            let r = if s > lo && s < hi { self.field.rho(s) } else { 0.0 };
            return Complex64::new(-pv, -PI * r);
        };
        let rs = self.field.rho(s);
        let mut pv = 0.0;
        for i in 0..self.grid.panel_count() {
            if i == ip {
                continue;
            }
            for k in self.grid.panel_nodes(i) {
                pv += weights[k] * (rho[k] - rs) / (s - nodes[k]);
            }
        }
        let br = self.grid.breaks();
        let sub = |e: f64| (self.field.rho(e) - rs) / (s - e);
        pv += self.rule.integrate(br[ip], s, sub);
        pv += self.rule.integrate(s, br[ip + 1], sub);
        pv += rs * ln((s - lo) / (hi - s));
        Complex64::new(-pv, -PI * rs)
    }

    fn near_pole(&self, xi: Complex64) -> Option<usize> {
        self.eig.eigenvalues().iter().position(|&x| (xi - x).norm() < POLE_BAND)
    }

    fn prod_except(&self, xi: Complex64, skip: &[usize]) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for (i, &x) in self.eig.eigenvalues().iter().enumerate() {
            if !skip.contains(&i) {
                p *= xi - x;
            }
        }
        p
    }

    /// `P(xi) f_mn(xi) = sum_l a_l prod_{i != l} (xi - x_i)`.
    fn pf(&self, n: usize, m: usize, xi: Complex64) -> Complex64 {
        (0..self.len()).map(|l| self.eig.weight(l, n, m) * self.prod_except(xi, &[l])).sum()
    }

    /// `P(xi)^2 (f_mn f_NN - f_mN f_Nn)`; the diagonal terms cancel identically.
    fn p_delta(&self, n: usize, m: usize, xi: Complex64) -> Complex64 {
        let last = self.last();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.len() {
            for l in 0..self.len() {
                if k == l {
                    continue;
                }
                let c = self.eig.weight(k, n, m) * self.eig.weight(l, last, last)
                    - self.eig.weight(k, n, last) * self.eig.weight(l, last, m);
                if c != 0.0 {
                    acc += c * self.prod_except(xi, &[k, l]);
                }
            }
        }
        acc
    }

    fn pole_form(&self, xi: Complex64, j: usize) -> PoleForm {
        let last = self.last();
        PoleForm {
            p: self.prod_except(xi, &[]),
            pf_last: (0..self.len()).map(|n| self.pf(n, last, xi)).collect(),
            reduced: self.prod_except(xi, &[j]),
        }
    }

    /// Coupled element `F_mn(xi)` for `Im xi <= 0`.
    pub fn big_f(&self, n: usize, m: usize, xi: Complex64) -> Result<Complex64> {
        self.eig.spec().check(n)?;
        self.eig.spec().check(m)?;
        let fs = self.f_sigma(xi)?;
        self.big_f_with(n, m, xi, fs)
    }

    /// `F_mn(xi)` given a precomputed `f_sigma(xi)`.
    pub fn big_f_with(&self, n: usize, m: usize, xi: Complex64, fs: Complex64) -> Result<Complex64> {
        let v4 = self.v4();
        let last = self.last();
        if v4 == 0.0 {
            return self.f_mn(n, m, xi);
        }
        if let Some(j) = self.near_pole(xi) {
            let form = self.pole_form(xi, j);
            let num = self.pf(n, m, xi) - v4 * fs * self.p_delta(n, m, xi);
            let den = form.p - v4 * fs * form.pf_last[last];
            let scaled = (den / form.reduced).norm();
            if scaled < SINGULAR_THRESHOLD {
                return Err(Error::SingularDenominator { p: xi.re, modulus: scaled });
            }
            return Ok(num / den);
        }
        let f_nn = self.f_mn(last, last, xi)?;
        let den = 1.0 - v4 * f_nn * fs;
        if den.norm() < SINGULAR_THRESHOLD {
            return Err(Error::SingularDenominator { p: xi.re, modulus: den.norm() });
        }
        let f = self.f_mn(n, m, xi)?;
        let fm = self.f_mn(m, last, xi)?;
        let fn_ = self.f_mn(last, n, xi)?;
        Ok(f + v4 * fm * fs * fn_ / den)
    }

    /// `Im F_mn(p - i0) = kappa(p) h_n(p) h_m(p)`: the imaginary part is rank
    /// one in the chain indices. Returns `(kappa, h)`.
    pub fn im_f_factors(&self, p: f64) -> Result<(f64, Vec<f64>)> {
        let n = self.len();
        if p <= self.p_threshold() || self.v4() == 0.0 {
            return Ok((0.0, vec![0.0; n]));
        }
        let fs = self.f_sigma_boundary(p);
        self.im_f_factors_with(p, fs)
    }

    /// As [`Resolvent::im_f_factors`] with a precomputed boundary self-energy.
    pub fn im_f_factors_with(&self, p: f64, fs: Complex64) -> Result<(f64, Vec<f64>)> {
        let n = self.len();
        let v4 = self.v4();
        let last = self.last();
        if p <= self.p_threshold() || v4 == 0.0 {
            return Ok((0.0, vec![0.0; n]));
        }
        let xi = Complex64::new(p, 0.0);
        let (h, den_re, den_im, scale) = if let Some(j) = self.near_pole(xi) {
            let form = self.pole_form(xi, j);
            let h: Vec<f64> = form.pf_last.iter().map(|c| c.re).collect();
            let pnn = h[last];
            (h, form.p.re - v4 * pnn * fs.re, v4 * pnn * fs.im, form.reduced.re.abs())
        } else {
            let mut h = Vec::with_capacity(n);
            for k in 0..n {
                h.push(self.f_mn(k, last, xi)?.re);
            }
            let fnn = h[last];
            (h, 1.0 - v4 * fnn * fs.re, v4 * fnn * fs.im, 1.0)
        };
        let d2 = den_re * den_re + den_im * den_im;
        let modulus = crate::math::sqrt(d2);
        if modulus < SINGULAR_THRESHOLD * scale {
            return Err(Error::SingularDenominator { p, modulus: modulus / scale });
        }
        Ok((v4 * fs.im / d2, h))
    }

    /// `Im F_mn(p - i0)`; identically zero below the continuum.
    pub fn im_f_boundary(&self, n: usize, m: usize, p: f64) -> Result<f64> {
        self.eig.spec().check(n)?;
        self.eig.spec().check(m)?;
        let (kappa, h) = self.im_f_factors(p)?;
        Ok(kappa * h[n] * h[m])
    }

    /// `1 - v^4 f_{N-1,N-1}(p) f_sigma(p)` on the real axis.
    pub fn denominator(&self, p: f64) -> Result<Complex64> {
        let last = self.last();
        let fnn = self.f_mn(last, last, Complex64::new(p, 0.0))?;
        Ok(1.0 - self.v4() * fnn * self.f_sigma_boundary(p))
    }

    /// `[a b^2 - eps0 - 0.5, max(2, eps_max - eps0) + 0.5]` with step `1e-3`.
    pub fn default_scan_grid(&self) -> Vec<f64> {
        let lo = self.p_threshold() - 0.5;
        let hi = self.p_upper().max(2.0) + 0.5;
        let step = 1e-3;
        let n = crate::math::ceil((hi - lo) / step) as usize;
        (0..=n).map(|k| lo + k as f64 * step).collect()
    }

    /// Minimum of `|1 - v^4 f_NN f_sigma|` over `p_grid`; real zeros below the
    /// threshold are bracketed by sign changes and bisected.
    pub fn scan_denominator(&self, p_grid: &[f64]) -> DenominatorScan {
        let thr = self.p_threshold();
        let mut scan = DenominatorScan {
            min: f64::INFINITY,
            argmin: f64::NAN,
            roots: Vec::new(),
            points: 0,
            p_lo: p_grid.first().copied().unwrap_or(f64::NAN),
            p_hi: p_grid.last().copied().unwrap_or(f64::NAN),
        };
        let mut prev: Option<(f64, f64)> = None;
        for &p in p_grid {
            let Ok(d) = self.denominator(p) else {
                prev = None;
                continue;
            };
            scan.points += 1;
            if d.norm() < scan.min {
                scan.min = d.norm();
                scan.argmin = p;
            }
            if p < thr {
                if let Some((pp, dp)) = prev {
                    let pole_between = self.eig.eigenvalues().iter().any(|&x| x > pp && x <= p);
                    if dp * d.re < 0.0 && !pole_between {
                        let r = self.bisect_real(pp, p);
                        let dr = self.denominator(r).map(|c| c.norm()).unwrap_or(0.0);
                        scan.roots.push(r);
                        if dr < scan.min {
                            scan.min = dr;
                            scan.argmin = r;
                        }
                    }
                }
                prev = Some((p, d.re));
            } else {
                prev = None;
            }
        }
        scan
    }

    fn bisect_real(&self, mut a: f64, mut b: f64) -> f64 {
        let val = |p: f64| self.denominator(p).map(|c| c.re).unwrap_or(0.0);
        let mut fa = val(a);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let fm = val(m);
            if fm == 0.0 {
                return m;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        0.5 * (a + b)
    }

    /// Admissibility report, denominator scan and the pole-cancellation
    /// precondition. Dynamics should only run when `passed`.
    pub fn preflight(&self) -> Preflight {
        let admissibility = check_epsilon0(&self.field);
        let scan = self.scan_denominator(&self.default_scan_grid());
        let sigma_at_poles =
            self.eig.eigenvalues().iter().map(|&x| self.f_sigma_boundary(x).norm()).fold(f64::INFINITY, f64::min);
        let passed =
            admissibility.basic && scan.roots.is_empty() && scan.min >= PREFLIGHT_MIN && sigma_at_poles > 1e-10;
        Preflight { admissibility, scan, sigma_at_poles, passed }
    }

    /// Samples of `f_mn`, `f_sigma` and `F_mn` on the real axis.
    pub fn samples(&self, n: usize, m: usize, p_grid: &[f64]) -> Result<Vec<[SpectralSample; 3]>> {
        let mut out = Vec::with_capacity(p_grid.len());
        for &p in p_grid {
            let xi = Complex64::new(p, 0.0);
            let fs = self.f_sigma_boundary(p);
            let small = self.f_mn(n, m, xi)?;
            let big = self.big_f_with(n, m, xi, fs)?;
            out.push([
                SpectralSample { p, value: small, kind: SampleKind::SmallF },
                SpectralSample { p, value: fs, kind: SampleKind::Sigma },
                SpectralSample { p, value: big, kind: SampleKind::BigF },
            ]);
        }
        Ok(out)
    }
}

/// Breakpoints from `from` to `to` whose distance to `s` doubles, starting
/// from `nu`; `from` is the end nearer to `s`.
fn graded_side(s: f64, from: f64, to: f64, nu: f64) -> Vec<f64> {
    let mut pts = vec![from];
    if from == to {
        return pts;
    }
    let dir = if to > from { 1.0 } else { -1.0 };
    let mut dist = abs(from - s);
    loop {
        dist = if dist < nu { nu } else { 2.0 * dist };
        let next = s + dir * dist;
        if (next - to) * dir >= 0.0 {
            pts.push(to);
            return pts;
        }
        pts.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_energy_grid, FieldParams, FormFactorProfile, GridSpec};

    fn resolvent(n: usize, v: f64, eps0: f64) -> Resolvent {
        let params = FieldParams { a: 1.0, b: 1.0, eps0, v, profile: FormFactorProfile { alpha: 0.25, delta: 0.7 } };
        let field = Field::new(params).unwrap();
        let grid = build_energy_grid(&field, &GridSpec::default()).unwrap();
        Resolvent::new(ChainSpec::new(n).unwrap(), field, grid)
    }

    #[test]
    fn single_site() {
        let r = resolvent(1, 1.0, 4.4);
        let xi = Complex64::new(0.7, -0.2);
        assert!((r.f_mn(0, 0, xi).unwrap() + 1.0 / xi).norm() < 1e-15);
        assert!(matches!(r.f_mn(0, 0, Complex64::new(0.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn upper_half_plane_rejected() {
        let r = resolvent(3, 1.0, 4.4);
        assert!(matches!(r.f_sigma(Complex64::new(0.0, 1e-3)), Err(Error::HalfPlane { .. })));
    }

    #[test]
    fn graded_side_reaches_target() {
        let b = graded_side(1.0, 1.0, 2.0, 1e-3);
        assert_eq!(*b.last().unwrap(), 2.0);
        assert!((b[1] - 1.001).abs() < 1e-15);
        let b = graded_side(1.0, 1.0, 0.5, 1e-2);
        assert_eq!(*b.last().unwrap(), 0.5);
        assert!(b.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn below_threshold_sigma_is_positive() {
        let r = resolvent(4, 1.0, 4.4);
        let fs = r.f_sigma_boundary(-4.0);
        assert!(fs.im == 0.0 && fs.re > 0.0);
    }

    #[test]
    fn decoupled_is_bare() {
        let r = resolvent(5, 0.0, 4.4);
        let xi = Complex64::new(0.3, -0.01);
        for n in 0..5 {
            for m in 0..5 {
                assert_eq!(r.big_f(n, m, xi).unwrap(), r.f_mn(n, m, xi).unwrap());
            }
        }
        assert_eq!(r.im_f_boundary(0, 0, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn pole_form_matches_direct_just_outside_band() {
        let r = resolvent(6, 1.1, 4.4);
        let x0 = r.eigen().eigenvalues()[2];
        // both branches are valid here; compare them directly
        let xi = Complex64::new(x0 + 2e-4, -1e-3);
        let fs = r.f_sigma(xi).unwrap();
        let direct = r.big_f_with(4, 5, xi, fs).unwrap();
        let form = r.pole_form(xi, 2);
        let v4 = 1.1f64.powi(4);
        let num = r.pf(4, 5, xi) - v4 * fs * r.p_delta(4, 5, xi);
        let den = form.p - v4 * fs * form.pf_last[5];
        assert!((num / den - direct).norm() < 1e-9 * direct.norm().max(1.0));
    }
}
