//! Time evolution on the chain sites of the radiating model.
//!
//! Two independent routes give `A_nm(t) = (beta_m, exp(itH) beta_n)`:
//!
//! - [`FourierRoute`]: inverse Fourier transform of the spectral density
//!   `-(1/pi) Im F_mn(p - i0)` with Filon panels.
//! - [`Discretized`]: the continuum replaced by the energy-grid modes,
//!   reduced to tridiagonal form and diagonalized.
//!
//! They share nothing beyond the field parameters and the energy grid, so
//! agreement between them is a meaningful check.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::chain::{green_finite, ChainSpec};
use crate::error::{Error, Result};
use crate::field::{EnergyGrid, FieldParams};
use crate::filon::{moments, Filon, ORDER};
use crate::math::{ceil, sin_cos, sqrt, PI};
use crate::resolvent::Resolvent;
use crate::tridiag::{eigen_rows, Tridiagonal};

/// Which route produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Fourier,
    Discretized,
}

/// Samples on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub values: Vec<T>,
    pub route: Route,
    pub chain_len: usize,
    pub params: FieldParams,
}

impl<T> TimeSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Common interface of both routes.
pub trait Propagator {
    fn chain_len(&self) -> usize;

    fn route(&self) -> Route;

    /// `(beta_m, exp(itH) beta_n)`.
    fn amplitude(&self, n: usize, m: usize, t: f64) -> Result<Complex64>;

    /// `A_nm(t)` for every `n` at once.
    fn column(&self, m: usize, t: f64) -> Result<Vec<Complex64>> {
        (0..self.chain_len()).map(|n| self.amplitude(n, m, t)).collect()
    }

    /// Probability of still finding the excitation on the chain,
    /// `sum_n |A_nm(t)|^2`. This is `1 - emission_probability`, computed
    /// without the cancellation.
    fn survival(&self, m: usize, t: f64) -> Result<f64> {
        let s: f64 = self.column(m, t)?.iter().map(|a| a.norm_sqr()).sum();
        if !(-1e-6..=1.0 + 1e-6).contains(&s) {
            return Err(Error::NumericalAccuracy { what: "survival probability range", residual: s });
        }
        Ok(s.clamp(0.0, 1.0))
    }

    /// Probability that the fermion has been emitted by time `t`.
    fn emission_probability(&self, m: usize, t: f64) -> Result<f64> {
        Ok(1.0 - self.survival(m, t)?)
    }
}

/// `-sqrt(2/pi) Im F_mn(p - i0)`, the Fourier transform of `t -> A_nm(t)`.
pub fn ft_density(res: &Resolvent, n: usize, m: usize, p: f64) -> Result<f64> {
    Ok(-sqrt(2.0 / PI) * res.im_f_boundary(n, m, p)?)
}

/// Panel layout of the Fourier route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierSettings {
    /// Panel width on `[-core, core]`, where the chain band sits.
    pub panel_width: f64,
    /// Panel width elsewhere on the support.
    pub outer_width: f64,
    pub core: f64,
    /// Largest `|t|` accepted.
    pub t_max: f64,
}

impl Default for FourierSettings {
    fn default() -> Self {
        FourierSettings { panel_width: 0.005, outer_width: 0.05, core: 3.0, t_max: 500.0 }
    }
}

#[derive(Debug, Clone)]
struct Panel {
    c: f64,
    h: f64,
    width: usize,
}

/// Inverse Fourier transform of the spectral density.
#[derive(Debug, Clone)]
pub struct FourierRoute {
    spec: ChainSpec,
    settings: FourierSettings,
    panels: Vec<Panel>,
    /// Distinct half-widths.
    halves: Vec<f64>,
    /// Legendre coefficients of `-(1/pi) Im F_nm` per panel, pair-major.
    coeffs: Vec<Vec<[f64; ORDER]>>,
    /// Without coupling the density is a sum of deltas; use the chain itself.
    exact: bool,
}

fn pair_index(n: usize, m: usize) -> usize {
    let (a, b) = if n <= m { (n, m) } else { (m, n) };
    b * (b + 1) / 2 + a
}

impl FourierRoute {
    pub fn new(res: &Resolvent, settings: FourierSettings) -> Result<Self> {
        if !(settings.panel_width > 0.0 && settings.outer_width >= settings.panel_width) {
            return Err(Error::InvalidParameter { name: "fourier.panel_width", value: settings.panel_width });
        }
        if !(settings.t_max > 0.0) {
            return Err(Error::InvalidParameter { name: "fourier.t_max", value: settings.t_max });
        }
        let spec = *res.eigen().spec();
        let n = spec.len();
        let npairs = n * (n + 1) / 2;
        if res.field().params().v4() == 0.0 {
            return Ok(FourierRoute {
                spec,
                settings,
                panels: Vec::new(),
                halves: Vec::new(),
                coeffs: vec![Vec::new(); npairs],
                exact: true,
            });
        }
        let (lo, hi) = (res.p_threshold(), res.p_upper());
        let inner_lo = (-settings.core).clamp(lo, hi);
        let inner_hi = settings.core.clamp(lo, hi);
        let halves = vec![0.5 * settings.panel_width, 0.5 * settings.outer_width];
        let (w_in, w_out) = (settings.panel_width, settings.outer_width);
        let mut panels = Vec::new();
        // outer panels below the core end exactly at inner_lo; the first one
        // may start under the threshold, where the density vanishes
        let k1 = ceil((inner_lo - lo) / w_out) as usize;
        let mut cursor = inner_lo - k1 as f64 * w_out;
        for _ in 0..k1 {
            panels.push(Panel { c: cursor + 0.5 * w_out, h: 0.5 * w_out, width: 1 });
            cursor += w_out;
        }
        cursor = inner_lo;
        let k2 = ceil((inner_hi - inner_lo) / w_in) as usize;
        for i in 0..k2 {
            panels.push(Panel { c: inner_lo + (i as f64 + 0.5) * w_in, h: 0.5 * w_in, width: 0 });
        }
        cursor += k2 as f64 * w_in;
        let k3 = ceil((hi - cursor) / w_out).max(0.0) as usize;
        for i in 0..k3 {
            panels.push(Panel { c: cursor + (i as f64 + 0.5) * w_out, h: 0.5 * w_out, width: 1 });
        }

        let filon = Filon::new();
        let mut coeffs = vec![Vec::with_capacity(panels.len()); npairs];
        let mut vals = vec![[0.0; ORDER]; npairs];
        for panel in &panels {
            for (i, u) in filon.nodes.iter().enumerate() {
                let p = panel.c + panel.h * u;
                // panels may poke below the threshold where the density is zero
                let (kappa, h) = res.im_f_factors(p)?;
                for b in 0..n {
                    for a in 0..=b {
                        vals[pair_index(a, b)][i] = -kappa * h[a] * h[b] / PI;
                    }
                }
            }
            for (k, v) in vals.iter().enumerate() {
                coeffs[k].push(filon.coefficients(v));
            }
        }
        Ok(FourierRoute { spec, settings, panels, halves, coeffs, exact: false })
    }

    pub fn settings(&self) -> &FourierSettings {
        &self.settings
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// `int -(1/pi) Im F_nm dp`, which is `delta_nm` for a complete measure.
    pub fn spectral_weight(&self, n: usize, m: usize) -> Result<f64> {
        self.spec.check(n)?;
        self.spec.check(m)?;
        if self.exact {
            return Ok(if n == m { 1.0 } else { 0.0 });
        }
        let c = &self.coeffs[pair_index(n, m)];
        Ok(self.panels.iter().zip(c).map(|(p, c)| 2.0 * p.h * c[0]).sum())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t.is_finite() && t.abs() <= self.settings.t_max) {
            return Err(Error::TimeOutOfRange { t, t_max: self.settings.t_max });
        }
        Ok(())
    }

    fn integrate(&self, pairs: &[usize], t: f64) -> Vec<Complex64> {
        let mom: Vec<_> = self.halves.iter().map(|h| moments(t * h)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); pairs.len()];
        for (pi, panel) in self.panels.iter().enumerate() {
            let m = &mom[panel.width];
            let (s, c) = sin_cos(panel.c * t);
            let phase = Complex64::new(c, s) * panel.h;
            for (slot, &pair) in out.iter_mut().zip(pairs) {
                let coef = &self.coeffs[pair][pi];
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..ORDER {
                    acc += coef[k] * m[k];
                }
                *slot += phase * acc;
            }
        }
        out
    }
}

impl Propagator for FourierRoute {
    fn chain_len(&self) -> usize {
        self.spec.len()
    }

    fn route(&self) -> Route {
        Route::Fourier
    }

    fn amplitude(&self, n: usize, m: usize, t: f64) -> Result<Complex64> {
        self.spec.check(n)?;
        self.spec.check(m)?;
        self.check_time(t)?;
        if self.exact {
            // green_finite is exp(-itH) on the chain
            return Ok(green_finite(&self.spec, n, m, t)?.conj());
        }
        Ok(self.integrate(&[pair_index(n, m)], t)[0])
    }

    fn column(&self, m: usize, t: f64) -> Result<Vec<Complex64>> {
        self.spec.check(m)?;
        self.check_time(t)?;
        if self.exact {
            return (0..self.spec.len()).map(|n| Ok(green_finite(&self.spec, n, m, t)?.conj())).collect();
        }
        let pairs: Vec<usize> = (0..self.spec.len()).map(|n| pair_index(n, m)).collect();
        Ok(self.integrate(&pairs, t))
    }
}

/// Chain plus `K` discrete modes, diagonalized once.
#[derive(Debug, Clone)]
pub struct Discretized {
    spec: ChainSpec,
    mode_energies: Vec<f64>,
    couplings: Vec<f64>,
    values: Vec<f64>,
    /// Chain components of each eigenvector.
    rows: Vec<Vec<f64>>,
    /// Energies of modes with zero coupling; they never touch the chain.
    decoupled: Vec<f64>,
    mean_spacing: f64,
}

/// `K = max(2000, ceil(safety * 2 t_max * range / (2 pi)))`, so the
/// recurrence time `2 pi / spacing` exceeds `safety * 2 t_max`.
pub fn auto_mode_count(t_max: f64, range: f64, safety: f64) -> usize {
    let k = ceil(safety * 2.0 * t_max * range / (2.0 * PI));
    if k.is_finite() && k > 2000.0 {
        k as usize
    } else {
        2000
    }
}

/// Assembles the chain-plus-modes Hamiltonian on the grid and diagonalizes it.
pub fn build_discretized(spec: ChainSpec, params: &FieldParams, grid: &EnergyGrid) -> Result<Discretized> {
    params.validate()?;
    let n = spec.len();
    let hub = n - 1;
    let v2 = params.v * params.v;
    let mut mode_energies = Vec::with_capacity(grid.len());
    let mut couplings = Vec::with_capacity(grid.len());
    let mut decoupled = Vec::new();
    let mut t = Tridiagonal::new(vec![0.0; n], vec![1.0; n - 1]);
    for k in 0..grid.len() {
        let d = grid.nodes()[k] - params.eps0;
        let g = v2 * sqrt(grid.weights()[k] * grid.rho()[k]);
        if !(d.is_finite() && g.is_finite()) {
            return Err(Error::Eigensolver { iterations: 0 });
        }
        mode_energies.push(d);
        couplings.push(g);
        if g == 0.0 {
            decoupled.push(d);
        } else {
            t.attach(hub, d, g);
        }
    }
    let rows: Vec<usize> = (0..n).collect();
    let er = eigen_rows(&t, &rows)?;
    let mean_spacing = (grid.upper() - grid.lower()) / grid.len() as f64;
    Ok(Discretized { spec, mode_energies, couplings, values: er.values, rows: er.rows, decoupled, mean_spacing })
}

impl Discretized {
    /// All eigenvalues, coupled ones first.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.extend_from_slice(&self.decoupled);
        v
    }

    pub fn dimension(&self) -> usize {
        self.spec.len() + self.mode_energies.len()
    }

    pub fn mode_energies(&self) -> &[f64] {
        &self.mode_energies
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// `2 pi / mean level spacing`.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.mean_spacing
    }
}

impl Propagator for Discretized {
    fn chain_len(&self) -> usize {
        self.spec.len()
    }

    fn route(&self) -> Route {
        Route::Discretized
    }

    fn amplitude(&self, n: usize, m: usize, t: f64) -> Result<Complex64> {
        self.spec.check(n)?;
        self.spec.check(m)?;
        let (rn, rm) = (&self.rows[n], &self.rows[m]);
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, &lam) in self.values.iter().enumerate() {
            let (s, c) = sin_cos(lam * t);
            acc += rn[l] * rm[l] * Complex64::new(c, s);
        }
        Ok(acc)
    }

    fn column(&self, m: usize, t: f64) -> Result<Vec<Complex64>> {
        self.spec.check(m)?;
        let n = self.spec.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let rm = &self.rows[m];
        for (l, &lam) in self.values.iter().enumerate() {
            let (s, c) = sin_cos(lam * t);
            let e = rm[l] * Complex64::new(c, s);
            for (k, slot) in out.iter_mut().enumerate() {
                *slot += self.rows[k][l] * e;
            }
        }
        Ok(out)
    }
}

/// Samples `survival` over `times`.
pub fn survival_series<P: Propagator>(
    prop: &P,
    m: usize,
    times: &[f64],
    params: &FieldParams,
) -> Result<TimeSeries<f64>> {
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        values.push(prop.survival(m, t)?);
    }
    Ok(TimeSeries { times: times.to_vec(), values, route: prop.route(), chain_len: prop.chain_len(), params: *params })
}
